// SPDX-License-Identifier: Apache-2.0
//
// epbr: command-line driver for LUT baking, screen-space reflections,
// composition, reference rendering, image metrics and the compose service.
//
// Exit codes: 0 success, 1 usage error, 2 I/O error, 3 validation error.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include "epbr/compositor.hpp"
#include "epbr/image_io.hpp"
#include "epbr/manifest.hpp"
#include "epbr/metrics.hpp"
#include "epbr/reference.hpp"
#include "epbr/service.hpp"
#include "epbr/splitsum_lut.hpp"
#include "epbr/ssrt.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitValidation = 3;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::pair<int, int> parse_grid(const std::string& s) {
    const auto x = s.find('x');
    try {
        if (x == std::string::npos) throw std::invalid_argument(s);
        std::size_t a = 0, b = 0;
        const int n_rough = std::stoi(s.substr(0, x), &a);
        const int n_cos = std::stoi(s.substr(x + 1), &b);
        if (a != x || b != s.size() - x - 1 || n_rough < 1 || n_cos < 1) throw std::invalid_argument(s);
        return {n_rough, n_cos};
    } catch (const std::exception&) {
        throw UsageError("--grid must look like 32x32");
    }
}

std::string lut_path_or_env(const std::string& flag) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv("EPBR_LUT")) return env;
    throw UsageError("no LUT given: pass --lut or set EPBR_LUT");
}

void write_outputs(const std::string& prefix, const epbr::ImagePlane& linear, epbr::ToneMapMode mode, double exposure) {
    epbr::save_image(linear, prefix + ".pfm", epbr::ColorEncoding::linear);
    epbr::save_image(epbr::tonemap(linear, mode, exposure), prefix + ".png", epbr::ColorEncoding::linear);
}

// Metrics operate on display values: PNG code values as stored, PFM after clamp + sRGB.
epbr::ImagePlane load_display(const std::string& path) {
    const std::string bytes = epbr::detail::read_file_bytes(path);
    epbr::ImagePlane img = epbr::decode_image(bytes, epbr::ColorEncoding::linear, path);
    return epbr::detail::is_png(bytes) ? img : epbr::display_encode(img);
}

std::string format_db(double db) {
    if (std::isinf(db)) return "inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", db);
    return buf;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Intrinsic-channel image compositor with extended PBR materials"};
    app.require_subcommand(1);
    int workers = 0;
    app.add_option("--workers", workers, "Worker threads (0 = hardware concurrency)");

    // bake-lut
    auto* bake = app.add_subcommand("bake-lut", "Tabulate the split-sum specular integral");
    std::string grid = "32x32", lut_out, lut_compare;
    std::uint64_t samples = 1u << 20, seed = 7;
    bake->add_option("--grid", grid, "Roughness x cosine grid, e.g. 32x32");
    bake->add_option("--samples", samples, "Importance samples per cell");
    bake->add_option("--seed", seed, "RNG seed");
    bake->add_option("--out", lut_out, "Output LUT path")->required();
    bake->add_option("--compare", lut_compare, "Print max |delta| against an existing LUT");

    // ssrt
    auto* ssrt = app.add_subcommand("ssrt", "Trace mirror reflections from depth and normals");
    std::string manifest_path, ssrt_out, ssrt_mask, miss_fill = "gray";
    epbr::SsrtConfig ssrt_cfg;
    ssrt->add_option("--manifest", manifest_path, "Channel-set manifest")->required();
    ssrt->add_option("--out", ssrt_out, "Output mirror-reflection PFM")->required();
    ssrt->add_option("--mask", ssrt_mask, "Output validity mask PNG (default: <out>_valid.png)");
    ssrt->add_option("--max-steps", ssrt_cfg.max_steps);
    ssrt->add_option("--thickness", ssrt_cfg.thickness);
    ssrt->add_option("--refine-steps", ssrt_cfg.refine_steps);
    ssrt->add_option("--miss-fill", miss_fill, "gray or hole")->check(CLI::IsMember({"gray", "hole"}));

    // compose
    auto* comp = app.add_subcommand("compose", "Compose the final image from a channel set");
    std::string comp_manifest, comp_lut, comp_out, comp_mirror, tonemap_mode = "clamp";
    double exposure = 1.0, d_px = 0.0;
    bool layers = false;
    comp->add_option("--manifest", comp_manifest, "Channel-set manifest")->required();
    comp->add_option("--lut", comp_lut, "Split-sum LUT (default: $EPBR_LUT)");
    comp->add_option("--out", comp_out, "Output prefix; writes <out>.pfm and <out>.png")->required();
    comp->add_option("--mirror", comp_mirror, "Mirror-reflection image overriding the manifest");
    comp->add_option("--d-px", d_px, "Kernel distance in pixels (default: manifest value)");
    comp->add_option("--tonemap", tonemap_mode, "clamp or reinhard")->check(CLI::IsMember({"clamp", "reinhard"}));
    comp->add_option("--exposure", exposure);
    comp->add_flag("--layers", layers, "Also write <out>_diffuse/_specular/_transmission");

    // render-ref
    auto* ref = app.add_subcommand("render-ref", "Monte Carlo reference render of a slab scene");
    std::string scene_path, ref_out, channels_dir;
    epbr::RenderSettings ref_settings;
    int irradiance_spp = 256;
    ref->add_option("--scene", scene_path, "Scene JSON")->required();
    ref->add_option("--spp", ref_settings.spp);
    ref->add_option("--seed", ref_settings.seed);
    ref->add_option("--out", ref_out, "Output prefix; writes <out>.pfm and <out>.png");
    ref->add_option("--channels", channels_dir, "Also write the scene's intrinsic channels + manifest here");
    ref->add_option("--irradiance-spp", irradiance_spp);

    // metrics
    auto* met = app.add_subcommand("metrics", "PSNR and mean absolute error of two images");
    std::string img_a, img_b;
    met->add_option("a", img_a)->required();
    met->add_option("b", img_b)->required();

    // serve
    auto* srv = app.add_subcommand("serve", "HTTP compose service");
    int port = 8080;
    std::string host = "127.0.0.1", session_root = "sessions", serve_lut;
    srv->add_option("--port", port);
    srv->add_option("--host", host);
    srv->add_option("--sessions", session_root, "Directory holding session state");
    srv->add_option("--lut", serve_lut, "Split-sum LUT (default: $EPBR_LUT)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*bake) {
            const auto [n_rough, n_cos] = parse_grid(grid);
            const auto lut = epbr::bake_lut(n_rough, n_cos, samples, seed, workers);
            epbr::save_lut(lut, lut_out);
            if (!lut_compare.empty()) {
                const auto prev = epbr::load_lut(lut_compare);
                if (prev.n_rough() != lut.n_rough() || prev.n_cos() != lut.n_cos())
                    throw epbr::ValidationError("--compare LUT has a different grid");
                double worst = 0.0;
                for (std::size_t i = 0; i < lut.entries().size(); ++i) {
                    worst = std::max(worst, std::abs(double(lut.entries()[i].a) - prev.entries()[i].a));
                    worst = std::max(worst, std::abs(double(lut.entries()[i].b) - prev.entries()[i].b));
                }
                std::cout << "max_abs_delta: " << worst << "\n";
            }
        } else if (*ssrt) {
            const auto manifest = epbr::load_manifest(manifest_path);
            const auto cs = epbr::load_channel_set(manifest);
            ssrt_cfg.miss_fill = miss_fill == "hole" ? epbr::MissFill::hole : epbr::MissFill::constant_gray;
            const epbr::ImagePlane source = manifest.has("source")
                                                ? epbr::load_channel(manifest, "source", epbr::ImageSize{cs.width(), cs.height()})
                                                : epbr::diffuse_layer(cs);
            const auto layer = epbr::trace_reflections(cs.depth, cs.normal, source, cs.camera, ssrt_cfg, workers);
            epbr::save_image(layer.color, ssrt_out, epbr::ColorEncoding::linear);
            std::string mask = ssrt_mask;
            if (mask.empty()) mask = std::filesystem::path(ssrt_out).replace_extension().string() + "_valid.png";
            epbr::save_image(layer.valid, mask, epbr::ColorEncoding::linear);
        } else if (*comp) {
            const auto lut = epbr::load_lut(lut_path_or_env(comp_lut));
            const auto manifest = epbr::load_manifest(comp_manifest);
            auto cs = epbr::load_channel_set(manifest);
            if (!comp_mirror.empty())
                cs.mirror = epbr::load_image(comp_mirror, epbr::ColorEncoding::linear, epbr::ImageSize{cs.width(), cs.height()});
            if (!cs.mirror) cs.mirror = epbr::derive_mirror(cs, workers);
            epbr::ComposeOptions opts;
            opts.d_px = d_px > 0.0 ? d_px : manifest.d_px;
            opts.workers = workers;
            const auto stack = epbr::compose(cs, lut, opts);
            const auto mode = epbr::parse_tonemap(tonemap_mode);
            write_outputs(comp_out, stack.final_image, mode, exposure);
            if (layers) {
                write_outputs(comp_out + "_diffuse", stack.diffuse, mode, exposure);
                write_outputs(comp_out + "_specular", stack.specular, mode, exposure);
                write_outputs(comp_out + "_transmission", stack.transmission, mode, exposure);
            }
        } else if (*ref) {
            const auto scene = epbr::load_scene(scene_path);
            ref_settings.workers = workers;
            if (!ref_out.empty()) write_outputs(ref_out, epbr::render(scene, ref_settings), epbr::ToneMapMode::clamp_srgb, 1.0);
            if (!channels_dir.empty()) {
                epbr::RenderSettings irr = ref_settings;
                irr.spp = irradiance_spp;
                const auto cs = epbr::synthesize_channels(scene, irr);
                const std::filesystem::path dir(channels_dir);
                std::filesystem::create_directories(dir);
                auto save = [&](const epbr::ImagePlane& img, const char* file) {
                    epbr::save_image(img, (dir / file).string(), epbr::ColorEncoding::linear);
                };
                epbr::ImagePlane rmt(cs.width(), cs.height(), 3);
                for (int y = 0; y < cs.height(); ++y)
                    for (int x = 0; x < cs.width(); ++x)
                        rmt.set_rgb(x, y, {cs.roughness.at(x, y), cs.metallic.at(x, y), cs.transparency.at(x, y)});
                save(cs.normal, "normal.pfm");
                save(cs.depth, "depth.pfm");
                save(cs.albedo, "albedo.pfm");
                save(rmt, "rmt.pfm");
                save(cs.irradiance, "irradiance.pfm");
                save(*cs.mirror, "mirror.pfm");
                save(*cs.background, "background.pfm");
                const epbr::Json manifest{
                    {"channels",
                     {{"normal", {{"path", "normal.pfm"}}},
                      {"depth", {{"path", "depth.pfm"}}},
                      {"albedo", {{"path", "albedo.pfm"}, {"encoding", "linear"}}},
                      {"rmt", {{"path", "rmt.pfm"}}},
                      {"irradiance", {{"path", "irradiance.pfm"}}},
                      {"mirror", {{"path", "mirror.pfm"}}},
                      {"background", {{"path", "background.pfm"}}}}},
                    {"camera", {{"fov", scene.camera.vertical_fov_deg}, {"near", scene.camera.near}, {"far", scene.camera.far}}},
                    {"ior", scene.material.ior()},
                    {"d_px", epbr::mirror_matched_distance(scene.camera)},
                    {"notes", "synthesized by epbr render-ref from " + scene_path}};
                epbr::detail::write_file_bytes((dir / "manifest.json").string(), manifest.dump(2) + "\n");
            }
            if (ref_out.empty() && channels_dir.empty()) throw UsageError("render-ref needs --out and/or --channels");
        } else if (*met) {
            const auto diff = epbr::compare_images(load_display(img_a), load_display(img_b));
            std::cout << "psnr_db: " << format_db(diff.psnr_db) << "\n";
            std::printf("mae: %.6f\n", diff.mean_abs);
        } else if (*srv) {
            epbr::ComposeService service(session_root, epbr::load_lut(lut_path_or_env(serve_lut)), workers);
            httplib::Server server;
            service.bind(server);
            std::cerr << "listening on http://" << host << ":" << port << "\n";
            if (!server.listen(host, port)) throw epbr::IoError("cannot listen on " + host + ":" + std::to_string(port));
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const epbr::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const epbr::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const epbr::Json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return kExitOk;
}
