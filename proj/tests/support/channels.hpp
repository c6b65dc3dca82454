// SPDX-License-Identifier: Apache-2.0
//
// Small synthetic channel sets for compositor and service tests.
#pragma once

#include <filesystem>

#include "epbr/compositor.hpp"
#include "epbr/image_io.hpp"
#include "epbr/manifest.hpp"
#include "epbr/rng.hpp"

namespace fixture {

// Uniform material; normals face the eye so every pixel sees cos(theta_v) = 1.
inline epbr::ChannelSet uniform_channels(int w, int h, epbr::Rgb albedo, float r, float m, float t) {
    using namespace epbr;
    ChannelSet cs;
    cs.camera.vertical_fov_deg = 60.0;
    cs.camera.near = 0.1;
    cs.camera.far = 10.0;
    cs.camera.width = w;
    cs.camera.height = h;
    cs.normal = ImagePlane(w, h, 3);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const Vec3 e = -1.0 * normalize(cs.camera.ray_direction(x + 0.5, y + 0.5));
            cs.normal.set_rgb(x, y, {e.x, e.y, e.z});
        }
    cs.depth = ImagePlane(w, h, 1, 0.25f);
    cs.albedo = ImagePlane(w, h, 3);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) cs.albedo.set_rgb(x, y, albedo);
    cs.roughness = ImagePlane(w, h, 1, r);
    cs.metallic = ImagePlane(w, h, 1, m);
    cs.transparency = ImagePlane(w, h, 1, t);
    cs.irradiance = ImagePlane(w, h, 3, 1.0f);
    cs.mirror = ImagePlane(w, h, 3, 0.5f);
    return cs;
}

inline void randomize(epbr::ImagePlane& img, std::uint64_t seed, float scale = 1.0f) {
    epbr::Rng rng(seed);
    for (float& v : img.data()) v = static_cast<float>(rng.uniform()) * scale;
}

// Spatially varying everything, with a few transparent pixels.
inline epbr::ChannelSet random_channels(int w, int h, std::uint64_t seed) {
    auto cs = uniform_channels(w, h, epbr::Rgb(0.5), 0.3f, 0.0f, 0.0f);
    randomize(cs.albedo, seed + 1);
    randomize(cs.roughness, seed + 2);
    randomize(cs.metallic, seed + 3);
    randomize(cs.irradiance, seed + 4, 3.0f);
    randomize(*cs.mirror, seed + 5, 2.0f);
    cs.background = epbr::ImagePlane(w, h, 3);
    randomize(*cs.background, seed + 6, 2.0f);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) cs.transparency.at(x, y) = (x + y) % 3 == 0 ? 0.7f : 0.0f;
    return cs;
}

// Writes every plane as PFM next to a manifest.json and returns the manifest path.
inline std::string write_channel_set(const epbr::ChannelSet& cs, const std::filesystem::path& dir, double d_px = 8.0) {
    using namespace epbr;
    std::filesystem::create_directories(dir);
    auto save = [&](const ImagePlane& img, const char* name) { save_image(img, (dir / name).string(), ColorEncoding::linear); };
    ImagePlane rmt(cs.width(), cs.height(), 3);
    for (int y = 0; y < cs.height(); ++y)
        for (int x = 0; x < cs.width(); ++x)
            rmt.set_rgb(x, y, {cs.roughness.at(x, y), cs.metallic.at(x, y), cs.transparency.at(x, y)});
    save(cs.normal, "normal.pfm");
    save(cs.depth, "depth.pfm");
    save(cs.albedo, "albedo.pfm");
    save(rmt, "rmt.pfm");
    save(cs.irradiance, "irradiance.pfm");
    Json channels{{"normal", "normal.pfm"},
                  {"depth", "depth.pfm"},
                  {"albedo", {{"path", "albedo.pfm"}, {"encoding", "linear"}}},
                  {"rmt", "rmt.pfm"},
                  {"irradiance", "irradiance.pfm"}};
    if (cs.mirror) {
        save(*cs.mirror, "mirror.pfm");
        channels["mirror"] = "mirror.pfm";
    }
    if (cs.background) {
        save(*cs.background, "background.pfm");
        channels["background"] = "background.pfm";
    }
    const Json manifest{{"channels", channels},
                        {"camera", {{"fov", cs.camera.vertical_fov_deg}, {"near", cs.camera.near}, {"far", cs.camera.far}}},
                        {"ior", cs.ior},
                        {"d_px", d_px}};
    const auto path = (dir / "manifest.json").string();
    detail::write_file_bytes(path, manifest.dump(2));
    return path;
}

}  // namespace fixture
