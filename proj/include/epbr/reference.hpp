// SPDX-License-Identifier: Apache-2.0
#pragma once

// Monte Carlo ground truth for a flat thin slab (plane z = 0, normal +z) lit
// by an equirectangular environment, with an optional textured emitter plane
// behind it. Direct lighting only: each camera ray is scattered once by the
// slab BSDF and then reads the environment or the background plane.
//
// Transmission follows the compositor's thin-surface model: the straight-
// through direction is perturbed by two successive GGX half-vector draws and
// weighted by the single-lobe specular throughput times the albedo.

#include <cmath>
#include <cstdint>
#include <optional>

#include "epbr/bsdf.hpp"
#include "epbr/camera.hpp"
#include "epbr/compositor.hpp"
#include "epbr/error.hpp"
#include "epbr/image.hpp"
#include "epbr/parallel.hpp"
#include "epbr/rng.hpp"

namespace epbr {

// Equirectangular mapping: v = theta / pi with theta measured from +z (top
// row is straight up), u = phi / 2pi with phi = atan2(y, x) wrapped to [0, 2pi).
struct EnvUv {
    double u;
    double v;
};

inline EnvUv direction_to_uv(const Vec3& w) {
    const double theta = std::acos(std::clamp(w.z, -1.0, 1.0));
    double phi = std::atan2(w.y, w.x);
    if (phi < 0.0) phi += 2.0 * kPi;
    return {phi / (2.0 * kPi), theta / kPi};
}

inline Vec3 uv_to_direction(double u, double v) {
    const double theta = v * kPi, phi = u * 2.0 * kPi;
    return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
}

// Bilinear texel fetch at continuous pixel position, wrapping horizontally if asked.
inline Rgb sample_bilinear(const ImagePlane& img, double px, double py, bool wrap_x) {
    const double fx = px - 0.5, fy = py - 0.5;
    const int x0 = static_cast<int>(std::floor(fx)), y0 = static_cast<int>(std::floor(fy));
    const double tx = fx - x0, ty = fy - y0;
    auto fetch_x = [&](int x) {
        if (wrap_x) return ((x % img.width()) + img.width()) % img.width();
        return std::clamp(x, 0, img.width() - 1);
    };
    auto fetch_y = [&](int y) { return std::clamp(y, 0, img.height() - 1); };
    const Rgb a = img.rgb(fetch_x(x0), fetch_y(y0)), b = img.rgb(fetch_x(x0 + 1), fetch_y(y0));
    const Rgb c = img.rgb(fetch_x(x0), fetch_y(y0 + 1)), d = img.rgb(fetch_x(x0 + 1), fetch_y(y0 + 1));
    return lerp(lerp(a, b, tx), lerp(c, d, tx), ty);
}

inline Rgb env_lookup(const ImagePlane& env, const Vec3& w) {
    const EnvUv uv = direction_to_uv(w);
    return sample_bilinear(env, uv.u * env.width(), uv.v * env.height(), true);
}

// Smooth HDR sky: a horizon-to-zenith gradient, a warm sun-like lobe and a
// cool fill lobe. Radiance stays below ~2.5 so display comparisons are
// not dominated by clipping.
inline ImagePlane procedural_environment(int width = 256, int height = 128) {
    ImagePlane env(width, height, 3);
    const Vec3 sun = normalize({0.3, 0.55, 0.75});
    const Vec3 fill = normalize({-0.6, -0.2, 0.5});
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const Vec3 w = uv_to_direction((x + 0.5) / width, (y + 0.5) / height);
            const double up = std::clamp(w.z, -1.0, 1.0);
            Rgb c = up >= 0.0 ? lerp(Rgb(0.85, 0.8, 0.7), Rgb(0.25, 0.45, 0.9), up) : lerp(Rgb(0.85, 0.8, 0.7), Rgb(0.2, 0.18, 0.15), -up);
            c += Rgb(1.6, 1.2, 0.7) * std::pow(std::max(0.0, dot(w, sun)), 24.0);
            c += Rgb(0.2, 0.6, 0.5) * std::pow(std::max(0.0, dot(w, fill)), 6.0);
            c += Rgb(0.15) * (0.5 + 0.5 * std::sin(3.0 * std::atan2(w.y, w.x)));
            env.set_rgb(x, y, c);
        }
    }
    return env;
}

// Soft-edged checkerboard emitter for the background plane.
inline ImagePlane procedural_background(int width = 128, int height = 128, int cells = 8) {
    ImagePlane bg(width, height, 3);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const int cx = x * cells / width, cy = y * cells / height;
            const bool odd = (cx + cy) % 2 == 1;
            bg.set_rgb(x, y, odd ? Rgb(0.9, 0.35, 0.2) : Rgb(0.15, 0.5, 0.85));
        }
    }
    return bg;
}

struct CameraPose {
    Vec3 eye{0, 0, 1};
    Vec3 target{0, 0, 0};
    Vec3 up{0, 1, 0};
};

// Rigid view <-> world transform for a pose.
class ViewBasis {
public:
    explicit ViewBasis(const CameraPose& pose) {
        forward_ = normalize(pose.target - pose.eye);
        right_ = normalize(cross(forward_, pose.up));
        if (length(right_) == 0.0) throw ValidationError("camera up vector is parallel to the view direction");
        up_ = cross(right_, forward_);
    }
    Vec3 to_world(const Vec3& v) const { return right_ * v.x + up_ * v.y - forward_ * v.z; }
    Vec3 to_view(const Vec3& w) const { return {dot(w, right_), dot(w, up_), -dot(w, forward_)}; }

private:
    Vec3 forward_, right_, up_;
};

struct SlabScene {
    MaterialSample material{Rgb(1.0), 0.5, 0.0, 0.0};
    ImagePlane environment;                // equirectangular radiance, 3ch
    std::optional<ImagePlane> background;  // emitter texture on the plane z = -background_distance
    double background_extent = 4.0;        // world size of the (square) texture, centred under the origin
    double background_distance = 1.0;
    CameraModel camera;
    CameraPose pose;

    void validate() const {
        camera.validate();
        if (environment.empty() || environment.channels() != 3) throw ValidationError("scene needs a 3-channel environment map");
        if (background && background->channels() != 3) throw ValidationError("background texture must have 3 channels");
        if (!(pose.eye.z > 0.0)) throw ValidationError("camera must be above the slab");
        if (!(background_distance > 0.0) || !(background_extent > 0.0))
            throw ValidationError("background plane must lie strictly behind the slab");
    }

    // Radiance arriving along `dir` (pointing down) at slab point `p`.
    Rgb below(const Vec3& p, const Vec3& dir) const {
        if (background && dir.z < 0.0) {
            const double t = (-background_distance - p.z) / dir.z;
            const Vec3 q = p + dir * t;
            const double u = q.x / background_extent + 0.5;
            const double v = 0.5 - q.y / background_extent;
            if (u >= 0.0 && u <= 1.0 && v >= 0.0 && v <= 1.0)
                return sample_bilinear(*background, u * background->width(), v * background->height(), false);
        }
        return env_lookup(environment, dir);
    }
};

struct RenderSettings {
    int spp = 64;
    std::uint64_t seed = 1;
    int workers = 0;
};

namespace detail {

struct SlabHit {
    Vec3 point;
    Vec3 wo;
    double view_z;  // view-space distance along -z
};

// Ray through the centre of pixel (x, y); nothing if it misses the slab.
inline std::optional<SlabHit> hit_slab(const SlabScene& scene, const ViewBasis& basis, int x, int y, Vec3& dir_out) {
    const Vec3 view_dir = scene.camera.ray_direction(x + 0.5, y + 0.5);
    const Vec3 dir = basis.to_world(view_dir);
    dir_out = normalize(dir);
    if (dir.z >= 0.0) return std::nullopt;
    const double t = -scene.pose.eye.z / dir.z;
    return SlabHit{scene.pose.eye + dir * t, -dir_out, t};
}

inline Vec3 sample_cosine(double u1, double u2) {
    const double r = std::sqrt(u1), phi = 2.0 * kPi * u2;
    return {r * std::cos(phi), r * std::sin(phi), std::sqrt(std::max(0.0, 1.0 - u1))};
}

// Specular throughput F G (o.h) / ((o.n)(n.h)) of a GGX-sampled half vector;
// its expectation is A_lut F0 + B_lut.
inline Rgb specular_throughput(const Vec3& wo, const Vec3& wi, const Vec3& h, const MaterialSample& mat) {
    const double cos_o = wo.z, cos_i = wi.z, o_h = dot(wo, h);
    if (cos_o <= 0.0 || cos_i <= 0.0 || o_h <= 0.0) return {};
    const double w = smith_g(cos_o, cos_i, mat.roughness()) * o_h / (cos_o * h.z);
    return fresnel_schlick(o_h, f0_effective(mat)) * w;
}

}  // namespace detail

inline ImagePlane render(const SlabScene& scene, const RenderSettings& settings) {
    scene.validate();
    if (settings.spp < 1) throw ValidationError("spp must be >= 1");
    const ViewBasis basis(scene.pose);
    const MaterialSample& mat = scene.material;
    const LobeWeights k = lobe_weights(mat);
    const Rgb f0 = f0_effective(mat);
    const double sel_d = k.diffuse * mat.albedo().mean(), sel_s = k.specular * f0.mean(), sel_t = k.transmission;
    const double sel_sum = sel_d + sel_s + sel_t;
    const Vec3 n{0, 0, 1};
    const double r = mat.roughness();

    ImagePlane out(scene.camera.width, scene.camera.height, 3);
    parallel_for(scene.camera.height, settings.workers, [&](int y) {
        for (int x = 0; x < scene.camera.width; ++x) {
            Vec3 dir;
            const auto hit = detail::hit_slab(scene, basis, x, y, dir);
            if (!hit) {
                out.set_rgb(x, y, env_lookup(scene.environment, dir));
                continue;
            }
            if (sel_sum <= 0.0) continue;
            const Vec3& wo = hit->wo;
            Rng rng = Rng::stream(settings.seed, static_cast<std::uint64_t>(y) * scene.camera.width + x);
            Rgb sum;
            for (int s = 0; s < settings.spp; ++s) {
                const double pick = rng.uniform() * sel_sum;
                const double u1 = rng.uniform(), u2 = rng.uniform();
                if (pick < sel_d) {
                    const Vec3 wi = detail::sample_cosine(u1, u2);
                    sum += mat.albedo() * env_lookup(scene.environment, wi) * (k.diffuse * sel_sum / sel_d);
                } else if (pick < sel_d + sel_s) {
                    const Vec3 h = sample_ggx_h(u1, u2, r, n);
                    const Vec3 wi = reflect(wo, h);
                    const Rgb tp = detail::specular_throughput(wo, wi, h, mat);
                    if (tp == Rgb{}) continue;
                    sum += tp * env_lookup(scene.environment, wi) * (k.specular * sel_sum / sel_s);
                } else {
                    const Vec3 h1 = sample_ggx_h(u1, u2, r, n);
                    const Vec3 w1 = reflect(wo, h1);
                    const Rgb tp = detail::specular_throughput(wo, w1, h1, mat);
                    if (tp == Rgb{}) continue;
                    const Vec3 h2 = sample_ggx_h(rng.uniform(), rng.uniform(), r, n);
                    const Vec3 w2 = reflect(reflect(w1, n), h2);
                    if (w2.z <= 0.0) continue;
                    const Vec3 wt = mirror_through_plane(w2, n);
                    sum += tp * mat.albedo() * scene.below(hit->point, wt) * (k.transmission * sel_sum / sel_t);
                }
            }
            out.set_rgb(x, y, sum * (1.0 / settings.spp));
        }
    });
    return out;
}

// Cosine-weighted irradiance E = (1/pi) int L cos over the upper hemisphere at
// each pixel's slab point.
inline ImagePlane render_irradiance(const SlabScene& scene, const RenderSettings& settings) {
    scene.validate();
    const ViewBasis basis(scene.pose);
    ImagePlane out(scene.camera.width, scene.camera.height, 3);
    parallel_for(scene.camera.height, settings.workers, [&](int y) {
        for (int x = 0; x < scene.camera.width; ++x) {
            Vec3 dir;
            if (!detail::hit_slab(scene, basis, x, y, dir)) continue;
            Rng rng = Rng::stream(settings.seed ^ 0x6972726164ULL, static_cast<std::uint64_t>(y) * scene.camera.width + x);
            Rgb sum;
            for (int s = 0; s < settings.spp; ++s) {
                const double u1 = rng.uniform(), u2 = rng.uniform();
                sum += env_lookup(scene.environment, detail::sample_cosine(u1, u2));
            }
            out.set_rgb(x, y, sum * (1.0 / settings.spp));
        }
    });
    return out;
}

// Intrinsic channels of the slab scene as seen by its camera: analytic
// geometry, constant material planes, MC irradiance, the exact mirror
// reflection of the environment and the straight-through background.
inline ChannelSet synthesize_channels(const SlabScene& scene, const RenderSettings& irradiance_settings) {
    scene.validate();
    const ViewBasis basis(scene.pose);
    const int w = scene.camera.width, h = scene.camera.height;
    const MaterialSample& mat = scene.material;
    ChannelSet cs;
    cs.camera = scene.camera;
    cs.ior = mat.ior();
    cs.normal = ImagePlane(w, h, 3);
    cs.depth = ImagePlane(w, h, 1, 1.0f);
    cs.albedo = ImagePlane(w, h, 3);
    cs.roughness = ImagePlane(w, h, 1, static_cast<float>(mat.roughness()));
    cs.metallic = ImagePlane(w, h, 1, static_cast<float>(mat.metallic()));
    cs.transparency = ImagePlane(w, h, 1, static_cast<float>(mat.transparency()));
    cs.irradiance = render_irradiance(scene, irradiance_settings);
    cs.mirror = ImagePlane(w, h, 3);
    cs.background = ImagePlane(w, h, 3);
    const Vec3 n_view = normalize(basis.to_view({0, 0, 1}));
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            cs.albedo.set_rgb(x, y, mat.albedo());
            Vec3 dir;
            const auto hit = detail::hit_slab(scene, basis, x, y, dir);
            if (!hit) {
                // Sky pixel: a camera-facing far surface that reflects the sky straight back.
                cs.normal.set_rgb(x, y, {0, 0, 1});
                const Rgb sky = env_lookup(scene.environment, dir);
                cs.mirror->set_rgb(x, y, sky);
                cs.background->set_rgb(x, y, sky);
                continue;
            }
            cs.normal.set_rgb(x, y, {n_view.x, n_view.y, n_view.z});
            cs.depth.at(x, y) = static_cast<float>(std::clamp(scene.camera.normalized_depth(hit->view_z), 0.0, 1.0));
            cs.mirror->set_rgb(x, y, env_lookup(scene.environment, reflect(hit->wo, {0, 0, 1})));
            cs.background->set_rgb(x, y, scene.below(hit->point, dir));
        }
    }
    return cs;
}

}  // namespace epbr
