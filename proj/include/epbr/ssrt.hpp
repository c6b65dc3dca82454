// SPDX-License-Identifier: Apache-2.0
#pragma once

// Screen-space tracing of mirror reflections against a depth + normal buffer.
// Each pixel's view ray is reflected about its normal and marched in uniform
// view-space steps; a crossing behind the depth buffer within the thickness
// tolerance is refined by bisection and accepted only if the surface there
// faces the ray.

#include <cmath>
#include <optional>

#include "epbr/camera.hpp"
#include "epbr/error.hpp"
#include "epbr/image.hpp"
#include "epbr/parallel.hpp"

namespace epbr {

enum class MissFill { constant_gray, hole };

struct SsrtConfig {
    int max_steps = 512;
    double thickness = 0.01;  // relative to the buffer's view-space depth
    int refine_steps = 8;
    MissFill miss_fill = MissFill::constant_gray;

    void validate() const {
        if (max_steps <= 0 || refine_steps <= 0 || !(thickness > 0.0)) throw ValidationError("SSRT config values must be positive");
    }
};

inline constexpr float kMissGray = 0.5f;

struct ReflectionLayer {
    ImagePlane color;  // 3 channels, HDR
    ImagePlane valid;  // 1 channel, 0 or 1
};

struct SsrtHit {
    int x;
    int y;
    double ray_depth;     // view-space distance of the refined ray point
    double buffer_depth;  // view-space distance stored in the buffer there
};

namespace detail {

inline Vec3 decode_normal(const ImagePlane& normal, int x, int y) {
    return normalize({normal.at(x, y, 0), normal.at(x, y, 1), normal.at(x, y, 2)});
}

}  // namespace detail

// Traces the reflection ray of one pixel. Returns nothing on a miss.
inline std::optional<SsrtHit> trace_pixel(const ImagePlane& depth, const ImagePlane& normal, const CameraModel& cam,
                                          const SsrtConfig& cfg, int px, int py) {
    const Vec3 origin = cam.unproject(px + 0.5, py + 0.5, depth.at(px, py));
    const Vec3 view = normalize(origin);
    const Vec3 n = detail::decode_normal(normal, px, py);
    if (dot(n, view) >= 0.0) return std::nullopt;  // surface faces away from the camera
    const Vec3 dir = reflect(-view, n);
    const double step = (cam.far - cam.near) / cfg.max_steps;

    struct Probe {
        bool on_screen;
        int x, y;
        double ray_z, buffer_z;
    };
    auto probe = [&](double t) -> Probe {
        const Vec3 p = origin + dir * t;
        const double z = -p.z;
        if (z < cam.near || z > cam.far) return {false, 0, 0, z, 0};
        const auto proj = cam.project(p);
        if (proj.x < 0 || proj.y < 0 || proj.x >= cam.width || proj.y >= cam.height) return {false, 0, 0, z, 0};
        const int x = static_cast<int>(proj.x);
        const int y = static_cast<int>(proj.y);
        return {true, x, y, z, cam.linear_depth(depth.at(x, y))};
    };
    auto within = [&](const Probe& p) {
        return p.ray_z >= p.buffer_z && p.ray_z - p.buffer_z <= cfg.thickness * p.buffer_z;
    };

    // Start two steps out: the refined hit then lies at least one step away
    // from the pixel's own surface point.
    for (int k = 2; k <= cfg.max_steps; ++k) {
        const Probe cur = probe(k * step);
        if (!cur.on_screen) return std::nullopt;
        if (cur.ray_z < cur.buffer_z) continue;
        if (!within(cur)) continue;  // passed behind a thick occluder

        double lo = (k - 1) * step, hi = k * step;
        for (int i = 0; i < cfg.refine_steps; ++i) {
            const double mid = 0.5 * (lo + hi);
            const Probe m = probe(mid);
            if (m.on_screen && m.ray_z >= m.buffer_z) hi = mid;
            else lo = mid;
        }
        Probe hit = probe(hi);
        if (!hit.on_screen || !within(hit)) hit = cur;

        const Vec3 hit_n = detail::decode_normal(normal, hit.x, hit.y);
        if (dot(hit_n, dir) >= 0.0) return std::nullopt;  // back face
        return SsrtHit{hit.x, hit.y, hit.ray_z, hit.buffer_z};
    }
    return std::nullopt;
}

inline ReflectionLayer trace_reflections(const ImagePlane& depth, const ImagePlane& normal, const ImagePlane& source,
                                         const CameraModel& cam, const SsrtConfig& cfg, int workers = 0) {
    cfg.validate();
    cam.validate();
    if (depth.channels() != 1 || normal.channels() != 3) throw ValidationError("SSRT needs 1-channel depth and 3-channel normals");
    if (!depth.same_size(normal) || !depth.same_size(source) || depth.width() != cam.width || depth.height() != cam.height)
        throw ValidationError("SSRT inputs and camera must share one resolution");

    const float fill = cfg.miss_fill == MissFill::constant_gray ? kMissGray : 0.0f;
    ReflectionLayer layer{ImagePlane(depth.width(), depth.height(), 3, fill), ImagePlane(depth.width(), depth.height(), 1)};
    parallel_for(depth.height(), workers, [&](int y) {
        for (int x = 0; x < depth.width(); ++x) {
            if (const auto hit = trace_pixel(depth, normal, cam, cfg, x, y)) {
                layer.color.set_rgb(x, y, source.rgb(hit->x, hit->y));
                layer.valid.at(x, y) = 1.0f;
            }
        }
    });
    return layer;
}

inline ImagePlane fill_holes(const ReflectionLayer& layer, const Rgb& color = Rgb(kMissGray)) {
    ImagePlane out = layer.color;
    for (int y = 0; y < out.height(); ++y)
        for (int x = 0; x < out.width(); ++x)
            if (layer.valid.at(x, y) == 0.0f) out.set_rgb(x, y, color);
    return out;
}

}  // namespace epbr
