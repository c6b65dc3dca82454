// SPDX-License-Identifier: Apache-2.0
#pragma once

// Screen-space composition of the final image from intrinsic channels:
//   I_diff = A E
//   I_spec = (A_lut F0 + B_lut) Conv(K, A_mr)
//   I_tran = (A_lut F0 + B_lut) Conv(K, Conv(K, A_bg)) A
//   I      = (1 - T)(1 - M) I_diff + I_spec + T I_tran
// with M forced to zero wherever T > 0.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "epbr/bsdf.hpp"
#include "epbr/camera.hpp"
#include "epbr/color.hpp"
#include "epbr/error.hpp"
#include "epbr/ggx_filter.hpp"
#include "epbr/image.hpp"
#include "epbr/parallel.hpp"
#include "epbr/splitsum_lut.hpp"

namespace epbr {

struct ChannelSet {
    ImagePlane normal;        // N, 3ch view-space unit normals in [-1,1]
    ImagePlane depth;         // D, 1ch in [0,1]
    ImagePlane albedo;        // A, 3ch in [0,1]
    ImagePlane roughness;     // R, 1ch in [0,1]
    ImagePlane metallic;      // M, 1ch in [0,1]
    ImagePlane transparency;  // T, 1ch in [0,1]
    ImagePlane irradiance;    // E, 3ch >= 0
    std::optional<ImagePlane> mirror;      // A_mr, 3ch >= 0
    std::optional<ImagePlane> background;  // A_bg, 3ch >= 0; constant 1 when absent
    CameraModel camera;
    double ior = kDefaultIor;

    int width() const { return albedo.width(); }
    int height() const { return albedo.height(); }

    // Checks shapes and Table-style value ranges. Throws ValidationError.
    void validate() const {
        camera.validate();
        struct Check {
            const char* name;
            const ImagePlane* plane;
            int channels;
            float lo, hi;
        };
        constexpr float inf = std::numeric_limits<float>::infinity();
        std::vector<Check> checks{{"normal", &normal, 3, -1.0f, 1.0f},      {"depth", &depth, 1, 0.0f, 1.0f},
                                  {"albedo", &albedo, 3, 0.0f, 1.0f},       {"roughness", &roughness, 1, 0.0f, 1.0f},
                                  {"metallic", &metallic, 1, 0.0f, 1.0f},   {"transparency", &transparency, 1, 0.0f, 1.0f},
                                  {"irradiance", &irradiance, 3, 0.0f, inf}};
        if (mirror) checks.push_back({"mirror", &*mirror, 3, 0.0f, inf});
        if (background) checks.push_back({"background", &*background, 3, 0.0f, inf});
        for (const auto& c : checks) {
            if (c.plane->empty()) throw ValidationError(std::string("missing channel '") + c.name + "'");
            if (c.plane->channels() != c.channels)
                throw ValidationError(std::string("channel '") + c.name + "' must have " + std::to_string(c.channels) + " channel(s)");
            if (c.plane->width() != camera.width || c.plane->height() != camera.height)
                throw ValidationError(std::string("channel '") + c.name + "' does not match the shared resolution");
            for (float v : c.plane->data())
                if (!(v >= c.lo && v <= c.hi))
                    throw ValidationError(std::string("channel '") + c.name + "' has a value outside its range");
        }
        if (!(ior >= 1.0)) throw ValidationError("ior must be >= 1");
    }

    // Metallic with the transparent-surface rule applied.
    float effective_metallic(int x, int y) const { return transparency.at(x, y) > 0.0f ? 0.0f : metallic.at(x, y); }
};

struct LayerStack {
    ImagePlane diffuse;
    ImagePlane specular;
    ImagePlane transmission;
    ImagePlane final_image;
};

struct ComposeOptions {
    double d_px = kDefaultDistancePx;
    int roughness_bins = 8;
    int workers = 0;
};

// Virtual kernel distance at which one pixel of blur matches the angular
// footprint of a mirror reflection seen through `cam` near the image centre:
// a half-vector tilt of theta turns the reflected ray by 2 theta.
inline double mirror_matched_distance(const CameraModel& cam) { return cam.height / cam.tan_half_fov(); }

inline constexpr double kMinViewCosine = 0.02;

// Roughness binning: convolutions run once per bin centre and pixels blend
// the two nearest bins. If at most `max_bins` distinct roughness values occur
// they become the centres exactly; otherwise centres are spread uniformly over
// the occupied range.
class RoughnessBins {
public:
    RoughnessBins(const ImagePlane& roughness, int max_bins) {
        max_bins = std::max(max_bins, 1);
        std::set<float> distinct;
        for (float v : roughness.data()) {
            distinct.insert(v);
            if (static_cast<int>(distinct.size()) > max_bins) break;
        }
        if (static_cast<int>(distinct.size()) <= max_bins) {
            centres_.assign(distinct.begin(), distinct.end());
        } else {
            const auto [lo, hi] = std::minmax_element(roughness.data().begin(), roughness.data().end());
            const int n = std::max(max_bins, 2);
            for (int i = 0; i < n; ++i) centres_.push_back(*lo + (*hi - *lo) * static_cast<double>(i) / (n - 1));
        }
    }

    const std::vector<double>& centres() const noexcept { return centres_; }

    struct Blend {
        int lo;
        int hi;
        double t;
    };

    Blend blend(double r) const {
        if (centres_.size() == 1 || r <= centres_.front()) return {0, 0, 0.0};
        if (r >= centres_.back()) {
            const int last = static_cast<int>(centres_.size()) - 1;
            return {last, last, 0.0};
        }
        const auto it = std::upper_bound(centres_.begin(), centres_.end(), r);
        const int hi = static_cast<int>(it - centres_.begin());
        const int lo = hi - 1;
        if (centres_[lo] == r) return {lo, lo, 0.0};
        return {lo, hi, (r - centres_[lo]) / (centres_[hi] - centres_[lo])};
    }

private:
    std::vector<double> centres_;
};

namespace detail {

// Blurs `img` once per roughness bin (twice when `passes` == 2) and blends per pixel.
inline ImagePlane roughness_blur(const ImagePlane& img, const ImagePlane& roughness, int passes, const ComposeOptions& opts) {
    const RoughnessBins bins(roughness, opts.roughness_bins);
    std::vector<char> used(bins.centres().size(), 0);
    for (float r : roughness.data()) {
        const auto b = bins.blend(r);
        used[b.lo] = 1;
        if (b.t > 0.0) used[b.hi] = 1;
    }
    std::vector<ImagePlane> blurred(bins.centres().size());
    for (std::size_t i = 0; i < blurred.size(); ++i) {
        if (!used[i]) continue;
        const GgxKernel k = build_kernel(bins.centres()[i], opts.d_px);
        blurred[i] = passes == 2 ? convolve_twice(img, k, opts.workers) : convolve(img, k, opts.workers);
    }
    ImagePlane out(img.width(), img.height(), 3);
    parallel_for(img.height(), opts.workers, [&](int y) {
        for (int x = 0; x < img.width(); ++x) {
            const auto b = bins.blend(roughness.at(x, y));
            Rgb v = blurred[b.lo].rgb(x, y);
            if (b.t > 0.0) v = lerp(v, blurred[b.hi].rgb(x, y), b.t);
            out.set_rgb(x, y, v);
        }
    });
    return out;
}

// Per-pixel M_s = A_lut F0 + B_lut.
inline ImagePlane specular_albedo(const ChannelSet& cs, const SplitSumLut& lut, int workers) {
    ImagePlane out(cs.width(), cs.height(), 3);
    const double f0_dielectric = f0_from_ior(cs.ior);
    parallel_for(cs.height(), workers, [&](int y) {
        for (int x = 0; x < cs.width(); ++x) {
            const Vec3 to_eye = -normalize(cs.camera.ray_direction(x + 0.5, y + 0.5));
            const Vec3 n = normalize({cs.normal.at(x, y, 0), cs.normal.at(x, y, 1), cs.normal.at(x, y, 2)});
            const double cos_v = std::clamp(dot(n, to_eye), kMinViewCosine, 1.0);
            const SplitSumPair ab = lut.lookup(cs.roughness.at(x, y), cos_v);
            const Rgb f0 = lerp(Rgb(f0_dielectric), cs.albedo.rgb(x, y), cs.effective_metallic(x, y));
            out.set_rgb(x, y, f0 * static_cast<double>(ab.a) + Rgb(ab.b));
        }
    });
    return out;
}

inline ImagePlane multiply(const ImagePlane& a, const ImagePlane& b) {
    ImagePlane out(a.width(), a.height(), 3);
    for (int y = 0; y < a.height(); ++y)
        for (int x = 0; x < a.width(); ++x) out.set_rgb(x, y, a.rgb(x, y) * b.rgb(x, y));
    return out;
}

}  // namespace detail

inline ImagePlane diffuse_layer(const ChannelSet& cs) { return detail::multiply(cs.albedo, cs.irradiance); }

inline ImagePlane specular_layer(const ChannelSet& cs, const SplitSumLut& lut, const ComposeOptions& opts = {}) {
    if (!cs.mirror) throw ValidationError("specular layer needs a mirror reflection channel");
    const ImagePlane blurred = detail::roughness_blur(*cs.mirror, cs.roughness, 1, opts);
    return detail::multiply(detail::specular_albedo(cs, lut, opts.workers), blurred);
}

inline ImagePlane transmission_layer(const ChannelSet& cs, const SplitSumLut& lut, const ComposeOptions& opts = {}) {
    const ImagePlane background = cs.background ? *cs.background : ImagePlane(cs.width(), cs.height(), 3, 1.0f);
    const ImagePlane blurred = detail::roughness_blur(background, cs.roughness, 2, opts);
    return detail::multiply(detail::multiply(detail::specular_albedo(cs, lut, opts.workers), blurred), cs.albedo);
}

inline LayerStack compose(const ChannelSet& cs, const SplitSumLut& lut, const ComposeOptions& opts = {}) {
    cs.validate();
    LayerStack s{diffuse_layer(cs), specular_layer(cs, lut, opts), transmission_layer(cs, lut, opts), {}};
    s.final_image = ImagePlane(cs.width(), cs.height(), 3);
    for (int y = 0; y < cs.height(); ++y) {
        for (int x = 0; x < cs.width(); ++x) {
            const double t = cs.transparency.at(x, y);
            const double kd = (1.0 - t) * (1.0 - cs.effective_metallic(x, y));
            s.final_image.set_rgb(x, y, s.diffuse.rgb(x, y) * kd + s.specular.rgb(x, y) + s.transmission.rgb(x, y) * t);
        }
    }
    return s;
}

enum class ToneMapMode { clamp_srgb, reinhard_srgb };

inline ToneMapMode parse_tonemap(const std::string& s) {
    if (s == "clamp" || s == "clamp-srgb") return ToneMapMode::clamp_srgb;
    if (s == "reinhard" || s == "reinhard-srgb") return ToneMapMode::reinhard_srgb;
    throw ValidationError("unknown tonemap mode '" + s + "'");
}

// Display encoding: exposure, optional Reinhard, clamp, sRGB.
inline ImagePlane tonemap(const ImagePlane& img, ToneMapMode mode = ToneMapMode::clamp_srgb, double exposure = 1.0) {
    ImagePlane out = img;
    for (float& v : out.data()) {
        double x = v * exposure;
        if (mode == ToneMapMode::reinhard_srgb) x = x / (1.0 + x);
        v = encode_srgb(static_cast<float>(std::clamp(x, 0.0, 1.0)));
    }
    return out;
}

}  // namespace epbr
