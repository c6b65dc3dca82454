// SPDX-License-Identifier: Apache-2.0
#pragma once

// Extended PBR BSDF: Lambertian diffuse, GGX/Schlick/Smith specular reflection
// and thin-surface specular transmission, mixed by metallic and transparency.
//
// Conventions: all directions point away from the shading point and are unit
// length; `n` is the geometric normal. Roughness r is the perceptual value,
// the GGX width is alpha = r^2 (so D carries r^4).

#include <cmath>
#include <limits>
#include <stdexcept>

#include "epbr/vec.hpp"

namespace epbr {

inline constexpr double kDefaultIor = 1.5;

inline double f0_from_ior(double ior) {
    const double q = (1.0 - ior) / (1.0 + ior);
    return q * q;
}

// Per-shading-point material. Construction validates ranges and drops
// metallic to zero on any transparent material.
class MaterialSample {
public:
    MaterialSample(Rgb albedo, double roughness, double metallic, double transparency, double ior = kDefaultIor)
        : albedo_(albedo), roughness_(roughness), metallic_(metallic), transparency_(transparency), ior_(ior) {
        auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
        if (!unit(albedo.r) || !unit(albedo.g) || !unit(albedo.b)) throw std::invalid_argument("albedo outside [0,1]");
        if (!unit(roughness)) throw std::invalid_argument("roughness outside [0,1]");
        if (!unit(metallic)) throw std::invalid_argument("metallic outside [0,1]");
        if (!unit(transparency)) throw std::invalid_argument("transparency outside [0,1]");
        if (!(ior >= 1.0) || !std::isfinite(ior)) throw std::invalid_argument("ior must be >= 1");
        if (transparency_ > 0.0) metallic_ = 0.0;
    }

    const Rgb& albedo() const noexcept { return albedo_; }
    double roughness() const noexcept { return roughness_; }
    double metallic() const noexcept { return metallic_; }
    double transparency() const noexcept { return transparency_; }
    double ior() const noexcept { return ior_; }

private:
    Rgb albedo_;
    double roughness_;
    double metallic_;
    double transparency_;
    double ior_;
};

struct LobeWeights {
    double diffuse;
    double specular;
    double transmission;
};

inline LobeWeights lobe_weights(const MaterialSample& mat) {
    return {(1.0 - mat.transparency()) * (1.0 - mat.metallic()), 1.0, mat.transparency()};
}

// GGX normal distribution. At r = 0 the distribution is a delta: returns +inf
// at n.h = 1 and 0 elsewhere; samplers carry an explicit mirror path instead.
inline double ggx_d(double n_dot_h, double r) {
    const double a2 = r * r * r * r;
    if (a2 == 0.0) return n_dot_h >= 1.0 ? std::numeric_limits<double>::infinity() : 0.0;
    const double c2 = n_dot_h * n_dot_h;
    const double denom = c2 * (a2 - 1.0) + 1.0;
    return a2 / (kPi * denom * denom);
}

// Schlick's Fresnel weight Fc = (1 - o.h)^5, so that F = (1 - Fc) F0 + Fc.
inline double fresnel_weight(double o_dot_h) {
    const double m = std::clamp(1.0 - o_dot_h, 0.0, 1.0);
    const double m2 = m * m;
    return m2 * m2 * m;
}

inline double fresnel_schlick(double o_dot_h, double f0) {
    const double fc = fresnel_weight(o_dot_h);
    return (1.0 - fc) * f0 + fc;
}

inline Rgb fresnel_schlick(double o_dot_h, const Rgb& f0) {
    const double fc = fresnel_weight(o_dot_h);
    return f0 * (1.0 - fc) + Rgb(fc);
}

inline Rgb f0_effective(const MaterialSample& mat) {
    return lerp(Rgb(f0_from_ior(mat.ior())), mat.albedo(), mat.metallic());
}

// Smith masking-shadowing with the Schlick form, k = r^2 / 2.
inline double smith_g(double n_dot_o, double n_dot_i, double r) {
    if (!(n_dot_o > 0.0) || !(n_dot_i > 0.0)) throw std::domain_error("smith_g requires positive cosines");
    const double k = r * r / 2.0;
    return (n_dot_o / (n_dot_o * (1.0 - k) + k)) * (n_dot_i / (n_dot_i * (1.0 - k) + k));
}

inline Rgb eval_diffuse(const MaterialSample& mat) { return mat.albedo() * kInvPi; }

inline Rgb eval_specular(const Vec3& wo, const Vec3& wi, const Vec3& n, const MaterialSample& mat) {
    const double cos_o = dot(wo, n);
    const double cos_i = dot(wi, n);
    if (cos_o <= 0.0 || cos_i <= 0.0) return {};
    const Vec3 sum = wo + wi;
    const double len = length(sum);
    if (len == 0.0) return {};
    const Vec3 h = sum / len;
    const double r = mat.roughness();
    const double scale = ggx_d(dot(n, h), r) * smith_g(cos_o, cos_i, r) / (4.0 * cos_o * cos_i);
    return fresnel_schlick(dot(wo, h), f0_effective(mat)) * scale;
}

// Half vector of the thin-surface transmission configuration.
inline Vec3 transmission_half_vector(const Vec3& wo, const Vec3& wi, double ior) {
    return -normalize(wo + ior * wi);
}

// Thin-surface transmission: the specular lobe mirrored to the lower
// hemisphere. The incident direction is reflected through the surface plane
// and the reflection lobe is evaluated there.
inline Rgb eval_transmission(const Vec3& wo, const Vec3& wi, const Vec3& n, const MaterialSample& mat) {
    if (dot(wi, n) > 0.0) throw std::domain_error("transmission requires wi in the lower hemisphere");
    return eval_specular(wo, mirror_through_plane(wi, n), n, mat);
}

// Full BSDF, routed by the hemisphere of wi.
inline Rgb eval_bsdf(const Vec3& wo, const Vec3& wi, const Vec3& n, const MaterialSample& mat) {
    const LobeWeights w = lobe_weights(mat);
    if (dot(wi, n) > 0.0) return eval_diffuse(mat) * w.diffuse + eval_specular(wo, wi, n, mat) * w.specular;
    if (w.transmission == 0.0) return {};
    return eval_transmission(wo, wi, n, mat) * w.transmission;
}

// Draws a GGX microfacet normal with density D(h)(n.h). r = 0 yields n.
inline Vec3 sample_ggx_h(double u1, double u2, double r, const Vec3& n) {
    if (r == 0.0) return n;
    const double a2 = r * r * r * r;
    const double cos2 = (1.0 - u1) / (1.0 + (a2 - 1.0) * u1);
    const double cos_t = std::sqrt(std::max(0.0, cos2));
    const double sin_t = std::sqrt(std::max(0.0, 1.0 - cos2));
    const double phi = 2.0 * kPi * u2;
    const Vec3 local{sin_t * std::cos(phi), sin_t * std::sin(phi), cos_t};
    return Frame::from_normal(n).to_world(local);
}

}  // namespace epbr
