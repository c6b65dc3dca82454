// SPDX-License-Identifier: Apache-2.0
#pragma once

// Tabulated split-sum specular integral: for roughness r and view cosine
// cos_v, M_s = A * F0 + B where
//   A = E[(1 - Fc) G (o.h) / ((o.n)(n.h))],  B = E[Fc G (o.h) / ((o.n)(n.h))]
// with h drawn from the GGX pdf D(h)(n.h) and Fc = (1 - o.h)^5. This is the
// hemisphere integral of f_s (n.wi) with Fresnel factored out, divided by
// the reflected-direction pdf D(h)(n.h) / (4 o.h).

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>
#include <utility>
#include <vector>

#include "epbr/bsdf.hpp"
#include "epbr/error.hpp"
#include "epbr/image_io.hpp"
#include "epbr/parallel.hpp"
#include "epbr/rng.hpp"

namespace epbr {

struct SplitSumPair {
    float a = 0.0f;
    float b = 0.0f;

    bool operator==(const SplitSumPair&) const = default;
};

class SplitSumLut {
public:
    SplitSumLut() = default;
    SplitSumLut(int n_rough, int n_cos) : n_rough_(n_rough), n_cos_(n_cos) {
        if (n_rough < 1 || n_cos < 1) throw ValidationError("LUT grid sizes must be >= 1");
        entries_.resize(static_cast<std::size_t>(n_rough) * n_cos);
    }

    int n_rough() const noexcept { return n_rough_; }
    int n_cos() const noexcept { return n_cos_; }

    // Cell centres sit at (i + 0.5) / n on both axes.
    double roughness_at(int i) const { return (i + 0.5) / n_rough_; }
    double cos_at(int j) const { return (j + 0.5) / n_cos_; }

    SplitSumPair& at(int i_rough, int j_cos) { return entries_[static_cast<std::size_t>(i_rough) * n_cos_ + j_cos]; }
    const SplitSumPair& at(int i_rough, int j_cos) const {
        return entries_[static_cast<std::size_t>(i_rough) * n_cos_ + j_cos];
    }

    const std::vector<SplitSumPair>& entries() const noexcept { return entries_; }

    // Bilinear over cell centres, clamped to the border centres.
    SplitSumPair lookup(double r, double cos_v) const {
        auto axis = [](double v, int n, int& lo, int& hi, double& t) {
            const double p = std::clamp(v * n - 0.5, 0.0, static_cast<double>(n - 1));
            lo = static_cast<int>(std::floor(p));
            hi = std::min(lo + 1, n - 1);
            t = p - lo;
        };
        int r0, r1, c0, c1;
        double tr, tc;
        axis(r, n_rough_, r0, r1, tr);
        axis(cos_v, n_cos_, c0, c1, tc);
        auto mix = [&](float SplitSumPair::*field) {
            const double v00 = at(r0, c0).*field, v01 = at(r0, c1).*field;
            const double v10 = at(r1, c0).*field, v11 = at(r1, c1).*field;
            return static_cast<float>((1 - tr) * ((1 - tc) * v00 + tc * v01) + tr * ((1 - tc) * v10 + tc * v11));
        };
        return {mix(&SplitSumPair::a), mix(&SplitSumPair::b)};
    }

    bool operator==(const SplitSumLut&) const = default;

private:
    int n_rough_ = 0;
    int n_cos_ = 0;
    std::vector<SplitSumPair> entries_;
};

// Importance-sampled estimate of (A, B) at one (roughness, view cosine).
// Samples whose reflected direction falls below the horizon still count
// toward the sample total.
inline std::pair<double, double> integrate_split_sum(double r, double cos_v, std::uint64_t samples, Rng& rng) {
    const Vec3 n{0, 0, 1};
    const Vec3 wo{std::sqrt(std::max(0.0, 1.0 - cos_v * cos_v)), 0.0, cos_v};
    if (r == 0.0) {
        const double fc = fresnel_weight(cos_v);
        return {1.0 - fc, fc};
    }
    double sum_a = 0.0, sum_b = 0.0;
    for (std::uint64_t k = 0; k < samples; ++k) {
        const double u1 = rng.uniform();
        const double u2 = rng.uniform();
        const Vec3 h = sample_ggx_h(u1, u2, r, n);
        const double o_h = dot(wo, h);
        if (o_h <= 0.0) continue;
        const double cos_i = 2.0 * o_h * h.z - cos_v;
        if (cos_i <= 0.0) continue;
        const double weight = smith_g(cos_v, cos_i, r) * o_h / (cos_v * h.z);
        const double fc = fresnel_weight(o_h);
        sum_a += (1.0 - fc) * weight;
        sum_b += fc * weight;
    }
    const double inv = 1.0 / static_cast<double>(samples);
    return {sum_a * inv, sum_b * inv};
}

// Bakes the table. Each cell draws from its own stream derived from
// (seed, cell index), so the table is identical for any worker count.
inline SplitSumLut bake_lut(int n_rough, int n_cos, std::uint64_t samples_per_cell, std::uint64_t seed,
                            int workers = 0) {
    if (samples_per_cell < 1) throw ValidationError("samples_per_cell must be >= 1");
    SplitSumLut lut(n_rough, n_cos);
    parallel_for(n_rough * n_cos, workers, [&](int cell) {
        const int i = cell / n_cos;
        const int j = cell % n_cos;
        Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(cell));
        const auto [a, b] = integrate_split_sum(lut.roughness_at(i), lut.cos_at(j), samples_per_cell, rng);
        lut.at(i, j) = {static_cast<float>(a), static_cast<float>(b)};
    });
    return lut;
}

inline constexpr char kLutMagic[8] = {'E', 'P', 'B', 'R', 'L', 'U', 'T', '1'};

inline std::string encode_lut(const SplitSumLut& lut) {
    std::string out(kLutMagic, 8);
    auto put_u32 = [&](std::uint32_t v) {
        for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    };
    put_u32(static_cast<std::uint32_t>(lut.n_rough()));
    put_u32(static_cast<std::uint32_t>(lut.n_cos()));
    for (const auto& e : lut.entries()) {
        put_u32(std::bit_cast<std::uint32_t>(e.a));
        put_u32(std::bit_cast<std::uint32_t>(e.b));
    }
    return out;
}

inline SplitSumLut decode_lut(const std::string& bytes, const std::string& name = "<memory>") {
    if (bytes.size() < 16 || std::memcmp(bytes.data(), kLutMagic, 8) != 0)
        throw IoError("'" + name + "' is not an EPBRLUT1 file");
    auto get_u32 = [&](std::size_t off) {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[off + i])) << (8 * i);
        return v;
    };
    const std::uint32_t n_rough = get_u32(8);
    const std::uint32_t n_cos = get_u32(12);
    if (n_rough == 0 || n_cos == 0 || n_rough > 65536 || n_cos > 65536)
        throw IoError("'" + name + "' has an invalid LUT grid");
    const std::size_t count = static_cast<std::size_t>(n_rough) * n_cos;
    if (bytes.size() != 16 + count * 8) throw IoError("'" + name + "' is truncated or has trailing bytes");
    SplitSumLut lut(static_cast<int>(n_rough), static_cast<int>(n_cos));
    for (std::size_t k = 0; k < count; ++k) {
        const float a = std::bit_cast<float>(get_u32(16 + 8 * k));
        const float b = std::bit_cast<float>(get_u32(20 + 8 * k));
        if (!std::isfinite(a) || !std::isfinite(b)) throw IoError("'" + name + "' contains non-finite entries");
        lut.at(static_cast<int>(k / n_cos), static_cast<int>(k % n_cos)) = {a, b};
    }
    return lut;
}

inline void save_lut(const SplitSumLut& lut, const std::string& path) { detail::write_file_bytes(path, encode_lut(lut)); }

inline SplitSumLut load_lut(const std::string& path) { return decode_lut(detail::read_file_bytes(path), path); }

}  // namespace epbr
