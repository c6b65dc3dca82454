// SPDX-License-Identifier: Apache-2.0
//
// Chi-square goodness of fit of the GGX half-vector sampler against D(h)(n.h).
#pragma once

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "epbr/bsdf.hpp"
#include "epbr/rng.hpp"
#include "support/oracles.hpp"

namespace oracle {

struct ChiSquareResult {
    double chi2 = 0.0;
    double p_value = 0.0;
    double total_probability = 0.0;
    double min_expected = 0.0;
};

// 24 polar x 8 azimuth bins; polar bin mass by Simpson's rule.
inline ChiSquareResult ggx_sampler_chi2(double r, int n, std::uint64_t seed) {
    using epbr::kPi;
    const int n_theta = 24, n_phi = 8;
    const double theta_max = 1.4;
    std::vector<double> edges(n_theta + 1);
    for (int i = 0; i <= n_theta; ++i) edges[i] = theta_max * i / n_theta;
    edges[n_theta] = kPi / 2;
    std::vector<double> p_theta(n_theta);
    for (int i = 0; i < n_theta; ++i) {
        const int steps = 2000;
        const double a = edges[i], b = edges[i + 1], hstep = (b - a) / steps;
        double s = 0.0;
        for (int k = 0; k <= steps; ++k) {
            const double th = a + k * hstep;
            const double f = ndf(std::cos(th), r) * std::cos(th) * std::sin(th) * 2.0 * kPi;
            s += f * ((k == 0 || k == steps) ? 1.0 : (k % 2 ? 4.0 : 2.0));
        }
        p_theta[i] = s * hstep / 3.0;
    }

    std::vector<double> counts(n_theta * n_phi, 0.0);
    epbr::Rng rng(seed);
    const epbr::Vec3 normal{0, 0, 1};
    for (int s = 0; s < n; ++s) {
        const epbr::Vec3 h = epbr::sample_ggx_h(rng.uniform(), rng.uniform(), r, normal);
        const double th = std::acos(std::clamp(h.z, -1.0, 1.0));
        double phi = std::atan2(h.y, h.x);
        if (phi < 0) phi += 2 * kPi;
        int bt = 0;
        while (bt < n_theta - 1 && th >= edges[bt + 1]) ++bt;
        const int bp = std::min(n_phi - 1, static_cast<int>(phi / (2 * kPi) * n_phi));
        counts[bt * n_phi + bp] += 1.0;
    }
    ChiSquareResult res;
    res.min_expected = 1e300;
    for (int i = 0; i < n_theta; ++i) {
        res.total_probability += p_theta[i];
        for (int j = 0; j < n_phi; ++j) {
            const double e = n * p_theta[i] / n_phi;
            res.min_expected = std::min(res.min_expected, e);
            const double d = counts[i * n_phi + j] - e;
            res.chi2 += d * d / e;
        }
    }
    const boost::math::chi_squared dist(n_theta * n_phi - 1);
    res.p_value = 1.0 - boost::math::cdf(dist, res.chi2);
    return res;
}

}  // namespace oracle
