// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <limits>

#include "epbr/compositor.hpp"
#include "epbr/error.hpp"
#include "epbr/image.hpp"

namespace epbr {

struct ImageDifference {
    double mse = 0.0;
    double mean_abs = 0.0;
    double psnr_db = std::numeric_limits<double>::infinity();  // +inf for identical images
};

// Compares two display-encoded images with values in [0, 1].
inline ImageDifference compare_images(const ImagePlane& a, const ImagePlane& b) {
    if (!a.same_shape(b)) throw ValidationError("image size mismatch: " + a.shape_string() + " vs " + b.shape_string());
    const auto da = a.data(), db = b.data();
    double sq = 0.0, ab = 0.0;
    for (std::size_t i = 0; i < da.size(); ++i) {
        const double d = static_cast<double>(da[i]) - db[i];
        sq += d * d;
        ab += std::abs(d);
    }
    ImageDifference r;
    r.mse = sq / da.size();
    r.mean_abs = ab / da.size();
    if (r.mse > 0.0) r.psnr_db = 10.0 * std::log10(1.0 / r.mse);
    return r;
}

inline double psnr(const ImagePlane& a, const ImagePlane& b) { return compare_images(a, b).psnr_db; }

// Linear HDR to display values: clamp then sRGB.
inline ImagePlane display_encode(const ImagePlane& linear) { return tonemap(linear, ToneMapMode::clamp_srgb, 1.0); }

}  // namespace epbr
