// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <string_view>

#include "epbr/error.hpp"

namespace epbr {

enum class ColorEncoding { linear, srgb };

inline ColorEncoding parse_encoding(std::string_view s) {
    if (s == "linear") return ColorEncoding::linear;
    if (s == "srgb") return ColorEncoding::srgb;
    throw ValidationError("unknown color encoding '" + std::string(s) + "'");
}

inline std::string_view to_string(ColorEncoding e) { return e == ColorEncoding::srgb ? "srgb" : "linear"; }

// IEC 61966-2-1 transfer functions on [0, 1]. Callers clamp.
inline float encode_srgb(float v) {
    const double x = v;
    return static_cast<float>(x <= 0.0031308 ? 12.92 * x : 1.055 * std::pow(x, 1.0 / 2.4) - 0.055);
}

inline float decode_srgb(float v) {
    const double x = v;
    return static_cast<float>(x <= 0.04045 ? x / 12.92 : std::pow((x + 0.055) / 1.055, 2.4));
}

}  // namespace epbr
