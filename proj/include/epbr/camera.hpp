// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>

#include "epbr/error.hpp"
#include "epbr/vec.hpp"

namespace epbr {

// Pinhole camera in view space: eye at the origin looking down -z, +x right,
// +y up. Pixel coordinates are continuous with (0,0) at the top-left image
// corner, so pixel (i, j) has its centre at (i + 0.5, j + 0.5). Stored depth
// is linear in view-space distance along -z: d = (z - near) / (far - near).
struct CameraModel {
    double vertical_fov_deg = 60.0;
    double near = 0.1;
    double far = 100.0;
    int width = 0;
    int height = 0;

    void validate() const {
        if (!(near > 0.0) || !(far > near)) throw ValidationError("camera requires 0 < near < far");
        if (!(vertical_fov_deg > 0.0 && vertical_fov_deg < 180.0)) throw ValidationError("camera fov must be in (0, 180)");
        if (width <= 0 || height <= 0) throw ValidationError("camera resolution must be positive");
    }

    double tan_half_fov() const { return std::tan(vertical_fov_deg * kPi / 360.0); }
    double aspect() const { return static_cast<double>(width) / height; }

    // Direction through a pixel position with unit -z component.
    Vec3 ray_direction(double px, double py) const {
        const double t = tan_half_fov();
        const double ndc_x = 2.0 * px / width - 1.0;
        const double ndc_y = 1.0 - 2.0 * py / height;
        return {ndc_x * t * aspect(), ndc_y * t, -1.0};
    }

    double linear_depth(double d) const { return near + d * (far - near); }
    double normalized_depth(double z_dist) const { return (z_dist - near) / (far - near); }

    Vec3 unproject(double px, double py, double d) const { return ray_direction(px, py) * linear_depth(d); }

    struct Projection {
        double x;
        double y;
        double depth;
    };

    Projection project(const Vec3& p) const {
        const double z = -p.z;
        const double t = tan_half_fov();
        const double ndc_x = p.x / (z * t * aspect());
        const double ndc_y = p.y / (z * t);
        return {(ndc_x + 1.0) * 0.5 * width, (1.0 - ndc_y) * 0.5 * height, normalized_depth(z)};
    }
};

}  // namespace epbr
