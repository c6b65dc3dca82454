// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "epbr/error.hpp"
#include "epbr/vec.hpp"

namespace epbr {

// Row-major, top-left origin, interleaved float planes with 1 or 3 channels.
class ImagePlane {
public:
    ImagePlane() = default;

    ImagePlane(int width, int height, int channels, float fill = 0.0f)
        : width_(width), height_(height), channels_(channels) {
        check_shape(width, height, channels);
        data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
    }

    ImagePlane(int width, int height, int channels, std::vector<float> data)
        : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
        check_shape(width, height, channels);
        if (data_.size() != static_cast<std::size_t>(width) * height * channels)
            throw ValidationError("image data length does not match " + shape_string());
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    int channels() const noexcept { return channels_; }
    std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(width_) * height_; }
    bool empty() const noexcept { return data_.empty(); }

    bool same_size(const ImagePlane& o) const noexcept { return width_ == o.width_ && height_ == o.height_; }
    bool same_shape(const ImagePlane& o) const noexcept { return same_size(o) && channels_ == o.channels_; }

    std::span<float> data() noexcept { return data_; }
    std::span<const float> data() const noexcept { return data_; }

    float& at(int x, int y, int c = 0) { return data_[index(x, y, c)]; }
    float at(int x, int y, int c = 0) const { return data_[index(x, y, c)]; }

    // Grayscale planes broadcast to all three components.
    Rgb rgb(int x, int y) const {
        const std::size_t i = index(x, y, 0);
        if (channels_ == 1) return Rgb(data_[i]);
        return {data_[i], data_[i + 1], data_[i + 2]};
    }

    void set_rgb(int x, int y, const Rgb& v) {
        const std::size_t i = index(x, y, 0);
        data_[i] = static_cast<float>(v.r);
        if (channels_ == 3) {
            data_[i + 1] = static_cast<float>(v.g);
            data_[i + 2] = static_cast<float>(v.b);
        }
    }

    std::string shape_string() const {
        return std::to_string(width_) + "x" + std::to_string(height_) + "x" + std::to_string(channels_);
    }

    bool operator==(const ImagePlane&) const = default;

private:
    static void check_shape(int width, int height, int channels) {
        if (width <= 0 || height <= 0) throw ValidationError("image dimensions must be positive");
        if (channels != 1 && channels != 3) throw ValidationError("image must have 1 or 3 channels");
    }

    std::size_t index(int x, int y, int c) const noexcept {
        return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
    }

    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<float> data_;
};

// Single channel `c` of a plane as a new 1-channel plane.
inline ImagePlane extract_channel(const ImagePlane& img, int c) {
    ImagePlane out(img.width(), img.height(), 1);
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) out.at(x, y) = img.at(x, y, c);
    return out;
}

}  // namespace epbr
