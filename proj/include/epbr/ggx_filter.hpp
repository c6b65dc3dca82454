// SPDX-License-Identifier: Apache-2.0
#pragma once

// Screen-space GGX blur. An offset of |delta| pixels is read as a lobe angle
// theta = atan(|delta| / d_px), i.e. the image is treated as a plane at a
// virtual distance of d_px pixels, and weighted by D(theta) cos(theta).

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <vector>

#include "epbr/bsdf.hpp"
#include "epbr/error.hpp"
#include "epbr/image.hpp"
#include "epbr/parallel.hpp"

namespace epbr {

inline constexpr double kDefaultDistancePx = 64.0;
inline constexpr double kKernelTailMass = 1e-3;

struct GgxKernel {
    int radius = 0;
    double roughness = 0.0;
    double d_px = kDefaultDistancePx;
    std::vector<double> weights{1.0};  // (2 radius + 1)^2, row-major

    int size() const noexcept { return 2 * radius + 1; }
    double at(int dx, int dy) const { return weights[static_cast<std::size_t>(dy + radius) * size() + (dx + radius)]; }
};

inline double ggx_kernel_profile(double offset_px, double r, double d_px) {
    const double cos_t = d_px / std::sqrt(d_px * d_px + offset_px * offset_px);
    return ggx_d(cos_t, r) * cos_t;
}

// Radius is the smallest square window holding all but kKernelTailMass of the
// weight found within the 3 d_px cap; weights are renormalised to sum to 1.
inline GgxKernel build_kernel(double r, double d_px = kDefaultDistancePx) {
    if (!(d_px >= 1.0)) throw ValidationError("kernel distance must be >= 1 pixel");
    if (!(r >= 0.0 && r <= 1.0)) throw ValidationError("kernel roughness must be in [0,1]");
    GgxKernel k;
    k.roughness = r;
    k.d_px = d_px;
    if (r == 0.0) return k;

    const int cap = static_cast<int>(std::floor(3.0 * d_px));
    // Mass of each square ring at Chebyshev distance c from the centre.
    std::vector<double> ring(cap + 1, 0.0);
    for (int dy = -cap; dy <= cap; ++dy)
        for (int dx = -cap; dx <= cap; ++dx)
            ring[std::max(std::abs(dx), std::abs(dy))] += ggx_kernel_profile(std::hypot(dx, dy), r, d_px);

    double total = 0.0;
    for (double m : ring) total += m;
    double inside = 0.0;
    int radius = cap;
    for (int c = 0; c <= cap; ++c) {
        inside += ring[c];
        if (total - inside < kKernelTailMass * total) {
            radius = c;
            break;
        }
    }

    k.radius = radius;
    const int size = k.size();
    k.weights.assign(static_cast<std::size_t>(size) * size, 0.0);
    double sum = 0.0;
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx) {
            const double w = ggx_kernel_profile(std::hypot(dx, dy), r, d_px);
            k.weights[static_cast<std::size_t>(dy + radius) * size + (dx + radius)] = w;
            sum += w;
        }
    for (double& w : k.weights) w /= sum;
    return k;
}

enum class ConvolutionMethod { automatic, direct, fft };

namespace detail {

inline int clamp_index(int v, int n) { return v < 0 ? 0 : (v >= n ? n - 1 : v); }

inline ImagePlane convolve_direct(const ImagePlane& img, const GgxKernel& k, int workers) {
    ImagePlane out(img.width(), img.height(), img.channels());
    const int w = img.width(), h = img.height(), ch = img.channels(), R = k.radius;
    parallel_for(h, workers, [&](int y) {
        std::vector<double> acc(ch);
        for (int x = 0; x < w; ++x) {
            std::fill(acc.begin(), acc.end(), 0.0);
            for (int dy = -R; dy <= R; ++dy) {
                const int sy = clamp_index(y - dy, h);
                for (int dx = -R; dx <= R; ++dx) {
                    const double wt = k.at(dx, dy);
                    const int sx = clamp_index(x - dx, w);
                    for (int c = 0; c < ch; ++c) acc[c] += wt * img.at(sx, sy, c);
                }
            }
            for (int c = 0; c < ch; ++c) out.at(x, y, c) = static_cast<float>(acc[c]);
        }
    });
    return out;
}

inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

struct FftwFree {
    void operator()(void* p) const { fftw_free(p); }
};

template <typename T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

template <typename T>
FftwBuffer<T> fftw_buffer(std::size_t n) {
    auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * n));
    if (!p) throw std::bad_alloc();
    return FftwBuffer<T>(p);
}

// Clamp-to-edge convolution via a circular FFT over the edge-padded image.
// With a (W + 2R) x (H + 2R) period no output pixel wraps around.
inline ImagePlane convolve_fft(const ImagePlane& img, const GgxKernel& k) {
    const int w = img.width(), h = img.height(), ch = img.channels(), R = k.radius;
    const int pw = w + 2 * R, ph = h + 2 * R;
    const std::size_t real_n = static_cast<std::size_t>(pw) * ph;
    const std::size_t cplx_n = static_cast<std::size_t>(ph) * (pw / 2 + 1);

    auto real = fftw_buffer<double>(real_n);
    auto kernel_hat = fftw_buffer<fftw_complex>(cplx_n);
    auto image_hat = fftw_buffer<fftw_complex>(cplx_n);
    fftw_plan forward, backward;
    {
        std::lock_guard lock(fftw_planner_mutex());
        forward = fftw_plan_dft_r2c_2d(ph, pw, real.get(), image_hat.get(), FFTW_ESTIMATE);
        backward = fftw_plan_dft_c2r_2d(ph, pw, image_hat.get(), real.get(), FFTW_ESTIMATE);
    }

    std::fill(real.get(), real.get() + real_n, 0.0);
    for (int dy = -R; dy <= R; ++dy)
        for (int dx = -R; dx <= R; ++dx)
            real[static_cast<std::size_t>((dy + ph) % ph) * pw + (dx + pw) % pw] = k.at(dx, dy);
    fftw_execute_dft_r2c(forward, real.get(), kernel_hat.get());

    ImagePlane out(w, h, ch);
    const double scale = 1.0 / static_cast<double>(real_n);
    for (int c = 0; c < ch; ++c) {
        for (int y = 0; y < ph; ++y) {
            const int sy = clamp_index(y - R, h);
            for (int x = 0; x < pw; ++x) real[static_cast<std::size_t>(y) * pw + x] = img.at(clamp_index(x - R, w), sy, c);
        }
        fftw_execute_dft_r2c(forward, real.get(), image_hat.get());
        for (std::size_t i = 0; i < cplx_n; ++i) {
            const double re = image_hat[i][0] * kernel_hat[i][0] - image_hat[i][1] * kernel_hat[i][1];
            const double im = image_hat[i][0] * kernel_hat[i][1] + image_hat[i][1] * kernel_hat[i][0];
            image_hat[i][0] = re;
            image_hat[i][1] = im;
        }
        fftw_execute_dft_c2r(backward, image_hat.get(), real.get());
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                out.at(x, y, c) = static_cast<float>(real[static_cast<std::size_t>(y + R) * pw + (x + R)] * scale);
    }

    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(forward);
    fftw_destroy_plan(backward);
    return out;
}

}  // namespace detail

// Dense 2D convolution with clamp-to-edge borders. Large kernels go through
// an FFT; both paths compute the same sum up to rounding.
inline ImagePlane convolve(const ImagePlane& img, const GgxKernel& k, int workers = 0,
                           ConvolutionMethod method = ConvolutionMethod::automatic) {
    if (k.radius == 0) return img;
    if (method == ConvolutionMethod::automatic)
        method = k.radius <= 6 ? ConvolutionMethod::direct : ConvolutionMethod::fft;
    return method == ConvolutionMethod::direct ? detail::convolve_direct(img, k, workers) : detail::convolve_fft(img, k);
}

// Two passes of the same kernel: the wider lobe of light crossing both faces
// of a thin slab.
inline ImagePlane convolve_twice(const ImagePlane& img, const GgxKernel& k, int workers = 0,
                                 ConvolutionMethod method = ConvolutionMethod::automatic) {
    return convolve(convolve(img, k, workers, method), k, workers, method);
}

}  // namespace epbr
