// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "epbr/camera.hpp"
#include "epbr/rng.hpp"
#include "epbr/ssrt.hpp"
#include "support/oracles.hpp"

using namespace epbr;

namespace {

CameraModel camera(double fov, int w, int h, double near = 0.1, double far = 20.0) {
    CameraModel c;
    c.vertical_fov_deg = fov;
    c.near = near;
    c.far = far;
    c.width = w;
    c.height = h;
    return c;
}

}  // namespace

TEST(Camera, CentrePixelAtNearIsOnAxis) {
    const auto cam = camera(60, 64, 64, 0.5, 10);
    const Vec3 p = cam.unproject(32.0, 32.0, 0.0);
    EXPECT_NEAR(p.x, 0.0, 1e-12);
    EXPECT_NEAR(p.y, 0.0, 1e-12);
    EXPECT_NEAR(p.z, -0.5, 1e-12);
}

TEST(Camera, CornerAtNinetyDegrees) {
    const auto cam = camera(90, 32, 32, 0.5, 3.0);
    const double d = cam.normalized_depth(1.0);
    const Vec3 tl = cam.unproject(0.0, 0.0, d);
    const Vec3 br = cam.unproject(32.0, 32.0, d);
    EXPECT_NEAR(tl.x, -1.0, 1e-9);
    EXPECT_NEAR(tl.y, 1.0, 1e-9);
    EXPECT_NEAR(br.x, 1.0, 1e-9);
    EXPECT_NEAR(br.y, -1.0, 1e-9);
    EXPECT_NEAR(tl.z, -1.0, 1e-9);
}

TEST(Camera, ProjectUnprojectRoundTrip) {
    const auto cam = camera(50, 120, 80, 0.2, 40);
    Rng rng(8);
    for (int i = 0; i < 1000; ++i) {
        const double x = rng.uniform() * 120, y = rng.uniform() * 80, d = rng.uniform();
        const auto p = cam.project(cam.unproject(x, y, d));
        EXPECT_NEAR(p.x, x, 1e-4);
        EXPECT_NEAR(p.y, y, 1e-4);
        EXPECT_NEAR(p.depth, d, 1e-4);
    }
}

TEST(Camera, Validation) {
    EXPECT_THROW(camera(60, 8, 8, 1.0, 0.5).validate(), ValidationError);
    EXPECT_THROW(camera(180, 8, 8).validate(), ValidationError);
    EXPECT_THROW(camera(60, 0, 8).validate(), ValidationError);
}

TEST(Ssrt, FloorReflectsWallAnalytically) {
    const oracle::FloorWallScene scene(96, 72);
    const auto layer = trace_reflections(scene.depth, scene.normal, scene.source, scene.cam, SsrtConfig{}, 2);
    int valid = 0, close = 0, expected_visible = 0;
    for (int y = 0; y < 72; ++y) {
        for (int x = 0; x < 96; ++x) {
            if (!scene.floor_at(x, y)) continue;
            double hx, hy;
            const bool visible = scene.expected_hit(x, y, hx, hy);
            expected_visible += visible;
            if (layer.valid.at(x, y) == 0.0f) continue;
            ++valid;
            const double gx = layer.color.at(x, y, 0), gy = layer.color.at(x, y, 1);
            if (visible && std::abs(gx - hx) <= 1.0 && std::abs(gy - hy) <= 1.0) ++close;
        }
    }
    ASSERT_GT(expected_visible, 0);
    EXPECT_GE(valid, expected_visible * 9 / 10);
    EXPECT_GE(close, valid * 95 / 100) << close << "/" << valid;
}

TEST(Ssrt, DeterministicAcrossWorkers) {
    const oracle::FloorWallScene scene(64, 48);
    const auto a = trace_reflections(scene.depth, scene.normal, scene.source, scene.cam, SsrtConfig{}, 1);
    const auto b = trace_reflections(scene.depth, scene.normal, scene.source, scene.cam, SsrtConfig{}, 5);
    EXPECT_TRUE(a.color == b.color);
    EXPECT_TRUE(a.valid == b.valid);
}

TEST(Ssrt, HitsRespectThicknessAndSkipOwnSurface) {
    const oracle::FloorWallScene scene(64, 48);
    const SsrtConfig cfg;
    const double step = (scene.cam.far - scene.cam.near) / cfg.max_steps;
    int hits = 0;
    for (int y = 0; y < 48; ++y) {
        for (int x = 0; x < 64; ++x) {
            const auto hit = trace_pixel(scene.depth, scene.normal, scene.cam, cfg, x, y);
            if (!hit) continue;
            ++hits;
            EXPECT_GE(hit->ray_depth, hit->buffer_depth);
            EXPECT_LE(hit->ray_depth - hit->buffer_depth, cfg.thickness * hit->buffer_depth);
            const Vec3 self = scene.cam.unproject(x + 0.5, y + 0.5, scene.depth.at(x, y));
            const Vec3 other = scene.cam.unproject(hit->x + 0.5, hit->y + 0.5, scene.depth.at(hit->x, hit->y));
            EXPECT_GT(length(other - self), step * 0.5);
        }
    }
    EXPECT_GT(hits, 0);
}

TEST(Ssrt, NormalsFacingCameraAllMiss) {
    const auto cam = camera(60, 32, 24);
    ImagePlane depth(32, 24, 1, 0.3f), normal(32, 24, 3), source(32, 24, 3, 0.9f);
    for (int y = 0; y < 24; ++y)
        for (int x = 0; x < 32; ++x) {
            const Vec3 toward = -1.0 * normalize(cam.ray_direction(x + 0.5, y + 0.5));
            normal.set_rgb(x, y, {toward.x, toward.y, toward.z});
        }
    const auto gray = trace_reflections(depth, normal, source, cam, SsrtConfig{});
    for (float v : gray.valid.data()) EXPECT_EQ(v, 0.0f);
    for (float v : gray.color.data()) EXPECT_EQ(v, kMissGray);
    SsrtConfig holes;
    holes.miss_fill = MissFill::hole;
    const auto hole = trace_reflections(depth, normal, source, cam, holes);
    for (float v : hole.color.data()) EXPECT_EQ(v, 0.0f);
}

TEST(Ssrt, RayLeavingScreenMisses) {
    // Floor with nothing above it: every reflection exits through the top
    // border or beyond the far plane.
    const auto cam = camera(60, 32, 32);
    ImagePlane depth(32, 32, 1, 1.0f), normal(32, 32, 3), source(32, 32, 3, 1.0f);
    int floor_pixels = 0;
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) {
            const Vec3 d = cam.ray_direction(x + 0.5, y + 0.5);
            if (d.y < -0.05) {
                depth.at(x, y) = static_cast<float>(cam.normalized_depth(-1.0 / d.y));
                normal.set_rgb(x, y, {0, 1, 0});
                ++floor_pixels;
            } else {
                normal.set_rgb(x, y, {0, 0, 1});
            }
        }
    ASSERT_GT(floor_pixels, 0);
    const auto layer = trace_reflections(depth, normal, source, cam, SsrtConfig{});
    for (float v : layer.valid.data()) EXPECT_EQ(v, 0.0f);
}

TEST(Ssrt, RejectsMismatchedInputs) {
    const auto cam = camera(60, 8, 8);
    ImagePlane depth(8, 8, 1), normal(8, 8, 3), source(8, 7, 3);
    EXPECT_THROW(trace_reflections(depth, normal, source, cam, SsrtConfig{}), ValidationError);
    EXPECT_THROW(trace_reflections(ImagePlane(8, 8, 3), normal, ImagePlane(8, 8, 3), cam, SsrtConfig{}), ValidationError);
    SsrtConfig bad;
    bad.max_steps = 0;
    EXPECT_THROW(trace_reflections(depth, normal, ImagePlane(8, 8, 3), cam, bad), ValidationError);
}

TEST(FillHoles, Examples) {
    ReflectionLayer all{ImagePlane(4, 2, 3, 0.8f), ImagePlane(4, 2, 1, 1.0f)};
    EXPECT_TRUE(fill_holes(all) == all.color);

    ReflectionLayer none{ImagePlane(4, 2, 3, 0.8f), ImagePlane(4, 2, 1, 0.0f)};
    const auto filled = fill_holes(none);
    for (float v : filled.data()) EXPECT_EQ(v, 0.5f);

    ReflectionLayer half{ImagePlane(4, 2, 3, 0.8f), ImagePlane(4, 2, 1, 0.0f)};
    for (int y = 0; y < 2; ++y) half.valid.at(0, y) = half.valid.at(1, y) = 1.0f;
    const auto out = fill_holes(half, Rgb(0.1));
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 4; ++x) EXPECT_FLOAT_EQ(out.at(x, y, 2), x < 2 ? 0.8f : 0.1f);
}
