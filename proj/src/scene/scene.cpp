// Copyright (c) 2026 geode-lab authors
// SPDX-License-Identifier: Apache-2.0

#include "scene/scene.hpp"

#include <algorithm>
#include <cmath>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace geode {

namespace {

const char* kCategoryNames[kNumCategories] = {"table", "chair", "sofa",  "lamp",
                                              "bed",   "shelf", "box",   "plant"};

struct SizeRange {
    double w0, w1, d0, d1, h0, h1;
};

// Footprint/height ranges per category, metres.
const SizeRange kSizeRanges[kNumCategories] = {
    {0.8, 1.6, 0.8, 1.6, 0.6, 0.8},  // table
    {0.4, 0.6, 0.4, 0.6, 0.8, 1.0},  // chair
    {1.5, 2.2, 0.8, 1.0, 0.7, 0.9},  // sofa
    {0.2, 0.4, 0.2, 0.4, 1.2, 1.8},  // lamp
    {1.4, 2.0, 1.9, 2.1, 0.5, 0.6},  // bed
    {0.6, 1.2, 0.3, 0.5, 1.5, 2.0},  // shelf
    {0.3, 0.8, 0.3, 0.8, 0.3, 0.8},  // box
    {0.3, 0.5, 0.3, 0.5, 0.6, 1.2},  // plant
};

bool footprint_inside_room(const Object& obj, double room_w, double room_d) {
    for (const Vec2& c : footprint_corners(obj.obb()))
        if (c.x < 0 || c.x > room_w || c.y < 0 || c.y > room_d) return false;
    return true;
}

}  // namespace

const char* category_name(int category) {
    if (category < 0 || category >= kNumCategories)
        throw ContractError("bad category index " + std::to_string(category));
    return kCategoryNames[category];
}

int category_index(const std::string& name) {
    for (int i = 0; i < kNumCategories; ++i)
        if (name == kCategoryNames[i]) return i;
    throw ContractError("unknown category: " + name);
}

Vec3 CameraPose::forward() const {
    const double cp = std::cos(pitch), sp = std::sin(pitch);
    return {cp * std::cos(yaw), cp * std::sin(yaw), sp};
}

Vec3 CameraPose::right() const { return {std::sin(yaw), -std::cos(yaw), 0.0}; }

Vec3 CameraPose::up() const {
    const Vec3 f = forward(), r = right();
    // r x f
    return {r.y * f.z - r.z * f.y, r.z * f.x - r.x * f.z, r.x * f.y - r.y * f.x};
}

Scene generate_scene(uint64_t seed, const SceneConfig& cfg) {
    if (cfg.min_room < 3.0 || cfg.max_room > 10.0 || cfg.min_room > cfg.max_room)
        throw ConfigError("room dimension bounds must lie in [3,10] metres");
    if (cfg.min_objects < 3 || cfg.max_objects > 10 || cfg.min_objects > cfg.max_objects)
        throw ConfigError("object count bounds must lie in [3,10]");
    Rng rng(seed * 0x9e3779b97f4a7c15ull + 1);
    Scene scene;
    scene.id = static_cast<int>(seed);
    scene.room_w = rng.uniform(cfg.min_room, cfg.max_room);
    scene.room_d = rng.uniform(cfg.min_room, cfg.max_room);
    scene.room_h = rng.uniform(cfg.min_room_h, cfg.max_room_h);

    const int n_objects = rng.uniform_int(cfg.min_objects, cfg.max_objects);
    for (int i = 0; i < n_objects; ++i) {
        bool placed = false;
        for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
            Object obj;
            obj.id = i;
            obj.category = rng.uniform_int(0, kNumCategories - 1);
            const SizeRange& r = kSizeRanges[obj.category];
            obj.size = {rng.uniform(r.w0, r.w1), rng.uniform(r.d0, r.d1), rng.uniform(r.h0, r.h1)};
            const double margin = 0.5 * std::hypot(obj.size.x, obj.size.y);
            if (scene.room_w <= 2 * margin || scene.room_d <= 2 * margin) continue;
            obj.center = {rng.uniform(margin, scene.room_w - margin),
                          rng.uniform(margin, scene.room_d - margin), obj.size.z / 2.0};
            obj.yaw = wrap_angle(rng.uniform(-M_PI, M_PI));
            if (!footprint_inside_room(obj, scene.room_w, scene.room_d)) continue;
            bool clash = false;
            for (const Object& other : scene.objects)
                if (footprint_overlap_fraction(obj.obb(), other.obb()) >
                    cfg.max_footprint_overlap) {
                    clash = true;
                    break;
                }
            if (clash) continue;
            scene.objects.push_back(obj);
            placed = true;
        }
        if (!placed)
            throw NumericError("scene generation failed: no valid placement after 1000 attempts");
    }
    return scene;
}

Frame render_pose(const Scene& scene, const CameraPose& pose, int grid, double fov_deg) {
    Frame frame;
    frame.pose = pose;
    frame.grid = grid;
    frame.ids.assign(static_cast<size_t>(grid) * grid, -1);
    frame.depth.assign(static_cast<size_t>(grid) * grid, 0.0);
    const double half_tan = std::tan(fov_deg * M_PI / 360.0);
    const Vec3 f = pose.forward(), r = pose.right(), u = pose.up();
    for (int row = 0; row < grid; ++row) {
        // raster row 0 is the top of the image
        const double v = 1.0 - 2.0 * (row + 0.5) / grid;
        for (int col = 0; col < grid; ++col) {
            const double hcoord = 2.0 * (col + 0.5) / grid - 1.0;
            const Vec3 dir = (f + r * (hcoord * half_tan) + u * (v * half_tan)).normalized();
            double best_t = 1e300;
            int best_id = -1;
            for (const Object& obj : scene.objects) {
                auto t = ray_obb(pose.position, dir, obj.obb());
                if (t && *t > 1e-6 && *t < best_t) {
                    best_t = *t;
                    best_id = obj.id;
                }
            }
            if (best_id >= 0) {
                frame.ids[static_cast<size_t>(row) * grid + col] = best_id;
                frame.depth[static_cast<size_t>(row) * grid + col] = best_t;
            }
        }
    }
    return frame;
}

std::vector<Frame> render_frames(const Scene& scene, uint64_t trajectory_seed, int n_frames,
                                 const SceneConfig& cfg) {
    if (n_frames < 2) throw ContractError("render_frames requires at least 2 frames");
    Rng rng(trajectory_seed * 0x2545f4914f6cdd1dull + 7);
    const Vec3 center{scene.room_w / 2.0, scene.room_d / 2.0, 0.8};
    const double radius = 0.30 * std::min(scene.room_w, scene.room_d);
    const double cam_h = std::min(1.6, scene.room_h - 0.2);
    const double theta0 = rng.uniform(0, 2 * M_PI);
    const double arc = rng.uniform(0.75, 0.95) * 2 * M_PI * (rng.uniform_int(0, 1) ? 1.0 : -1.0);
    std::vector<Frame> frames;
    frames.reserve(n_frames);
    for (int i = 0; i < n_frames; ++i) {
        const double theta = theta0 + arc * i / n_frames;
        CameraPose pose;
        pose.position = {center.x + radius * std::cos(theta), center.y + radius * std::sin(theta),
                         cam_h};
        const Vec3 look = center - pose.position;
        pose.yaw = std::atan2(look.y, look.x);
        pose.pitch = std::atan2(look.z, std::hypot(look.x, look.y));
        frames.push_back(render_pose(scene, pose, cfg.grid, cfg.fov_deg));
    }
    return frames;
}

PointCloud sample_pointcloud(const Scene& scene, const std::vector<Frame>& frames,
                             const SceneConfig& cfg) {
    PointCloud cloud;
    // Every hit cell of every frame contributes its exact surface point,
    // so each point re-projects into a matching cell by construction.
    for (const Frame& frame : frames) {
        const double half_tan = std::tan(cfg.fov_deg * M_PI / 360.0);
        const Vec3 f = frame.pose.forward(), r = frame.pose.right(), u = frame.pose.up();
        for (int row = 0; row < frame.grid; ++row) {
            const double v = 1.0 - 2.0 * (row + 0.5) / frame.grid;
            for (int col = 0; col < frame.grid; ++col) {
                const int id = frame.ids[static_cast<size_t>(row) * frame.grid + col];
                if (id < 0) continue;
                const double hcoord = 2.0 * (col + 0.5) / frame.grid - 1.0;
                const Vec3 dir = (f + r * (hcoord * half_tan) + u * (v * half_tan)).normalized();
                const double t = frame.depth[static_cast<size_t>(row) * frame.grid + col];
                cloud.points.push_back(
                    {frame.pose.position + dir * t, id, scene.objects[id].category});
            }
        }
    }
    if (cloud.points.empty())
        throw NumericError("sample_pointcloud: no object visible in any frame");
    if (static_cast<int>(cloud.points.size()) > cfg.max_points) {
        // even deterministic subsample
        std::vector<ScenePoint> kept;
        kept.reserve(cfg.max_points);
        const size_t n = cloud.points.size();
        for (int i = 0; i < cfg.max_points; ++i)
            kept.push_back(cloud.points[i * n / cfg.max_points]);
        cloud.points = std::move(kept);
    }
    // pad by cycling when too few surface hits
    const size_t base = cloud.points.size();
    while (static_cast<int>(cloud.points.size()) < cfg.min_points)
        cloud.points.push_back(cloud.points[cloud.points.size() % base]);
    return cloud;
}

Vec3 to_camera(const CameraPose& pose, const Vec3& world) {
    const Vec3 w = world - pose.position;
    return {w.dot(pose.right()), w.dot(pose.up()), w.dot(pose.forward())};
}

bool project_to_cell(const CameraPose& pose, const Vec3& world, int grid, double fov_deg,
                     int& row, int& col) {
    const Vec3 cam = to_camera(pose, world);
    if (cam.z <= 1e-9) return false;
    const double half_tan = std::tan(fov_deg * M_PI / 360.0);
    const double hcoord = cam.x / (cam.z * half_tan);
    const double v = cam.y / (cam.z * half_tan);
    if (hcoord < -1 || hcoord > 1 || v < -1 || v > 1) return false;
    col = std::clamp(static_cast<int>((hcoord + 1.0) * 0.5 * grid), 0, grid - 1);
    row = std::clamp(static_cast<int>((1.0 - v) * 0.5 * grid), 0, grid - 1);
    return true;
}

}  // namespace geode
