// Copyright (c) 2026 geode-lab authors
// SPDX-License-Identifier: Apache-2.0
//
// Synthetic 3D worlds: box-furnished rooms, an orbiting camera rendered
// to semantic-depth rasters, and oracle point clouds sampled from the
// visible surfaces. Everything is a pure function of (seed, config).

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scene/geometry.hpp"

namespace geode {

inline constexpr int kNumCategories = 8;
const char* category_name(int category);
int category_index(const std::string& name);

struct Object {
    int id = -1;
    int category = 0;
    Vec3 center;  // z == size.z / 2, objects rest on the floor
    Vec3 size;    // (w, d, h)
    double yaw = 0;  // [-pi, pi)

    ObbGeom obb() const { return {center, size * 0.5, yaw}; }
};

struct Scene {
    int id = 0;
    double room_w = 0, room_d = 0, room_h = 0;
    std::vector<Object> objects;
};

struct CameraPose {
    Vec3 position;
    double yaw = 0;    // about the vertical axis, from +x
    double pitch = 0;  // [-pi/2, pi/2], negative looks down

    Vec3 forward() const;
    Vec3 right() const;
    Vec3 up() const;
};

// Semantic-depth raster: channel 0 holds the nearest visible object id
// (-1 for none), channel 1 the hit distance along the view ray.
struct Frame {
    CameraPose pose;
    int grid = 0;
    std::vector<int> ids;       // grid*grid
    std::vector<double> depth;  // grid*grid, 0 where ids == -1
};

struct ScenePoint {
    Vec3 xyz;
    int object_id = -1;
    int category = 0;
};

struct PointCloud {
    std::vector<ScenePoint> points;
};

struct SceneConfig {
    double min_room = 3.0, max_room = 10.0;
    double min_room_h = 2.5, max_room_h = 3.5;
    int min_objects = 3, max_objects = 10;
    int grid = 16;
    double fov_deg = 70.0;
    int min_points = 256, max_points = 4096;
    double max_footprint_overlap = 0.10;
};

Scene generate_scene(uint64_t seed, const SceneConfig& cfg);

// Poses sampled on a smooth orbit around the room center; every cell of
// every frame is ray-cast against the object boxes.
std::vector<Frame> render_frames(const Scene& scene, uint64_t trajectory_seed, int n_frames,
                                 const SceneConfig& cfg);

// Render a single pose at an arbitrary raster resolution (the frame
// grids and the point-cloud supersampling share this path).
Frame render_pose(const Scene& scene, const CameraPose& pose, int grid, double fov_deg);

// Points drawn from surfaces visible in at least one frame, count
// clamped to [cfg.min_points, cfg.max_points].
PointCloud sample_pointcloud(const Scene& scene, const std::vector<Frame>& frames,
                             const SceneConfig& cfg);

// Camera-frame coordinates of a world point: x right, y up, z forward.
Vec3 to_camera(const CameraPose& pose, const Vec3& world);

// Raster cell of a world point under a pose, or false if outside the
// field of view. Out params are row and column.
bool project_to_cell(const CameraPose& pose, const Vec3& world, int grid, double fov_deg,
                     int& row, int& col);

}  // namespace geode
