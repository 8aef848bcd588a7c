// Copyright (c) 2026 geode-lab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <optional>
#include <vector>

namespace geode {

struct Vec3 {
    double x = 0, y = 0, z = 0;
    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm() const;
    Vec3 normalized() const;
};

struct Vec2 {
    double x = 0, y = 0;
};

// Oriented box: center, half-sizes, yaw about the vertical axis.
struct ObbGeom {
    Vec3 center;
    Vec3 half;  // (w/2, d/2, h/2)
    double yaw = 0;
};

// Nearest positive hit distance of a ray against an oriented box (slab
// test in the box frame). Returns nullopt on miss.
std::optional<double> ray_obb(const Vec3& origin, const Vec3& dir, const ObbGeom& box);

// Corners of the box footprint in the ground plane, counter-clockwise.
std::array<Vec2, 4> footprint_corners(const ObbGeom& box);

double polygon_area(const std::vector<Vec2>& poly);

// Intersection area of two convex polygons (Sutherland-Hodgman clip).
double convex_intersection_area(const std::vector<Vec2>& a, const std::vector<Vec2>& b);

// Overlap of two box footprints as a fraction of the smaller footprint.
double footprint_overlap_fraction(const ObbGeom& a, const ObbGeom& b);

// Wrap an angle to [-pi, pi).
double wrap_angle(double a);

}  // namespace geode
