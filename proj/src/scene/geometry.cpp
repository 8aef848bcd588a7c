// Copyright (c) 2026 geode-lab authors
// SPDX-License-Identifier: Apache-2.0

#include "scene/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace geode {

double Vec3::norm() const { return std::sqrt(x * x + y * y + z * z); }

Vec3 Vec3::normalized() const {
    const double n = norm();
    return {x / n, y / n, z / n};
}

std::optional<double> ray_obb(const Vec3& origin, const Vec3& dir, const ObbGeom& box) {
    // Transform into the box frame: translate then rotate by -yaw.
    const double c = std::cos(-box.yaw), s = std::sin(-box.yaw);
    const Vec3 rel = origin - box.center;
    const Vec3 o{rel.x * c - rel.y * s, rel.x * s + rel.y * c, rel.z};
    const Vec3 d{dir.x * c - dir.y * s, dir.x * s + dir.y * c, dir.z};

    double tmin = -1e300, tmax = 1e300;
    const double od[3] = {o.x, o.y, o.z};
    const double dd[3] = {d.x, d.y, d.z};
    const double hh[3] = {box.half.x, box.half.y, box.half.z};
    for (int axis = 0; axis < 3; ++axis) {
        if (std::fabs(dd[axis]) < 1e-12) {
            if (std::fabs(od[axis]) > hh[axis]) return std::nullopt;
            continue;
        }
        double t0 = (-hh[axis] - od[axis]) / dd[axis];
        double t1 = (hh[axis] - od[axis]) / dd[axis];
        if (t0 > t1) std::swap(t0, t1);
        tmin = std::max(tmin, t0);
        tmax = std::min(tmax, t1);
        if (tmin > tmax) return std::nullopt;
    }
    if (tmax < 0) return std::nullopt;
    return tmin >= 0 ? tmin : tmax;
}

std::array<Vec2, 4> footprint_corners(const ObbGeom& box) {
    const double c = std::cos(box.yaw), s = std::sin(box.yaw);
    std::array<Vec2, 4> out;
    const double sx[4] = {+1, +1, -1, -1};
    const double sy[4] = {+1, -1, -1, +1};
    for (int i = 0; i < 4; ++i) {
        const double lx = sx[i] * box.half.x, ly = sy[i] * box.half.y;
        out[i] = {box.center.x + lx * c - ly * s, box.center.y + lx * s + ly * c};
    }
    // order as counter-clockwise quad
    std::swap(out[1], out[3]);
    return out;
}

double polygon_area(const std::vector<Vec2>& poly) {
    double a = 0;
    const size_t n = poly.size();
    for (size_t i = 0; i < n; ++i) {
        const Vec2& p = poly[i];
        const Vec2& q = poly[(i + 1) % n];
        a += p.x * q.y - q.x * p.y;
    }
    return std::fabs(a) * 0.5;
}

double convex_intersection_area(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
    // Clip a against every edge of b.
    std::vector<Vec2> poly = a;
    const size_t nb = b.size();
    // ensure b is counter-clockwise
    double signed_area = 0;
    for (size_t i = 0; i < nb; ++i)
        signed_area += b[i].x * b[(i + 1) % nb].y - b[(i + 1) % nb].x * b[i].y;
    const double orient = signed_area >= 0 ? 1.0 : -1.0;

    for (size_t i = 0; i < nb && !poly.empty(); ++i) {
        const Vec2 e0 = b[i], e1 = b[(i + 1) % nb];
        auto inside = [&](const Vec2& p) {
            return orient * ((e1.x - e0.x) * (p.y - e0.y) - (e1.y - e0.y) * (p.x - e0.x)) >= 0;
        };
        auto intersect = [&](const Vec2& p, const Vec2& q) {
            const double a1 = (e1.x - e0.x) * (p.y - e0.y) - (e1.y - e0.y) * (p.x - e0.x);
            const double a2 = (e1.x - e0.x) * (q.y - e0.y) - (e1.y - e0.y) * (q.x - e0.x);
            const double t = a1 / (a1 - a2);
            return Vec2{p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)};
        };
        std::vector<Vec2> next;
        for (size_t j = 0; j < poly.size(); ++j) {
            const Vec2 cur = poly[j], prev = poly[(j + poly.size() - 1) % poly.size()];
            const bool ci = inside(cur), pi = inside(prev);
            if (ci) {
                if (!pi) next.push_back(intersect(prev, cur));
                next.push_back(cur);
            } else if (pi) {
                next.push_back(intersect(prev, cur));
            }
        }
        poly = std::move(next);
    }
    return poly.size() < 3 ? 0.0 : polygon_area(poly);
}

double footprint_overlap_fraction(const ObbGeom& a, const ObbGeom& b) {
    auto ca = footprint_corners(a);
    auto cb = footprint_corners(b);
    std::vector<Vec2> pa(ca.begin(), ca.end()), pb(cb.begin(), cb.end());
    const double inter = convex_intersection_area(pa, pb);
    const double smaller = std::min(polygon_area(pa), polygon_area(pb));
    return smaller > 0 ? inter / smaller : 0.0;
}

double wrap_angle(double a) {
    const double two_pi = 2.0 * M_PI;
    a = std::fmod(a + M_PI, two_pi);
    if (a < 0) a += two_pi;
    return a - M_PI;
}

}  // namespace geode
