// Copyright (c) 2026 geode-lab authors
// SPDX-License-Identifier: Apache-2.0

#include "scene/qa.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace geode {

namespace {

const char* kTaskNames[kNumTaskKinds] = {"obj_count", "abs_dist",  "obj_size", "room_size",
                                         "rel_dist",  "rel_dir",   "locate",   "appear_order"};

// Objects whose category occurs exactly once, so "the <category>" is an
// unambiguous reference.
std::vector<int> unique_category_objects(const Scene& scene) {
    std::map<int, int> counts;
    for (const Object& o : scene.objects) counts[o.category]++;
    std::vector<int> out;
    for (const Object& o : scene.objects)
        if (counts[o.category] == 1) out.push_back(o.id);
    return out;
}

std::string the(const Scene& scene, int object_id) {
    return std::string("the ") + category_name(scene.objects[object_id].category);
}

double center_distance(const Object& a, const Object& b) { return (a.center - b.center).norm(); }

char letter(int i) { return static_cast<char>('A' + i); }

}  // namespace

const char* task_name(TaskKind k) { return kTaskNames[static_cast<int>(k)]; }

TaskKind task_from_name(const std::string& name) {
    for (int i = 0; i < kNumTaskKinds; ++i)
        if (name == kTaskNames[i]) return static_cast<TaskKind>(i);
    throw ContractError("unknown task: " + name);
}

const char* answer_kind_name(AnswerKind k) {
    switch (k) {
        case AnswerKind::Text: return "text";
        case AnswerKind::Mca: return "mca";
        case AnswerKind::Scalar: return "scalar";
        case AnswerKind::Box7: return "box7";
    }
    return "?";
}

AnswerKind answer_kind_from_name(const std::string& name) {
    if (name == "text") return AnswerKind::Text;
    if (name == "mca") return AnswerKind::Mca;
    if (name == "scalar") return AnswerKind::Scalar;
    if (name == "box7") return AnswerKind::Box7;
    throw ContractError("unknown answer kind: " + name);
}

std::string format_number(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    // avoid the "-0.00" corner
    if (std::string(buf) == "-0.00") return "0.00";
    return buf;
}

int first_visible_frame(const std::vector<Frame>& frames, int object_id) {
    for (size_t i = 0; i < frames.size(); ++i)
        if (std::find(frames[i].ids.begin(), frames[i].ids.end(), object_id) !=
            frames[i].ids.end())
            return static_cast<int>(i);
    return -1;
}

QASample make_qa(const Scene& scene, const std::vector<Frame>& frames, TaskKind task,
                 uint64_t seed) {
    Rng rng(seed * 0x6c62272e07bb0143ull + 11);
    QASample qa;
    qa.scene_id = scene.id;
    qa.task = task;
    const auto uniques = unique_category_objects(scene);
    auto pick_uniques = [&](size_t n) {
        if (uniques.size() < n)
            throw ContractError(std::string("scene does not support task ") + task_name(task));
        std::vector<int> pool = uniques;
        std::vector<int> out;
        for (size_t i = 0; i < n; ++i) {
            const int j = rng.uniform_int(0, static_cast<int>(pool.size()) - 1);
            out.push_back(pool[j]);
            pool.erase(pool.begin() + j);
        }
        return out;
    };

    switch (task) {
        case TaskKind::ObjCount: {
            std::map<int, int> counts;
            for (const Object& o : scene.objects) counts[o.category]++;
            std::vector<int> cats;
            for (auto& [c, n] : counts) cats.push_back(c);
            const int cat = cats[rng.uniform_int(0, static_cast<int>(cats.size()) - 1)];
            qa.answer_kind = AnswerKind::Scalar;
            qa.question = std::string("how many ") + category_name(cat) + " are in the room ?";
            std::string r;
            for (const Object& o : scene.objects)
                if (o.category == cat)
                    r += std::string("one ") + category_name(cat) + " at " +
                         format_number(o.center.x) + " " + format_number(o.center.y) + " . ";
            qa.target_scalar = counts[cat];
            r += "the count is " + format_number(*qa.target_scalar);
            qa.rationale = r;
            qa.answer_text = format_number(*qa.target_scalar);
            break;
        }
        case TaskKind::AbsDist: {
            auto ids = pick_uniques(2);
            const Object& a = scene.objects[ids[0]];
            const Object& b = scene.objects[ids[1]];
            const Vec3 d = b.center - a.center;
            const double sq = d.dot(d);
            const double dist = std::sqrt(sq);
            qa.answer_kind = AnswerKind::Scalar;
            qa.question = "what is the distance between " + the(scene, ids[0]) + " and " +
                          the(scene, ids[1]) + " ?";
            qa.rationale = the(scene, ids[0]) + " is at " + format_number(a.center.x) + " " +
                           format_number(a.center.y) + " " + format_number(a.center.z) + " . " +
                           the(scene, ids[1]) + " is at " + format_number(b.center.x) + " " +
                           format_number(b.center.y) + " " + format_number(b.center.z) +
                           " . the difference is " + format_number(d.x) + " " +
                           format_number(d.y) + " " + format_number(d.z) +
                           " . the squared sum is " + format_number(sq) + " . the distance is " +
                           format_number(dist);
            qa.target_scalar = dist;
            qa.answer_text = format_number(dist);
            break;
        }
        case TaskKind::ObjSize: {
            auto ids = pick_uniques(1);
            const Object& o = scene.objects[ids[0]];
            const double m = std::max({o.size.x, o.size.y, o.size.z});
            qa.answer_kind = AnswerKind::Scalar;
            qa.question = "what is the longest dimension of " + the(scene, ids[0]) + " ?";
            qa.rationale = the(scene, ids[0]) + " has width " + format_number(o.size.x) +
                           " depth " + format_number(o.size.y) + " height " +
                           format_number(o.size.z) + " . the longest dimension is " +
                           format_number(m);
            qa.target_scalar = m;
            qa.answer_text = format_number(m);
            break;
        }
        case TaskKind::RoomSize: {
            const double area = scene.room_w * scene.room_d;
            qa.answer_kind = AnswerKind::Scalar;
            qa.question = "what is the floor area of the room ?";
            qa.rationale = "the room is " + format_number(scene.room_w) + " by " +
                           format_number(scene.room_d) + " . the area is " + format_number(area);
            qa.target_scalar = area;
            qa.answer_text = format_number(area);
            break;
        }
        case TaskKind::RelDist: {
            auto ids = pick_uniques(3);
            const int anchor = ids[0];
            const double d1 = center_distance(scene.objects[anchor], scene.objects[ids[1]]);
            const double d2 = center_distance(scene.objects[anchor], scene.objects[ids[2]]);
            if (std::fabs(d1 - d2) < 0.05)
                throw ContractError("scene does not support task rel_dist: tie");
            const int closer = d1 < d2 ? 0 : 1;
            qa.answer_kind = AnswerKind::Mca;
            qa.question = "which is closer to " + the(scene, anchor) + " : " +
                          the(scene, ids[1]) + " or " + the(scene, ids[2]) + " ?";
            qa.choices = {the(scene, ids[1]), the(scene, ids[2])};
            qa.rationale = "the distance from " + the(scene, anchor) + " to " +
                           the(scene, ids[1]) + " is " + format_number(d1) +
                           " . the distance from " + the(scene, anchor) + " to " +
                           the(scene, ids[2]) + " is " + format_number(d2) +
                           " . the closer one is " + the(scene, ids[1 + closer]);
            qa.answer_text = std::string(1, letter(closer));
            break;
        }
        case TaskKind::RelDir: {
            auto ids = pick_uniques(2);
            const CameraPose& cam = frames.at(0).pose;
            const Vec3 rel = to_camera(cam, scene.objects[ids[1]].center) -
                             to_camera(cam, scene.objects[ids[0]].center);
            // x: right of the camera, z: forward
            const char* dir;
            if (std::fabs(rel.x) >= std::fabs(rel.z))
                dir = rel.x >= 0 ? "right" : "left";
            else
                dir = rel.z >= 0 ? "front" : "back";
            qa.answer_kind = AnswerKind::Mca;
            qa.question = "from the first camera view , is " + the(scene, ids[1]) +
                          " left , right , front or back of " + the(scene, ids[0]) + " ?";
            qa.choices = {"left", "right", "front", "back"};
            int idx = 0;
            for (int i = 0; i < 4; ++i)
                if (qa.choices[i] == dir) idx = i;
            qa.rationale = the(scene, ids[0]) + " is at " +
                           format_number(to_camera(cam, scene.objects[ids[0]].center).x) + " " +
                           format_number(to_camera(cam, scene.objects[ids[0]].center).z) + " . " +
                           the(scene, ids[1]) + " is at " +
                           format_number(to_camera(cam, scene.objects[ids[1]].center).x) + " " +
                           format_number(to_camera(cam, scene.objects[ids[1]].center).z) +
                           " . the offset is " + format_number(rel.x) + " " +
                           format_number(rel.z) + " . " + the(scene, ids[1]) + " is " + dir +
                           " of " + the(scene, ids[0]);
            qa.answer_text = std::string(1, letter(idx));
            break;
        }
        case TaskKind::Locate: {
            auto ids = pick_uniques(1);
            const Object& o = scene.objects[ids[0]];
            qa.answer_kind = AnswerKind::Box7;
            qa.question = "locate " + the(scene, ids[0]) + " in the room ?";
            qa.target_box = {o.center.x, o.center.y, o.center.z,
                             o.size.x,   o.size.y,   o.size.z,   o.yaw};
            qa.rationale = the(scene, ids[0]) + " is at " + format_number(o.center.x) + " " +
                           format_number(o.center.y) + " " + format_number(o.center.z) +
                           " with size " + format_number(o.size.x) + " " +
                           format_number(o.size.y) + " " + format_number(o.size.z) +
                           " and yaw " + format_number(o.yaw);
            std::string t;
            for (int i = 0; i < 7; ++i) t += (i ? " " : "") + format_number((*qa.target_box)[i]);
            qa.answer_text = t;
            break;
        }
        case TaskKind::AppearOrder: {
            // unique-category objects with distinct first-visible frames
            std::vector<std::pair<int, int>> visible;  // (first frame, object)
            for (int id : unique_category_objects(scene)) {
                const int f = first_visible_frame(frames, id);
                if (f >= 0) visible.push_back({f, id});
            }
            std::sort(visible.begin(), visible.end());
            // drop ties on the first-visible frame
            std::vector<std::pair<int, int>> distinct;
            for (size_t i = 0; i < visible.size(); ++i) {
                const bool tie = (i + 1 < visible.size() && visible[i + 1].first == visible[i].first) ||
                                 (i > 0 && visible[i - 1].first == visible[i].first);
                if (!tie) distinct.push_back(visible[i]);
            }
            if (distinct.size() < 2)
                throw ContractError("scene does not support task appear_order");
            const int n = std::min<int>(4, static_cast<int>(distinct.size()));
            std::vector<std::pair<int, int>> chosen(distinct.begin(), distinct.begin() + n);
            // shuffle the option order deterministically
            for (int i = n - 1; i > 0; --i)
                std::swap(chosen[i], chosen[rng.uniform_int(0, i)]);
            qa.answer_kind = AnswerKind::Mca;
            qa.question = "which appears first :";
            std::string r;
            int best_frame = 1 << 20, best_idx = 0;
            for (int i = 0; i < n; ++i) {
                qa.question += (i ? (i == n - 1 ? " or " : " , ") : " ") + the(scene, chosen[i].second);
                qa.choices.push_back(the(scene, chosen[i].second));
                r += the(scene, chosen[i].second) + " appears at frame " +
                     format_number(chosen[i].first) + " . ";
                if (chosen[i].first < best_frame) {
                    best_frame = chosen[i].first;
                    best_idx = i;
                }
            }
            qa.question += " ?";
            qa.rationale = r + "the first is " + the(scene, chosen[best_idx].second);
            qa.answer_text = std::string(1, letter(best_idx));
            break;
        }
    }
    return qa;
}

}  // namespace geode
