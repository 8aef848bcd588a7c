// Copyright (c) 2026 geode-lab authors
// SPDX-License-Identifier: Apache-2.0
//
// Question/answer synthesis over generated scenes. Questions, template
// rationales and exact numeric targets all come from the same geometry,
// so the scene itself is the scoring oracle.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "scene/scene.hpp"

namespace geode {

enum class TaskKind {
    ObjCount,
    AbsDist,
    ObjSize,
    RoomSize,
    RelDist,
    RelDir,
    Locate,
    AppearOrder,
};

inline constexpr int kNumTaskKinds = 8;
const char* task_name(TaskKind k);
TaskKind task_from_name(const std::string& name);

// Answer payload kinds: free text, multiple choice, scalar, 7-DoF box.
enum class AnswerKind { Text, Mca, Scalar, Box7 };
const char* answer_kind_name(AnswerKind k);
AnswerKind answer_kind_from_name(const std::string& name);

struct QASample {
    int scene_id = 0;
    TaskKind task = TaskKind::ObjCount;
    std::string question;
    AnswerKind answer_kind = AnswerKind::Scalar;
    std::vector<std::string> choices;  // MCA only
    std::string rationale;
    std::optional<double> target_scalar;
    std::optional<std::array<double, 7>> target_box;  // cx,cy,cz,w,d,h,yaw
    std::string answer_text;
    std::string frames_file;
    std::string cloud_file;
};

// Raised (as ContractError) when the scene cannot support the task.
QASample make_qa(const Scene& scene, const std::vector<Frame>& frames, TaskKind task,
                 uint64_t seed);

// Canonical 2-decimal number formatting shared by templates, targets and
// the digit-decoding answer texts.
std::string format_number(double v);

// First frame index where the object is rasterized, or -1 if never.
int first_visible_frame(const std::vector<Frame>& frames, int object_id);

}  // namespace geode
