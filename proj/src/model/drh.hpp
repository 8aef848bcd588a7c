// Copyright (c) 2026 geode-lab authors
// SPDX-License-Identifier: Apache-2.0
//
// Direct Regression Head: small per-task MLPs that read the LM hidden
// state at a control-token position and regress either a scalar or a
// 7-dof box, plus the routing and loss plumbing around them.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "core/param_store.hpp"
#include "core/tensor.hpp"
#include "model/vocab.hpp"
#include "scene/dataset.hpp"
#include "scene/qa.hpp"

namespace geode {

struct DrhConfig {
    int d_model = 64;
    int hidden = 64;
    double lambda = 1.0;  // weight of the regression term in the mixed loss
};

void init_drh_params(ParamStore& store, const DrhConfig& cfg, Rng& rng);

// Which control token a task emits. Scalar tasks use <REG>; locate uses
// <3DBBOX>; mca tasks use neither (the answer stays textual).
enum class HeadKind { None, Scalar, Box };
HeadKind head_for_task(TaskKind task);

struct RoutingRecord {
    int position;    // token index of the control token in the sequence
    HeadKind head;
    TaskKind task;
};

// Scans ids for control tokens, in order of appearance.
std::vector<RoutingRecord> drh_route(const std::vector<int>& ids, TaskKind task,
                                     const Vocab& vocab);

// Regresses from one hidden-state row (1 x d_model). Scalar heads return
// 1x1 softplus output; the box head returns 1x7 with softplus sizes and
// the yaw squashed to [-1, 1) via wrapping (all in normalized units).
Tensor drh_regress(const ParamStore& store, const DrhConfig& cfg, const Tensor& hidden_row,
                   TaskKind task);

// Normalization helpers: targets are trained in normalized units.
double normalize_scalar(double value, TaskKind task, const NormStats& norm);
double denormalize_scalar(double value, TaskKind task, const NormStats& norm);
std::vector<double> normalize_box(const std::vector<double>& box7, const NormStats& norm);
std::vector<double> denormalize_box(const std::vector<double>& box7, const NormStats& norm);

// L_total = L_CE + lambda * L_DRH. ce may be undefined (pure regression);
// regression terms may be empty (pure CE).
Tensor drh_mixed_loss(const DrhConfig& cfg, const Tensor& ce,
                      const std::vector<Tensor>& reg_preds,
                      const std::vector<Tensor>& reg_targets);

// Parses a decoded digit-mode answer ("1 2 . 5 0" style token text) back
// into a number; nullopt when no canonical number is present.
std::optional<double> parse_digit_answer(const std::string& text);

}  // namespace geode
