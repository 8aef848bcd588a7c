// Copyright (c) 2026 geode-lab authors
// SPDX-License-Identifier: Apache-2.0

#include "model/drh.hpp"

#include <cctype>
#include <cmath>

#include "core/error.hpp"
#include "scene/geometry.hpp"

namespace geode {

namespace {

const char* head_prefix(TaskKind task) {
    switch (task) {
        case TaskKind::ObjCount: return "drh.reg.obj_count.";
        case TaskKind::AbsDist: return "drh.reg.abs_dist.";
        case TaskKind::ObjSize: return "drh.reg.obj_size.";
        case TaskKind::RoomSize: return "drh.reg.room_size.";
        case TaskKind::Locate: return "drh.bbox.";
        default: throw ContractError("task has no regression head");
    }
}

}  // namespace

HeadKind head_for_task(TaskKind task) {
    switch (task) {
        case TaskKind::ObjCount:
        case TaskKind::AbsDist:
        case TaskKind::ObjSize:
        case TaskKind::RoomSize:
            return HeadKind::Scalar;
        case TaskKind::Locate:
            return HeadKind::Box;
        default:
            return HeadKind::None;
    }
}

void init_drh_params(ParamStore& store, const DrhConfig& cfg, Rng& rng) {
    const double s = 0.08;
    for (TaskKind task : {TaskKind::ObjCount, TaskKind::AbsDist, TaskKind::ObjSize,
                          TaskKind::RoomSize, TaskKind::Locate}) {
        const std::string p = head_prefix(task);
        const int out = head_for_task(task) == HeadKind::Box ? 7 : 1;
        store.create(p + "w1", Tensor::randn({cfg.d_model, cfg.hidden}, rng, s));
        store.create(p + "b1", Tensor::zeros({1, cfg.hidden}));
        store.create(p + "w2", Tensor::randn({cfg.hidden, out}, rng, s));
        store.create(p + "b2", Tensor::zeros({1, out}));
    }
}

std::vector<RoutingRecord> drh_route(const std::vector<int>& ids, TaskKind task,
                                     const Vocab& vocab) {
    std::vector<RoutingRecord> out;
    const HeadKind expected = head_for_task(task);
    for (int i = 0; i < static_cast<int>(ids.size()); ++i) {
        if (ids[i] == vocab.reg()) {
            if (expected != HeadKind::Scalar)
                throw ContractError("<REG> emitted for a task without a scalar head");
            out.push_back({i, HeadKind::Scalar, task});
        } else if (ids[i] == vocab.bbox()) {
            if (expected != HeadKind::Box)
                throw ContractError("<3DBBOX> emitted for a task without a box head");
            out.push_back({i, HeadKind::Box, task});
        }
    }
    return out;
}

Tensor drh_regress(const ParamStore& store, const DrhConfig& cfg, const Tensor& hidden_row,
                   TaskKind task) {
    if (hidden_row.shape()[0] != 1 || hidden_row.shape()[1] != cfg.d_model)
        throw ShapeError("drh_regress expects a single hidden-state row");
    const std::string p = head_prefix(task);
    Tensor h = tanh_act(add(matmul(hidden_row, store.get(p + "w1")), store.get(p + "b1")));
    Tensor raw = add(matmul(h, store.get(p + "w2")), store.get(p + "b2"));
    if (head_for_task(task) == HeadKind::Scalar) return softplus(raw);
    // box: sizes (cols 3..5) through softplus, center and yaw raw
    Tensor center = slice_cols(raw, 0, 3);
    Tensor sizes = softplus(slice_cols(raw, 3, 6));
    Tensor yaw = slice_cols(raw, 6, 7);
    return concat_cols({center, sizes, yaw});
}

double normalize_scalar(double value, TaskKind task, const NormStats& norm) {
    return value / norm.scalar_scale(task);
}

double denormalize_scalar(double value, TaskKind task, const NormStats& norm) {
    return value * norm.scalar_scale(task);
}

std::vector<double> normalize_box(const std::vector<double>& box7, const NormStats& norm) {
    if (box7.size() != 7) throw ShapeError("box target must have 7 entries");
    std::vector<double> out(7);
    out[0] = box7[0] / norm.box_center_xy;
    out[1] = box7[1] / norm.box_center_xy;
    out[2] = box7[2] / norm.box_center_z;
    for (int i = 3; i < 6; ++i) out[i] = box7[i] / norm.box_size;
    out[6] = wrap_angle(box7[6]) / norm.box_yaw;
    return out;
}

std::vector<double> denormalize_box(const std::vector<double>& box7, const NormStats& norm) {
    if (box7.size() != 7) throw ShapeError("box prediction must have 7 entries");
    std::vector<double> out(7);
    out[0] = box7[0] * norm.box_center_xy;
    out[1] = box7[1] * norm.box_center_xy;
    out[2] = box7[2] * norm.box_center_z;
    for (int i = 3; i < 6; ++i) out[i] = box7[i] * norm.box_size;
    out[6] = wrap_angle(box7[6] * norm.box_yaw);
    return out;
}

Tensor drh_mixed_loss(const DrhConfig& cfg, const Tensor& ce,
                      const std::vector<Tensor>& reg_preds,
                      const std::vector<Tensor>& reg_targets) {
    if (reg_preds.size() != reg_targets.size())
        throw ShapeError("regression predictions and targets differ in count");
    Tensor total = ce.defined() ? ce : Tensor::scalar(0.0);
    if (!reg_preds.empty()) {
        std::vector<Tensor> preds = reg_preds, targets = reg_targets;
        // stack into one row-concat tensor each so the MSE is one mean
        Tensor reg = mse(concat_cols(preds), concat_cols(targets));
        total = add(total, scale(reg, cfg.lambda));
    }
    return total;
}

std::optional<double> parse_digit_answer(const std::string& text) {
    // find the first canonical number -?d+.dd in the detokenized text
    const int n = static_cast<int>(text.size());
    for (int i = 0; i < n; ++i) {
        int j = i;
        bool neg = false;
        if (text[j] == '-') { neg = true; ++j; }
        int start = j;
        while (j < n && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
        if (j == start) continue;
        if (j + 2 < n && text[j] == '.' &&
            std::isdigit(static_cast<unsigned char>(text[j + 1])) &&
            std::isdigit(static_cast<unsigned char>(text[j + 2]))) {
            const std::string num = text.substr(neg ? i : start, (j + 3) - (neg ? i : start));
            return std::stod(num);
        }
        i = j;
    }
    return std::nullopt;
}

}  // namespace geode
