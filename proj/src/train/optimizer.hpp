// Copyright (c) 2026 geode-lab authors
// SPDX-License-Identifier: Apache-2.0
//
// Decoupled-weight-decay adaptive optimizer with linear warmup, cosine
// decay and global gradient-norm clipping. Operates on the trainable
// subset of a ParamStore; frozen tensors are never touched.

#pragma once

#include <map>
#include <string>
#include <vector>

#include "core/param_store.hpp"

namespace geode {

struct OptimConfig {
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
    double clip = 1.0;
    int warmup_steps = 100;
    int total_steps = 1000;
};

class AdamW {
public:
    AdamW(ParamStore& store, const OptimConfig& cfg);

    // Consumes the current gradients. Returns the learning rate used, or
    // 0.0 when the step was skipped because a gradient was non-finite.
    // Aborts (NumericError) after 10 consecutive skipped steps.
    double step();

    // Scheduled learning rate for an arbitrary step index.
    double lr_at(int step) const;

    int steps_taken() const { return step_; }
    int skipped() const { return skipped_total_; }

private:
    ParamStore& store_;
    OptimConfig cfg_;
    int step_ = 0;
    int consecutive_bad_ = 0;
    int skipped_total_ = 0;
    std::map<std::string, std::vector<double>> m_, v_;
};

}  // namespace geode
