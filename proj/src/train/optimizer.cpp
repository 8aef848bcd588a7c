// Copyright (c) 2026 geode-lab authors
// SPDX-License-Identifier: Apache-2.0

#include "train/optimizer.hpp"

#include <cmath>

#include "core/error.hpp"

namespace geode {

AdamW::AdamW(ParamStore& store, const OptimConfig& cfg) : store_(store), cfg_(cfg) {
    if (cfg.lr <= 0 || cfg.clip <= 0 || cfg.total_steps <= 0)
        throw ConfigError("optimizer: lr, clip and total_steps must be positive");
}

double AdamW::lr_at(int step) const {
    if (step < cfg_.warmup_steps)
        return cfg_.lr * static_cast<double>(step + 1) / cfg_.warmup_steps;
    const int span = std::max(1, cfg_.total_steps - cfg_.warmup_steps);
    const double frac = std::min(1.0, static_cast<double>(step - cfg_.warmup_steps) / span);
    return cfg_.lr * 0.5 * (1.0 + std::cos(M_PI * frac));
}

double AdamW::step() {
    // collect the trainable parameters that received gradient
    std::vector<std::string> active;
    double sq_norm = 0.0;
    bool finite = true;
    for (const auto& name : store_.names()) {
        if (!store_.trainable(name)) continue;
        Tensor t = store_.get(name);
        if (!t.has_grad()) continue;
        active.push_back(name);
        for (double g : t.grad()) {
            if (!std::isfinite(g)) finite = false;
            sq_norm += g * g;
        }
    }
    if (!finite || !std::isfinite(sq_norm)) {
        ++skipped_total_;
        if (++consecutive_bad_ >= 10)
            throw NumericError("optimizer: 10 consecutive non-finite gradient steps");
        store_.zero_grads();
        return 0.0;
    }
    consecutive_bad_ = 0;

    const double norm = std::sqrt(sq_norm);
    const double clip_scale = norm > cfg_.clip ? cfg_.clip / norm : 1.0;
    const double lr = lr_at(step_);
    ++step_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, step_);
    const double bc2 = 1.0 - std::pow(cfg_.beta2, step_);

    for (const auto& name : active) {
        Tensor t = store_.get(name);
        auto& m = m_[name];
        auto& v = v_[name];
        if (m.empty()) {
            m.assign(t.numel(), 0.0);
            v.assign(t.numel(), 0.0);
        }
        auto& data = t.data();
        const auto& grad = t.grad();
        for (size_t i = 0; i < data.size(); ++i) {
            const double g = grad[i] * clip_scale;
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            data[i] -= lr * (mhat / (std::sqrt(vhat) + cfg_.eps) + cfg_.weight_decay * data[i]);
        }
    }
    store_.zero_grads();
    return lr;
}

}  // namespace geode
