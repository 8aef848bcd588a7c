// Copyright (c) 2026 geode-lab authors
// SPDX-License-Identifier: Apache-2.0

#include "eval/metrics.hpp"

#include <cmath>

#include "core/error.hpp"

namespace geode {

double score_na(double pred, double target) {
    if (target <= 0) throw ContractError("score_na requires a positive target");
    const double rel = std::fabs(pred - target) / target;
    int passed = 0;
    for (int i = 0; i < 10; ++i) {
        const double theta = 0.50 + 0.05 * i;
        if (rel < 1.0 - theta) ++passed;
    }
    return passed / 10.0;
}

double score_mca(const std::string& pred, const std::string& target) {
    return (!pred.empty() && pred == target) ? 1.0 : 0.0;
}

double sign_test_p(int wins, int losses) {
    const int n = wins + losses;
    if (n == 0) return 1.0;
    // sum of binomial tail P(X >= wins) at p = 1/2, in log space
    double p = 0.0;
    for (int k = wins; k <= n; ++k) {
        double log_c = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
        p += std::exp(log_c - n * std::log(2.0));
    }
    return std::min(1.0, p);
}

}  // namespace geode
