// Copyright (c) 2026 geode-lab authors
// SPDX-License-Identifier: Apache-2.0
//
// Scalar scoring rules for the benchmark: threshold-averaged relative
// accuracy for numerical answers, exact match for multiple choice, and
// a one-sided sign test for paired comparisons.

#pragma once

#include <string>

namespace geode {

// Mean over thresholds theta in {0.50, 0.55, ..., 0.95} of
// 1[|pred - target| / target < 1 - theta]. Requires target > 0.
double score_na(double pred, double target);

// Exact match; an empty prediction never matches.
double score_mca(const std::string& pred, const std::string& target);

// One-sided sign test: probability of >= wins successes in wins + losses
// fair coin flips (ties excluded by the caller).
double sign_test_p(int wins, int losses);

}  // namespace geode
