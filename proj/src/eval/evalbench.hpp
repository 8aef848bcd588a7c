// Copyright (c) 2026 geode-lab authors
// SPDX-License-Identifier: Apache-2.0
//
// Benchmark evaluation: greedy decoding, answer parsing and routing to
// the regression heads, per-task scoring, the ablation grid and the
// cross-seed report aggregation.

#pragma once

#include <array>
#include <string>
#include <vector>

#include <json.hpp>

#include "eval/metrics.hpp"
#include "train/trainer.hpp"

namespace geode {

struct SampleScore {
    TaskKind task = TaskKind::ObjCount;
    bool numerical = false;   // scored with score_na
    bool parseable = false;
    bool excluded = false;    // non-positive target, left out of aggregates
    double score = 0.0;
};

struct EvalReport {
    std::string arm;
    uint64_t seed = 0;
    std::array<double, 8> task_score{};  // indexed by TaskKind; locate unused
    std::array<int, 8> task_count{};
    double overall = 0, na_mean = 0, mca_mean = 0, unparseable_rate = 0;
    int samples = 0, unparseable = 0, excluded = 0, warnings = 0;
    double locate_center_err = 0;  // mean over parsed locate samples
    int locate_count = 0;
    std::vector<SampleScore> per_sample;

    // Fills the aggregate fields from per_sample. overall is the mean of
    // the per-task scores excluding locate.
    void finalize();
    nlohmann::json to_json() const;
};

// Fixed column layout of the grid CSV.
std::string csv_header();
std::string csv_row(const EvalReport& r);

struct DecodedAnswer {
    enum class Kind { Scalar, Box, Choice, Unparseable };
    Kind kind = Kind::Unparseable;
    double scalar = 0;
    std::vector<double> box;   // 7 entries, denormalized
    std::string choice;
    int control_tokens = 0;    // >1 counts as a warning, first one used
};

// Interprets one generation: a routed control token wins; otherwise the
// detokenized text is parsed per answer kind.
DecodedAnswer decode_answer(const ParamStore& store, const ModelConfigs& mc, const Vocab& vocab,
                            const QASample& qa, const GenerateResult& gen, int prefix_rows,
                            int prompt_len, bool drh_mode, const NormStats& norm);

EvalReport run_eval(const ParamStore& store, const ModelConfigs& mc, const Vocab& vocab,
                    const Dataset& ds, const NormStats& norm, int n_frames, Arm arm,
                    int max_new_tokens);

// All canonical numbers (-?d+.dd) found in a detokenized string.
std::vector<double> parse_numbers(const std::string& text);

void cmd_eval(const nlohmann::json& cfg);
void cmd_ablate(const nlohmann::json& cfg);
void cmd_report(const nlohmann::json& cfg);

}  // namespace geode
