// Copyright (c) 2026 geode-lab authors
// SPDX-License-Identifier: Apache-2.0
//
// Pipeline stages: dataset emission, LM pretraining on generated text,
// Stage 1 (rationale-module training against the frozen LM) and Stage 2
// (joint LM + regression-head finetuning with the rationale module
// frozen), including the ablation arms.

#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "core/param_store.hpp"
#include "model/drh.hpp"
#include "model/drm.hpp"
#include "model/encoders.hpp"
#include "model/tinylm.hpp"
#include "model/vocab.hpp"
#include "scene/dataset.hpp"
#include "train/optimizer.hpp"

namespace geode {

// Training arm of the component ablation. SftOnly/SftDrh run without a
// rationale prefix (M = 0); SftOnly/SftDrm answer with digit text
// instead of the regression heads.
enum class Arm { SftOnly, SftDrh, SftDrm, Full };
Arm arm_from_string(const std::string& s);
const char* arm_name(Arm arm);
bool arm_uses_drm(Arm arm);
bool arm_uses_drh(Arm arm);

struct ModelConfigs {
    LMConfig lm;
    EncoderConfig enc;
    DrmConfig drm;
    DrhConfig drh;
};
ModelConfigs model_configs(const nlohmann::json& cfg, const Vocab& vocab);

// Prefix fed to the LM: the M rationale tokens when use_drm (the fused
// features already carry the 2D stream), otherwise per-frame pooled
// projected 2D tokens over the first n_frames frames.
Tensor build_prefix(const ParamStore& store, const ModelConfigs& mc, const SceneAssets& assets,
                    int n_frames, bool use_drm);

// Answer token ids for teacher forcing: the control token in DRH mode
// for regression tasks, the tokenized answer text otherwise.
std::vector<int> answer_ids(const QASample& qa, const Vocab& vocab, bool drh_mode);

// Mixed loss of one sample (CE over the answer span plus the weighted
// regression term when a head is routed).
Tensor stage2_sample_loss(const ParamStore& store, const ModelConfigs& mc, const Vocab& vocab,
                          const QASample& qa, const SceneAssets& assets, int n_frames, Arm arm,
                          const NormStats& norm, double* ce_out = nullptr,
                          double* drh_out = nullptr);

// Commands, each taking a resolved config tree.
void cmd_gen_data(const nlohmann::json& cfg);
void cmd_pretrain_lm(const nlohmann::json& cfg);
void cmd_train_stage1(const nlohmann::json& cfg);
void cmd_train_stage2(const nlohmann::json& cfg);

}  // namespace geode
