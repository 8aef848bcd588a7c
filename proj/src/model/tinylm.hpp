// Copyright (c) 2026 geode-lab authors
// SPDX-License-Identifier: Apache-2.0
//
// Small causal transformer over the template vocabulary. Supports an
// injected embedding prefix: prefix rows occupy the first positions,
// receive a learned segment embedding, and are visible to every later
// position under the causal mask. With an empty prefix the forward is
// exactly a standard causal LM.

#pragma once

#include <string>
#include <vector>

#include "core/param_store.hpp"
#include "core/tensor.hpp"
#include "model/vocab.hpp"

namespace geode {

struct LMConfig {
    int layers = 4;
    int heads = 4;
    int d_model = 64;
    int context = 256;
    int vocab = 0;
};

// Creates every "lm.*" parameter. Control-token embedding rows start at
// zero and their output bias at -4 so an extended vocabulary does not
// disturb the base distribution.
void init_lm_params(ParamStore& store, const LMConfig& cfg, const Vocab& vocab, Rng& rng);

struct LMOutput {
    Tensor logits;  // (M+L) x V
    Tensor hidden;  // (M+L) x d_model, post final layer norm
};

// prefix may be undefined (M = 0). ids length L; M + L <= context.
LMOutput lm_forward(const ParamStore& store, const LMConfig& cfg, const Tensor& prefix,
                    const std::vector<int>& ids);

struct GenerateResult {
    std::vector<int> ids;     // generated continuation, <eos> excluded
    Tensor hidden;            // hidden states of the full final sequence
    std::vector<int> full;    // prompt + continuation
};

// Greedy decoding until <eos> or max_len new tokens.
GenerateResult lm_generate(const ParamStore& store, const LMConfig& cfg, const Tensor& prefix,
                           const std::vector<int>& prompt, const Vocab& vocab, int max_len);

// Teacher-forced mean CE of next-token prediction over the ids, with an
// optional prefix; loss is taken on every token position.
Tensor lm_sequence_loss(const ParamStore& store, const LMConfig& cfg, const Tensor& prefix,
                        const std::vector<int>& ids, const Vocab& vocab);

}  // namespace geode
