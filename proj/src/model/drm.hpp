// Copyright (c) 2026 geode-lab authors
// SPDX-License-Identifier: Apache-2.0
//
// Decoupled Rationale Module: fuses the 2D and 3D feature streams by
// cross-attention, mixes the fused sequence with a gated recurrent scan,
// and reads out M spatio-temporal rationale tokens (E_spatio).

#pragma once

#include <vector>

#include "core/param_store.hpp"
#include "core/tensor.hpp"
#include "model/tinylm.hpp"

namespace geode {

struct DrmConfig {
    int d_model = 64;
    int d_3d = 64;
    int m_tokens = 16;  // M rationale tokens
    int vocab = 0;      // rows of lm.tok_emb the emit head mixes over
};

void init_drm_params(ParamStore& store, const DrmConfig& cfg, Rng& rng);

// Cross-attention fusion: queries from f2d (T x d_model), keys/values
// from f3d (K x d_3d). Residual: returns f2d + attn output. T x d_model.
Tensor drm_fuse(const ParamStore& store, const DrmConfig& cfg, const Tensor& f2d,
                const Tensor& f3d);

// Gated elementwise scan over the fused sequence (strictly causal in the
// row order): h_t = sigma(a_t) * h_{t-1} + sigma(b_t) * c_t, with a, b, c
// linear in x_t; output y_t = h_t W_y + x_t. T x d_model.
Tensor drm_scan(const ParamStore& store, const DrmConfig& cfg, const Tensor& x);

// Attention readout with M learned queries followed by a 2-layer MLP.
// M x d_model rationale tokens.
Tensor drm_emit(const ParamStore& store, const DrmConfig& cfg, const Tensor& mixed);

// Full DRM pass: fuse, scan, emit.
Tensor drm_forward(const ParamStore& store, const DrmConfig& cfg, const Tensor& f2d,
                   const Tensor& f3d);

// Stage-1 objective: next-token cross-entropy of the rationale text under
// the (frozen) language model conditioned on the E_spatio prefix.
Tensor drm_stage1_loss(const ParamStore& store, const LMConfig& lm_cfg, const Tensor& e_spatio,
                       const std::vector<int>& rationale_ids, const Vocab& vocab);

}  // namespace geode
