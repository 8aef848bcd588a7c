// Copyright (c) 2026 geode-lab authors
// SPDX-License-Identifier: Apache-2.0

#include "model/drm.hpp"

#include <cmath>

#include "core/error.hpp"

namespace geode {

void init_drm_params(ParamStore& store, const DrmConfig& cfg, Rng& rng) {
    const int d = cfg.d_model;
    const double s = 0.08;
    store.create("drm.fuse.wq", Tensor::randn({d, d}, rng, s));
    store.create("drm.fuse.wk", Tensor::randn({cfg.d_3d, d}, rng, s));
    store.create("drm.fuse.wv", Tensor::randn({cfg.d_3d, d}, rng, s));
    store.create("drm.fuse.wo", Tensor::randn({d, d}, rng, s));
    store.create("drm.scan.wa", Tensor::randn({d, d}, rng, s));
    store.create("drm.scan.ba", Tensor::zeros({1, d}));
    store.create("drm.scan.wb", Tensor::randn({d, d}, rng, s));
    store.create("drm.scan.bb", Tensor::zeros({1, d}));
    store.create("drm.scan.wc", Tensor::randn({d, d}, rng, s));
    store.create("drm.scan.bc", Tensor::zeros({1, d}));
    store.create("drm.scan.wy", Tensor::randn({d, d}, rng, s));
    store.create("drm.emit.queries", Tensor::randn({cfg.m_tokens, d}, rng, s));
    store.create("drm.emit.ln.g", Tensor::full({1, d}, 1.0));
    store.create("drm.emit.ln.b", Tensor::zeros({1, d}));
    store.create("drm.emit.w1", Tensor::randn({d, 2 * d}, rng, s));
    store.create("drm.emit.b1", Tensor::zeros({1, 2 * d}));
    if (cfg.vocab <= 0) throw ContractError("init_drm_params: cfg.vocab must be positive");
    store.create("drm.emit.w2", Tensor::randn({2 * d, cfg.vocab}, rng, s));
    store.create("drm.emit.b2", Tensor::zeros({1, cfg.vocab}));
}

Tensor drm_fuse(const ParamStore& store, const DrmConfig& cfg, const Tensor& f2d,
                const Tensor& f3d) {
    if (f2d.shape()[1] != cfg.d_model || f3d.shape()[1] != cfg.d_3d)
        throw ShapeError("drm_fuse: feature widths do not match the config");
    Tensor q = matmul(f2d, store.get("drm.fuse.wq"));
    Tensor k = matmul(f3d, store.get("drm.fuse.wk"));
    Tensor v = matmul(f3d, store.get("drm.fuse.wv"));
    Tensor att = softmax_lastdim(scale(matmul(q, transpose(k)), 1.0 / std::sqrt(cfg.d_model)));
    return add(f2d, matmul(matmul(att, v), store.get("drm.fuse.wo")));
}

Tensor drm_scan(const ParamStore& store, const DrmConfig& cfg, const Tensor& x) {
    if (x.shape()[1] != cfg.d_model) throw ShapeError("drm_scan: width mismatch");
    const int T = x.shape()[0];
    Tensor a = sigmoid(add(matmul(x, store.get("drm.scan.wa")), store.get("drm.scan.ba")));
    Tensor b = sigmoid(add(matmul(x, store.get("drm.scan.wb")), store.get("drm.scan.bb")));
    Tensor c = matmul(x, store.get("drm.scan.wc"));

    std::vector<Tensor> rows;
    rows.reserve(T);
    Tensor prev;  // undefined until t = 1
    for (int t = 0; t < T; ++t) {
        Tensor at = slice_rows(a, t, t + 1);
        Tensor bt = slice_rows(b, t, t + 1);
        Tensor ct = slice_rows(c, t, t + 1);
        Tensor ht = mul(bt, ct);
        if (t > 0) ht = add(mul(at, prev), ht);
        rows.push_back(ht);
        prev = ht;
    }
    Tensor hs = concat_rows(rows);
    return add(matmul(hs, store.get("drm.scan.wy")), x);
}

Tensor drm_emit(const ParamStore& store, const DrmConfig& cfg, const Tensor& mixed) {
    Tensor att = softmax_lastdim(scale(matmul(store.get("drm.emit.queries"), transpose(mixed)),
                                       1.0 / std::sqrt(cfg.d_model)));
    Tensor pooled = matmul(att, mixed);  // M x d
    // The scan output is unnormalized and can reach magnitudes that saturate
    // the tanh below, which would flatten the readout to a constant; normalize
    // the pooled rows before the projection.
    pooled = layer_norm(pooled, store.get("drm.emit.ln.g"), store.get("drm.emit.ln.b"));
    Tensor hid = tanh_act(add(matmul(pooled, store.get("drm.emit.w1")), store.get("drm.emit.b1")));
    Tensor logits = add(matmul(hid, store.get("drm.emit.w2")), store.get("drm.emit.b2"));
    // Project into the LM embedding space: each emitted token is a convex
    // mixture of rows of the token table, so the prefix always lies on the
    // manifold the language model actually reads.
    return matmul(softmax_lastdim(logits), store.get("lm.tok_emb"));
}

Tensor drm_forward(const ParamStore& store, const DrmConfig& cfg, const Tensor& f2d,
                   const Tensor& f3d) {
    return drm_emit(store, cfg, drm_scan(store, cfg, drm_fuse(store, cfg, f2d, f3d)));
}

Tensor drm_stage1_loss(const ParamStore& store, const LMConfig& lm_cfg, const Tensor& e_spatio,
                       const std::vector<int>& rationale_ids, const Vocab& vocab) {
    if (rationale_ids.empty()) throw ContractError("stage-1 loss needs a non-empty rationale");
    return lm_sequence_loss(store, lm_cfg, e_spatio, rationale_ids, vocab);
}

}  // namespace geode
