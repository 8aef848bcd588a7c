// Copyright (c) 2026 geode-lab authors
// SPDX-License-Identifier: Apache-2.0

#include "model/tinylm.hpp"

#include <cmath>

#include "core/error.hpp"

namespace geode {

namespace {

std::string layer_name(int i, const char* suffix) {
    return "lm.layer" + std::to_string(i) + "." + suffix;
}

}  // namespace

void init_lm_params(ParamStore& store, const LMConfig& cfg, const Vocab& vocab, Rng& rng) {
    const int d = cfg.d_model;
    const double s = 0.08;
    Tensor tok = Tensor::randn({cfg.vocab, d}, rng, s);
    Tensor head_b = Tensor::zeros({1, cfg.vocab});
    // zero-initialized control rows, biased down at the output
    for (int ctl : {vocab.reg(), vocab.bbox()}) {
        for (int j = 0; j < d; ++j) tok.data()[static_cast<size_t>(ctl) * d + j] = 0.0;
        head_b.data()[ctl] = -4.0;
    }
    store.create("lm.tok_emb", tok);
    store.create("lm.pos_emb", Tensor::randn({cfg.context, d}, rng, s));
    store.create("lm.seg_prefix", Tensor::randn({1, d}, rng, s));
    for (int i = 0; i < cfg.layers; ++i) {
        store.create(layer_name(i, "ln1.g"), Tensor::full({1, d}, 1.0));
        store.create(layer_name(i, "ln1.b"), Tensor::zeros({1, d}));
        store.create(layer_name(i, "attn.wqkv"), Tensor::randn({d, 3 * d}, rng, s));
        store.create(layer_name(i, "attn.bqkv"), Tensor::zeros({1, 3 * d}));
        store.create(layer_name(i, "attn.wo"), Tensor::randn({d, d}, rng, s));
        store.create(layer_name(i, "attn.bo"), Tensor::zeros({1, d}));
        store.create(layer_name(i, "ln2.g"), Tensor::full({1, d}, 1.0));
        store.create(layer_name(i, "ln2.b"), Tensor::zeros({1, d}));
        store.create(layer_name(i, "mlp.w1"), Tensor::randn({d, 4 * d}, rng, s));
        store.create(layer_name(i, "mlp.b1"), Tensor::zeros({1, 4 * d}));
        store.create(layer_name(i, "mlp.w2"), Tensor::randn({4 * d, d}, rng, s));
        store.create(layer_name(i, "mlp.b2"), Tensor::zeros({1, d}));
    }
    store.create("lm.lnf.g", Tensor::full({1, d}, 1.0));
    store.create("lm.lnf.b", Tensor::zeros({1, d}));
    store.create("lm.head.w", Tensor::randn({d, cfg.vocab}, rng, s));
    store.create("lm.head.b", head_b);
}

LMOutput lm_forward(const ParamStore& store, const LMConfig& cfg, const Tensor& prefix,
                    const std::vector<int>& ids) {
    const int d = cfg.d_model;
    const int M = prefix.defined() ? prefix.rows() : 0;
    const int L = static_cast<int>(ids.size());
    const int S = M + L;
    if (S == 0) throw ContractError("lm_forward on an empty sequence");
    if (S > cfg.context)
        throw ContractError("sequence length " + std::to_string(S) + " exceeds context " +
                            std::to_string(cfg.context));
    const int dh = d / cfg.heads;

    std::vector<Tensor> parts;
    if (M > 0) parts.push_back(add(prefix, store.get("lm.seg_prefix")));
    if (L > 0) parts.push_back(embedding_lookup(store.get("lm.tok_emb"), ids));
    Tensor x = parts.size() == 1 ? parts[0] : concat_rows(parts);
    x = add(x, slice_rows(store.get("lm.pos_emb"), 0, S));

    for (int i = 0; i < cfg.layers; ++i) {
        Tensor h = layer_norm(x, store.get(layer_name(i, "ln1.g")),
                              store.get(layer_name(i, "ln1.b")));
        Tensor qkv = add(matmul(h, store.get(layer_name(i, "attn.wqkv"))),
                         store.get(layer_name(i, "attn.bqkv")));
        std::vector<Tensor> heads;
        for (int hd = 0; hd < cfg.heads; ++hd) {
            Tensor q = slice_cols(qkv, hd * dh, (hd + 1) * dh);
            Tensor k = slice_cols(qkv, d + hd * dh, d + (hd + 1) * dh);
            Tensor v = slice_cols(qkv, 2 * d + hd * dh, 2 * d + (hd + 1) * dh);
            Tensor att = softmax_causal(scale(matmul(q, transpose(k)), 1.0 / std::sqrt(dh)));
            heads.push_back(matmul(att, v));
        }
        Tensor merged = cfg.heads == 1 ? heads[0] : concat_cols(heads);
        x = add(x, add(matmul(merged, store.get(layer_name(i, "attn.wo"))),
                       store.get(layer_name(i, "attn.bo"))));
        Tensor h2 = layer_norm(x, store.get(layer_name(i, "ln2.g")),
                               store.get(layer_name(i, "ln2.b")));
        Tensor m = tanh_act(add(matmul(h2, store.get(layer_name(i, "mlp.w1"))),
                                store.get(layer_name(i, "mlp.b1"))));
        x = add(x, add(matmul(m, store.get(layer_name(i, "mlp.w2"))),
                       store.get(layer_name(i, "mlp.b2"))));
    }
    LMOutput out;
    out.hidden = layer_norm(x, store.get("lm.lnf.g"), store.get("lm.lnf.b"));
    out.logits = add(matmul(out.hidden, store.get("lm.head.w")), store.get("lm.head.b"));
    return out;
}

GenerateResult lm_generate(const ParamStore& store, const LMConfig& cfg, const Tensor& prefix,
                           const std::vector<int>& prompt, const Vocab& vocab, int max_len) {
    const int M = prefix.defined() ? prefix.rows() : 0;
    if (M == 0 && prompt.empty())
        throw ContractError("lm_generate needs a prompt or a prefix");
    NoGradGuard ng;
    GenerateResult res;
    res.full = prompt;
    LMOutput out;
    for (int step = 0; step < max_len; ++step) {
        if (M + static_cast<int>(res.full.size()) >= cfg.context) break;
        out = lm_forward(store, cfg, prefix, res.full);
        const int last = out.logits.rows() - 1;
        int best = 0;
        double best_v = -1e300;
        for (int j = 0; j < cfg.vocab; ++j) {
            const double v = out.logits.at(last, j);
            if (v > best_v) {
                best_v = v;
                best = j;
            }
        }
        if (best == vocab.eos()) break;
        res.full.push_back(best);
        res.ids.push_back(best);
    }
    out = lm_forward(store, cfg, prefix, res.full);
    res.hidden = out.hidden;
    return res;
}

Tensor lm_sequence_loss(const ParamStore& store, const LMConfig& cfg, const Tensor& prefix,
                        const std::vector<int>& ids, const Vocab& vocab) {
    const int M = prefix.defined() ? prefix.rows() : 0;
    // input: <bos> + ids ; target at each token position: the next token,
    // ending with <eos>.
    std::vector<int> input;
    input.push_back(vocab.bos());
    input.insert(input.end(), ids.begin(), ids.end());
    std::vector<int> targets(static_cast<size_t>(M) + input.size(), 0);
    std::vector<bool> mask(targets.size(), false);
    for (size_t j = 0; j < input.size(); ++j) {
        const size_t pos = M + j;
        targets[pos] = j + 1 < input.size() ? input[j + 1] : vocab.eos();
        mask[pos] = true;
    }
    LMOutput out = lm_forward(store, cfg, prefix, input);
    return cross_entropy(out.logits, targets, mask);
}

}  // namespace geode
