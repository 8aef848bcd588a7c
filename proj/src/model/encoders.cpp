// Copyright (c) 2026 geode-lab authors
// SPDX-License-Identifier: Apache-2.0

#include "model/encoders.hpp"

#include <cmath>

#include "core/error.hpp"

namespace geode {

namespace {

int patch_channels(const EncoderConfig& cfg) {
    // per cell: object-id one-hot (max_objects + 1 for "none") + depth
    return cfg.patch * cfg.patch * (cfg.max_objects + 2);
}

}  // namespace

void init_encoder_params(ParamStore& store, const EncoderConfig& cfg, Rng& rng) {
    const int d = cfg.d_model;
    const double s = 0.08;
    const int per_frame = (cfg.grid / cfg.patch) * (cfg.grid / cfg.patch);
    store.create("enc2d.patch.w", Tensor::randn({patch_channels(cfg), d}, rng, s));
    store.create("enc2d.patch.b", Tensor::zeros({1, d}));
    store.create("enc2d.pos", Tensor::randn({cfg.max_frames * per_frame, d}, rng, s));
    store.create("enc2d.ln1.g", Tensor::full({1, d}, 1.0));
    store.create("enc2d.ln1.b", Tensor::zeros({1, d}));
    store.create("enc2d.attn.wqkv", Tensor::randn({d, 3 * d}, rng, s));
    store.create("enc2d.attn.bqkv", Tensor::zeros({1, 3 * d}));
    store.create("enc2d.attn.wo", Tensor::randn({d, d}, rng, s));
    store.create("enc2d.attn.bo", Tensor::zeros({1, d}));
    store.create("enc2d.ln2.g", Tensor::full({1, d}, 1.0));
    store.create("enc2d.ln2.b", Tensor::zeros({1, d}));
    store.create("enc2d.mlp.w1", Tensor::randn({d, 2 * d}, rng, s));
    store.create("enc2d.mlp.b1", Tensor::zeros({1, 2 * d}));
    store.create("enc2d.mlp.w2", Tensor::randn({2 * d, d}, rng, s));
    store.create("enc2d.mlp.b2", Tensor::zeros({1, d}));

    const int d3 = cfg.d_3d;
    store.create("enc3d.mlp.w1", Tensor::randn({14, d3}, rng, s));
    store.create("enc3d.mlp.b1", Tensor::zeros({1, d3}));
    store.create("enc3d.mlp.w2", Tensor::randn({d3, d3}, rng, s));
    store.create("enc3d.mlp.b2", Tensor::zeros({1, d3}));
    store.create("enc3d.queries", Tensor::randn({cfg.pool_tokens, d3}, rng, s));
    store.create("enc3d.proj.w", Tensor::randn({d3 + 5, d3}, rng, s));
    store.create("enc3d.proj.b", Tensor::zeros({1, d3}));
}

Tensor encode_2d(const ParamStore& store, const EncoderConfig& cfg,
                 const std::vector<Frame>& frames) {
    if (frames.empty()) throw ContractError("encode_2d on an empty frame list");
    const int g = cfg.grid;
    for (const Frame& f : frames)
        if (f.grid != g) throw ShapeError("encode_2d: mixed grid sizes");
    if (g % cfg.patch != 0) throw ShapeError("grid must be divisible by patch size");
    const int per_side = g / cfg.patch;
    const int per_frame = per_side * per_side;
    const int T = static_cast<int>(frames.size()) * per_frame;
    if (T > cfg.max_frames * per_frame)
        throw ContractError("encode_2d: more frames than the positional table admits");
    const int chans = cfg.max_objects + 2;
    const int pc = patch_channels(cfg);

    std::vector<double> feats(static_cast<size_t>(T) * pc, 0.0);
    int tok = 0;
    for (const Frame& frame : frames) {
        for (int pr = 0; pr < per_side; ++pr) {
            for (int pcidx = 0; pcidx < per_side; ++pcidx) {
                double* row = feats.data() + static_cast<size_t>(tok) * pc;
                int cell = 0;
                for (int r = pr * cfg.patch; r < (pr + 1) * cfg.patch; ++r) {
                    for (int c = pcidx * cfg.patch; c < (pcidx + 1) * cfg.patch; ++c, ++cell) {
                        const int id = frame.ids[static_cast<size_t>(r) * g + c];
                        const double depth = frame.depth[static_cast<size_t>(r) * g + c];
                        double* cellp = row + static_cast<size_t>(cell) * chans;
                        cellp[id < 0 ? cfg.max_objects : id] = 1.0;
                        cellp[cfg.max_objects + 1] = depth;
                    }
                }
                ++tok;
            }
        }
    }
    Tensor patches = Tensor::from_data({T, pc}, std::move(feats));
    Tensor x = add(matmul(patches, store.get("enc2d.patch.w")), store.get("enc2d.patch.b"));
    x = add(x, slice_rows(store.get("enc2d.pos"), 0, T));

    // one pre-norm self-attention block (full attention, single head)
    const int d = cfg.d_model;
    Tensor h = layer_norm(x, store.get("enc2d.ln1.g"), store.get("enc2d.ln1.b"));
    Tensor qkv = add(matmul(h, store.get("enc2d.attn.wqkv")), store.get("enc2d.attn.bqkv"));
    Tensor q = slice_cols(qkv, 0, d);
    Tensor k = slice_cols(qkv, d, 2 * d);
    Tensor v = slice_cols(qkv, 2 * d, 3 * d);
    Tensor att = softmax_lastdim(scale(matmul(q, transpose(k)), 1.0 / std::sqrt(d)));
    x = add(x, add(matmul(matmul(att, v), store.get("enc2d.attn.wo")),
                   store.get("enc2d.attn.bo")));
    Tensor h2 = layer_norm(x, store.get("enc2d.ln2.g"), store.get("enc2d.ln2.b"));
    Tensor m = tanh_act(add(matmul(h2, store.get("enc2d.mlp.w1")), store.get("enc2d.mlp.b1")));
    x = add(x, add(matmul(m, store.get("enc2d.mlp.w2")), store.get("enc2d.mlp.b2")));
    return x;
}

Tensor encode_3d(const ParamStore& store, const EncoderConfig& cfg, const PointCloud& cloud,
                 const std::vector<CameraPose>& poses) {
    if (cloud.points.empty()) throw ContractError("encode_3d on an empty point cloud");
    if (poses.empty()) throw ContractError("encode_3d needs at least one camera pose");
    const int P = static_cast<int>(cloud.points.size());
    std::vector<double> feats(static_cast<size_t>(P) * 14, 0.0);
    for (int i = 0; i < P; ++i) {
        const ScenePoint& p = cloud.points[i];
        double* row = feats.data() + static_cast<size_t>(i) * 14;
        row[0] = p.xyz.x;
        row[1] = p.xyz.y;
        row[2] = p.xyz.z;
        row[3 + p.category] = 1.0;
        const Vec3 rel = to_camera(poses[0], p.xyz);
        row[11] = rel.x;
        row[12] = rel.y;
        row[13] = rel.z;
    }
    Tensor pf = Tensor::from_data({P, 14}, std::move(feats));
    Tensor h = tanh_act(add(matmul(pf, store.get("enc3d.mlp.w1")), store.get("enc3d.mlp.b1")));
    h = add(matmul(h, store.get("enc3d.mlp.w2")), store.get("enc3d.mlp.b2"));

    const int d3 = cfg.d_3d;
    Tensor weights = softmax_lastdim(
        scale(matmul(store.get("enc3d.queries"), transpose(h)), 1.0 / std::sqrt(d3)));
    Tensor pooled = matmul(weights, h);  // K x d3

    // pose summary: mean position + mean heading (cos, sin), repeated per token
    Vec3 mean_pos{0, 0, 0};
    double mc = 0, ms = 0;
    for (const CameraPose& pose : poses) {
        mean_pos = mean_pos + pose.position;
        mc += std::cos(pose.yaw);
        ms += std::sin(pose.yaw);
    }
    const double n = static_cast<double>(poses.size());
    std::vector<double> summary(static_cast<size_t>(cfg.pool_tokens) * 5);
    for (int i = 0; i < cfg.pool_tokens; ++i) {
        double* row = summary.data() + static_cast<size_t>(i) * 5;
        row[0] = mean_pos.x / n;
        row[1] = mean_pos.y / n;
        row[2] = mean_pos.z / n;
        row[3] = mc / n;
        row[4] = ms / n;
    }
    Tensor pose_feat = Tensor::from_data({cfg.pool_tokens, 5}, std::move(summary));
    Tensor cat = concat_cols({pooled, pose_feat});
    return add(matmul(cat, store.get("enc3d.proj.w")), store.get("enc3d.proj.b"));
}

}  // namespace geode
