// Copyright (c) 2026 geode-lab authors
// SPDX-License-Identifier: Apache-2.0

#include "train/trainer.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include "core/checkpoint.hpp"
#include "core/error.hpp"
#include "core/rng.hpp"

namespace geode {

namespace fs = std::filesystem;
using nlohmann::json;

Arm arm_from_string(const std::string& s) {
    if (s == "sft_only") return Arm::SftOnly;
    if (s == "sft_drh") return Arm::SftDrh;
    if (s == "sft_drm") return Arm::SftDrm;
    if (s == "full") return Arm::Full;
    throw ConfigError("unknown training arm: " + s);
}

const char* arm_name(Arm arm) {
    switch (arm) {
        case Arm::SftOnly: return "sft_only";
        case Arm::SftDrh: return "sft_drh";
        case Arm::SftDrm: return "sft_drm";
        case Arm::Full: return "full";
    }
    throw ContractError("invalid arm value");
}

bool arm_uses_drm(Arm arm) { return arm == Arm::SftDrm || arm == Arm::Full; }
bool arm_uses_drh(Arm arm) { return arm == Arm::SftDrh || arm == Arm::Full; }

ModelConfigs model_configs(const json& cfg, const Vocab& vocab) {
    const json& m = cfg.at("model");
    ModelConfigs mc;
    mc.lm.layers = m.at("layers");
    mc.lm.heads = m.at("heads");
    mc.lm.d_model = m.at("d_model");
    mc.lm.context = m.at("context");
    mc.lm.vocab = vocab.size();
    mc.enc.d_model = m.at("d_model");
    mc.enc.d_3d = m.at("d_3d");
    mc.enc.pool_tokens = m.at("pool_tokens");
    mc.enc.patch = m.at("patch");
    mc.enc.grid = cfg.at("data").at("grid");
    mc.enc.max_frames = cfg.at("data").at("n_frames");
    mc.enc.max_objects = cfg.at("data").at("max_objects");
    mc.drm.d_model = m.at("d_model");
    mc.drm.d_3d = m.at("d_3d");
    mc.drm.m_tokens = m.at("m_tokens");
    mc.drm.vocab = vocab.size();
    mc.drh.d_model = m.at("d_model");
    mc.drh.hidden = m.at("drh_hidden");
    return mc;
}

namespace {

SceneConfig scene_config(const json& d) {
    SceneConfig sc;
    sc.min_room = d.at("min_room");
    sc.max_room = d.at("max_room");
    sc.min_room_h = d.at("min_room_h");
    sc.max_room_h = d.at("max_room_h");
    sc.min_objects = d.at("min_objects");
    sc.max_objects = d.at("max_objects");
    sc.grid = d.at("grid");
    sc.fov_deg = d.at("fov_deg");
    sc.min_points = d.at("min_points");
    sc.max_points = d.at("max_points");
    sc.max_footprint_overlap = d.at("max_footprint_overlap");
    return sc;
}

void write_snapshot(const json& cfg, const std::string& beside) {
    const fs::path dir = fs::path(beside).has_extension()
                             ? fs::path(beside).parent_path()
                             : fs::path(beside);
    if (!dir.empty()) fs::create_directories(dir);
    std::ofstream os(dir / "config_resolved.json");
    os << cfg.dump(2) << "\n";
}

struct MetricsLog {
    std::ofstream os;
    explicit MetricsLog(const std::string& path) {
        const fs::path p(path);
        if (p.has_parent_path()) fs::create_directories(p.parent_path());
        os.open(path, std::ios::trunc);
        if (!os) throw IoError("cannot write metrics file: " + path);
    }
    // Deterministic fields only, so reruns are byte-identical.
    void row(int step, const std::string& split, double loss, double l_ce, double l_drh) {
        json j{{"step", step}, {"split", split}, {"loss", loss}, {"l_ce", l_ce},
               {"l_drh", l_drh}};
        os << j.dump() << "\n";
    }
};

std::vector<Frame> first_frames(const SceneAssets& assets, int n) {
    if (n <= 0 || n > static_cast<int>(assets.frames.size()))
        throw ConfigError("n_frames outside the stored frame count");
    return std::vector<Frame>(assets.frames.begin(), assets.frames.begin() + n);
}

std::vector<CameraPose> frame_poses(const std::vector<Frame>& frames) {
    std::vector<CameraPose> poses;
    poses.reserve(frames.size());
    for (const Frame& f : frames) poses.push_back(f.pose);
    return poses;
}

// sequences shuffled per epoch with a deterministic engine
std::vector<size_t> epoch_order(size_t n, uint64_t seed, int epoch) {
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::mt19937_64 eng(seed * 1000003ull + static_cast<uint64_t>(epoch));
    std::shuffle(order.begin(), order.end(), eng);
    return order;
}

}  // namespace

Tensor build_prefix(const ParamStore& store, const ModelConfigs& mc, const SceneAssets& assets,
                    int n_frames, bool use_drm) {
    std::vector<Frame> frames = first_frames(assets, n_frames);
    Tensor f2d = encode_2d(store, mc.enc, frames);
    if (use_drm) {
        // The fusion step already folds the 2D features in (they are the
        // residual query stream), so the rationale tokens alone carry both
        // modalities and occupy exactly the prefix positions the LM read
        // them at during pretraining and stage-1 reconstruction.
        Tensor f3d = encode_3d(store, mc.enc, assets.cloud, frame_poses(frames));
        return drm_forward(store, mc.drm, f2d, f3d);
    }
    const int ppf = (mc.enc.grid / mc.enc.patch) * (mc.enc.grid / mc.enc.patch);
    // mean-pool each frame's patch tokens with one constant matrix
    std::vector<double> pool(static_cast<size_t>(n_frames) * f2d.rows(), 0.0);
    for (int f = 0; f < n_frames; ++f)
        for (int p = 0; p < ppf; ++p)
            pool[static_cast<size_t>(f) * f2d.rows() + f * ppf + p] = 1.0 / ppf;
    Tensor pooled = matmul(Tensor::from_data({n_frames, f2d.rows()}, std::move(pool)), f2d);
    return add(matmul(pooled, store.get("proj2d.w")), store.get("proj2d.b"));
}

std::vector<int> answer_ids(const QASample& qa, const Vocab& vocab, bool drh_mode) {
    if (drh_mode) {
        switch (head_for_task(qa.task)) {
            case HeadKind::Scalar: return {vocab.reg()};
            case HeadKind::Box: return {vocab.bbox()};
            case HeadKind::None: break;
        }
    }
    return vocab.tokenize(qa.answer_text);
}

Tensor stage2_sample_loss(const ParamStore& store, const ModelConfigs& mc, const Vocab& vocab,
                          const QASample& qa, const SceneAssets& assets, int n_frames, Arm arm,
                          const NormStats& norm, double* ce_out, double* drh_out) {
    Tensor prefix = build_prefix(store, mc, assets, n_frames, arm_uses_drm(arm));
    const int M = prefix.rows();
    const std::vector<int> q_ids = vocab.tokenize(qa.question);
    const std::vector<int> r_ids = vocab.tokenize(qa.rationale);
    const std::vector<int> a_ids = answer_ids(qa, vocab, arm_uses_drh(arm));

    // rationale-style SFT: the model is supervised to produce the chain of
    // intermediate steps before the answer, so at inference it can copy
    // scene digits from the prefix while "thinking aloud"
    std::vector<int> ids;
    ids.push_back(vocab.bos());
    ids.insert(ids.end(), q_ids.begin(), q_ids.end());
    ids.insert(ids.end(), r_ids.begin(), r_ids.end());
    ids.insert(ids.end(), a_ids.begin(), a_ids.end());
    const int L = static_cast<int>(ids.size());
    const int q_len = static_cast<int>(q_ids.size());
    const int r_len = static_cast<int>(r_ids.size());
    if (M + L > mc.lm.context)
        throw ContractError("sample does not fit the LM context window");

    LMOutput out = lm_forward(store, mc.lm, prefix, ids);
    // CE over the answer span: position p predicts ids[p+1] (<eos> at the
    // end); answers start at ids index 1 + q_len
    std::vector<int> targets(static_cast<size_t>(M) + L, 0);
    std::vector<bool> mask(targets.size(), false);
    for (int p = 0; p < L; ++p) {
        targets[M + p] = p + 1 < L ? ids[p + 1] : vocab.eos();
        mask[M + p] = p >= q_len;
    }
    Tensor ce = cross_entropy(out.logits, targets, mask);

    std::vector<Tensor> preds, reg_targets;
    if (arm_uses_drh(arm) && head_for_task(qa.task) != HeadKind::None) {
        const int control_pos = M + 1 + q_len + r_len;  // the control token row
        Tensor hidden_row = slice_rows(out.hidden, control_pos, control_pos + 1);
        preds.push_back(drh_regress(store, mc.drh, hidden_row, qa.task));
        if (head_for_task(qa.task) == HeadKind::Box) {
            if (!qa.target_box) throw ContractError("locate sample without a box target");
            std::vector<double> b(qa.target_box->begin(), qa.target_box->end());
            reg_targets.push_back(Tensor::from_data({1, 7}, normalize_box(b, norm)));
        } else {
            if (!qa.target_scalar) throw ContractError("scalar sample without a target");
            reg_targets.push_back(Tensor::from_data(
                {1, 1}, {normalize_scalar(*qa.target_scalar, qa.task, norm)}));
        }
    }
    Tensor total = drh_mixed_loss(mc.drh, ce, preds, reg_targets);
    if (ce_out) *ce_out = ce.item();
    if (drh_out) *drh_out = total.item() - ce.item();
    return total;
}

void cmd_gen_data(const json& cfg) {
    const json& d = cfg.at("data");
    DataGenConfig gc;
    gc.seed = d.at("seed").get<uint64_t>();
    gc.scenes = d.at("scenes");
    gc.samples_per_scene = d.at("samples_per_scene");
    gc.n_frames = d.at("n_frames");
    gc.scene = scene_config(d);
    Dataset ds = generate_dataset(gc);
    const std::string out = d.at("out_dir");
    emit_dataset(ds, out);
    write_snapshot(cfg, out);
}

void cmd_pretrain_lm(const json& cfg) {
    const json& p = cfg.at("pretrain");
    const int want = p.at("sequences");
    if (want < 10000)
        throw ConfigError("pretrain.sequences must be at least 10000 for a usable LM");

    Vocab vocab;
    ModelConfigs mc = model_configs(cfg, vocab);
    const SceneConfig sc = scene_config(cfg.at("data"));
    const uint64_t corpus_seed = p.at("corpus_seed").get<uint64_t>();

    // text corpus: every question, rationale and answer line the
    // generator can produce, over fresh scene seeds
    std::vector<std::vector<int>> corpus;
    uint64_t seed = corpus_seed;
    while (static_cast<int>(corpus.size()) < want) {
        Scene s;
        try {
            s = generate_scene(seed, sc);
        } catch (const NumericError&) {
            ++seed;
            continue;
        }
        std::vector<Frame> frames = render_frames(s, seed, 4, sc);
        for (int t = 0; t < 8 && static_cast<int>(corpus.size()) < want; ++t) {
            try {
                QASample qa = make_qa(s, frames, static_cast<TaskKind>(t), seed * 131 + t);
                corpus.push_back(vocab.tokenize(qa.question));
                corpus.push_back(vocab.tokenize(qa.rationale));
                if (!qa.answer_text.empty()) corpus.push_back(vocab.tokenize(qa.answer_text));
            } catch (const ContractError&) {
            }
        }
        ++seed;
    }
    corpus.resize(want);

    ParamStore store;
    Rng init_rng(cfg.at("seed").get<uint64_t>());
    init_lm_params(store, mc.lm, vocab, init_rng);

    const int epochs = p.at("epochs");
    const int batch = p.at("batch");
    OptimConfig oc;
    oc.lr = cfg.at("optim").at("lr");
    oc.weight_decay = cfg.at("optim").at("weight_decay");
    oc.clip = cfg.at("optim").at("clip");
    oc.warmup_steps = cfg.at("optim").at("warmup_steps");
    oc.total_steps = std::max(1, epochs * ((want + batch - 1) / batch));
    AdamW opt(store, oc);

    MetricsLog log(p.at("metrics"));
    std::set<int> number_char_ids;
    for (const char c : std::string("0123456789.-"))
        number_char_ids.insert(vocab.tokenize(std::string(1, c)).at(0));
    std::set<int> key_ids;
    for (int c = 0; c < kNumCategories; ++c)
        key_ids.insert(vocab.tokenize(category_name(c)).at(0));
    key_ids.insert(vocab.tokenize("room").at(0));
    int step = 0;
    for (int epoch = 0; epoch < epochs; ++epoch) {
        auto order = epoch_order(corpus.size(), cfg.at("seed").get<uint64_t>(), epoch);
        for (size_t i = 0; i < order.size(); i += batch) {
            Tensor batch_loss;
            int count = 0;
            for (size_t j = i; j < std::min(order.size(), i + batch); ++j) {
                // Every sequence carries an M-slot prefix so the frozen copy
                // later reads DRM output as in-distribution input. Slots hold
                // keyed blocks parsed from the sequence itself — a category
                // (or "room") token followed by its number characters — in
                // shuffled block order with per-block dropout, teaching a
                // content-addressed copy circuit: bind the key word in the
                // text to its block and read the digits off the prefix.
                // Unused slots are padded with the vocabulary-mean embedding,
                // which is exactly what an untrained emit head produces.
                Rng prefix_rng(corpus_seed ^
                               (static_cast<uint64_t>(epoch) * 1000003ull + order[j]));
                const std::vector<int>& seq = corpus[order[j]];
                const int m_slots = mc.drm.m_tokens;
                std::vector<std::vector<int>> blocks;
                for (size_t t = 0; t < seq.size(); ++t) {
                    if (key_ids.count(seq[t])) {
                        blocks.push_back({seq[t]});
                    } else if (!blocks.empty() && number_char_ids.count(seq[t])) {
                        blocks.back().push_back(seq[t]);
                    }
                }
                std::vector<std::vector<int>> kept;
                for (auto& b : blocks)
                    if (b.size() > 1 && prefix_rng.uniform_int(0, 4) != 0)
                        kept.push_back(std::move(b));
                for (int t = static_cast<int>(kept.size()) - 1; t > 0; --t)
                    std::swap(kept[t], kept[prefix_rng.uniform_int(0, t)]);
                std::vector<int> picked;
                for (const auto& b : kept)
                    for (int id : b)
                        if (static_cast<int>(picked.size()) < m_slots) picked.push_back(id);
                const Tensor& emb = store.get("lm.tok_emb");
                const int n_pad = m_slots - static_cast<int>(picked.size());
                Tensor pads;
                if (n_pad > 0) {
                    NoGradGuard ng;
                    std::vector<double> mean_row(static_cast<size_t>(mc.lm.d_model), 0.0);
                    for (int r = 0; r < mc.lm.vocab; ++r)
                        for (int c = 0; c < mc.lm.d_model; ++c)
                            mean_row[c] += emb.data()[r * mc.lm.d_model + c];
                    for (double& v : mean_row) v /= mc.lm.vocab;
                    std::vector<double> vals;
                    for (int t = 0; t < n_pad; ++t)
                        vals.insert(vals.end(), mean_row.begin(), mean_row.end());
                    pads = Tensor::from_data({n_pad, mc.lm.d_model}, vals);
                }
                Tensor rows;
                if (picked.empty())
                    rows = pads;
                else if (n_pad == 0)
                    rows = embedding_lookup(emb, picked);
                else
                    rows = concat_rows({embedding_lookup(emb, picked), pads});
                const double jitter = 0.02 + 0.02 * prefix_rng.uniform_int(0, 2);
                Tensor prefix =
                    add(rows, Tensor::randn({m_slots, mc.lm.d_model}, prefix_rng, jitter));
                Tensor l = lm_sequence_loss(store, mc.lm, prefix, seq, vocab);
                batch_loss = batch_loss.defined() ? add(batch_loss, l) : l;
                ++count;
            }
            batch_loss = scale(batch_loss, 1.0 / count);
            backward(batch_loss);
            opt.step();
            if (step % 50 == 0)
                log.row(step, "train", batch_loss.item(), batch_loss.item(), 0.0);
            ++step;
        }
    }
    const std::string out = p.at("out");
    if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
    save_checkpoint(out, store);
    write_snapshot(cfg, out);
}

void cmd_train_stage1(const json& cfg) {
    const json& s1 = cfg.at("stage1");
    Vocab vocab;
    ModelConfigs mc = model_configs(cfg, vocab);
    Dataset ds = load_dataset(s1.at("data_dir"));
    const NormStats norm = NormStats::from_json(ds.manifest.at("norm"));
    (void)norm;

    ParamStore store;
    Rng init_rng(cfg.at("seed").get<uint64_t>() + 0x51ull);
    init_lm_params(store, mc.lm, vocab, init_rng);
    init_encoder_params(store, mc.enc, init_rng);
    init_drm_params(store, mc.drm, init_rng);
    load_checkpoint(s1.at("lm_checkpoint"), store);
    store.apply_freeze_mask({"drm.", "enc2d.", "enc3d."});
    const uint64_t lm_hash_pre = hash_namespace(store, "lm.");

    const int n_frames = s1.at("n_frames");
    const int epochs = s1.at("epochs");
    const int batch = s1.at("batch");
    OptimConfig oc;
    oc.lr = cfg.at("optim").at("lr");
    oc.weight_decay = cfg.at("optim").at("weight_decay");
    oc.clip = cfg.at("optim").at("clip");
    oc.warmup_steps = cfg.at("optim").at("warmup_steps");
    const int n = static_cast<int>(ds.samples.size());
    if (n == 0) throw ConfigError("stage-1 dataset is empty");
    oc.total_steps = std::max(1, epochs * ((n + batch - 1) / batch));
    AdamW opt(store, oc);

    MetricsLog log(s1.at("metrics"));
    int step = 0;
    for (int epoch = 0; epoch < epochs; ++epoch) {
        auto order = epoch_order(ds.samples.size(), cfg.at("seed").get<uint64_t>(), epoch);
        double epoch_loss = 0.0;
        int epoch_batches = 0;
        for (size_t i = 0; i < order.size(); i += batch) {
            Tensor batch_loss;
            int count = 0;
            for (size_t j = i; j < std::min(order.size(), i + batch); ++j) {
                const QASample& qa = ds.samples[order[j]];
                const SceneAssets& assets = ds.assets_for(qa);
                std::vector<Frame> frames = first_frames(assets, n_frames);
                Tensor f2d = encode_2d(store, mc.enc, frames);
                Tensor f3d = encode_3d(store, mc.enc, assets.cloud, frame_poses(frames));
                Tensor e_spatio = drm_forward(store, mc.drm, f2d, f3d);
                Tensor l = drm_stage1_loss(store, mc.lm, e_spatio,
                                           vocab.tokenize(qa.rationale), vocab);
                batch_loss = batch_loss.defined() ? add(batch_loss, l) : l;
                ++count;
            }
            batch_loss = scale(batch_loss, 1.0 / count);
            backward(batch_loss);
            opt.step();
            epoch_loss += batch_loss.item();
            ++epoch_batches;
            ++step;
        }
        log.row(step, "epoch", epoch_loss / std::max(1, epoch_batches),
                epoch_loss / std::max(1, epoch_batches), 0.0);
    }

    if (hash_namespace(store, "lm.") != lm_hash_pre)
        throw NumericError("frozen LM parameters changed during stage 1");
    const std::string out = s1.at("out");
    if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
    save_checkpoint(out, store);
    write_snapshot(cfg, out);
}

void cmd_train_stage2(const json& cfg) {
    const json& s2 = cfg.at("stage2");
    Vocab vocab;
    ModelConfigs mc = model_configs(cfg, vocab);
    mc.drh.lambda = s2.at("lambda");
    const Arm arm = arm_from_string(s2.at("arm"));
    Dataset ds = load_dataset(s2.at("data_dir"));
    const NormStats norm = NormStats::from_json(ds.manifest.at("norm"));

    ParamStore store;
    Rng init_rng(cfg.at("seed").get<uint64_t>() + 0x52ull);
    init_lm_params(store, mc.lm, vocab, init_rng);
    init_encoder_params(store, mc.enc, init_rng);
    init_drm_params(store, mc.drm, init_rng);
    init_drh_params(store, mc.drh, init_rng);
    store.create("proj2d.w", Tensor::randn({mc.lm.d_model, mc.lm.d_model}, init_rng, 0.08));
    store.create("proj2d.b", Tensor::zeros({1, mc.lm.d_model}));
    if (arm_uses_drm(arm)) {
        load_checkpoint(s2.at("stage1_checkpoint"), store);  // lm.* + enc* + drm.*
    } else {
        load_checkpoint(s2.at("lm_checkpoint"), store);
    }
    store.apply_freeze_mask({"lm.", "proj2d.", "drh."});
    const uint64_t drm_hash_pre = hash_namespace(store, "drm.");
    const uint64_t enc3d_hash_pre = hash_namespace(store, "enc3d.");

    const int n_frames = s2.at("n_frames");
    const int epochs = s2.at("epochs");
    const int batch = s2.at("batch");
    OptimConfig oc;
    oc.lr = cfg.at("optim").at("lr");
    oc.weight_decay = cfg.at("optim").at("weight_decay");
    oc.clip = cfg.at("optim").at("clip");
    oc.warmup_steps = cfg.at("optim").at("warmup_steps");
    const int n = static_cast<int>(ds.samples.size());
    if (n == 0) throw ConfigError("stage-2 dataset is empty");
    oc.total_steps = std::max(1, epochs * ((n + batch - 1) / batch));
    AdamW opt(store, oc);

    MetricsLog log(s2.at("metrics"));
    int step = 0;
    for (int epoch = 0; epoch < epochs; ++epoch) {
        auto order = epoch_order(ds.samples.size(), cfg.at("seed").get<uint64_t>(), epoch);
        double epoch_loss = 0.0, epoch_ce = 0.0, epoch_drh = 0.0;
        int epoch_batches = 0;
        for (size_t i = 0; i < order.size(); i += batch) {
            Tensor batch_loss;
            int count = 0;
            double ce_sum = 0.0, drh_sum = 0.0;
            for (size_t j = i; j < std::min(order.size(), i + batch); ++j) {
                const QASample& qa = ds.samples[order[j]];
                double ce = 0.0, drh = 0.0;
                Tensor l = stage2_sample_loss(store, mc, vocab, qa, ds.assets_for(qa),
                                              n_frames, arm, norm, &ce, &drh);
                ce_sum += ce;
                drh_sum += drh;
                batch_loss = batch_loss.defined() ? add(batch_loss, l) : l;
                ++count;
            }
            batch_loss = scale(batch_loss, 1.0 / count);
            backward(batch_loss);
            opt.step();
            epoch_loss += batch_loss.item();
            epoch_ce += ce_sum / count;
            epoch_drh += drh_sum / count;
            ++epoch_batches;
            ++step;
        }
        const double nb = std::max(1, epoch_batches);
        log.row(step, "epoch", epoch_loss / nb, epoch_ce / nb, epoch_drh / nb);
    }

    if (hash_namespace(store, "drm.") != drm_hash_pre ||
        hash_namespace(store, "enc3d.") != enc3d_hash_pre)
        throw NumericError("frozen DRM parameters changed during stage 2");
    const std::string out = s2.at("out");
    if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
    save_checkpoint(out, store);
    write_snapshot(cfg, out);
}

}  // namespace geode
