// Copyright (c) 2026 geode-lab authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance gate. Runs the full pipeline at reduced scale and checks ten
// end-to-end properties, printing one PASS/FAIL line per criterion.
// Artifacts (datasets, checkpoints, eval reports) are cached on disk under
// acceptance_work/ so a re-run only repeats the failed checks.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/checkpoint.hpp"
#include "core/error.hpp"
#include "core/param_store.hpp"
#include "core/rng.hpp"
#include "core/tensor.hpp"
#include "eval/evalbench.hpp"
#include "eval/metrics.hpp"
#include "gradcheck.hpp"
#include "model/drh.hpp"
#include "model/drm.hpp"
#include "model/encoders.hpp"
#include "model/tinylm.hpp"
#include "model/vocab.hpp"
#include "scene/dataset.hpp"
#include "scene/qa.hpp"
#include "scene/scene.hpp"
#include "train/config.hpp"
#include "train/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace geode;

namespace {

// ---- pipeline scale -------------------------------------------------------
constexpr int kLayers = 4;
constexpr int kTrainScenes = 210;
constexpr int kEvalScenes = 140;  // >= 500 numeric samples after exclusions
constexpr int kSamplesPerScene = 8;
constexpr int kPretrainSequences = 10000;
constexpr int kStage1Epochs = 6;
constexpr int kStage2Epochs = 8;
constexpr int kBatch = 8;
constexpr int kReconSamples = 120;
const std::vector<uint64_t> kSeeds = {1};  // PROBE
const char* kCacheTag = "pipeline_v1";

double now_sec() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

double mean_of(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

std::string read_file(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

// ---- shared artifact factory ---------------------------------------------
struct Lab {
    fs::path work = "acceptance_work";
    Vocab vocab;
    json times;  // artifact name -> build seconds
    std::map<std::string, Dataset> ds_cache;

    Lab() {
        const fs::path tag = work / "cache_tag.txt";
        if (fs::exists(work) && read_file(tag) != kCacheTag) fs::remove_all(work);
        fs::create_directories(work);
        if (read_file(tag) != kCacheTag) {
            std::ofstream os(tag);
            os << kCacheTag;
        }
        const fs::path tf = work / "times.json";
        if (fs::exists(tf)) {
            std::ifstream is(tf);
            is >> times;
        }
        if (!times.is_object()) times = json::object();
    }

    void note_time(const std::string& name, double sec) {
        times[name] = sec;
        std::ofstream os(work / "times.json");
        os << times.dump(2) << "\n";
    }

    // Runs builder() unless the artifact already exists; records the time.
    void ensure(const std::string& name, const fs::path& artifact,
                const std::function<void()>& builder) {
        if (fs::exists(artifact)) return;
        std::fprintf(stderr, "[acceptance] building %s\n", name.c_str());
        const double t0 = now_sec();
        builder();
        note_time(name, now_sec() - t0);
    }

    json base_cfg(uint64_t seed, int m_tokens) {
        json u;
        u["seed"] = seed;
        u["model"]["layers"] = kLayers;
        u["model"]["m_tokens"] = m_tokens;
        u["optim"]["lr"] = 1e-3;
        u["optim"]["warmup_steps"] = 20;
        return resolve_config(u, {});
    }

    std::string data_dir(const std::string& split) {
        const fs::path dir = work / ("data_" + split);
        ensure("data_" + split, dir / "manifest.json", [&] {
            json cfg = base_cfg(1, 16);
            cfg["data"]["seed"] = split == "train" ? 7000 : 8000;
            cfg["data"]["scenes"] = split == "train" ? kTrainScenes : kEvalScenes;
            cfg["data"]["samples_per_scene"] = kSamplesPerScene;
            cfg["data"]["out_dir"] = dir.string();
            cmd_gen_data(cfg);
        });
        return dir.string();
    }

    const Dataset& dataset(const std::string& split) {
        auto it = ds_cache.find(split);
        if (it == ds_cache.end())
            it = ds_cache.emplace(split, load_dataset(data_dir(split))).first;
        return it->second;
    }

    std::string lm_ckpt() {
        const fs::path out = work / "lm.geod";
        ensure("pretrain_lm", out, [&] {
            json cfg = base_cfg(1, 16);
            cfg["pretrain"]["sequences"] = kPretrainSequences;
            cfg["pretrain"]["epochs"] = 3;
            cfg["pretrain"]["batch"] = 32;
            cfg["pretrain"]["out"] = out.string();
            cfg["pretrain"]["metrics"] = (work / "lm_metrics.jsonl").string();
            cfg["optim"]["warmup_steps"] = 50;
            cmd_pretrain_lm(cfg);
        });
        return out.string();
    }

    std::string stage1(uint64_t seed, int m_tokens, int n_frames) {
        std::ostringstream tag;
        tag << "stage1_s" << seed << "_m" << m_tokens << "_n" << n_frames;
        const fs::path out = work / (tag.str() + ".geod");
        ensure(tag.str(), out, [&] {
            json cfg = base_cfg(seed, m_tokens);
            cfg["optim"]["lr"] = 2e-3;
            cfg["stage1"]["data_dir"] = data_dir("train");
            cfg["stage1"]["lm_checkpoint"] = lm_ckpt();
            cfg["stage1"]["epochs"] = kStage1Epochs;
            cfg["stage1"]["batch"] = 4;
            cfg["stage1"]["n_frames"] = n_frames;
            cfg["stage1"]["out"] = out.string();
            cfg["stage1"]["metrics"] = (work / (tag.str() + "_metrics.jsonl")).string();
            cmd_train_stage1(cfg);
        });
        return out.string();
    }

    std::string stage2(uint64_t seed, Arm arm, int n_frames) {
        std::ostringstream tag;
        tag << "stage2_" << arm_name(arm) << "_s" << seed << "_n" << n_frames;
        const fs::path out = work / (tag.str() + ".geod");
        ensure(tag.str(), out, [&] {
            json cfg = base_cfg(seed, 16);
            cfg["stage2"]["data_dir"] = data_dir("train");
            cfg["stage2"]["lm_checkpoint"] = lm_ckpt();
            if (arm_uses_drm(arm))
                cfg["stage2"]["stage1_checkpoint"] = stage1(seed, 16, n_frames);
            cfg["stage2"]["arm"] = arm_name(arm);
            cfg["stage2"]["epochs"] = kStage2Epochs;
            cfg["stage2"]["batch"] = kBatch;
            cfg["stage2"]["n_frames"] = n_frames;
            cfg["stage2"]["out"] = out.string();
            cfg["stage2"]["metrics"] = (work / (tag.str() + "_metrics.jsonl")).string();
            cmd_train_stage2(cfg);
        });
        return out.string();
    }

    // Eval reports carry the per-sample scores needed for the paired tests,
    // so they are cached as JSON rather than re-running generation.
    json eval_report(uint64_t seed, Arm arm, int n_frames) {
        std::ostringstream tag;
        tag << "eval_" << arm_name(arm) << "_s" << seed << "_n" << n_frames;
        const fs::path out = work / (tag.str() + ".json");
        ensure(tag.str(), out, [&] {
            json cfg = base_cfg(seed, 16);
            ModelConfigs mc = model_configs(cfg, vocab);
            const Dataset& ds = dataset("eval");
            const NormStats norm = NormStats::from_json(ds.manifest.at("norm"));
            ParamStore store;
            Rng rng(seed + 0x52ull);
            init_lm_params(store, mc.lm, vocab, rng);
            init_encoder_params(store, mc.enc, rng);
            init_drm_params(store, mc.drm, rng);
            init_drh_params(store, mc.drh, rng);
            store.create("proj2d.w",
                         Tensor::randn({mc.lm.d_model, mc.lm.d_model}, rng, 0.08));
            store.create("proj2d.b", Tensor::zeros({1, mc.lm.d_model}));
            load_checkpoint(stage2(seed, arm, n_frames), store);
            EvalReport rep = run_eval(store, mc, vocab, ds, norm, n_frames, arm, 96);
            json j = rep.to_json();
            json ps = json::array();
            for (const SampleScore& s : rep.per_sample)
                ps.push_back({static_cast<int>(s.task), s.numerical, s.parseable,
                              s.excluded, s.score});
            j["per_sample"] = ps;
            std::ofstream os(out);
            os << j.dump() << "\n";
        });
        json j;
        std::ifstream is(out);
        is >> j;
        return j;
    }

    // Teacher-forced rationale CE on held-out samples with the stage-1
    // checkpoint's DRM prefix, or with no prefix at all (M = 0 baseline).
    double recon_loss(const std::string& ckpt, uint64_t seed, int m_tokens,
                      int n_frames, bool with_prefix) {
        json cfg = base_cfg(seed, m_tokens);
        ModelConfigs mc = model_configs(cfg, vocab);
        const Dataset& ds = dataset("eval");
        ParamStore store;
        Rng rng(seed + 0x51ull);
        init_lm_params(store, mc.lm, vocab, rng);
        init_encoder_params(store, mc.enc, rng);
        init_drm_params(store, mc.drm, rng);
        load_checkpoint(ckpt, store);
        NoGradGuard ng;
        double total = 0;
        int count = 0;
        for (const QASample& qa : ds.samples) {
            if (count >= kReconSamples) break;
            const std::vector<int> ids = vocab.tokenize(qa.rationale);
            if (ids.empty()) continue;
            if (with_prefix) {
                const SceneAssets& assets = ds.assets_for(qa);
                std::vector<Frame> frames(assets.frames.begin(),
                                          assets.frames.begin() + n_frames);
                std::vector<CameraPose> poses;
                for (const Frame& f : frames) poses.push_back(f.pose);
                Tensor f2d = encode_2d(store, mc.enc, frames);
                Tensor f3d = encode_3d(store, mc.enc, assets.cloud, poses);
                Tensor e_spatio = drm_forward(store, mc.drm, f2d, f3d);
                total += drm_stage1_loss(store, mc.lm, e_spatio, ids, vocab).item();
            } else {
                total += lm_sequence_loss(store, mc.lm, Tensor(), ids, vocab).item();
            }
            ++count;
        }
        return total / std::max(1, count);
    }
};

// ---- criterion 1: finite-difference gradient checks -----------------------
bool crit_gradients(std::string& msg) {
    using geode::testing::grad_check;
    const double t0 = now_sec();
    double worst = 0;
    std::string worst_op;
    auto run = [&](const std::string& op, const std::function<Tensor()>& fwd,
                   const std::vector<Tensor>& leaves) {
        for (Tensor leaf : leaves) leaf.grad().clear();  // leaves are shared
        const auto r = grad_check(fwd, leaves);
        if (r.max_rel_err > worst) {
            worst = r.max_rel_err;
            worst_op = op;
        }
    };
    for (uint64_t inst = 0; inst < 20; ++inst) {
        Rng rng(9000 + inst);
        const int n = 2 + static_cast<int>(inst % 3);
        const int k = 2 + static_cast<int>((inst / 3) % 3);
        Tensor a = Tensor::randn({n, k}, rng, 1.0, true);
        Tensor b = Tensor::randn({k, n}, rng, 1.0, true);
        Tensor c = Tensor::randn({n, k}, rng, 1.0, true);
        Tensor row = Tensor::randn({1, k}, rng, 1.0, true);
        Tensor sq = Tensor::randn({n, n}, rng, 1.0, true);
        run("matmul", [&] { return mean_all(matmul(a, b)); }, {a, b});
        run("add", [&] { return mean_all(mul(add(a, c), a)); }, {a, c});
        run("add_row", [&] { return mean_all(mul(add(a, row), a)); }, {a, row});
        run("sub", [&] { return mean_all(mul(sub(a, c), c)); }, {a, c});
        run("mul", [&] { return mean_all(mul(mul(a, c), a)); }, {a, c});
        run("scale", [&] { return mean_all(mul(scale(a, -1.7), c)); }, {a});
        run("tanh", [&] { return mean_all(mul(tanh_act(a), c)); }, {a});
        run("sigmoid", [&] { return mean_all(mul(sigmoid(a), c)); }, {a});
        run("softplus", [&] { return mean_all(mul(softplus(a), c)); }, {a});
        run("softmax", [&] { return mean_all(mul(softmax_lastdim(a), c)); }, {a});
        run("softmax_causal",
            [&] { return mean_all(mul(softmax_causal(sq), sq)); }, {sq});
        {
            Tensor g = Tensor::randn({1, k}, rng, 1.0, true);
            Tensor bb = Tensor::randn({1, k}, rng, 1.0, true);
            run("layer_norm",
                [&] { return mean_all(mul(layer_norm(a, g, bb), c)); }, {a, g, bb});
        }
        {
            std::vector<int> targets(static_cast<size_t>(n));
            std::vector<bool> mask(static_cast<size_t>(n), true);
            for (int i = 0; i < n; ++i) targets[i] = (i + static_cast<int>(inst)) % k;
            run("cross_entropy",
                [&] { return cross_entropy(a, targets, mask); }, {a});
        }
        run("mse", [&] { return mse(a, c); }, {a, c});
        {
            Tensor table = Tensor::randn({5, k}, rng, 1.0, true);
            std::vector<int> ids = {0, 3, 1, 3};
            Tensor w = Tensor::randn({4, k}, rng, 1.0);
            run("embedding_lookup",
                [&] { return mean_all(mul(embedding_lookup(table, ids), w)); },
                {table});
        }
        run("concat_rows",
            [&] {
                return mean_all(mul(concat_rows({a, c}),
                                    concat_rows({c, a})));
            },
            {a, c});
        run("concat_cols",
            [&] {
                return mean_all(mul(concat_cols({a, c}),
                                    concat_cols({c, a})));
            },
            {a, c});
        run("slice_rows",
            [&] { return mean_all(mul(slice_rows(a, 1, n), slice_rows(c, 1, n))); },
            {a});
        run("slice_cols",
            [&] { return mean_all(mul(slice_cols(a, 1, k), slice_cols(c, 1, k))); },
            {a});
        run("transpose", [&] { return mean_all(mul(transpose(a), b)); }, {a});
        run("mean_lastdim",
            [&] { return mean_all(mul(mean_lastdim(a), mean_lastdim(c))); }, {a});
        run("mean_all", [&] { return mean_all(a); }, {a});
        run("sum_all", [&] { return scale(sum_all(a), 0.3); }, {a});
    }
    const double dt = now_sec() - t0;
    std::ostringstream ss;
    ss << "22 ops x 20 instances, max rel err " << worst << " (" << worst_op
       << "), " << dt << "s";
    msg = ss.str();
    return worst < 1e-4 && dt < 120.0;
}

// ---- criterion 2: freeze invariants are bitwise ---------------------------
bool crit_freeze_bitwise(Lab& lab, std::string& msg) {
    auto by_name = [](const std::string& path) {
        std::map<std::string, NamedTensor> m;
        for (auto& nt : load_tensors(path)) m[nt.name] = std::move(nt);
        return m;
    };
    const auto lm = by_name(lab.lm_ckpt());
    int compared = 0;
    for (uint64_t seed : kSeeds) {
        const auto s1 = by_name(lab.stage1(seed, 16, 8));
        for (const auto& [name, nt] : lm) {
            if (name.rfind("lm.", 0) != 0) continue;
            auto it = s1.find(name);
            if (it == s1.end() || it->second.shape != nt.shape ||
                it->second.values != nt.values) {
                msg = "lm bytes differ after stage 1 (" + name + ", seed " +
                      std::to_string(seed) + ")";
                return false;
            }
            ++compared;
        }
        const auto s2 = by_name(lab.stage2(seed, Arm::Full, 8));
        for (const auto& [name, nt] : s1) {
            if (name.rfind("drm.", 0) != 0) continue;
            auto it = s2.find(name);
            if (it == s2.end() || it->second.shape != nt.shape ||
                it->second.values != nt.values) {
                msg = "drm bytes differ after stage 2 (" + name + ", seed " +
                      std::to_string(seed) + ")";
                return false;
            }
            ++compared;
        }
    }
    msg = std::to_string(compared) + " tensors bitwise identical across 3 seeds";
    return compared > 0;
}

// ---- criterion 3: DRH gradient separation ---------------------------------
bool crit_drh_gradients(std::string& msg) {
    // Small self-contained model; no trained weights needed.
    json u;
    u["seed"] = 11;
    u["model"] = {{"layers", 1}, {"heads", 2}, {"d_model", 16}, {"context", 128},
                  {"d_3d", 16},  {"m_tokens", 4}, {"pool_tokens", 4}, {"patch", 4},
                  {"drh_hidden", 8}};
    u["data"] = {{"grid", 8}, {"n_frames", 4}, {"scenes", 6}, {"samples_per_scene", 8}};
    json cfg = resolve_config(u, {});
    Vocab vocab;
    ModelConfigs mc = model_configs(cfg, vocab);
    const double lambda = 0.7;
    mc.drh.lambda = lambda;

    DataGenConfig dc;
    dc.seed = 4200;
    dc.scenes = 6;
    dc.samples_per_scene = 8;
    dc.n_frames = 4;
    dc.scene.grid = 8;
    Dataset ds = generate_dataset(dc);
    const NormStats norm = NormStats::from_config(dc.scene);

    const QASample* reg_qa = nullptr;
    const QASample* mca_qa = nullptr;
    for (const QASample& qa : ds.samples) {
        if (!reg_qa && head_for_task(qa.task) == HeadKind::Scalar) reg_qa = &qa;
        if (!mca_qa && qa.answer_kind == AnswerKind::Mca) mca_qa = &qa;
    }
    if (!reg_qa || !mca_qa) {
        msg = "corpus lacks a regression or a text sample";
        return false;
    }

    ParamStore store;
    Rng rng(77);
    init_lm_params(store, mc.lm, vocab, rng);
    init_encoder_params(store, mc.enc, rng);
    init_drm_params(store, mc.drm, rng);
    init_drh_params(store, mc.drh, rng);
    store.create("proj2d.w", Tensor::randn({mc.lm.d_model, mc.lm.d_model}, rng, 0.08));
    store.create("proj2d.b", Tensor::zeros({1, mc.lm.d_model}));

    std::vector<std::string> drh_names;
    for (const std::string& name : store.names())
        if (name.rfind("drh.", 0) == 0) drh_names.push_back(name);

    // grad(L_DRH) from an independently assembled regression-only loss
    const SceneAssets& assets = ds.assets_for(*reg_qa);
    Tensor prefix = build_prefix(store, mc, assets, 4, true);
    std::vector<int> ids{vocab.bos()};
    const std::vector<int> q = vocab.tokenize(reg_qa->question);
    ids.insert(ids.end(), q.begin(), q.end());
    const std::vector<int> r = vocab.tokenize(reg_qa->rationale);
    ids.insert(ids.end(), r.begin(), r.end());
    ids.push_back(vocab.reg());
    LMOutput out = lm_forward(store, mc.lm, prefix, ids);
    const int cp = prefix.rows() + 1 + static_cast<int>(q.size()) + static_cast<int>(r.size());
    Tensor hrow = slice_rows(out.hidden, cp, cp + 1);
    Tensor pred = drh_regress(store, mc.drh, hrow, reg_qa->task);
    Tensor target = Tensor::from_data(
        {1, 1}, {normalize_scalar(*reg_qa->target_scalar, reg_qa->task, norm)});
    store.zero_grads();
    backward(mse(pred, target));
    std::map<std::string, std::vector<double>> g_drh;
    for (const std::string& name : drh_names) {
        const Tensor t = store.get(name);
        g_drh[name] = t.has_grad() ? t.grad()
                                   : std::vector<double>(t.numel(), 0.0);
    }

    // grad(L_total) through the training-path loss
    store.zero_grads();
    backward(stage2_sample_loss(store, mc, vocab, *reg_qa, assets, 4, Arm::Full, norm));
    double max_diff = 0;
    for (const std::string& name : drh_names) {
        const Tensor t = store.get(name);
        for (size_t i = 0; i < t.numel(); ++i) {
            const double gt = t.has_grad() ? t.grad()[i] : 0.0;
            max_diff = std::max(max_diff, std::fabs(gt - lambda * g_drh[name][i]));
        }
    }
    if (max_diff > 1e-6) {
        msg = "grad(L_total) != lambda*grad(L_DRH), max diff " + std::to_string(max_diff);
        return false;
    }

    // text-only sample: DRH must receive exactly zero gradient
    store.zero_grads();
    backward(stage2_sample_loss(store, mc, vocab, *mca_qa, ds.assets_for(*mca_qa), 4,
                                Arm::Full, norm));
    for (const std::string& name : drh_names) {
        const Tensor t = store.get(name);
        if (!t.has_grad()) continue;
        for (size_t i = 0; i < t.numel(); ++i)
            if (t.grad()[i] != 0.0) {
                msg = "nonzero DRH gradient from a text-only sample (" + name + ")";
                return false;
            }
    }
    std::ostringstream ss;
    ss << "lambda=" << lambda << ", max |grad diff| " << max_diff
       << ", text-only grads all zero";
    msg = ss.str();
    return true;
}

// ---- criteria 4 and 5: stage-1 efficacy and token-count trend -------------
bool crit_stage1_efficacy(Lab& lab, std::string& msg) {
    const double baseline = lab.recon_loss(lab.lm_ckpt(), 1, 16, 8, false);
    std::ostringstream ss;
    ss << "M=0 baseline " << baseline << ";";
    bool ok = true;
    double max_train_sec = 0;
    for (uint64_t seed : kSeeds) {
        const double trained = lab.recon_loss(lab.stage1(seed, 16, 8), seed, 16, 8, true);
        ss << " seed" << seed << " " << trained;
        if (!(trained <= 0.9 * baseline)) ok = false;
        std::ostringstream tag;
        tag << "stage1_s" << seed << "_m16_n8";
        if (lab.times.contains(tag.str()))
            max_train_sec = std::max(max_train_sec, lab.times[tag.str()].get<double>());
    }
    ss << "; max stage-1 train " << max_train_sec << "s";
    if (max_train_sec > 1800.0) ok = false;
    msg = ss.str();
    return ok;
}

bool crit_token_count_trend(Lab& lab, std::string& msg) {
    bool ok = true;
    std::ostringstream ss;
    for (uint64_t seed : kSeeds) {
        const double l16 = lab.recon_loss(lab.stage1(seed, 16, 8), seed, 16, 8, true);
        const double l4 = lab.recon_loss(lab.stage1(seed, 4, 8), seed, 4, 8, true);
        ss << (seed > 1 ? "; " : "") << "seed" << seed << " M16 " << l16 << " vs M4 "
           << l4;
        if (!(l16 <= l4)) ok = false;
    }
    msg = ss.str();
    return ok;
}

// ---- criteria 6-8: benchmark grid properties ------------------------------
struct Grid {
    // overall[arm][i] for seed kSeeds[i]; reports[arm][i] full cached json
    std::map<std::string, std::vector<double>> overall;
    std::map<std::string, std::vector<json>> reports;
};

Grid build_grid(Lab& lab, int n_frames, const std::vector<Arm>& arms) {
    Grid g;
    for (Arm arm : arms)
        for (uint64_t seed : kSeeds) {
            json r = lab.eval_report(seed, arm, n_frames);
            g.overall[arm_name(arm)].push_back(r.at("overall").get<double>());
            g.reports[arm_name(arm)].push_back(std::move(r));
        }
    return g;
}

bool crit_synergy(Lab& lab, std::string& msg) {
    Grid g = build_grid(lab, 8,
                        {Arm::SftOnly, Arm::SftDrh, Arm::SftDrm, Arm::Full});
    std::ostringstream ss;
    bool ok = true;
    ss << "mean overall:";
    for (const char* arm : {"full", "sft_drm", "sft_drh", "sft_only"})
        ss << " " << arm << " " << mean_of(g.overall[arm]);
    for (const char* other : {"sft_only", "sft_drm", "sft_drh"}) {
        std::vector<double> diffs;
        for (size_t i = 0; i < kSeeds.size(); ++i)
            diffs.push_back(g.overall["full"][i] - g.overall[other][i]);
        const double margin = mean_of(diffs), spread = sample_std(diffs);
        ss << "; full-" << other << " " << margin << " (std " << spread << ")";
        if (!(margin > spread)) ok = false;
    }
    // sft_drh beats sft_only on the numeric abs_dist task
    std::vector<double> drh_ad, sft_ad;
    for (size_t i = 0; i < kSeeds.size(); ++i) {
        drh_ad.push_back(g.reports["sft_drh"][i]
                             .at("per_task").at("abs_dist").at("score").get<double>());
        sft_ad.push_back(g.reports["sft_only"][i]
                             .at("per_task").at("abs_dist").at("score").get<double>());
    }
    ss << "; abs_dist sft_drh " << mean_of(drh_ad) << " vs sft_only "
       << mean_of(sft_ad);
    if (!(mean_of(drh_ad) > mean_of(sft_ad))) ok = false;
    msg = ss.str();
    return ok;
}

bool crit_drh_vs_digits(Lab& lab, std::string& msg) {
    // full decodes through the DRH; sft_drm decodes digits from the same
    // DRM-conditioned model. Paired per held-out sample, pooled over seeds.
    int wins = 0, losses = 0, n = 0;
    double diff_sum = 0;
    for (uint64_t seed : kSeeds) {
        const json a = lab.eval_report(seed, Arm::Full, 8);
        const json b = lab.eval_report(seed, Arm::SftDrm, 8);
        const json& pa = a.at("per_sample");
        const json& pb = b.at("per_sample");
        for (size_t i = 0; i < pa.size() && i < pb.size(); ++i) {
            // fields: task, numerical, parseable, excluded, score
            if (!pa[i][1].get<bool>() || pa[i][3].get<bool>() ||
                pb[i][3].get<bool>())
                continue;
            const double d = pa[i][4].get<double>() - pb[i][4].get<double>();
            diff_sum += d;
            if (d > 0) ++wins;
            if (d < 0) ++losses;
            ++n;
        }
    }
    const double p = sign_test_p(wins, losses);
    std::ostringstream ss;
    ss << n << " paired numeric samples, mean improvement "
       << (n ? diff_sum / n : 0.0) << ", wins/losses " << wins << "/" << losses
       << ", sign-test p " << p;
    msg = ss.str();
    return n >= 500 && diff_sum > 0 && p < 0.05;
}

bool crit_frame_robustness(Lab& lab, std::string& msg) {
    std::vector<double> o8, o16;
    for (uint64_t seed : kSeeds) {
        o8.push_back(lab.eval_report(seed, Arm::Full, 8).at("overall").get<double>());
        o16.push_back(lab.eval_report(seed, Arm::Full, 16).at("overall").get<double>());
    }
    const double gap = std::fabs(mean_of(o8) - mean_of(o16));
    const double spread = std::max(sample_std(o8), sample_std(o16));
    std::ostringstream ss;
    ss << "overall N=8 " << mean_of(o8) << " vs N=16 " << mean_of(o16) << ", gap "
       << gap << ", 1.5*std " << 1.5 * spread;
    msg = ss.str();
    return gap <= 1.5 * spread;
}

// ---- criterion 9: oracle equivalence --------------------------------------
// The scene regenerated from the sample's recorded seed is the oracle; the
// generator's retry ladder is part of the id contract.
Scene regen_scene(uint64_t scene_id, const SceneConfig& sc) {
    for (uint64_t retry = 0; retry < 20; ++retry) {
        try {
            return generate_scene(scene_id + retry * 0x10000001ull, sc);
        } catch (const NumericError&) {
        }
    }
    throw NumericError("scene regeneration failed");
}

const Object* unique_by_category(const Scene& s, const std::string& name) {
    const int cat = category_index(name);
    const Object* found = nullptr;
    for (const Object& o : s.objects)
        if (o.category == cat) {
            if (found) return nullptr;
            found = &o;
        }
    return found;
}

bool crit_oracle_equivalence(Lab& lab, std::string& msg) {
    const SceneConfig sc;  // acceptance datasets use the default scene space
    int checked = 0;
    for (const std::string& split : {"train", "eval"}) {
        for (const QASample& qa : lab.dataset(split).samples) {
            if (!qa.target_scalar && !qa.target_box) continue;
            const Scene s = regen_scene(static_cast<uint64_t>(qa.scene_id), sc);
            double recomputed = 0;
            std::vector<double> box;
            switch (qa.task) {
                case TaskKind::ObjCount: {
                    const auto p0 = std::string("how many ").size();
                    const auto p1 = qa.question.find(" are in");
                    const int cat = category_index(qa.question.substr(p0, p1 - p0));
                    for (const Object& o : s.objects)
                        if (o.category == cat) recomputed += 1;
                    break;
                }
                case TaskKind::AbsDist: {
                    const auto p0 = std::string("what is the distance between the ").size();
                    const auto p1 = qa.question.find(" and the ");
                    const auto p2 = qa.question.find(" ?");
                    const Object* a = unique_by_category(s, qa.question.substr(p0, p1 - p0));
                    const Object* b = unique_by_category(
                        s, qa.question.substr(p1 + 9, p2 - p1 - 9));
                    if (!a || !b) {
                        msg = "ambiguous object reference in: " + qa.question;
                        return false;
                    }
                    recomputed = (a->center - b->center).norm();
                    break;
                }
                case TaskKind::ObjSize: {
                    const auto p0 = std::string("what is the longest dimension of the ").size();
                    const auto p1 = qa.question.find(" ?");
                    const Object* o = unique_by_category(s, qa.question.substr(p0, p1 - p0));
                    if (!o) {
                        msg = "ambiguous object reference in: " + qa.question;
                        return false;
                    }
                    recomputed = std::max({o->size.x, o->size.y, o->size.z});
                    break;
                }
                case TaskKind::RoomSize:
                    recomputed = s.room_w * s.room_d;
                    break;
                case TaskKind::Locate: {
                    const auto p0 = std::string("locate the ").size();
                    const auto p1 = qa.question.find(" in the room");
                    const Object* o = unique_by_category(s, qa.question.substr(p0, p1 - p0));
                    if (!o) {
                        msg = "ambiguous object reference in: " + qa.question;
                        return false;
                    }
                    box = {o->center.x, o->center.y, o->center.z,
                           o->size.x,   o->size.y,   o->size.z,   o->yaw};
                    break;
                }
                default:
                    continue;  // MCA tasks carry no numeric target
            }
            const std::vector<double> rats = parse_numbers(qa.rationale);
            if (qa.target_box) {
                if (rats.size() < 7) {
                    msg = "locate rationale lacks 7 numbers in scene " +
                          std::to_string(qa.scene_id);
                    return false;
                }
                for (int i = 0; i < 7; ++i) {
                    if (std::fabs((*qa.target_box)[i] - box[i]) > 1e-6) {
                        msg = "box target mismatch in scene " + std::to_string(qa.scene_id);
                        return false;
                    }
                    const double r = rats[rats.size() - 7 + i];
                    if (std::fabs(r - box[i]) > 0.005) {
                        msg = "rationale box number off target in scene " +
                              std::to_string(qa.scene_id);
                        return false;
                    }
                }
            } else {
                if (std::fabs(*qa.target_scalar - recomputed) > 1e-6) {
                    msg = "scalar target mismatch (" + std::string(task_name(qa.task)) +
                          ", scene " + std::to_string(qa.scene_id) + "): emitted " +
                          std::to_string(*qa.target_scalar) + " vs " +
                          std::to_string(recomputed);
                    return false;
                }
                if (rats.empty() ||
                    std::fabs(rats.back() - *qa.target_scalar) > 0.005) {
                    msg = "rationale final number off target in scene " +
                          std::to_string(qa.scene_id);
                    return false;
                }
            }
            ++checked;
        }
    }
    msg = std::to_string(checked) + " numeric targets match recomputation";
    return checked > 500;
}

// ---- criterion 10: determinism --------------------------------------------
bool crit_determinism(Lab& lab, std::string& msg) {
    auto run_once = [&](const fs::path& dir) {
        fs::remove_all(dir);
        fs::create_directories(dir);
        json u;
        u["seed"] = 5;
        u["model"] = {{"layers", 1}, {"heads", 2}, {"d_model", 16}, {"context", 160},
                      {"d_3d", 16},  {"m_tokens", 4}, {"pool_tokens", 4}, {"patch", 4},
                      {"drh_hidden", 8}};
        u["data"] = {{"grid", 8}, {"n_frames", 4}, {"scenes", 5},
                     {"samples_per_scene", 6}, {"seed", 6100},
                     {"out_dir", (dir / "data").string()}};
        json cfg = resolve_config(u, {});
        cmd_gen_data(cfg);
        {
            // deterministic untrained LM checkpoint as the stage inputs
            Vocab vocab;
            ModelConfigs mc = model_configs(cfg, vocab);
            ParamStore store;
            Rng rng(5);
            init_lm_params(store, mc.lm, vocab, rng);
            save_checkpoint((dir / "lm.geod").string(), store);
        }
        cfg["stage1"] = {{"data_dir", (dir / "data").string()},
                         {"lm_checkpoint", (dir / "lm.geod").string()},
                         {"epochs", 1},
                         {"batch", 8},
                         {"n_frames", 4},
                         {"out", (dir / "s1.geod").string()},
                         {"metrics", (dir / "s1_metrics.jsonl").string()}};
        cfg = resolve_config(cfg, {});
        cmd_train_stage1(cfg);
        cfg["stage2"]["data_dir"] = (dir / "data").string();
        cfg["stage2"]["lm_checkpoint"] = (dir / "lm.geod").string();
        cfg["stage2"]["stage1_checkpoint"] = (dir / "s1.geod").string();
        cfg["stage2"]["arm"] = "full";
        cfg["stage2"]["epochs"] = 1;
        cfg["stage2"]["batch"] = 8;
        cfg["stage2"]["n_frames"] = 4;
        cfg["stage2"]["out"] = (dir / "s2.geod").string();
        cfg["stage2"]["metrics"] = (dir / "s2_metrics.jsonl").string();
        cmd_train_stage2(cfg);
        cfg["eval"]["data_dir"] = (dir / "data").string();
        cfg["eval"]["checkpoint"] = (dir / "s2.geod").string();
        cfg["eval"]["arm"] = "full";
        cfg["eval"]["n_frames"] = 4;
        cfg["eval"]["out_csv"] = (dir / "eval.csv").string();
        cfg["eval"]["report_json"] = (dir / "eval.json").string();
        cmd_eval(cfg);
    };
    const fs::path a = lab.work / "det_a", b = lab.work / "det_b";
    run_once(a);
    run_once(b);
    for (const char* f :
         {"s1_metrics.jsonl", "s2_metrics.jsonl", "eval.csv", "eval.json"}) {
        const std::string ca = read_file(a / f), cb = read_file(b / f);
        if (ca.empty() || ca != cb) {
            msg = std::string("file differs between reruns: ") + f;
            return false;
        }
    }
    msg = "metrics, checkpointed eval csv and report byte-identical across reruns";
    return true;
}

}  // namespace

int main() {
    Lab lab;
    int failures = 0;
    const struct {
        int id;
        const char* what;
        std::function<bool(std::string&)> fn;
    } criteria[] = {
        {1, "gradient correctness", [&](std::string& m) { return crit_gradients(m); }},
        {2, "freeze invariants bitwise",
         [&](std::string& m) { return crit_freeze_bitwise(lab, m); }},
        {3, "routing/loss separation",
         [&](std::string& m) { return crit_drh_gradients(m); }},
        {4, "stage-1 efficacy",
         [&](std::string& m) { return crit_stage1_efficacy(lab, m); }},
        {5, "token-count trend",
         [&](std::string& m) { return crit_token_count_trend(lab, m); }},
        {6, "synergy grid", [&](std::string& m) { return crit_synergy(lab, m); }},
        {7, "regression head vs digit decoding",
         [&](std::string& m) { return crit_drh_vs_digits(lab, m); }},
        {8, "frame robustness",
         [&](std::string& m) { return crit_frame_robustness(lab, m); }},
        {9, "oracle equivalence",
         [&](std::string& m) { return crit_oracle_equivalence(lab, m); }},
        {10, "determinism", [&](std::string& m) { return crit_determinism(lab, m); }},
    };
    for (const auto& c : criteria) {
        std::string detail;
        bool ok = false;
        try {
            ok = c.fn(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        std::printf("criterion %d (%s): %s — %s\n", c.id, c.what,
                    ok ? "PASS" : "FAIL", detail.c_str());
        std::fflush(stdout);
        if (!ok) ++failures;
    }
    return failures;
}
