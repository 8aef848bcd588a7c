// Copyright (c) 2026 geode-lab authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "core/checkpoint.hpp"
#include "core/rng.hpp"
#include "train/config.hpp"
#include "train/optimizer.hpp"
#include "train/trainer.hpp"

using namespace geode;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

// Tiny but complete pipeline config rooted in a fresh temp directory.
json tiny_config(const std::string& root) {
    json cfg = default_config();
    cfg["seed"] = 7;
    cfg["data"]["out_dir"] = root + "/data";
    cfg["data"]["scenes"] = 4;
    cfg["data"]["samples_per_scene"] = 4;
    cfg["data"]["n_frames"] = 4;
    cfg["data"]["grid"] = 8;
    cfg["data"]["min_points"] = 16;
    cfg["data"]["max_points"] = 64;
    cfg["model"]["layers"] = 1;
    cfg["model"]["heads"] = 2;
    cfg["model"]["d_model"] = 16;
    cfg["model"]["d_3d"] = 16;
    cfg["model"]["m_tokens"] = 4;
    cfg["model"]["pool_tokens"] = 4;
    cfg["model"]["patch"] = 4;
    cfg["stage1"]["data_dir"] = root + "/data";
    cfg["stage1"]["lm_checkpoint"] = root + "/lm.geod";
    cfg["stage1"]["epochs"] = 2;
    cfg["stage1"]["batch"] = 8;
    cfg["stage1"]["n_frames"] = 4;
    cfg["stage1"]["out"] = root + "/stage1.geod";
    cfg["stage1"]["metrics"] = root + "/stage1_metrics.jsonl";
    cfg["stage2"]["data_dir"] = root + "/data";
    cfg["stage2"]["lm_checkpoint"] = root + "/lm.geod";
    cfg["stage2"]["stage1_checkpoint"] = root + "/stage1.geod";
    cfg["stage2"]["epochs"] = 1;
    cfg["stage2"]["batch"] = 8;
    cfg["stage2"]["n_frames"] = 4;
    cfg["stage2"]["out"] = root + "/stage2.geod";
    cfg["stage2"]["metrics"] = root + "/stage2_metrics.jsonl";
    return cfg;
}

void write_fresh_lm(const json& cfg, const std::string& path) {
    Vocab vocab;
    ModelConfigs mc = model_configs(cfg, vocab);
    ParamStore store;
    Rng rng(3);
    init_lm_params(store, mc.lm, vocab, rng);
    save_checkpoint(path, store);
}

}  // namespace

TEST_CASE("adamw clips by global norm: large gradients match pre-scaled ones") {
    OptimConfig oc;
    oc.lr = 0.1;
    oc.weight_decay = 0.0;
    oc.warmup_steps = 0;
    oc.total_steps = 1000;

    ParamStore a, b;
    a.create("p", Tensor::from_data({1, 2}, {1.0, 1.0}));
    b.create("p", Tensor::from_data({1, 2}, {1.0, 1.0}));
    AdamW oa(a, oc), ob(b, oc);
    // norm 10 gradient clips to norm 1: identical to feeding the clipped
    // gradient directly
    a.get("p").grad() = {6.0, 8.0};
    b.get("p").grad() = {0.6, 0.8};
    oa.step();
    ob.step();
    CHECK(a.get("p").data()[0] == doctest::Approx(b.get("p").data()[0]).epsilon(1e-12));
    CHECK(a.get("p").data()[1] == doctest::Approx(b.get("p").data()[1]).epsilon(1e-12));
    // direction preserved: both coordinates moved down, ratio kept
    const double d0 = 1.0 - a.get("p").data()[0];
    const double d1 = 1.0 - a.get("p").data()[1];
    CHECK(d0 > 0);
    CHECK(d1 > 0);
}

TEST_CASE("zero gradients leave only the weight-decay drift") {
    OptimConfig oc;
    oc.lr = 0.1;
    oc.weight_decay = 0.01;
    oc.warmup_steps = 0;
    oc.total_steps = 100;
    ParamStore store;
    store.create("p", Tensor::from_data({1, 2}, {2.0, -3.0}));
    AdamW opt(store, oc);
    store.get("p").grad() = {0.0, 0.0};
    const double lr = opt.lr_at(0);
    opt.step();
    CHECK(store.get("p").data()[0] == doctest::Approx(2.0 * (1.0 - lr * 0.01)));
    CHECK(store.get("p").data()[1] == doctest::Approx(-3.0 * (1.0 - lr * 0.01)));
}

TEST_CASE("adamw minimizes a quadratic to 1e-3 within 500 steps") {
    OptimConfig oc;
    oc.lr = 0.05;
    oc.weight_decay = 0.0;
    oc.warmup_steps = 10;
    oc.total_steps = 500;
    ParamStore store;
    store.create("x", Tensor::from_data({1, 1}, {10.0}));
    AdamW opt(store, oc);
    for (int i = 0; i < 500; ++i) {
        const double x = store.get("x").data()[0];
        store.get("x").grad() = {2.0 * (x - 3.0)};
        opt.step();
    }
    CHECK(std::fabs(store.get("x").data()[0] - 3.0) < 1e-3);
}

TEST_CASE("non-finite gradients skip the step and abort after 10 in a row") {
    OptimConfig oc;
    oc.warmup_steps = 0;
    ParamStore store;
    store.create("p", Tensor::from_data({1, 1}, {1.0}));
    AdamW opt(store, oc);
    store.get("p").grad() = {std::nan("")};
    CHECK(opt.step() == 0.0);
    CHECK(store.get("p").data()[0] == 1.0);
    CHECK(opt.skipped() == 1);
    // a good step resets the consecutive counter
    store.get("p").grad() = {0.1};
    CHECK(opt.step() > 0.0);
    for (int i = 0; i < 9; ++i) {
        store.get("p").grad() = {std::nan("")};
        opt.step();
    }
    store.get("p").grad() = {std::nan("")};
    CHECK_THROWS_AS(opt.step(), NumericError);
}

TEST_CASE("learning rate warms up linearly then decays to zero") {
    OptimConfig oc;
    oc.lr = 1.0;
    oc.warmup_steps = 10;
    oc.total_steps = 110;
    ParamStore store;
    store.create("p", Tensor::from_data({1, 1}, {0.0}));
    AdamW opt(store, oc);
    CHECK(opt.lr_at(0) == doctest::Approx(0.1));
    CHECK(opt.lr_at(9) == doctest::Approx(1.0));
    CHECK(opt.lr_at(10) == doctest::Approx(1.0));
    CHECK(opt.lr_at(60) == doctest::Approx(0.5));
    CHECK(opt.lr_at(110) == doctest::Approx(0.0).epsilon(1e-9));
    for (int i = 1; i < 110; ++i) CHECK(opt.lr_at(i - 1) >= opt.lr_at(i) - 1.0);
}

TEST_CASE("config resolution rejects unknown keys and wrong types by name") {
    CHECK(resolve_config(json(), {}).at("model").at("d_model") == 64);
    try {
        resolve_config(json{{"modle", json::object()}}, {});
        CHECK(false);
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("modle") != std::string::npos);
    }
    CHECK_THROWS_AS(resolve_config(json{{"seed", "one"}}, {}), ConfigError);
    CHECK_THROWS_AS(resolve_config(json{{"model", {{"d_model", "wide"}}}}, {}), ConfigError);

    json cfg = resolve_config(json(), {"seed=9", "model.d_model=32", "stage2.arm=sft_drm",
                                       "optim.lr=0.001"});
    CHECK(cfg.at("seed") == 9);
    CHECK(cfg.at("model").at("d_model") == 32);
    CHECK(cfg.at("stage2").at("arm") == "sft_drm");
    CHECK(cfg.at("optim").at("lr") == doctest::Approx(0.001));
    CHECK_THROWS_AS(resolve_config(json(), {"model.width=3"}), ConfigError);
    CHECK_THROWS_AS(resolve_config(json(), {"model=3"}), ConfigError);
    CHECK_THROWS_AS(resolve_config(json(), {"seed=abc"}), ConfigError);

    const std::string schema = schema_text();
    CHECK(schema.find("stage2.lambda") != std::string::npos);
    CHECK(schema.find("data.scenes") != std::string::npos);
}

TEST_CASE("arm helpers cover the four ablation arms") {
    CHECK(arm_from_string("full") == Arm::Full);
    CHECK(arm_from_string("sft_only") == Arm::SftOnly);
    CHECK_THROWS_AS(arm_from_string("fully"), ConfigError);
    CHECK(arm_uses_drm(Arm::Full));
    CHECK(arm_uses_drm(Arm::SftDrm));
    CHECK_FALSE(arm_uses_drm(Arm::SftDrh));
    CHECK(arm_uses_drh(Arm::SftDrh));
    CHECK_FALSE(arm_uses_drh(Arm::SftDrm));
    CHECK(std::string(arm_name(Arm::SftOnly)) == "sft_only");
}

TEST_CASE("stage 1 and stage 2 run end to end, freeze-verified and deterministic") {
    const std::string root = (fs::temp_directory_path() / "geode_train_test").string();
    fs::remove_all(root);
    fs::create_directories(root);
    json cfg = tiny_config(root);

    cmd_gen_data(cfg);
    CHECK(fs::exists(root + "/data/manifest.json"));
    write_fresh_lm(cfg, root + "/lm.geod");

    cmd_train_stage1(cfg);
    CHECK(fs::exists(root + "/stage1.geod"));
    const std::string metrics1 = slurp(root + "/stage1_metrics.jsonl");
    CHECK(!metrics1.empty());
    for (std::istringstream is(metrics1); is;) {
        std::string line;
        if (!std::getline(is, line) || line.empty()) break;
        json row = json::parse(line);
        CHECK(row.contains("loss"));
        CHECK(std::isfinite(row["loss"].get<double>()));
    }

    // frozen LM bytes identical between the pretrained and stage-1 files
    auto pre = load_tensors(root + "/lm.geod");
    auto post = load_tensors(root + "/stage1.geod");
    int compared = 0;
    for (const auto& t : pre) {
        for (const auto& u : post) {
            if (u.name != t.name) continue;
            CHECK(u.values == t.values);
            ++compared;
        }
    }
    CHECK(compared == static_cast<int>(pre.size()));

    // rerun reproduces byte-identical metrics and checkpoint
    const std::string ckpt1 = slurp(root + "/stage1.geod");
    cmd_train_stage1(cfg);
    CHECK(slurp(root + "/stage1_metrics.jsonl") == metrics1);
    CHECK(slurp(root + "/stage1.geod") == ckpt1);

    for (const std::string arm : {"full", "sft_only"}) {
        cfg["stage2"]["arm"] = arm;
        cfg["stage2"]["out"] = root + "/stage2_" + arm + ".geod";
        cmd_train_stage2(cfg);
        CHECK(fs::exists(root + "/stage2_" + arm + ".geod"));
    }

    // stage 2 keeps the DRM bytes of the stage-1 checkpoint
    auto s1 = load_tensors(root + "/stage1.geod");
    auto s2 = load_tensors(root + "/stage2_full.geod");
    int drm_compared = 0;
    for (const auto& t : s1) {
        if (t.name.rfind("drm.", 0) != 0) continue;
        for (const auto& u : s2) {
            if (u.name != t.name) continue;
            CHECK(u.values == t.values);
            ++drm_compared;
        }
    }
    CHECK(drm_compared > 0);
    fs::remove_all(root);
}

TEST_CASE("stage-2 sample loss separates the CE and regression paths") {
    const std::string root = (fs::temp_directory_path() / "geode_loss_test").string();
    fs::remove_all(root);
    fs::create_directories(root);
    json cfg = tiny_config(root);
    cmd_gen_data(cfg);

    Vocab vocab;
    ModelConfigs mc = model_configs(cfg, vocab);
    Dataset ds = load_dataset(root + "/data");
    const NormStats norm = NormStats::from_json(ds.manifest.at("norm"));

    ParamStore store;
    Rng rng(5);
    init_lm_params(store, mc.lm, vocab, rng);
    init_encoder_params(store, mc.enc, rng);
    init_drm_params(store, mc.drm, rng);
    init_drh_params(store, mc.drh, rng);
    store.create("proj2d.w", Tensor::randn({mc.lm.d_model, mc.lm.d_model}, rng, 0.08));
    store.create("proj2d.b", Tensor::zeros({1, mc.lm.d_model}));

    const QASample* mca = nullptr;
    const QASample* scalar = nullptr;
    for (const QASample& qa : ds.samples) {
        if (!mca && qa.answer_kind == AnswerKind::Mca) mca = &qa;
        if (!scalar && head_for_task(qa.task) == HeadKind::Scalar) scalar = &qa;
    }
    REQUIRE(mca != nullptr);
    REQUIRE(scalar != nullptr);

    // text-only sample: total == CE exactly
    double ce = 0, drh = 0;
    Tensor l_text = stage2_sample_loss(store, mc, vocab, *mca, ds.assets_for(*mca), 4,
                                       Arm::Full, norm, &ce, &drh);
    CHECK(l_text.item() == doctest::Approx(ce).epsilon(1e-12));
    CHECK(drh == doctest::Approx(0.0));

    // regression sample in a DRH arm: the heads get gradient scaled by
    // lambda, and none at all from the CE path of a text-only sample
    store.zero_grads();
    Tensor l_reg = stage2_sample_loss(store, mc, vocab, *scalar, ds.assets_for(*scalar), 4,
                                      Arm::Full, norm, &ce, &drh);
    CHECK(drh > 0.0);
    backward(l_reg);
    bool head_grad = false;
    for (const auto& name : store.names_with_prefix("drh.reg.")) {
        const Tensor& t = store.get(name);
        if (!t.has_grad()) continue;
        for (double g : t.grad())
            if (g != 0.0) head_grad = true;
    }
    CHECK(head_grad);

    store.zero_grads();
    backward(stage2_sample_loss(store, mc, vocab, *mca, ds.assets_for(*mca), 4, Arm::Full,
                                norm));
    for (const auto& name : store.names_with_prefix("drh.")) {
        const Tensor& t = store.get(name);
        if (!t.has_grad()) continue;
        for (double g : t.grad()) CHECK(g == 0.0);
    }

    // digit arms answer in text; the sequence contains no control token
    std::vector<int> a_drh = answer_ids(*scalar, vocab, true);
    std::vector<int> a_digit = answer_ids(*scalar, vocab, false);
    REQUIRE(a_drh.size() == 1);
    CHECK(vocab.is_control(a_drh[0]));
    for (int id : a_digit) CHECK_FALSE(vocab.is_control(id));
    fs::remove_all(root);
}
