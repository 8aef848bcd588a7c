// Copyright (c) 2026 geode-lab authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "core/rng.hpp"
#include "gradcheck.hpp"
#include "model/drh.hpp"

using namespace geode;
using geode::testing::grad_check;

namespace {

DrhConfig tiny_cfg() {
    DrhConfig cfg;
    cfg.d_model = 6;
    cfg.hidden = 5;
    return cfg;
}

}  // namespace

TEST_CASE("head routing table covers every task exactly once") {
    CHECK(head_for_task(TaskKind::ObjCount) == HeadKind::Scalar);
    CHECK(head_for_task(TaskKind::AbsDist) == HeadKind::Scalar);
    CHECK(head_for_task(TaskKind::ObjSize) == HeadKind::Scalar);
    CHECK(head_for_task(TaskKind::RoomSize) == HeadKind::Scalar);
    CHECK(head_for_task(TaskKind::Locate) == HeadKind::Box);
    CHECK(head_for_task(TaskKind::RelDist) == HeadKind::None);
    CHECK(head_for_task(TaskKind::RelDir) == HeadKind::None);
    CHECK(head_for_task(TaskKind::AppearOrder) == HeadKind::None);
}

TEST_CASE("control tokens route in order of appearance, mismatches throw") {
    Vocab v;
    std::vector<int> ids = v.tokenize("the answer is");
    ids.push_back(v.reg());
    ids.push_back(v.eos());
    auto recs = drh_route(ids, TaskKind::AbsDist, v);
    REQUIRE(recs.size() == 1);
    CHECK(recs[0].position == 3);
    CHECK(recs[0].head == HeadKind::Scalar);
    CHECK(recs[0].task == TaskKind::AbsDist);

    std::vector<int> box_ids = {v.bbox(), v.reg()};
    CHECK_THROWS_AS(drh_route(box_ids, TaskKind::Locate, v), ContractError);
    CHECK_THROWS_AS(drh_route({v.bbox()}, TaskKind::AbsDist, v), ContractError);
    CHECK(drh_route(v.tokenize("left or right"), TaskKind::RelDir, v).empty());

    std::vector<int> two = {v.reg(), v.pad(), v.reg()};
    auto recs2 = drh_route(two, TaskKind::ObjCount, v);
    REQUIRE(recs2.size() == 2);
    CHECK(recs2[0].position == 0);
    CHECK(recs2[1].position == 2);
}

TEST_CASE("zero-weight heads emit softplus(0) = ln 2 for positive outputs") {
    DrhConfig cfg = tiny_cfg();
    ParamStore store;
    Rng rng(1);
    init_drh_params(store, cfg, rng);
    for (const auto& name : store.names_with_prefix("drh.")) {
        Tensor t = store.get(name);
        std::fill(t.data().begin(), t.data().end(), 0.0);
    }
    Tensor hidden = Tensor::from_data({1, cfg.d_model}, {1, -2, 3, 0.5, -0.5, 2});
    const double ln2 = std::log(2.0);

    Tensor s = drh_regress(store, cfg, hidden, TaskKind::AbsDist);
    CHECK(s.shape() == std::vector<int>{1, 1});
    CHECK(s.item() == doctest::Approx(ln2).epsilon(1e-12));

    Tensor b = drh_regress(store, cfg, hidden, TaskKind::Locate);
    CHECK(b.shape() == std::vector<int>{1, 7});
    for (int i = 0; i < 3; ++i) CHECK(b.data()[i] == 0.0);                       // center raw
    for (int i = 3; i < 6; ++i) CHECK(b.data()[i] == doctest::Approx(ln2));      // sizes positive
    CHECK(b.data()[6] == 0.0);                                                   // yaw raw

    CHECK_THROWS_AS(drh_regress(store, cfg, hidden, TaskKind::RelDir), ContractError);
    Tensor bad = Tensor::from_data({2, cfg.d_model}, std::vector<double>(12, 0.0));
    CHECK_THROWS_AS(drh_regress(store, cfg, bad, TaskKind::AbsDist), ShapeError);
}

TEST_CASE("mixed loss is CE plus lambda times the regression MSE") {
    DrhConfig cfg = tiny_cfg();
    Tensor ce = Tensor::scalar(0.7);
    Tensor pred = Tensor::from_data({1, 2}, {1.0, 3.0});
    Tensor target = Tensor::from_data({1, 2}, {0.0, 1.0});
    // mse over 2 entries: (1 + 4) / 2 = 2.5
    cfg.lambda = 1.0;
    CHECK(drh_mixed_loss(cfg, ce, {pred}, {target}).item() == doctest::Approx(0.7 + 2.5));
    cfg.lambda = 0.25;
    CHECK(drh_mixed_loss(cfg, ce, {pred}, {target}).item() == doctest::Approx(0.7 + 0.625));
    // pure CE and pure regression degenerate cleanly
    CHECK(drh_mixed_loss(cfg, ce, {}, {}).item() == doctest::Approx(0.7));
    cfg.lambda = 1.0;
    CHECK(drh_mixed_loss(cfg, Tensor(), {pred}, {target}).item() == doctest::Approx(2.5));
    CHECK_THROWS_AS(drh_mixed_loss(cfg, ce, {pred}, {}), ShapeError);
}

TEST_CASE("mixed loss backpropagates into both branches") {
    DrhConfig cfg = tiny_cfg();
    ParamStore store;
    Rng rng(2);
    init_drh_params(store, cfg, rng);
    Rng r2(3);
    Tensor hidden = Tensor::randn({1, cfg.d_model}, r2, 0.8);
    Tensor target = Tensor::from_data({1, 1}, {0.42});
    auto fwd = [&]() {
        Tensor pred = drh_regress(store, cfg, hidden, TaskKind::ObjSize);
        return drh_mixed_loss(cfg, Tensor(), {pred}, {target});
    };
    auto res = grad_check(fwd,
                          {store.get("drh.reg.obj_size.w1"), store.get("drh.reg.obj_size.w2"),
                           store.get("drh.reg.obj_size.b2")},
                          1e-5);
    CHECK(res.checked > 0);
    CHECK(res.max_rel_err < 1e-4);
}

TEST_CASE("normalization round-trips scalars and boxes") {
    NormStats norm;
    norm.abs_dist = 14.2;
    norm.obj_count = 10;
    norm.obj_size = 2.2;
    norm.room_size = 100;
    norm.box_center_xy = 10;
    norm.box_center_z = 3.5;
    norm.box_size = 2.2;
    norm.box_yaw = 3.14159265358979;

    for (TaskKind t : {TaskKind::ObjCount, TaskKind::AbsDist, TaskKind::ObjSize,
                       TaskKind::RoomSize}) {
        for (double v : {0.01, 1.0, 7.5}) {
            CHECK(denormalize_scalar(normalize_scalar(v, t, norm), t, norm) ==
                  doctest::Approx(v).epsilon(1e-12));
        }
    }
    std::vector<double> box = {4.2, -1.3, 0.45, 1.1, 0.8, 0.6, 2.0};
    std::vector<double> rt = denormalize_box(normalize_box(box, norm), norm);
    for (int i = 0; i < 7; ++i) CHECK(rt[i] == doctest::Approx(box[i]).epsilon(1e-6));

    // yaw outside [-pi, pi) normalizes to the wrapped angle
    std::vector<double> spun = box;
    spun[6] = 2.0 + 2.0 * 3.14159265358979323846;
    std::vector<double> rt2 = denormalize_box(normalize_box(spun, norm), norm);
    CHECK(rt2[6] == doctest::Approx(2.0).epsilon(1e-9));
    CHECK_THROWS_AS(normalize_box({1, 2, 3}, norm), ShapeError);
}

TEST_CASE("digit-mode answers parse back to numbers") {
    CHECK(parse_digit_answer("the answer is 12.50").value() == doctest::Approx(12.5));
    CHECK(parse_digit_answer("-0.75").value() == doctest::Approx(-0.75));
    CHECK(parse_digit_answer("count : 3.00 and 4.00").value() == doctest::Approx(3.0));
    CHECK_FALSE(parse_digit_answer("left or right").has_value());
    CHECK_FALSE(parse_digit_answer("1 2").has_value());
    CHECK_FALSE(parse_digit_answer("4.5").has_value());
    CHECK_FALSE(parse_digit_answer("").has_value());
}
