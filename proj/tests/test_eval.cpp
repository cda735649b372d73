#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "sofa/eval.hpp"
#include "test_util.hpp"

using namespace sofa;
using namespace sofa::eval;

namespace {

// model whose logits are input-independent: zero GRU weights give h_T = 0,
// so logits = cls.W^T emb.b + cls.b; we zero those too and set cls.b.
models::ClassifierModel constant_model(std::size_t C, const std::vector<double>& logits) {
    models::ModelConfig mc;
    mc.d_in = 2;
    mc.t_len = 3;
    mc.d_enc = 2;
    mc.d_emb = 2;
    mc.n_classes = C;
    auto m = models::ClassifierModel::init(mc, 1);
    for (auto& n : m.params.names()) m.params.get(n)->value.fill(0.0);
    for (std::size_t c = 0; c < C; ++c) m.params.get("cls.b")->value.v[c] = logits[c];
    return m;
}

data::Dataset balanced_dataset(std::size_t C, std::size_t per_class) {
    data::Dataset ds;
    ds.t_len = 3;
    ds.d_in = 2;
    ds.n_classes = int(C);
    ds.subjects = {0};
    Rng rng(3);
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t i = 0; i < per_class; ++i) {
            data::EegSample s;
            s.signal = sofa::test::random_tensor({3, 2}, rng);
            s.label = int(c);
            s.subject = 0;
            ds.samples.push_back(std::move(s));
            ds.splits.push_back(data::Split::test);
        }
    return ds;
}

}  // namespace

TEST_CASE("top1: constant predictor on a balanced split scores 1/C") {
    auto m = constant_model(4, {0.0, 0.0, 0.0, 0.0});  // ties -> class 0
    auto ds = balanced_dataset(4, 3);
    CHECK(top1_accuracy(m, ds) == doctest::Approx(0.25));
}

TEST_CASE("top1: oracle-like predictor scores 1.0, anti-oracle 0.0") {
    auto ds = balanced_dataset(3, 2);
    // constant class-2 predictor, dataset with only class-2 test labels
    data::Dataset only2;
    only2.t_len = 3;
    only2.d_in = 2;
    only2.n_classes = 3;
    only2.subjects = {0};
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (ds.samples[i].label != 2) continue;
        only2.samples.push_back(ds.samples[i]);
        only2.splits.push_back(ds.splits[i]);
    }
    auto m = constant_model(3, {0.0, 0.0, 5.0});
    CHECK(top1_accuracy(m, only2) == doctest::Approx(1.0));
    auto wrong = constant_model(3, {5.0, 0.0, 0.0});
    CHECK(top1_accuracy(wrong, only2) == doctest::Approx(0.0));
}

TEST_CASE("top1: hand case with input-dependent logits gives 2/3") {
    // near-pass-through GRU: z ~ 1, h1 ~ tanh(x); identity embed/classifier
    models::ModelConfig mc;
    mc.d_in = 3;
    mc.t_len = 1;
    mc.d_enc = 3;
    mc.d_emb = 3;
    mc.n_classes = 3;
    auto m = models::ClassifierModel::init(mc, 1);
    for (auto& n : m.params.names()) m.params.get(n)->value.fill(0.0);
    m.params.get("gru.b_z")->value.fill(30.0);  // update gate saturated open
    for (std::size_t i = 0; i < 3; ++i) {
        m.params.get("gru.W_h")->value.at2(i, i) = 1.0;
        m.params.get("emb.W")->value.at2(i, i) = 1.0;
        m.params.get("cls.W")->value.at2(i, i) = 1.0;
    }

    data::Dataset ds;
    ds.t_len = 1;
    ds.d_in = 3;
    ds.n_classes = 3;
    ds.subjects = {0};
    auto push = [&](std::vector<double> sig, int label) {
        data::EegSample s;
        s.signal = Tensor({1, 3}, std::move(sig));
        s.label = label;
        s.subject = 0;
        ds.samples.push_back(std::move(s));
        ds.splits.push_back(data::Split::test);
    };
    push({1.0, 0.0, 0.0}, 0);  // argmax 0: correct
    push({0.0, 2.0, 0.0}, 1);  // argmax 1: correct
    push({0.0, 0.0, 1.0}, 0);  // argmax 2: wrong
    CHECK(top1_accuracy(m, ds) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("top1: empty split errors; batch-order permutation invariant") {
    auto m = constant_model(3, {0.0, 1.0, 0.0});
    data::Dataset empty;
    empty.t_len = 3;
    empty.d_in = 2;
    empty.n_classes = 3;
    CHECK_THROWS_AS(top1_accuracy(m, empty), EvalError);

    auto ds = balanced_dataset(3, 4);
    std::vector<std::size_t> order(ds.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    double base = top1_accuracy(m, ds, order);
    Rng rng(8);
    rng.shuffle(order);
    CHECK(top1_accuracy(m, ds, order) == doctest::Approx(base));
}

TEST_CASE("aggregate: two-point sample stddev") {
    RunReport r;
    r.n_classes = 10;
    r.dataset_hash = 42;
    r.rows.push_back({0, 1, "baseline", 0, 0.7, 0.7});
    r.rows.push_back({0, 1, "baseline", 1, 0.8, 0.8});
    auto aggs = aggregate(r);
    REQUIRE(aggs.size() == 1);
    CHECK(aggs[0].test_mean == doctest::Approx(0.75));
    CHECK(aggs[0].test_std == doctest::Approx(0.070710678).epsilon(1e-6));
    CHECK(!aggs[0].single_seed);
    // mean lies within [min, max]
    CHECK(aggs[0].test_mean >= 0.7);
    CHECK(aggs[0].test_mean <= 0.8);
}

TEST_CASE("aggregate: single seed flagged with zero stddev; identical seeds zero stddev") {
    RunReport r;
    r.n_classes = 10;
    r.dataset_hash = 42;
    r.rows.push_back({0, 1, "mmd", 0, 0.6, 0.6});
    auto aggs = aggregate(r);
    REQUIRE(aggs.size() == 1);
    CHECK(aggs[0].single_seed);
    CHECK(aggs[0].test_std == 0.0);

    r.rows.push_back({0, 1, "mmd", 1, 0.6, 0.6});
    aggs = aggregate(r);
    CHECK(!aggs[0].single_seed);
    CHECK(aggs[0].test_std == 0.0);
}

TEST_CASE("merge: rejects mixed class counts or dataset hashes") {
    RunReport a, b;
    a.n_classes = 10;
    a.dataset_hash = 1;
    b.n_classes = 10;
    b.dataset_hash = 2;
    CHECK_THROWS_AS(merge({a, b}), EvalError);
    b.dataset_hash = 1;
    b.n_classes = 40;
    CHECK_THROWS_AS(merge({a, b}), EvalError);
    b.n_classes = 10;
    CHECK_NOTHROW(merge({a, b}));
}

TEST_CASE("render_table: deterministic ordering and formats") {
    RunReport r;
    r.n_classes = 10;
    r.dataset_hash = 7;
    // insert out of order; rendering must sort subject asc, k asc, method order
    r.rows.push_back({1, 2, "iscon", 0, 0.5, 0.5});
    r.rows.push_back({0, 1, "iscon", 0, 0.746, 0.746});
    r.rows.push_back({0, 1, "iscon", 1, 0.788, 0.788});
    r.rows.push_back({0, 1, "baseline", 0, 0.144, 0.144});
    r.rows.push_back({0, 2, "mmd", 0, 0.3, 0.3});

    std::string tsv = render_table(r, TableFormat::tsv);
    auto pos_b = tsv.find("baseline");
    auto pos_m = tsv.find("mmd");
    auto pos_i = tsv.find("iscon");
    CHECK(pos_b < pos_i);
    CHECK(pos_i < pos_m);  // (0,1,iscon) renders before (0,2,mmd)

    std::string md = render_table(r, TableFormat::markdown);
    // mean .767, std .0297 -> "76.7 ±3.0"
    CHECK(md.find("76.7 \xc2\xb1") != std::string::npos);
}

TEST_CASE("render_table: empty report gives header only") {
    RunReport r;
    r.n_classes = 10;
    std::string tsv = render_table(r, TableFormat::tsv);
    CHECK(tsv.find("subject\tk\tmethod") == 0);
    CHECK(std::count(tsv.begin(), tsv.end(), '\n') == 1);
}

TEST_CASE("report json round trip") {
    RunReport r;
    r.n_classes = 10;
    r.dataset_hash = 99;
    r.rows.push_back({2, 3, "mmd", 7, 0.25, 0.125});
    auto back = RunReport::from_json(r.to_json());
    CHECK(back.to_json() == r.to_json());
    // out-of-range accuracies rejected
    auto bad = r.to_json();
    bad["rows"][0]["val_acc"] = 1.5;
    CHECK_THROWS_AS(RunReport::from_json(bad), EvalError);
}
