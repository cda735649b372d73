#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sofa/losses.hpp"
#include "test_util.hpp"

using namespace sofa;
using namespace sofa::losses;
using sofa::test::grad_check;
using sofa::test::random_tensor;

namespace {

/// Independent Eq.-4 oracle: materializes P(i), S(i), A(i) as explicit
/// index sets and evaluates the loss with naive exponential sums.
long double iscon_bruteforce(const Tensor& w, const BatchMeta& meta, double tau, bool normalize) {
    const std::size_t n = w.shape[0], d = w.shape[1];
    std::vector<std::vector<long double>> u(n, std::vector<long double>(d));
    for (std::size_t i = 0; i < n; ++i) {
        long double norm = 0.0L;
        for (std::size_t c = 0; c < d; ++c) norm += (long double)w.at2(i, c) * w.at2(i, c);
        norm = normalize ? std::sqrt(norm + 1e-12L) : 1.0L;
        for (std::size_t c = 0; c < d; ++c) u[i][c] = w.at2(i, c) / norm;
    }
    long double total = 0.0L;
    std::size_t valid = 0;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::size_t> P, S, A;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            if (meta.labels[j] == meta.labels[i]) P.push_back(j);
            if (meta.subjects[j] == meta.subjects[i]) S.push_back(j);
        }
        A = P;
        for (auto j : S)
            if (std::find(A.begin(), A.end(), j) == A.end()) A.push_back(j);
        if (P.empty()) continue;
        ++valid;
        auto sim = [&](std::size_t j) {
            long double s = 0.0L;
            for (std::size_t c = 0; c < d; ++c) s += u[i][c] * u[j][c];
            return s / (long double)tau;
        };
        long double num = 0.0L, den = 0.0L;
        for (auto j : P) num += std::exp(sim(j));
        for (auto j : A) den += std::exp(sim(j));
        total += -std::log(num / den);
    }
    return valid ? total / (long double)valid : 0.0L;
}

/// Independent double-loop Gaussian kernel-sum MMD oracle.
long double mmd_bruteforce(const Tensor& s, const Tensor& t, const std::vector<double>& sigmas) {
    const std::size_t n = s.shape[0], m = t.shape[0], d = s.shape[1];
    auto kern = [&](const Tensor& A, std::size_t i, const Tensor& B, std::size_t j,
                    long double sigma) {
        long double dist = 0.0L;
        for (std::size_t c = 0; c < d; ++c) {
            long double diff = (long double)A.at2(i, c) - B.at2(j, c);
            dist += diff * diff;
        }
        return std::exp(-dist / (2.0L * sigma * sigma));
    };
    long double total = 0.0L;
    for (double sigma : sigmas) {
        long double kss = 0.0L, ktt = 0.0L, kst = 0.0L;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) kss += kern(s, i, s, j, sigma);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) ktt += kern(t, i, t, j, sigma);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j) kst += kern(s, i, t, j, sigma);
        total += kss / (long double)(n * n) + ktt / (long double)(m * m) -
                 2.0L * kst / (long double)(n * m);
    }
    return total;
}

}  // namespace

TEST_CASE("cross entropy: uniform, saturated and binary closed forms") {
    auto uniform = ad::make_leaf(Tensor::zeros({3, 40}));
    CHECK(cross_entropy(uniform, {0, 5, 39})->value.v[0] ==
          doctest::Approx(std::log(40.0)).epsilon(1e-12));

    Tensor sat = Tensor::zeros({1, 40});
    sat.at2(0, 7) = 1000.0;
    CHECK(cross_entropy(ad::make_leaf(sat), {7})->value.v[0] < 1e-6);

    auto binary = ad::make_leaf(Tensor({1, 2}, {1.0, 0.0}));
    CHECK(cross_entropy(binary, {0})->value.v[0] ==
          doctest::Approx(std::log(1.0 + std::exp(-1.0))).epsilon(1e-12));
}

TEST_CASE("cross entropy: label validation and non-negativity") {
    auto logits = ad::make_leaf(Tensor::zeros({2, 3}));
    CHECK_THROWS_AS(cross_entropy(logits, {0, 3}), LossError);
    CHECK_THROWS_AS(cross_entropy(logits, {-1, 0}), LossError);
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        auto l = ad::make_leaf(random_tensor({4, 6}, rng, -5.0, 5.0));
        CHECK(cross_entropy(l, {0, 1, 2, 3})->value.v[0] >= 0.0);
    }
}

TEST_CASE("cross entropy: gradient check") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Rng rng(seed);
        auto logits = ad::make_leaf(random_tensor({3, 5}, rng, -2.0, 2.0));
        const double err = grad_check({logits}, [&] { return cross_entropy(logits, {0, 2, 4}); });
        CHECK(err < 1e-4);
    }
}

TEST_CASE("generator loss: uniform judge gives ln C") {
    models::GeneratorConfig gc{4, 6, 3, 5};
    models::ModelConfig mc;
    mc.d_in = 2; mc.t_len = 1; mc.d_enc = 2; mc.d_emb = 3; mc.n_classes = 5;
    auto judge = models::ClassifierModel::init(mc, 1);
    judge.params.get("cls.W")->value.fill(0.0);
    judge.params.get("cls.b")->value.fill(0.0);
    judge.freeze();

    Rng rng(2);
    auto gen_out = ad::make_leaf(random_tensor({4, 3}, rng));
    auto loss = generator_loss(gen_out, {0, 1, 2, 3}, judge);
    CHECK(loss->value.v[0] == doctest::Approx(std::log(5.0)).epsilon(1e-12));
}

TEST_CASE("generator loss: monotone decrease along a classifier row direction") {
    models::ModelConfig mc;
    mc.d_in = 2; mc.t_len = 1; mc.d_enc = 2; mc.d_emb = 4; mc.n_classes = 3;
    auto judge = models::ClassifierModel::init(mc, 3);
    judge.freeze();
    const Tensor& W = judge.params.get("cls.W")->value;  // [d_emb, C]
    // features along +column 1 of W drive class-1 logit up
    double prev = 1e9;
    for (double t : {0.5, 1.0, 2.0, 4.0, 8.0}) {
        Tensor feat = Tensor::zeros({1, 4});
        for (std::size_t p = 0; p < 4; ++p) feat.v[p] = t * W.at2(p, 1);
        double loss = generator_loss(ad::make_leaf(feat), {1}, judge)->value.v[0];
        CHECK(loss < prev);
        prev = loss;
    }
}

TEST_CASE("generator loss: compositional oracle and frozen-judge guard") {
    models::ModelConfig mc;
    mc.d_in = 2; mc.t_len = 1; mc.d_enc = 2; mc.d_emb = 3; mc.n_classes = 4;
    auto judge = models::ClassifierModel::init(mc, 9);

    // unfrozen judge is rejected
    Rng rng(5);
    auto out = ad::make_leaf(random_tensor({3, 3}, rng));
    CHECK_THROWS_AS(generator_loss(out, {0, 1, 2}, judge), LossError);

    judge.freeze();
    auto loss = generator_loss(out, {0, 1, 2}, judge);
    auto manual = cross_entropy(judge.classify(out), {0, 1, 2});
    CHECK(loss->value.v[0] == doctest::Approx(manual->value.v[0]).epsilon(1e-12));

    // backward leaves the frozen judge untouched
    ad::backward(loss);
    for (auto& n : judge.params.names())
        for (double g : judge.params.get(n)->grad.v) CHECK(g == 0.0);
    double moved = 0.0;
    for (double g : out->grad.v) moved += std::abs(g);
    CHECK(moved > 0.0);
}

TEST_CASE("mmd: identical multisets give zero") {
    Rng rng(1);
    Tensor w = random_tensor({5, 3}, rng);
    auto a = ad::make_leaf(w);
    auto b = ad::make_leaf(w);
    CHECK(std::abs(mmd_loss(a, b, MmdConfig{})->value.v[0]) < 1e-9);
}

TEST_CASE("mmd: single-pair closed form") {
    // ||s - t||^2 = 2 sigma^2  =>  MMD^2 = 2 - 2 e^{-1}
    const double sigma = 1.7;
    Tensor s({1, 1}, {0.0});
    Tensor t({1, 1}, {sigma * std::sqrt(2.0)});
    MmdConfig cfg;
    cfg.bandwidths = {sigma};
    double v = mmd_loss(ad::make_leaf(s), ad::make_leaf(t), cfg)->value.v[0];
    CHECK(v == doctest::Approx(2.0 - 2.0 * std::exp(-1.0)).epsilon(1e-9));
    CHECK(v == doctest::Approx(1.26424).epsilon(1e-4));
}

TEST_CASE("mmd: permutation invariance, symmetry, non-negativity") {
    Rng rng(7);
    for (int trial = 0; trial < 25; ++trial) {
        Tensor s = random_tensor({4, 3}, rng);
        Tensor t = random_tensor({6, 3}, rng);
        double base = mmd_loss(ad::make_leaf(s), ad::make_leaf(t), MmdConfig{})->value.v[0];
        CHECK(base >= -1e-12);

        // symmetric in (src, trg)
        double sym = mmd_loss(ad::make_leaf(t), ad::make_leaf(s), MmdConfig{})->value.v[0];
        CHECK(sym == doctest::Approx(base).epsilon(1e-12));

        // permute rows of s
        Tensor sp = s;
        std::vector<std::size_t> perm{2, 0, 3, 1};
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t c = 0; c < 3; ++c) sp.at2(i, c) = s.at2(perm[i], c);
        double permuted = mmd_loss(ad::make_leaf(sp), ad::make_leaf(t), MmdConfig{})->value.v[0];
        CHECK(permuted == doctest::Approx(base).epsilon(1e-12));
    }
}

TEST_CASE("mmd: median heuristic invariant under joint pooled permutation") {
    Rng rng(13);
    Tensor s = random_tensor({3, 2}, rng);
    Tensor t = random_tensor({5, 2}, rng);
    auto bank1 = mmd_bandwidths(s, t, MmdConfig{});
    // the pooled median only depends on the multiset of pooled rows
    auto bank2 = mmd_bandwidths(t, s, MmdConfig{});
    REQUIRE(bank1.size() == bank2.size());
    for (std::size_t i = 0; i < bank1.size(); ++i)
        CHECK(bank1[i] == doctest::Approx(bank2[i]).epsilon(1e-12));
}

TEST_CASE("mmd: matches double-loop oracle on random batches") {
    Rng rng(21);
    for (int trial = 0; trial < 60; ++trial) {
        std::size_t n = 1 + rng.below(5), m = 1 + rng.below(5), d = 1 + rng.below(4);
        Tensor s = random_tensor({n, d}, rng, -2.0, 2.0);
        Tensor t = random_tensor({m, d}, rng, -2.0, 2.0);
        MmdConfig cfg;
        auto bank = mmd_bandwidths(s, t, cfg);
        double got = mmd_loss(ad::make_leaf(s), ad::make_leaf(t), cfg)->value.v[0];
        double want = double(mmd_bruteforce(s, t, bank));
        CHECK(got == doctest::Approx(want).epsilon(1e-10));
    }
}

TEST_CASE("mmd: empty batch and shape errors") {
    auto good = ad::make_leaf(Tensor::zeros({2, 3}));
    CHECK_THROWS_AS(mmd_loss(good, ad::make_leaf(Tensor::zeros({0, 3})), MmdConfig{}), LossError);
    CHECK_THROWS_AS(mmd_loss(good, ad::make_leaf(Tensor::zeros({2, 4})), MmdConfig{}), LossError);
}

TEST_CASE("mmd: gradient check") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Rng rng(seed);
        auto s = ad::make_leaf(random_tensor({3, 2}, rng));
        auto t = ad::make_leaf(random_tensor({4, 2}, rng));
        MmdConfig cfg;
        cfg.bandwidths = {0.7, 1.3};  // fixed bank: the heuristic is non-differentiable
        const double err = grad_check({s, t}, [&] { return mmd_loss(s, t, cfg); });
        CHECK(err < 1e-4);
    }
}

TEST_CASE("iscon: two identical same-class cross-subject samples give zero") {
    Tensor w({2, 3}, {1.0, 2.0, 3.0, 1.0, 2.0, 3.0});
    BatchMeta meta{{4, 4}, {0, 1}};
    ConLossConfig cfg;  // tau = 0.5
    double v = iscon_loss(ad::make_leaf(w), meta, cfg)->value.v[0];
    CHECK(v == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("iscon: complementary-set sample is excluded from the denominator") {
    // anchor (subject a, class 1); positive (subject b, class 1, identical
    // feature); negative (subject b, class 2)
    Tensor w({3, 2}, {1.0, 0.0, 1.0, 0.0, 0.0, 1.0});
    ConLossConfig cfg;
    SUBCASE("negative in A(anchor)^c: loss is exactly 0 for the anchor") {
        BatchMeta meta{{1, 1, 2}, {0, 1, 1}};
        // anchor 0: P={1}, S={} -> A={1}; num==den.
        // anchor 1: P={0}, S={2} -> A={0,2}; den grows. anchor 2 skipped.
        // check anchor 0's contribution via a 2-sample restriction:
        Tensor w2({2, 2}, {1.0, 0.0, 1.0, 0.0});
        BatchMeta m2{{1, 1}, {0, 1}};
        CHECK(iscon_loss(ad::make_leaf(w2), m2, cfg)->value.v[0] ==
              doctest::Approx(0.0).epsilon(1e-12));
        // full batch matches the brute-force enumeration
        double got = iscon_loss(ad::make_leaf(w), meta, cfg)->value.v[0];
        CHECK(got == doctest::Approx(double(iscon_bruteforce(w, meta, 0.5, true))).epsilon(1e-12));
    }
    SUBCASE("same-subject negative enters S(anchor) and raises the loss") {
        BatchMeta excl{{1, 1, 2}, {0, 1, 2}};   // negative shares no subject with anyone
        BatchMeta incl{{1, 1, 2}, {0, 1, 0}};   // negative reassigned to anchor's subject
        // restrict to the anchor-positive pair plus negative: use anchors with P nonempty
        double loss_excl = iscon_loss(ad::make_leaf(w), excl, cfg)->value.v[0];
        double loss_incl = iscon_loss(ad::make_leaf(w), incl, cfg)->value.v[0];
        CHECK(loss_incl > loss_excl);
    }
}

TEST_CASE("iscon: exact three-sample construction") {
    // identical-feature anchor/positive; different-class negative
    Tensor w({3, 2}, {0.6, 0.8, 0.6, 0.8, -0.9, 0.1});
    ConLossConfig cfg;
    // negative in neither P(0) nor S(0): anchor 0 contributes 0; anchor 1 has
    // S(1) = {}, P(1) = {0} -> also 0; anchor 2 skipped (no positives)
    BatchMeta out_of_set{{1, 1, 2}, {0, 1, 2}};
    CHECK(iscon_loss(ad::make_leaf(w), out_of_set, cfg)->value.v[0] ==
          doctest::Approx(0.0).epsilon(1e-12));
    // negative moved into the anchor's subject: strictly positive loss
    BatchMeta in_subject{{1, 1, 2}, {0, 1, 0}};
    CHECK(iscon_loss(ad::make_leaf(w), in_subject, cfg)->value.v[0] > 0.0);
}

TEST_CASE("iscon: matches brute-force set enumeration on random batches") {
    Rng rng(31);
    for (int trial = 0; trial < 200; ++trial) {
        std::size_t n = 2 + rng.below(7);  // batch <= 8
        std::size_t d = 1 + rng.below(4);
        Tensor w = random_tensor({n, d}, rng, -2.0, 2.0);
        BatchMeta meta;
        for (std::size_t i = 0; i < n; ++i) {
            meta.labels.push_back(int(rng.below(3)));
            meta.subjects.push_back(int(rng.below(3)));
        }
        ConLossConfig cfg;
        cfg.temperature = 0.25 + rng.uniform01();
        cfg.normalize = rng.below(2) == 0;
        double got = iscon_loss(ad::make_leaf(w), meta, cfg)->value.v[0];
        double want = double(iscon_bruteforce(w, meta, cfg.temperature, cfg.normalize));
        CHECK(got == doctest::Approx(want).epsilon(1e-10));
    }
}

TEST_CASE("iscon: invariances") {
    Rng rng(41);
    Tensor w = random_tensor({6, 3}, rng);
    BatchMeta meta{{0, 1, 0, 1, 2, 0}, {0, 0, 1, 1, 2, 2}};
    ConLossConfig cfg;
    double base = iscon_loss(ad::make_leaf(w), meta, cfg)->value.v[0];

    SUBCASE("subject id relabeling") {
        BatchMeta relabeled = meta;
        for (auto& s : relabeled.subjects) s = 100 - s * 7;  // bijection
        CHECK(iscon_loss(ad::make_leaf(w), relabeled, cfg)->value.v[0] ==
              doctest::Approx(base).epsilon(1e-12));
    }
    SUBCASE("batch row permutation") {
        std::vector<std::size_t> perm{3, 0, 5, 1, 4, 2};
        Tensor wp = w;
        BatchMeta mp;
        for (std::size_t i = 0; i < 6; ++i) {
            for (std::size_t c = 0; c < 3; ++c) wp.at2(i, c) = w.at2(perm[i], c);
            mp.labels.push_back(meta.labels[perm[i]]);
            mp.subjects.push_back(meta.subjects[perm[i]]);
        }
        CHECK(iscon_loss(ad::make_leaf(wp), mp, cfg)->value.v[0] ==
              doctest::Approx(base).epsilon(1e-12));
    }
    SUBCASE("positive row scaling with normalization on") {
        Tensor ws = w;
        for (std::size_t c = 0; c < 3; ++c) ws.at2(2, c) *= 17.0;
        CHECK(iscon_loss(ad::make_leaf(ws), meta, cfg)->value.v[0] ==
              doctest::Approx(base).epsilon(1e-9));
    }
}

TEST_CASE("iscon: degenerate batches") {
    ConLossConfig cfg;
    // batch of 1
    BatchMeta one{{0}, {0}};
    CHECK_THROWS_AS(iscon_loss(ad::make_leaf(Tensor::zeros({1, 2})), one, cfg), LossError);
    // all anchors skipped (all classes distinct): 0 with warning flag
    Rng rng(2);
    Tensor w = random_tensor({3, 2}, rng);
    BatchMeta distinct{{0, 1, 2}, {5, 5, 5}};
    bool all_skipped = false;
    auto loss = iscon_loss(ad::make_leaf(w), distinct, cfg, &all_skipped);
    CHECK(all_skipped);
    CHECK(loss->value.v[0] == 0.0);
}

TEST_CASE("iscon: gradient check") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Rng rng(seed);
        auto w = ad::make_leaf(random_tensor({5, 3}, rng));
        BatchMeta meta;
        for (std::size_t i = 0; i < 5; ++i) {
            meta.labels.push_back(int(rng.below(2)));
            meta.subjects.push_back(int(rng.below(2)));
        }
        ConLossConfig cfg;
        const double err = grad_check({w}, [&] { return iscon_loss(w, meta, cfg); });
        INFO("seed=", seed);
        CHECK(err < 1e-4);
    }
}

TEST_CASE("total loss: weighting and gradient additivity") {
    auto c = ad::make_leaf(Tensor::scalar(0.5));
    auto a = ad::make_leaf(Tensor::scalar(0.25));
    CHECK(total_loss(c, a, 0.0)->value.v[0] == doctest::Approx(0.5));
    CHECK(total_loss(c, a, 1.0)->value.v[0] == doctest::Approx(0.75));
    CHECK_THROWS_AS(total_loss(c, a, -0.1), LossError);

    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Rng rng(seed);
        auto x = ad::make_leaf(random_tensor({4}, rng));
        const double lambda = rng.uniform(0.0, 2.0);
        auto build = [&] {
            auto cls = sum_all(mul(x, x));
            auto align = mean_all(sigmoid(x));
            return total_loss(cls, align, lambda);
        };
        CHECK(grad_check({x}, build) < 1e-4);

        // d(total)/dx == d(cls)/dx + lambda * d(align)/dx
        x->zero_grad();
        ad::backward(build());
        Tensor total_g = x->grad;
        x->zero_grad();
        ad::backward(sum_all(mul(x, x)));
        Tensor cls_g = x->grad;
        x->zero_grad();
        ad::backward(mean_all(sigmoid(x)));
        Tensor align_g = x->grad;
        for (std::size_t i = 0; i < 4; ++i)
            CHECK(total_g.v[i] ==
                  doctest::Approx(cls_g.v[i] + lambda * align_g.v[i]).epsilon(1e-12));
    }
}
