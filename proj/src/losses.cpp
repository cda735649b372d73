#include "sofa/losses.hpp"

#include <algorithm>
#include <cmath>

namespace sofa::losses {

using namespace sofa::ad;

void BatchMeta::validate(std::size_t batch, std::size_t n_classes) const {
    if (labels.size() != batch || subjects.size() != batch)
        throw LossError("BatchMeta: label/subject counts do not match batch size");
    for (int y : labels)
        if (y < 0 || std::size_t(y) >= n_classes)
            throw LossError("BatchMeta: label " + std::to_string(y) + " out of range");
}

ad::NodePtr cross_entropy(const ad::NodePtr& logits, const std::vector<int>& labels) {
    const Tensor& L = logits->value;
    if (L.rank() != 2) throw LossError("cross_entropy: logits must be 2-d");
    const std::size_t n = L.shape[0], C = L.shape[1];
    if (labels.size() != n) throw LossError("cross_entropy: label count mismatch");
    for (int y : labels)
        if (y < 0 || std::size_t(y) >= C)
            throw LossError("cross_entropy: label " + std::to_string(y) + " out of range for C=" +
                            std::to_string(C));
    if (n == 0) throw LossError("cross_entropy: empty batch");

    auto ls = log_softmax_rows(logits);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc -= ls->value.at2(i, std::size_t(labels[i]));
    return make_op(Tensor::scalar(acc / double(n)), {ls}, "nll_gather_mean",
                   [n, C, labels](const Node&, const Tensor& adj, std::vector<Tensor>& padj) {
                       for (std::size_t i = 0; i < n; ++i)
                           padj[0].v[i * C + std::size_t(labels[i])] -= adj.v[0] / double(n);
                   });
}

ad::NodePtr generator_loss(const ad::NodePtr& gen_out, const std::vector<int>& class_codes,
                           const models::ClassifierModel& frozen_model) {
    if (!frozen_model.params.frozen())
        throw LossError("generator_loss: classifier must be frozen (it is the fixed judge)");
    return cross_entropy(frozen_model.classify(gen_out), class_codes);
}

namespace {

double sq_dist(const double* a, const double* b, std::size_t d) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        double t = a[j] - b[j];
        s += t * t;
    }
    return s;
}

}  // namespace

std::vector<double> mmd_bandwidths(const Tensor& ws, const Tensor& wt, const MmdConfig& cfg) {
    if (!cfg.bandwidths.empty()) {
        for (double b : cfg.bandwidths)
            if (b <= 0.0) throw LossError("mmd: bandwidths must be positive");
        return cfg.bandwidths;
    }
    if (cfg.median_multipliers.empty()) throw LossError("mmd: empty kernel bank");
    const std::size_t n = ws.shape[0], m = wt.shape[0], d = ws.shape[1];
    // median pairwise distance over the pooled batch
    std::vector<const double*> rows;
    rows.reserve(n + m);
    for (std::size_t i = 0; i < n; ++i) rows.push_back(&ws.v[i * d]);
    for (std::size_t i = 0; i < m; ++i) rows.push_back(&wt.v[i * d]);
    std::vector<double> dists;
    dists.reserve(rows.size() * (rows.size() - 1) / 2);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = i + 1; j < rows.size(); ++j)
            dists.push_back(std::sqrt(sq_dist(rows[i], rows[j], d)));
    double median = 1.0;
    if (!dists.empty()) {
        std::sort(dists.begin(), dists.end());
        median = dists.size() % 2 ? dists[dists.size() / 2]
                                  : 0.5 * (dists[dists.size() / 2 - 1] + dists[dists.size() / 2]);
        if (median <= 0.0) median = 1.0;
    }
    std::vector<double> bank;
    for (double mult : cfg.median_multipliers) {
        if (mult <= 0.0) throw LossError("mmd: multipliers must be positive");
        bank.push_back(median * mult);
    }
    return bank;
}

ad::NodePtr mmd_loss(const ad::NodePtr& w_src, const ad::NodePtr& w_trg, const MmdConfig& cfg) {
    const Tensor& S = w_src->value;
    const Tensor& T = w_trg->value;
    if (S.rank() != 2 || T.rank() != 2 || S.shape[1] != T.shape[1])
        throw LossError("mmd: feature batches must be 2-d with equal width, got " +
                        shape_str(S.shape) + " vs " + shape_str(T.shape));
    const std::size_t n = S.shape[0], m = T.shape[0], d = S.shape[1];
    if (n == 0 || m == 0) throw LossError("mmd: empty batch");

    const std::vector<double> bank = mmd_bandwidths(S, T, cfg);

    double total = 0.0;
    for (double sigma : bank) {
        const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
        double kss = 0.0, ktt = 0.0, kst = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                kss += std::exp(-sq_dist(&S.v[i * d], &S.v[j * d], d) * inv2s2);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j)
                ktt += std::exp(-sq_dist(&T.v[i * d], &T.v[j * d], d) * inv2s2);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j)
                kst += std::exp(-sq_dist(&S.v[i * d], &T.v[j * d], d) * inv2s2);
        total += kss / double(n * n) + ktt / double(m * m) - 2.0 * kst / double(n * m);
    }

    return make_op(
        Tensor::scalar(total), {w_src, w_trg}, "mmd",
        [n, m, d, bank](const Node& self, const Tensor& adj, std::vector<Tensor>& padj) {
            const Tensor& S = self.parents[0]->value;
            const Tensor& T = self.parents[1]->value;
            const double a = adj.v[0];
            for (double sigma : bank) {
                const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
                const double invs2 = 1.0 / (sigma * sigma);
                // within-source term: d/ds_i (1/n^2) sum_jl k(s_j,s_l)
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = 0; j < n; ++j) {
                        const double k = std::exp(-sq_dist(&S.v[i * d], &S.v[j * d], d) * inv2s2);
                        const double coef = -a * 2.0 / double(n * n) * k * invs2;
                        for (std::size_t c = 0; c < d; ++c)
                            padj[0].v[i * d + c] += coef * (S.v[i * d + c] - S.v[j * d + c]);
                    }
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < m; ++j) {
                        const double k = std::exp(-sq_dist(&T.v[i * d], &T.v[j * d], d) * inv2s2);
                        const double coef = -a * 2.0 / double(m * m) * k * invs2;
                        for (std::size_t c = 0; c < d; ++c)
                            padj[1].v[i * d + c] += coef * (T.v[i * d + c] - T.v[j * d + c]);
                    }
                // cross term: -2/(nm) sum_ij k(s_i,t_j)
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = 0; j < m; ++j) {
                        const double k = std::exp(-sq_dist(&S.v[i * d], &T.v[j * d], d) * inv2s2);
                        const double coef = a * 2.0 / double(n * m) * k * invs2;
                        for (std::size_t c = 0; c < d; ++c) {
                            const double diff = S.v[i * d + c] - T.v[j * d + c];
                            padj[0].v[i * d + c] += coef * diff;
                            padj[1].v[j * d + c] -= coef * diff;
                        }
                    }
            }
        });
}

ad::NodePtr iscon_loss(const ad::NodePtr& w, const BatchMeta& meta, const ConLossConfig& cfg,
                       bool* all_skipped) {
    const Tensor& W = w->value;
    if (W.rank() != 2) throw LossError("iscon: features must be 2-d");
    const std::size_t n = W.shape[0], d = W.shape[1];
    if (n < 2) throw LossError("iscon: batch must contain at least 2 samples");
    if (cfg.temperature <= 0.0) throw LossError("iscon: temperature must be positive");
    if (meta.labels.size() != n || meta.subjects.size() != n)
        throw LossError("iscon: metadata length does not match batch");

    auto u = cfg.normalize ? l2_normalize_rows(w) : w;
    const Tensor& U = u->value;
    const double tau = cfg.temperature;

    // similarity matrix and per-anchor index sets
    std::vector<double> sim(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t c = 0; c < d; ++c) s += U.v[i * d + c] * U.v[j * d + c];
            sim[i * n + j] = s / tau;
        }

    std::vector<std::vector<std::size_t>> pos(n), anc(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const bool same_class = meta.labels[i] == meta.labels[j];
            const bool same_subject = meta.subjects[i] == meta.subjects[j];
            if (same_class) pos[i].push_back(j);
            if (same_class || same_subject) anc[i].push_back(j);
        }

    std::size_t n_valid = 0;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (pos[i].empty()) continue;
        ++n_valid;
        double mx = sim[i * n + anc[i][0]];
        for (auto j : anc[i]) mx = std::max(mx, sim[i * n + j]);
        double sum_a = 0.0, sum_p = 0.0;
        for (auto j : anc[i]) sum_a += std::exp(sim[i * n + j] - mx);
        for (auto j : pos[i]) sum_p += std::exp(sim[i * n + j] - mx);
        total += std::log(sum_a) - std::log(sum_p);
    }
    if (all_skipped) *all_skipped = (n_valid == 0);
    if (n_valid == 0) {
        // degenerate: every anchor lacks positives
        return make_op(Tensor::scalar(0.0), {u}, "iscon_empty",
                       [](const Node&, const Tensor&, std::vector<Tensor>&) {});
    }
    const double value = total / double(n_valid);

    return make_op(
        Tensor::scalar(value), {u}, "iscon",
        [n, d, tau, sim, pos, anc, n_valid](const Node& self, const Tensor& adj,
                                            std::vector<Tensor>& padj) {
            const Tensor& U = self.parents[0]->value;
            // dL/ds_ij accumulated into G, then dU = (G + G^T) U
            std::vector<double> G(n * n, 0.0);
            const double scale = adj.v[0] / (double(n_valid) * tau);
            for (std::size_t i = 0; i < n; ++i) {
                if (pos[i].empty()) continue;
                double mx = sim[i * n + anc[i][0]];
                for (auto j : anc[i]) mx = std::max(mx, sim[i * n + j]);
                double sum_a = 0.0, sum_p = 0.0;
                for (auto j : anc[i]) sum_a += std::exp(sim[i * n + j] - mx);
                for (auto j : pos[i]) sum_p += std::exp(sim[i * n + j] - mx);
                for (auto j : anc[i]) G[i * n + j] += scale * std::exp(sim[i * n + j] - mx) / sum_a;
                for (auto j : pos[i]) G[i * n + j] -= scale * std::exp(sim[i * n + j] - mx) / sum_p;
            }
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    const double g = G[i * n + j];
                    if (g == 0.0) continue;
                    for (std::size_t c = 0; c < d; ++c) {
                        padj[0].v[i * d + c] += g * U.v[j * d + c];
                        padj[0].v[j * d + c] += g * U.v[i * d + c];
                    }
                }
        });
}

ad::NodePtr total_loss(const ad::NodePtr& cls, const ad::NodePtr& align, double lambda) {
    if (lambda < 0.0) throw LossError("total_loss: lambda must be >= 0");
    if (!cls->is_scalar() || !align->is_scalar())
        throw LossError("total_loss: both terms must be scalar");
    return add(cls, scale(align, lambda));
}

}  // namespace sofa::losses
