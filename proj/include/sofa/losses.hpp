#pragma once

#include <optional>
#include <vector>

#include "sofa/graph.hpp"
#include "sofa/models.hpp"

namespace sofa::losses {

struct LossError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Per-row labels and subject ids. Generated samples carry a reserved
/// pseudo-subject id chosen by the caller.
struct BatchMeta {
    std::vector<int> labels;
    std::vector<int> subjects;

    void validate(std::size_t batch, std::size_t n_classes) const;
};

struct MmdConfig {
    // explicit bandwidths; empty = median heuristic with these multipliers
    std::vector<double> bandwidths;
    std::vector<double> median_multipliers = {0.25, 0.5, 1.0, 2.0, 4.0};
};

struct ConLossConfig {
    double temperature = 0.5;
    bool normalize = true;
};

/// Mean over the batch of -log softmax(logits)[label]; stable log-softmax.
ad::NodePtr cross_entropy(const ad::NodePtr& logits, const std::vector<int>& labels);

/// Eq.-2-style objective: cross-entropy of the frozen classifier's response
/// to the generated features against their conditioning class codes.
ad::NodePtr generator_loss(const ad::NodePtr& gen_out, const std::vector<int>& class_codes,
                           const models::ClassifierModel& frozen_model);

/// Squared biased (V-statistic) MMD between the two feature batches, summed
/// over a Gaussian kernel bank. Bandwidths from cfg, or the median pairwise
/// distance of the pooled batch times cfg.median_multipliers (treated as a
/// constant; no gradient through the bandwidth).
ad::NodePtr mmd_loss(const ad::NodePtr& w_src, const ad::NodePtr& w_trg, const MmdConfig& cfg);

/// Resolved kernel bank for a given pair of batches; exposed for tests.
std::vector<double> mmd_bandwidths(const Tensor& w_src, const Tensor& w_trg,
                                   const MmdConfig& cfg);

/// Inter-subject contrastive loss. Per anchor i: positives P(i) = same
/// label, S(i) = same subject, denominator over A(i) = P(i) union S(i)
/// (anchor excluded everywhere); anchors with empty P(i) are skipped.
/// `all_skipped` (when non-null) flags the degenerate all-skipped batch,
/// whose loss is defined as 0.
ad::NodePtr iscon_loss(const ad::NodePtr& w, const BatchMeta& meta, const ConLossConfig& cfg,
                       bool* all_skipped = nullptr);

/// cls + lambda * align
ad::NodePtr total_loss(const ad::NodePtr& cls, const ad::NodePtr& align, double lambda);

}  // namespace sofa::losses
