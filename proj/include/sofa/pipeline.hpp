#pragma once

#include <functional>
#include <set>
#include <string>

#include <json.hpp>

#include "sofa/data.hpp"
#include "sofa/losses.hpp"
#include "sofa/models.hpp"

namespace sofa::pipeline {

struct PipelineError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Method { baseline, mmd, iscon };

const char* method_name(Method m);
Method method_from_name(const std::string& name);

/// Reserved subject id assigned to generated pseudo-source samples when
/// computing S(i) in the contrastive loss.
inline constexpr int kPseudoSubject = -1;

struct StageConfig {
    std::size_t epochs = 200;
    std::size_t batch_size = 1200;
    double lr = 0.001;
    double lambda = 1.0;
    Method method = Method::baseline;
    std::size_t k = 1;
    int target_subject = 0;
    std::uint64_t seed = 0;
    std::size_t fake_batch = 0;  // 0 -> min(batch_size, 256)
    bool balanced_fake = true;
    double tau = 0.5;
    std::size_t gen_steps_per_epoch = 1;

    std::size_t resolved_fake_batch() const {
        return fake_batch ? fake_batch : std::min<std::size_t>(batch_size, 256);
    }
    void validate() const;
};

/// Counts every guarded dataset access during stages (b) and (c) and throws
/// if a forbidden (source) subject's sample is touched. RAII: installs
/// itself as the dataset access hook on construction.
class SourceFreeGuard : public data::AccessGuard {
public:
    SourceFreeGuard(std::string stage, std::set<int> forbidden_subjects,
                    bool forbid_all = false);
    ~SourceFreeGuard() override;
    SourceFreeGuard(const SourceFreeGuard&) = delete;

    void on_access(int subject) override;

    std::size_t accesses() const { return accesses_; }
    std::size_t forbidden_accesses() const { return forbidden_accesses_; }

private:
    std::string stage_;
    std::set<int> forbidden_;
    bool forbid_all_ = false;
    std::size_t accesses_ = 0;
    std::size_t forbidden_accesses_ = 0;
    data::AccessGuard* previous_ = nullptr;
};

using LogFn = std::function<void(const nlohmann::json&)>;

struct TrainResult {
    models::ClassifierModel model;       // final epoch
    models::ClassifierModel best_model;  // best val accuracy (== final if no val set)
    double best_val_acc = 0.0;
};

/// Stage (a): minimize cross-entropy over the source training set.
TrainResult train_source(const data::Dataset& train, const data::Dataset* val,
                         const models::ModelConfig& mc, const StageConfig& cfg,
                         const LogFn& log = nullptr);

/// Stage (b): train the conditional generator against the frozen source
/// classifier. No dataset is consumed; any dataset access trips the guard.
models::GeneratorModel train_generator(const models::ClassifierModel& frozen_src,
                                       const models::GeneratorConfig& gc, const StageConfig& cfg,
                                       const LogFn& log = nullptr);

/// Stage (c): adapt a copy of the source model on the k-shot target samples
/// plus generated pseudo-source features. Only target-subject samples may
/// be accessed; the generator stays frozen.
TrainResult adapt_target(const models::ClassifierModel& src, const models::GeneratorModel& frozen_gen,
                         const data::Dataset& target_kshot, const data::Dataset* target_val,
                         const StageConfig& cfg, const LogFn& log = nullptr);

/// Builds the [batch, T, d_in] input tensor and label vector for a set of
/// dataset rows (guarded access).
std::pair<Tensor, std::vector<int>> gather_batch(const data::Dataset& ds,
                                                 const std::vector<std::size_t>& indices);

}  // namespace sofa::pipeline
