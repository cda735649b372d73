#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sofa/rng.hpp"
#include "sofa/tensor.hpp"

namespace sofa::data {

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct FormatError : DataError {
    using DataError::DataError;
};
struct BadMagicError : FormatError {
    using FormatError::FormatError;
};
struct TruncatedError : FormatError {
    using FormatError::FormatError;
};
struct InconsistentError : FormatError {
    using FormatError::FormatError;
};

/// Hook consulted on every guarded sample access; the pipeline's
/// source-free guard installs itself here for stages (b) and (c).
struct AccessGuard {
    virtual ~AccessGuard() = default;
    virtual void on_access(int subject) = 0;
};
void set_access_guard(AccessGuard* g);  // nullptr to clear
AccessGuard* access_guard();

enum class Split { train, val, test };

const char* split_name(Split s);
Split split_from_name(const std::string& name);

struct EegSample {
    Tensor signal;  // [T, d_in]
    int label = 0;
    int subject = 0;
};

/// Counts an access against the active SourceFreeGuard (see pipeline) and
/// throws if the sample's subject is forbidden in the current stage.
class Dataset {
public:
    std::vector<EegSample> samples;
    std::vector<Split> splits;  // parallel to samples
    int n_classes = 0;
    std::vector<int> subjects;  // declared id set
    std::size_t t_len = 0;
    std::size_t d_in = 0;

    std::size_t size() const { return samples.size(); }

    /// Guarded access; all training/eval code goes through this.
    const EegSample& sample(std::size_t i) const;

    /// Unguarded metadata peeks (subject/label/split only, no signal).
    int subject_of(std::size_t i) const { return samples[i].subject; }
    int label_of(std::size_t i) const { return samples[i].label; }
    Split split_of(std::size_t i) const { return splits[i]; }

    Dataset subset(const std::vector<std::size_t>& indices) const;
    std::vector<std::size_t> indices_of(const std::vector<int>& keep_subjects, Split split) const;

    std::uint64_t content_hash() const;
    void validate() const;
};

void save_dataset(const std::string& path, const Dataset& ds);
Dataset load_dataset(const std::string& path);

/// Keeps rows [start_ms, end_ms) of every signal; 1 ms per step.
Dataset crop_window(const Dataset& ds, std::size_t start_ms, std::size_t end_ms);

struct SynthConfig {
    std::size_t n_subjects = 6;
    std::size_t n_classes = 10;
    std::size_t per_class = 48;  // per (subject, class); 4:1:1 split-friendly
    std::size_t t_len = 32;
    std::size_t d_in = 16;
    double noise_sigma = 0.5;
    std::uint64_t seed = 0;
};

/// Deterministic multi-subject benchmark: shared class prototype
/// trajectories in a latent space, subject-specific mixing matrix and gain,
/// i.i.d. Gaussian noise. Split 4:1:1 per (subject, class) by index.
Dataset synth_benchmark(const SynthConfig& cfg);

struct KShotSplit {
    int target_subject = 0;
    std::size_t k = 0;
    std::vector<std::size_t> selected;   // k per class, target train split
    std::vector<std::size_t> remainder;  // unused target train indices
};

KShotSplit kshot_split(const Dataset& ds, int target_subject, std::size_t k, std::uint64_t seed);

}  // namespace sofa::data
