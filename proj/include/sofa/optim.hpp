#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sofa/graph.hpp"

namespace sofa::ad {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Named parameter collection with per-parameter Adam state. Iteration
/// order is insertion order and therefore deterministic.
class ParamStore {
public:
    NodePtr add(const std::string& name, Tensor init, bool trainable = true);
    NodePtr get(const std::string& name) const;
    bool has(const std::string& name) const;

    const std::vector<std::string>& names() const { return names_; }
    std::size_t size() const { return names_.size(); }

    void zero_grad();

    /// Standard Adam with bias correction; zeroes grads afterwards.
    void adam_step(const AdamConfig& cfg);

    /// Disables gradient accumulation on every parameter (frozen model).
    void freeze();
    bool frozen() const { return frozen_; }

    /// FNV-1a over names, shapes and raw value bytes; used by the freeze
    /// invariant checks and checkpoint mixing guards.
    std::uint64_t value_hash() const;

    /// Deep copy of values (fresh nodes, zero grads, fresh Adam state).
    ParamStore clone_values() const;

private:
    std::vector<std::string> names_;
    std::map<std::string, NodePtr> params_;
    std::map<std::string, Tensor> m_, v_;
    std::int64_t step_ = 0;
    bool frozen_ = false;
};

}  // namespace sofa::ad
