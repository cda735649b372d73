#include "sofa/optim.hpp"

#include <cmath>
#include <cstring>

namespace sofa::ad {

NodePtr ParamStore::add(const std::string& name, Tensor init, bool trainable) {
    if (params_.count(name)) throw GraphError("ParamStore: duplicate parameter " + name);
    auto node = make_leaf(std::move(init), trainable);
    names_.push_back(name);
    params_[name] = node;
    m_[name] = Tensor::zeros(node->value.shape);
    v_[name] = Tensor::zeros(node->value.shape);
    return node;
}

NodePtr ParamStore::get(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw GraphError("ParamStore: unknown parameter " + name);
    return it->second;
}

bool ParamStore::has(const std::string& name) const { return params_.count(name) != 0; }

void ParamStore::zero_grad() {
    for (auto& n : names_) params_.at(n)->zero_grad();
}

void ParamStore::adam_step(const AdamConfig& cfg) {
    if (cfg.lr <= 0.0) throw GraphError("adam_step: lr must be positive");
    if (frozen_) throw GraphError("adam_step: parameter store is frozen");
    ++step_;
    const double bc1 = 1.0 - std::pow(cfg.beta1, double(step_));
    const double bc2 = 1.0 - std::pow(cfg.beta2, double(step_));
    for (auto& name : names_) {
        Node& p = *params_.at(name);
        Tensor& m = m_.at(name);
        Tensor& v = v_.at(name);
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            const double g = p.grad.v[i];
            m.v[i] = cfg.beta1 * m.v[i] + (1.0 - cfg.beta1) * g;
            v.v[i] = cfg.beta2 * v.v[i] + (1.0 - cfg.beta2) * g * g;
            const double mhat = m.v[i] / bc1;
            const double vhat = v.v[i] / bc2;
            p.value.v[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
        p.zero_grad();
    }
}

void ParamStore::freeze() {
    frozen_ = true;
    for (auto& name : names_) params_.at(name)->grad_enabled = false;
}

std::uint64_t ParamStore::value_hash() const {
    std::uint64_t h = 0xCBF29CE484222325ull;
    auto mix = [&h](const void* data, std::size_t len) {
        const unsigned char* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            h ^= p[i];
            h *= 0x100000001B3ull;
        }
    };
    for (auto& name : names_) {
        mix(name.data(), name.size());
        const Tensor& t = params_.at(name)->value;
        for (auto e : t.shape) mix(&e, sizeof(e));
        mix(t.v.data(), t.v.size() * sizeof(double));
    }
    return h;
}

ParamStore ParamStore::clone_values() const {
    ParamStore out;
    for (auto& name : names_) out.add(name, params_.at(name)->value);
    return out;
}

}  // namespace sofa::ad
