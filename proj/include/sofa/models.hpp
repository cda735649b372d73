#pragma once

#include <json.hpp>

#include "sofa/graph.hpp"
#include "sofa/optim.hpp"
#include "sofa/rng.hpp"

namespace sofa::models {

struct ModelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ModelConfig {
    std::size_t d_in = 128;      // channels per timestep
    std::size_t t_len = 160;     // timesteps after cropping
    std::size_t d_enc = 128;     // GRU hidden size
    std::size_t d_emb = 128;     // embedding size
    std::size_t n_classes = 40;

    nlohmann::json to_json() const;
    static ModelConfig from_json(const nlohmann::json& j);
    bool operator==(const ModelConfig&) const = default;
};

/// h(g(f(x))): single-layer GRU encoder, affine embedding, affine classifier.
class ClassifierModel {
public:
    ModelConfig cfg;
    ad::ParamStore params;

    static ClassifierModel init(const ModelConfig& cfg, std::uint64_t seed);
    static ClassifierModel from_params(const ModelConfig& cfg, ad::ParamStore params);

    /// Final hidden state of the GRU over x[batch, T, d_in].
    ad::NodePtr encode(const Tensor& x) const;
    ad::NodePtr embed(const ad::NodePtr& v) const;     // affine d_enc -> d_emb
    ad::NodePtr classify(const ad::NodePtr& w) const;  // logits, d_emb -> C

    ad::NodePtr forward(const Tensor& x) const { return classify(embed(encode(x))); }

    void freeze() { params.freeze(); }
};

struct GeneratorConfig {
    std::size_t d_z = 100;
    std::size_t hidden = 128;
    std::size_t d_emb = 128;
    std::size_t n_classes = 40;

    nlohmann::json to_json() const;
    static GeneratorConfig from_json(const nlohmann::json& j);
    bool operator==(const GeneratorConfig&) const = default;
};

/// Class-conditional feature generator: concat(z, one-hot c) -> MLP -> d_emb.
class GeneratorModel {
public:
    GeneratorConfig cfg;
    ad::ParamStore params;

    static GeneratorModel init(const GeneratorConfig& cfg, std::uint64_t seed);
    static GeneratorModel from_params(const GeneratorConfig& cfg, ad::ParamStore params);

    /// z[batch, d_z], c[batch, C] one-hot rows. Rejects rows that are not
    /// exactly one-hot.
    ad::NodePtr generate(const Tensor& z, const Tensor& c) const;

    void freeze() { params.freeze(); }
};

/// i.i.d. standard normal latents, deterministic per rng state.
Tensor sample_latent(std::size_t batch, std::size_t d_z, Rng& rng);

/// one-hot encode a batch of class indices
Tensor one_hot(const std::vector<int>& labels, std::size_t n_classes);

}  // namespace sofa::models
