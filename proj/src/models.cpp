#include "sofa/models.hpp"

#include <cmath>

namespace sofa::models {

using namespace sofa::ad;

nlohmann::json ModelConfig::to_json() const {
    return {{"d_in", d_in},   {"t_len", t_len},         {"d_enc", d_enc},
            {"d_emb", d_emb}, {"n_classes", n_classes}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.d_in = j.at("d_in");
    c.t_len = j.at("t_len");
    c.d_enc = j.at("d_enc");
    c.d_emb = j.at("d_emb");
    c.n_classes = j.at("n_classes");
    return c;
}

nlohmann::json GeneratorConfig::to_json() const {
    return {{"d_z", d_z}, {"hidden", hidden}, {"d_emb", d_emb}, {"n_classes", n_classes}};
}

GeneratorConfig GeneratorConfig::from_json(const nlohmann::json& j) {
    GeneratorConfig c;
    c.d_z = j.at("d_z");
    c.hidden = j.at("hidden");
    c.d_emb = j.at("d_emb");
    c.n_classes = j.at("n_classes");
    return c;
}

namespace {

void check_config(const ModelConfig& c) {
    if (c.d_in < 1 || c.t_len < 1 || c.d_enc < 1 || c.d_emb < 1 || c.n_classes < 1)
        throw ModelError("ModelConfig: all extents must be >= 1");
}

// uniform in +-1/sqrt(fan_in)
Tensor init_matrix(std::size_t rows, std::size_t cols, std::size_t fan_in, Rng& rng) {
    double bound = 1.0 / std::sqrt(double(fan_in));
    Tensor t = Tensor::zeros({rows, cols});
    for (auto& x : t.v) x = rng.uniform(-bound, bound);
    return t;
}

}  // namespace

ClassifierModel ClassifierModel::init(const ModelConfig& cfg, std::uint64_t seed) {
    check_config(cfg);
    Rng rng(seed);
    ClassifierModel m;
    m.cfg = cfg;
    const auto din = cfg.d_in, denc = cfg.d_enc, demb = cfg.d_emb, C = cfg.n_classes;
    for (const char* gate : {"z", "r", "h"}) {
        m.params.add(std::string("gru.W_") + gate, init_matrix(din, denc, din, rng));
        m.params.add(std::string("gru.U_") + gate, init_matrix(denc, denc, denc, rng));
        m.params.add(std::string("gru.b_") + gate, Tensor::zeros({denc}));
    }
    m.params.add("emb.W", init_matrix(denc, demb, denc, rng));
    m.params.add("emb.b", Tensor::zeros({demb}));
    m.params.add("cls.W", init_matrix(demb, C, demb, rng));
    m.params.add("cls.b", Tensor::zeros({C}));
    return m;
}

ClassifierModel ClassifierModel::from_params(const ModelConfig& cfg, ad::ParamStore params) {
    check_config(cfg);
    ClassifierModel m;
    m.cfg = cfg;
    m.params = std::move(params);
    for (const char* name : {"gru.W_z", "gru.U_z", "gru.b_z", "gru.W_r", "gru.U_r", "gru.b_r",
                             "gru.W_h", "gru.U_h", "gru.b_h", "emb.W", "emb.b", "cls.W", "cls.b"})
        if (!m.params.has(name)) throw ModelError(std::string("missing parameter ") + name);
    if (m.params.get("gru.W_z")->value.shape != Shape{cfg.d_in, cfg.d_enc} ||
        m.params.get("emb.W")->value.shape != Shape{cfg.d_enc, cfg.d_emb} ||
        m.params.get("cls.W")->value.shape != Shape{cfg.d_emb, cfg.n_classes})
        throw ModelError("parameter shapes inconsistent with model config");
    return m;
}

ad::NodePtr ClassifierModel::encode(const Tensor& x) const {
    if (x.rank() != 3 || x.shape[1] != cfg.t_len || x.shape[2] != cfg.d_in)
        throw ModelError("encode: input shape " + shape_str(x.shape) + " does not match config [*," +
                         std::to_string(cfg.t_len) + "," + std::to_string(cfg.d_in) + "]");
    x.require_finite("encode input");
    const std::size_t batch = x.shape[0];

    auto xn = make_leaf(x, /*grad_enabled=*/false);
    auto Wz = params.get("gru.W_z"), Uz = params.get("gru.U_z"), bz = params.get("gru.b_z");
    auto Wr = params.get("gru.W_r"), Ur = params.get("gru.U_r"), br = params.get("gru.b_r");
    auto Wh = params.get("gru.W_h"), Uh = params.get("gru.U_h"), bh = params.get("gru.b_h");

    NodePtr h = make_leaf(Tensor::zeros({batch, cfg.d_enc}), false);
    for (std::size_t t = 0; t < cfg.t_len; ++t) {
        auto xt = slice_time(xn, t);
        auto z = sigmoid(add(add(matmul(xt, Wz), matmul(h, Uz)), bz));
        auto r = sigmoid(add(add(matmul(xt, Wr), matmul(h, Ur)), br));
        auto hc = tanh_op(add(add(matmul(xt, Wh), matmul(mul(r, h), Uh)), bh));
        // h = (1-z) .* h + z .* hc
        h = add(mul(affine(z, -1.0, 1.0), h), mul(z, hc));
    }
    return h;
}

ad::NodePtr ClassifierModel::embed(const ad::NodePtr& v) const {
    return add(matmul(v, params.get("emb.W")), params.get("emb.b"));
}

ad::NodePtr ClassifierModel::classify(const ad::NodePtr& w) const {
    return add(matmul(w, params.get("cls.W")), params.get("cls.b"));
}

GeneratorModel GeneratorModel::init(const GeneratorConfig& cfg, std::uint64_t seed) {
    if (cfg.d_z < 1 || cfg.hidden < 1 || cfg.d_emb < 1 || cfg.n_classes < 1)
        throw ModelError("GeneratorConfig: all extents must be >= 1");
    Rng rng(seed);
    GeneratorModel g;
    g.cfg = cfg;
    const std::size_t in = cfg.d_z + cfg.n_classes;
    g.params.add("fc1.W", init_matrix(in, cfg.hidden, in, rng));
    g.params.add("fc1.b", Tensor::zeros({cfg.hidden}));
    g.params.add("fc2.W", init_matrix(cfg.hidden, cfg.hidden, cfg.hidden, rng));
    g.params.add("fc2.b", Tensor::zeros({cfg.hidden}));
    g.params.add("fc3.W", init_matrix(cfg.hidden, cfg.d_emb, cfg.hidden, rng));
    g.params.add("fc3.b", Tensor::zeros({cfg.d_emb}));
    return g;
}

GeneratorModel GeneratorModel::from_params(const GeneratorConfig& cfg, ad::ParamStore params) {
    GeneratorModel g;
    g.cfg = cfg;
    g.params = std::move(params);
    for (const char* name : {"fc1.W", "fc1.b", "fc2.W", "fc2.b", "fc3.W", "fc3.b"})
        if (!g.params.has(name)) throw ModelError(std::string("missing parameter ") + name);
    if (g.params.get("fc1.W")->value.shape != Shape{cfg.d_z + cfg.n_classes, cfg.hidden} ||
        g.params.get("fc3.W")->value.shape != Shape{cfg.hidden, cfg.d_emb})
        throw ModelError("generator parameter shapes inconsistent with config");
    return g;
}

ad::NodePtr GeneratorModel::generate(const Tensor& z, const Tensor& c) const {
    if (z.rank() != 2 || z.shape[1] != cfg.d_z)
        throw ModelError("generate: latent shape " + shape_str(z.shape));
    if (c.rank() != 2 || c.shape[0] != z.shape[0] || c.shape[1] != cfg.n_classes)
        throw ModelError("generate: class-code shape " + shape_str(c.shape));
    for (std::size_t i = 0; i < c.shape[0]; ++i) {
        int ones = 0;
        for (std::size_t j = 0; j < c.shape[1]; ++j) {
            double x = c.at2(i, j);
            if (x == 1.0) ++ones;
            else if (x != 0.0) ones = -1000;
        }
        if (ones != 1)
            throw ModelError("generate: row " + std::to_string(i) + " of class codes is not one-hot");
    }
    auto zn = make_leaf(z, false);
    auto cn = make_leaf(c, false);
    auto h = concat_cols(zn, cn);
    h = relu(add(matmul(h, params.get("fc1.W")), params.get("fc1.b")));
    h = relu(add(matmul(h, params.get("fc2.W")), params.get("fc2.b")));
    return add(matmul(h, params.get("fc3.W")), params.get("fc3.b"));
}

Tensor sample_latent(std::size_t batch, std::size_t d_z, Rng& rng) {
    Tensor t = Tensor::zeros({batch, d_z});
    for (auto& x : t.v) x = rng.normal();
    return t;
}

Tensor one_hot(const std::vector<int>& labels, std::size_t n_classes) {
    Tensor t = Tensor::zeros({labels.size(), n_classes});
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || std::size_t(labels[i]) >= n_classes)
            throw ModelError("one_hot: label " + std::to_string(labels[i]) + " out of range");
        t.at2(i, std::size_t(labels[i])) = 1.0;
    }
    return t;
}

}  // namespace sofa::models
