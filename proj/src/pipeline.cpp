#include "sofa/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sofa/eval.hpp"

namespace sofa::pipeline {

using namespace sofa::ad;
using sofa::data::Dataset;
using sofa::models::ClassifierModel;
using sofa::models::GeneratorModel;

const char* method_name(Method m) {
    switch (m) {
        case Method::baseline: return "baseline";
        case Method::mmd: return "mmd";
        case Method::iscon: return "iscon";
    }
    return "?";
}

Method method_from_name(const std::string& name) {
    if (name == "baseline") return Method::baseline;
    if (name == "mmd") return Method::mmd;
    if (name == "iscon") return Method::iscon;
    throw PipelineError("unknown method: " + name);
}

void StageConfig::validate() const {
    // epochs == 0 is a legal no-op: the stage returns its initialized model
    if (batch_size < 1) throw PipelineError("StageConfig: batch_size must be >= 1");
    if (lr <= 0.0) throw PipelineError("StageConfig: lr must be positive");
    if (lambda < 0.0) throw PipelineError("StageConfig: lambda must be >= 0");
    if (tau <= 0.0) throw PipelineError("StageConfig: tau must be positive");
}

SourceFreeGuard::SourceFreeGuard(std::string stage, std::set<int> forbidden_subjects,
                                 bool forbid_all)
    : stage_(std::move(stage)), forbidden_(std::move(forbidden_subjects)),
      forbid_all_(forbid_all) {
    previous_ = data::access_guard();
    data::set_access_guard(this);
}

SourceFreeGuard::~SourceFreeGuard() { data::set_access_guard(previous_); }

void SourceFreeGuard::on_access(int subject) {
    ++accesses_;
    if (forbid_all_ || forbidden_.count(subject)) {
        ++forbidden_accesses_;
        throw PipelineError("source-free violation in stage " + stage_ +
                            ": accessed sample of forbidden subject " + std::to_string(subject));
    }
}

std::pair<Tensor, std::vector<int>> gather_batch(const Dataset& ds,
                                                 const std::vector<std::size_t>& indices) {
    if (indices.empty()) throw PipelineError("gather_batch: empty index set");
    Tensor x = Tensor::zeros({indices.size(), ds.t_len, ds.d_in});
    std::vector<int> labels;
    labels.reserve(indices.size());
    const std::size_t per = ds.t_len * ds.d_in;
    for (std::size_t b = 0; b < indices.size(); ++b) {
        const auto& s = ds.sample(indices[b]);
        std::copy(s.signal.v.begin(), s.signal.v.end(), x.v.begin() + std::ptrdiff_t(b * per));
        labels.push_back(s.label);
    }
    return {std::move(x), std::move(labels)};
}

namespace {

void emit(const LogFn& log, nlohmann::json j) {
    if (log) log(std::move(j));
}

}  // namespace

TrainResult train_source(const Dataset& train, const Dataset* val, const models::ModelConfig& mc,
                         const StageConfig& cfg, const LogFn& log) {
    cfg.validate();
    if (train.size() == 0) throw PipelineError("train_source: empty dataset");
    train.validate();

    ClassifierModel model = ClassifierModel::init(mc, Rng(cfg.seed).derive(0xA1));
    Rng shuffle_rng(Rng(cfg.seed).derive(0xA2));
    AdamConfig adam{cfg.lr};

    TrainResult result{ClassifierModel::from_params(mc, model.params.clone_values()),
                       ClassifierModel::from_params(mc, model.params.clone_values()), -1.0};
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double epoch_loss = 0.0;
        std::size_t steps = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            std::vector<std::size_t> batch(
                order.begin() + std::ptrdiff_t(start),
                order.begin() + std::ptrdiff_t(std::min(start + cfg.batch_size, order.size())));
            auto [x, labels] = gather_batch(train, batch);
            auto loss = losses::cross_entropy(model.forward(x), labels);
            model.params.zero_grad();
            backward(loss);
            model.params.adam_step(adam);
            epoch_loss += loss->value.v[0];
            ++steps;
        }
        epoch_loss /= double(steps);

        double val_acc = -1.0;
        if (val) {
            val_acc = eval::top1_accuracy(model, *val);
            if (val_acc > result.best_val_acc) {
                result.best_val_acc = val_acc;
                result.best_model = ClassifierModel::from_params(mc, model.params.clone_values());
            }
        }
        emit(log, {{"stage", "source"},
                   {"epoch", epoch},
                   {"loss_cls", epoch_loss},
                   {"loss_align", 0.0},
                   {"loss_total", epoch_loss},
                   {"val_acc", val_acc}});
    }
    result.model = std::move(model);
    if (!val) result.best_model = ClassifierModel::from_params(mc, result.model.params.clone_values());
    return result;
}

GeneratorModel train_generator(const ClassifierModel& frozen_src, const models::GeneratorConfig& gc,
                               const StageConfig& cfg, const LogFn& log) {
    cfg.validate();
    if (!frozen_src.params.frozen())
        throw PipelineError("train_generator: source model must be frozen");
    if (gc.d_emb != frozen_src.cfg.d_emb || gc.n_classes != frozen_src.cfg.n_classes)
        throw PipelineError("train_generator: generator/classifier dimension mismatch");

    const std::uint64_t src_hash_before = frozen_src.params.value_hash();

    // stage (b) consumes no dataset at all; any guarded access is a violation
    SourceFreeGuard guard("generator-training", {}, /*forbid_all=*/true);

    GeneratorModel gen = GeneratorModel::init(gc, Rng(cfg.seed).derive(0xB1));
    Rng rng(Rng(cfg.seed).derive(0xB2));
    AdamConfig adam{cfg.lr};

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        double epoch_loss = 0.0;
        for (std::size_t step = 0; step < cfg.gen_steps_per_epoch; ++step) {
            Tensor z = models::sample_latent(cfg.batch_size, gc.d_z, rng);
            std::vector<int> codes(cfg.batch_size);
            for (auto& c : codes) c = int(rng.below(gc.n_classes));
            auto out = gen.generate(z, models::one_hot(codes, gc.n_classes));
            auto loss = losses::generator_loss(out, codes, frozen_src);
            gen.params.zero_grad();
            backward(loss);
            gen.params.adam_step(adam);
            epoch_loss += loss->value.v[0];
        }
        epoch_loss /= double(cfg.gen_steps_per_epoch);
        emit(log, {{"stage", "generator"},
                   {"epoch", epoch},
                   {"loss_cls", epoch_loss},
                   {"loss_align", 0.0},
                   {"loss_total", epoch_loss},
                   {"val_acc", -1.0}});
        // frozen judge must not drift
        for (auto& name : frozen_src.params.names()) {
            const Tensor& g = frozen_src.params.get(name)->grad;
            for (double x : g.v)
                if (x != 0.0)
                    throw PipelineError("train_generator: frozen source parameter " + name +
                                        " accumulated gradient");
        }
    }
    if (frozen_src.params.value_hash() != src_hash_before)
        throw PipelineError("train_generator: frozen source parameters changed");
    return gen;
}

TrainResult adapt_target(const ClassifierModel& src, const GeneratorModel& frozen_gen,
                         const Dataset& target_kshot, const Dataset* target_val,
                         const StageConfig& cfg, const LogFn& log) {
    cfg.validate();
    if (target_kshot.size() == 0) throw PipelineError("adapt_target: empty target set");
    if (!frozen_gen.params.frozen())
        throw PipelineError("adapt_target: generator must be frozen");
    if (frozen_gen.cfg.d_emb != src.cfg.d_emb || frozen_gen.cfg.n_classes != src.cfg.n_classes)
        throw PipelineError("adapt_target: generator/classifier dimension mismatch");
    for (std::size_t i = 0; i < target_kshot.size(); ++i)
        if (target_kshot.subject_of(i) != cfg.target_subject)
            throw PipelineError("adapt_target: target set contains a non-target subject sample");

    // only the target subject is legal in stage (c)
    std::set<int> forbidden(target_kshot.subjects.begin(), target_kshot.subjects.end());
    forbidden.erase(cfg.target_subject);
    SourceFreeGuard guard("target-adaptation", forbidden);

    const std::uint64_t gen_hash_before = frozen_gen.params.value_hash();
    const std::size_t C = src.cfg.n_classes;
    const std::size_t fake_n = cfg.resolved_fake_batch();

    ClassifierModel model = ClassifierModel::from_params(src.cfg, src.params.clone_values());
    Rng rng(Rng(cfg.seed).derive(0xC1));
    Rng shuffle_rng(Rng(cfg.seed).derive(0xC2));
    AdamConfig adam{cfg.lr};

    TrainResult result{ClassifierModel::from_params(src.cfg, model.params.clone_values()),
                       ClassifierModel::from_params(src.cfg, model.params.clone_values()), -1.0};

    std::vector<std::size_t> order(target_kshot.size());
    std::iota(order.begin(), order.end(), 0);
    const bool full_batch = target_kshot.size() <= fake_n;

    losses::MmdConfig mmd_cfg;
    losses::ConLossConfig con_cfg;
    con_cfg.temperature = cfg.tau;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        if (!full_batch) shuffle_rng.shuffle(order);
        double el_cls = 0.0, el_align = 0.0, el_total = 0.0;
        std::size_t steps = 0;
        const std::size_t stride = full_batch ? order.size() : fake_n;
        for (std::size_t start = 0; start < order.size(); start += stride) {
            std::vector<std::size_t> batch(
                order.begin() + std::ptrdiff_t(start),
                order.begin() + std::ptrdiff_t(std::min(start + stride, order.size())));
            auto [x, labels] = gather_batch(target_kshot, batch);
            auto w_trg = model.embed(model.encode(x));
            auto cls = losses::cross_entropy(model.classify(w_trg), labels);

            NodePtr align;
            if (cfg.method == Method::baseline) {
                align = make_leaf(Tensor::scalar(0.0), false);
            } else {
                // class-balanced fake batch from the frozen generator
                std::vector<int> codes(fake_n);
                if (cfg.balanced_fake) {
                    for (std::size_t i = 0; i < fake_n; ++i) codes[i] = int(i % C);
                } else {
                    for (auto& c : codes) c = int(rng.below(C));
                }
                Tensor z = models::sample_latent(fake_n, frozen_gen.cfg.d_z, rng);
                auto w_src = frozen_gen.generate(z, models::one_hot(codes, C));
                if (cfg.method == Method::mmd) {
                    align = losses::mmd_loss(w_src, w_trg, mmd_cfg);
                } else {
                    auto all = concat_rows(w_src, w_trg);
                    losses::BatchMeta meta;
                    meta.labels = codes;
                    meta.labels.insert(meta.labels.end(), labels.begin(), labels.end());
                    meta.subjects.assign(fake_n, kPseudoSubject);
                    meta.subjects.insert(meta.subjects.end(), batch.size(), cfg.target_subject);
                    align = losses::iscon_loss(all, meta, con_cfg);
                }
            }
            auto total = losses::total_loss(cls, align, cfg.lambda);
            model.params.zero_grad();
            backward(total);
            model.params.adam_step(adam);
            el_cls += cls->value.v[0];
            el_align += align->value.v[0];
            el_total += total->value.v[0];
            ++steps;
        }

        double val_acc = -1.0;
        if (target_val) {
            val_acc = eval::top1_accuracy(model, *target_val);
            if (val_acc > result.best_val_acc) {
                result.best_val_acc = val_acc;
                result.best_model =
                    ClassifierModel::from_params(src.cfg, model.params.clone_values());
            }
        }
        emit(log, {{"stage", "adapt"},
                   {"epoch", epoch},
                   {"loss_cls", el_cls / double(steps)},
                   {"loss_align", el_align / double(steps)},
                   {"loss_total", el_total / double(steps)},
                   {"val_acc", val_acc}});
    }
    if (frozen_gen.params.value_hash() != gen_hash_before)
        throw PipelineError("adapt_target: frozen generator parameters changed");
    result.model = std::move(model);
    if (!target_val)
        result.best_model =
            ClassifierModel::from_params(src.cfg, result.model.params.clone_values());
    return result;
}

}  // namespace sofa::pipeline
