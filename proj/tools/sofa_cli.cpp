// sofa: source-free subject adaptation pipeline driver.
//
// Subcommands: synth-data, train-source, train-generator, adapt, evaluate,
// report. Exit codes: 0 success, 2 usage error, 3 missing prerequisite file,
// 4 runtime failure. --out defaults to $SOFA_OUT_DIR. All artifacts are
// byte-deterministic for a fixed config.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "sofa/checkpoint.hpp"
#include "sofa/data.hpp"
#include "sofa/eval.hpp"
#include "sofa/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sofa;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 2;
constexpr int kMissing = 3;
constexpr int kRuntime = 4;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct MissingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    // synthetic dataset
    std::size_t subjects = 6;
    std::size_t classes = 10;
    std::size_t per_class = 48;
    std::size_t t_len = 32;
    std::size_t d_in = 16;
    double noise_sigma = 0.5;
    std::uint64_t data_seed = 0;
    // model dimensions
    std::size_t d_enc = 32;
    std::size_t d_emb = 32;
    std::size_t d_z = 16;
    std::size_t gen_hidden = 64;
    // per-stage training
    std::size_t epochs = 60;        // source stage
    std::size_t gen_epochs = 200;   // generator stage
    std::size_t adapt_epochs = 40;  // adaptation stage
    std::size_t batch_size = 256;
    std::size_t gen_steps = 2;
    std::size_t fake_batch = 0;  // 0: min(batch_size, 256)
    double lr = 0.002;
    double lambda = 1.0;
    double tau = 0.5;
    // adaptation cell
    std::string method = "iscon";
    std::size_t k = 1;
    int target_subject = 5;
    std::uint64_t seed = 0;
    // evaluate grid
    std::string methods = "baseline,mmd,iscon";
    std::string ks = "1,2,3,4,5";
    std::string seeds = "0,1,2";
};

json config_json(const RunConfig& c) {
    return json{{"subjects", c.subjects},
                {"classes", c.classes},
                {"per_class", c.per_class},
                {"t_len", c.t_len},
                {"d_in", c.d_in},
                {"noise_sigma", c.noise_sigma},
                {"data_seed", c.data_seed},
                {"d_enc", c.d_enc},
                {"d_emb", c.d_emb},
                {"d_z", c.d_z},
                {"gen_hidden", c.gen_hidden},
                {"epochs", c.epochs},
                {"gen_epochs", c.gen_epochs},
                {"adapt_epochs", c.adapt_epochs},
                {"batch_size", c.batch_size},
                {"gen_steps", c.gen_steps},
                {"fake_batch", c.fake_batch},
                {"lr", c.lr},
                {"lambda", c.lambda},
                {"tau", c.tau},
                {"method", c.method},
                {"k", c.k},
                {"target_subject", c.target_subject},
                {"seed", c.seed},
                {"methods", c.methods},
                {"ks", c.ks},
                {"seeds", c.seeds}};
}

void apply_kv(RunConfig& c, const std::string& key, const std::string& value) {
    try {
        if (key == "subjects") c.subjects = std::stoull(value);
        else if (key == "classes") c.classes = std::stoull(value);
        else if (key == "per_class") c.per_class = std::stoull(value);
        else if (key == "t_len") c.t_len = std::stoull(value);
        else if (key == "d_in") c.d_in = std::stoull(value);
        else if (key == "noise_sigma") c.noise_sigma = std::stod(value);
        else if (key == "data_seed") c.data_seed = std::stoull(value);
        else if (key == "d_enc") c.d_enc = std::stoull(value);
        else if (key == "d_emb") c.d_emb = std::stoull(value);
        else if (key == "d_z") c.d_z = std::stoull(value);
        else if (key == "gen_hidden") c.gen_hidden = std::stoull(value);
        else if (key == "epochs") c.epochs = std::stoull(value);
        else if (key == "gen_epochs") c.gen_epochs = std::stoull(value);
        else if (key == "adapt_epochs") c.adapt_epochs = std::stoull(value);
        else if (key == "batch_size") c.batch_size = std::stoull(value);
        else if (key == "gen_steps") c.gen_steps = std::stoull(value);
        else if (key == "fake_batch") c.fake_batch = std::stoull(value);
        else if (key == "lr") c.lr = std::stod(value);
        else if (key == "lambda") c.lambda = std::stod(value);
        else if (key == "tau") c.tau = std::stod(value);
        else if (key == "method") c.method = value;
        else if (key == "k") c.k = std::stoull(value);
        else if (key == "target_subject") c.target_subject = std::stoi(value);
        else if (key == "seed") c.seed = std::stoull(value);
        else if (key == "methods") c.methods = value;
        else if (key == "ks") c.ks = value;
        else if (key == "seeds") c.seeds = value;
        else throw UsageError("unknown config key: " + key);
    } catch (const std::invalid_argument&) {
        throw UsageError("bad value for config key " + key + ": " + value);
    } catch (const std::out_of_range&) {
        throw UsageError("bad value for config key " + key + ": " + value);
    }
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

void load_config_file(RunConfig& c, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingError(path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw UsageError(path + ":" + std::to_string(lineno) + ": expected key = value");
        apply_kv(c, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

/// Shared per-subcommand options: --config file, repeatable --set key=value,
/// plus ergonomic aliases for the common grid knobs.
struct CommonOpts {
    std::string config_file;
    std::vector<std::string> sets;
    std::string out_dir;
    std::optional<std::string> method;
    std::optional<std::size_t> k;
    std::optional<std::uint64_t> seed;
    std::optional<int> target;

    void attach(CLI::App* cmd, bool with_out = true) {
        cmd->add_option("--config", config_file, "flat key = value config file");
        cmd->add_option("--set", sets, "config override, key=value (repeatable)");
        if (with_out) cmd->add_option("--out", out_dir, "output directory (default $SOFA_OUT_DIR)");
        cmd->add_option("--method", method, "baseline | mmd | iscon");
        cmd->add_option("--k", k, "shots per class");
        cmd->add_option("--seed", seed, "run seed");
        cmd->add_option("--target-subject", target, "held-out subject id");
    }

    RunConfig resolve() const {
        RunConfig c;
        if (!config_file.empty()) load_config_file(c, config_file);
        for (auto& kv : sets) {
            auto eq = kv.find('=');
            if (eq == std::string::npos) throw UsageError("--set expects key=value, got: " + kv);
            apply_kv(c, trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
        }
        if (method) c.method = *method;
        if (k) c.k = *k;
        if (seed) c.seed = *seed;
        if (target) c.target_subject = *target;
        try {
            pipeline::method_from_name(c.method);  // validate early
        } catch (const pipeline::PipelineError& e) {
            throw UsageError(e.what());
        }
        return c;
    }

    fs::path resolve_out() const {
        std::string dir = out_dir;
        if (dir.empty())
            if (const char* env = std::getenv("SOFA_OUT_DIR")) dir = env;
        if (dir.empty()) throw UsageError("no output directory: pass --out or set SOFA_OUT_DIR");
        fs::create_directories(dir);
        return dir;
    }
};

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw std::runtime_error("cannot write " + path.string());
}

void echo_config(const fs::path& out, const std::string& command, const RunConfig& c) {
    write_text(out / "resolved_config.json",
               json{{"command", command}, {"config", config_json(c)}}.dump(2) + "\n");
}

void require_file(const std::string& path) {
    if (!fs::exists(path)) throw MissingError(path);
}

std::vector<std::uint64_t> parse_u64_list(const std::string& csv, const std::string& what) {
    std::vector<std::uint64_t> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = trim(tok);
        if (tok.empty()) continue;
        try {
            out.push_back(std::stoull(tok));
        } catch (...) {
            throw UsageError("bad " + what + " list entry: " + tok);
        }
    }
    if (out.empty()) throw UsageError("empty " + what + " list");
    return out;
}

std::vector<pipeline::Method> parse_method_list(const std::string& csv) {
    std::vector<pipeline::Method> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = trim(tok);
        if (tok.empty()) continue;
        try {
            out.push_back(pipeline::method_from_name(tok));
        } catch (const pipeline::PipelineError& e) {
            throw UsageError(e.what());
        }
    }
    if (out.empty()) throw UsageError("empty method list");
    return out;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex16(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", (unsigned long long)h);
    return buf;
}

// ---- stage drivers shared by the single-stage commands and `evaluate` ----

struct LogFile {
    std::ofstream out;
    explicit LogFile(const fs::path& path) : out(path, std::ios::binary) {}
    pipeline::LogFn fn() {
        return [this](const json& j) { out << j.dump() << "\n"; };
    }
};

models::ModelConfig model_config(const RunConfig& c, const data::Dataset& ds) {
    models::ModelConfig mc;
    mc.d_in = ds.d_in;
    mc.t_len = ds.t_len;
    mc.d_enc = c.d_enc;
    mc.d_emb = c.d_emb;
    mc.n_classes = std::size_t(ds.n_classes);
    return mc;
}

pipeline::StageConfig stage_config(const RunConfig& c, std::size_t epochs,
                                   std::uint64_t seed) {
    pipeline::StageConfig sc;
    sc.epochs = epochs;
    sc.batch_size = c.batch_size;
    sc.lr = c.lr;
    sc.lambda = c.lambda;
    sc.method = pipeline::method_from_name(c.method);
    sc.k = c.k;
    sc.target_subject = c.target_subject;
    sc.seed = seed;
    sc.fake_batch = c.fake_batch;
    sc.tau = c.tau;
    sc.gen_steps_per_epoch = c.gen_steps;
    return sc;
}

/// Trains the source classifier on every subject except the target and
/// writes a checkpoint whose manifest records the dataset hash.
void run_train_source(const RunConfig& c, const data::Dataset& ds, std::uint64_t seed,
                      const fs::path& ckpt_path, const fs::path& log_path) {
    std::vector<int> source_subjects;
    for (int s : ds.subjects)
        if (s != c.target_subject) source_subjects.push_back(s);
    if (source_subjects.empty()) throw std::runtime_error("no source subjects left");

    data::Dataset train = ds.subset(ds.indices_of(source_subjects, data::Split::train));
    data::Dataset val = ds.subset(ds.indices_of(source_subjects, data::Split::val));

    const auto mc = model_config(c, ds);
    auto sc = stage_config(c, c.epochs, seed);
    LogFile log(log_path);
    auto res = pipeline::train_source(train, val.size() ? &val : nullptr, mc, sc, log.fn());
    const auto& model = val.size() ? res.best_model : res.model;
    ckpt::save(ckpt_path.string(), model.params,
               json{{"kind", "source"},
                    {"model", mc.to_json()},
                    {"dataset_hash", ds.content_hash()},
                    {"target_subject", c.target_subject},
                    {"seed", seed}});
}

/// Trains the generator against a frozen source checkpoint; the manifest
/// records the source parameter hash so `adapt` can reject mixed stages.
void run_train_generator(const RunConfig& c, const ckpt::Loaded& src, std::uint64_t seed,
                         const fs::path& ckpt_path, const fs::path& log_path) {
    auto mc = models::ModelConfig::from_json(src.config.at("model"));
    auto judge = models::ClassifierModel::from_params(mc, src.params.clone_values());
    judge.freeze();

    models::GeneratorConfig gc;
    gc.d_z = c.d_z;
    gc.hidden = c.gen_hidden;
    gc.d_emb = mc.d_emb;
    gc.n_classes = mc.n_classes;

    auto sc = stage_config(c, c.gen_epochs, seed);
    LogFile log(log_path);
    auto gen = pipeline::train_generator(judge, gc, sc, log.fn());
    ckpt::save(ckpt_path.string(), gen.params,
               json{{"kind", "generator"},
                    {"generator", gc.to_json()},
                    {"source_hash", judge.params.value_hash()},
                    {"dataset_hash", src.config.at("dataset_hash")},
                    {"seed", seed}});
}

/// One adaptation cell. Returns the report row; writes the adapted model
/// when ckpt_path is non-empty.
eval::RunRow run_adapt(const RunConfig& c, const data::Dataset& ds, const ckpt::Loaded& src,
                       const ckpt::Loaded& gen, pipeline::Method method, std::size_t k,
                       std::uint64_t seed, const fs::path& ckpt_path,
                       const fs::path& log_path) {
    if (src.config.value("kind", "") != "source")
        throw std::runtime_error("checkpoint is not a source model");
    if (gen.config.value("kind", "") != "generator")
        throw std::runtime_error("checkpoint is not a generator");
    auto mc = models::ModelConfig::from_json(src.config.at("model"));
    auto source = models::ClassifierModel::from_params(mc, src.params.clone_values());
    auto gc = models::GeneratorConfig::from_json(gen.config.at("generator"));
    auto generator = models::GeneratorModel::from_params(gc, gen.params.clone_values());
    generator.freeze();

    if (gen.config.at("source_hash").get<std::uint64_t>() != source.params.value_hash())
        throw std::runtime_error("generator was trained against a different source model");
    if (src.config.at("dataset_hash").get<std::uint64_t>() != ds.content_hash())
        throw std::runtime_error("source model was trained on a different dataset");

    auto kshot = data::kshot_split(ds, c.target_subject, k, seed);
    data::Dataset target = ds.subset(kshot.selected);
    data::Dataset target_val = ds.subset(ds.indices_of({c.target_subject}, data::Split::val));
    data::Dataset target_test = ds.subset(ds.indices_of({c.target_subject}, data::Split::test));

    auto sc = stage_config(c, c.adapt_epochs, seed);
    sc.method = method;
    sc.k = k;
    LogFile log(log_path);
    auto res = pipeline::adapt_target(source, generator, target,
                                      target_val.size() ? &target_val : nullptr, sc, log.fn());
    const auto& model = target_val.size() ? res.best_model : res.model;

    eval::RunRow row;
    row.subject = c.target_subject;
    row.k = k;
    row.method = pipeline::method_name(method);
    row.seed = seed;
    row.val_acc = target_val.size() ? res.best_val_acc : 0.0;
    row.test_acc = target_test.size() ? eval::top1_accuracy(model, target_test) : 0.0;

    if (!ckpt_path.empty())
        ckpt::save(ckpt_path.string(), model.params,
                   json{{"kind", "adapted"},
                        {"model", mc.to_json()},
                        {"dataset_hash", ds.content_hash()},
                        {"method", row.method},
                        {"k", k},
                        {"target_subject", c.target_subject},
                        {"seed", seed}});
    return row;
}

// ---- subcommand entry points ----

int cmd_synth_data(const CommonOpts& opts) {
    RunConfig c = opts.resolve();
    fs::path out = opts.resolve_out();
    data::SynthConfig sc;
    sc.n_subjects = c.subjects;
    sc.n_classes = c.classes;
    sc.per_class = c.per_class;
    sc.t_len = c.t_len;
    sc.d_in = c.d_in;
    sc.noise_sigma = c.noise_sigma;
    sc.seed = c.data_seed;
    data::Dataset ds = data::synth_benchmark(sc);
    data::save_dataset((out / "dataset.eeg").string(), ds);
    echo_config(out, "synth-data", c);
    std::cout << json{{"dataset", (out / "dataset.eeg").string()},
                      {"samples", ds.size()},
                      {"dataset_hash", ds.content_hash()}}
                     .dump()
              << "\n";
    return kOk;
}

int cmd_train_source(const CommonOpts& opts, const std::string& data_path) {
    RunConfig c = opts.resolve();
    fs::path out = opts.resolve_out();
    require_file(data_path);
    data::Dataset ds = data::load_dataset(data_path);
    run_train_source(c, ds, c.seed, out / "source.ckpt", out / "source_log.jsonl");
    echo_config(out, "train-source", c);
    std::cout << json{{"checkpoint", (out / "source.ckpt").string()}}.dump() << "\n";
    return kOk;
}

int cmd_train_generator(const CommonOpts& opts, const std::string& source_path) {
    RunConfig c = opts.resolve();
    fs::path out = opts.resolve_out();
    require_file(source_path);
    auto src = ckpt::load(source_path);
    run_train_generator(c, src, c.seed, out / "generator.ckpt", out / "generator_log.jsonl");
    echo_config(out, "train-generator", c);
    std::cout << json{{"checkpoint", (out / "generator.ckpt").string()}}.dump() << "\n";
    return kOk;
}

int cmd_adapt(const CommonOpts& opts, const std::string& data_path,
              const std::string& source_path, const std::string& gen_path) {
    RunConfig c = opts.resolve();
    fs::path out = opts.resolve_out();
    require_file(data_path);
    require_file(source_path);
    require_file(gen_path);
    data::Dataset ds = data::load_dataset(data_path);
    auto src = ckpt::load(source_path);
    auto gen = ckpt::load(gen_path);
    auto row = run_adapt(c, ds, src, gen, pipeline::method_from_name(c.method), c.k, c.seed,
                         out / "adapted.ckpt", out / "adapt_log.jsonl");
    json row_j{{"subject", row.subject}, {"k", row.k},           {"method", row.method},
               {"seed", row.seed},       {"val_acc", row.val_acc}, {"test_acc", row.test_acc}};
    write_text(out / "row.json", row_j.dump(2) + "\n");
    echo_config(out, "adapt", c);
    std::cout << row_j.dump() << "\n";
    return kOk;
}

int cmd_evaluate(const CommonOpts& opts, const std::string& data_path) {
    RunConfig c = opts.resolve();
    fs::path out = opts.resolve_out();
    require_file(data_path);
    data::Dataset ds = data::load_dataset(data_path);

    auto methods = parse_method_list(c.methods);
    auto ks = parse_u64_list(c.ks, "k");
    auto seeds = parse_u64_list(c.seeds, "seed");

    fs::path cache = out / "cache";
    fs::create_directories(cache);
    // stage caches are keyed by the stage-relevant config and dataset hash,
    // so stale checkpoints from other configs are never reused
    const std::string src_key =
        json{{"d_enc", c.d_enc},   {"d_emb", c.d_emb}, {"epochs", c.epochs},
             {"batch", c.batch_size}, {"lr", c.lr},    {"target", c.target_subject},
             {"data", ds.content_hash()}}
            .dump();
    const std::string gen_key =
        json{{"src", src_key}, {"d_z", c.d_z},          {"hidden", c.gen_hidden},
             {"epochs", c.gen_epochs}, {"steps", c.gen_steps}}
            .dump();

    eval::RunReport report;
    report.n_classes = ds.n_classes;
    report.dataset_hash = ds.content_hash();

    for (std::uint64_t seed : seeds) {
        fs::path src_path =
            cache / ("source_" + hex16(fnv1a(src_key)) + "_s" + std::to_string(seed) + ".ckpt");
        if (!fs::exists(src_path))
            run_train_source(c, ds, seed, src_path,
                             cache / ("source_log_s" + std::to_string(seed) + ".jsonl"));
        auto src = ckpt::load(src_path.string());

        fs::path gen_path =
            cache / ("generator_" + hex16(fnv1a(gen_key)) + "_s" + std::to_string(seed) + ".ckpt");
        if (!fs::exists(gen_path))
            run_train_generator(c, src, seed, gen_path,
                                cache / ("generator_log_s" + std::to_string(seed) + ".jsonl"));
        auto gen = ckpt::load(gen_path.string());

        for (std::uint64_t k : ks)
            for (auto method : methods) {
                const std::string cell = std::string(pipeline::method_name(method)) + "_k" +
                                         std::to_string(k) + "_s" + std::to_string(seed);
                auto row = run_adapt(c, ds, src, gen, method, k, seed, {},
                                     cache / ("adapt_log_" + cell + ".jsonl"));
                report.rows.push_back(row);
                std::cout << json{{"cell", cell}, {"test_acc", row.test_acc}}.dump() << "\n";
            }
    }
    write_text(out / "report.json", report.to_json().dump(2) + "\n");
    echo_config(out, "evaluate", c);
    std::cout << json{{"report", (out / "report.json").string()},
                      {"rows", report.rows.size()}}
                     .dump()
              << "\n";
    return kOk;
}

int cmd_report(const std::string& report_path, const std::string& format,
               const std::string& out_file) {
    require_file(report_path);
    std::ifstream in(report_path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error("cannot parse " + report_path + ": " + e.what());
    }
    auto report = eval::RunReport::from_json(j);
    std::string table = eval::render_table(report, eval::table_format_from_name(format));
    if (!out_file.empty())
        write_text(out_file, table);
    else
        std::cout << table;
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"source-free subject adaptation for EEG classification"};
    app.require_subcommand(1);

    CommonOpts synth_o, src_o, gen_o, adapt_o, eval_o;
    std::string data_path, source_path, gen_path, report_path, out_file;
    std::string format = "tsv";

    auto* synth = app.add_subcommand("synth-data", "generate the synthetic multi-subject benchmark");
    synth_o.attach(synth);

    auto* train_src = app.add_subcommand("train-source", "train the source classifier");
    src_o.attach(train_src);
    train_src->add_option("--data", data_path, "dataset file")->required();

    auto* train_gen = app.add_subcommand("train-generator",
                                         "train the conditional feature generator");
    gen_o.attach(train_gen);
    train_gen->add_option("--source", source_path, "source checkpoint")->required();

    auto* adapt = app.add_subcommand("adapt", "adapt to the target subject with k shots");
    adapt_o.attach(adapt);
    adapt->add_option("--data", data_path, "dataset file")->required();
    adapt->add_option("--source", source_path, "source checkpoint")->required();
    adapt->add_option("--generator", gen_path, "generator checkpoint")->required();

    auto* evaluate = app.add_subcommand("evaluate", "run the full (k, method, seed) grid");
    eval_o.attach(evaluate);
    evaluate->add_option("--data", data_path, "dataset file")->required();

    auto* report = app.add_subcommand("report", "render a report as a table");
    report->add_option("--report", report_path, "report.json path")->required();
    report->add_option("--format", format, "tsv | markdown | json");
    report->add_option("--out", out_file, "write the table here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (synth->parsed()) return cmd_synth_data(synth_o);
        if (train_src->parsed()) return cmd_train_source(src_o, data_path);
        if (train_gen->parsed()) return cmd_train_generator(gen_o, source_path);
        if (adapt->parsed()) return cmd_adapt(adapt_o, data_path, source_path, gen_path);
        if (evaluate->parsed()) return cmd_evaluate(eval_o, data_path);
        if (report->parsed()) return cmd_report(report_path, format, out_file);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const MissingError& e) {
        std::cerr << "error: missing prerequisite: " << e.what() << "\n";
        return kMissing;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntime;
    }
    return kUsage;
}
