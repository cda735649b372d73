#include "sofa/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "sofa/pipeline.hpp"

namespace sofa::eval {

double top1_accuracy(const models::ClassifierModel& model, const data::Dataset& ds,
                     const std::vector<std::size_t>& indices) {
    if (indices.empty()) throw EvalError("top1_accuracy: empty split");
    const std::size_t C = model.cfg.n_classes;
    std::size_t correct = 0;
    // evaluate in modest chunks to bound tape size
    const std::size_t chunk = 256;
    for (std::size_t start = 0; start < indices.size(); start += chunk) {
        std::vector<std::size_t> part(
            indices.begin() + std::ptrdiff_t(start),
            indices.begin() + std::ptrdiff_t(std::min(start + chunk, indices.size())));
        auto [x, labels] = pipeline::gather_batch(ds, part);
        auto logits = model.forward(x);
        const Tensor& L = logits->value;
        for (std::size_t i = 0; i < part.size(); ++i) {
            std::size_t best = 0;
            for (std::size_t c = 1; c < C; ++c)
                if (L.at2(i, c) > L.at2(i, best)) best = c;  // ties keep the lowest index
            if (int(best) == labels[i]) ++correct;
        }
    }
    return double(correct) / double(indices.size());
}

double top1_accuracy(const models::ClassifierModel& model, const data::Dataset& ds) {
    std::vector<std::size_t> all(ds.size());
    std::iota(all.begin(), all.end(), 0);
    return top1_accuracy(model, ds, all);
}

nlohmann::json RunReport::to_json() const {
    nlohmann::json j;
    j["n_classes"] = n_classes;
    j["dataset_hash"] = dataset_hash;
    auto& rows_j = j["rows"] = nlohmann::json::array();
    for (auto& r : rows) {
        rows_j.push_back({{"subject", r.subject},
                          {"k", r.k},
                          {"method", r.method},
                          {"seed", r.seed},
                          {"val_acc", r.val_acc},
                          {"test_acc", r.test_acc}});
    }
    return j;
}

RunReport RunReport::from_json(const nlohmann::json& j) {
    RunReport r;
    r.n_classes = j.at("n_classes");
    r.dataset_hash = j.at("dataset_hash");
    for (auto& rj : j.at("rows")) {
        RunRow row;
        row.subject = rj.at("subject");
        row.k = rj.at("k");
        row.method = rj.at("method");
        row.seed = rj.at("seed");
        row.val_acc = rj.at("val_acc");
        row.test_acc = rj.at("test_acc");
        if (row.val_acc < 0.0 || row.val_acc > 1.0 || row.test_acc < 0.0 || row.test_acc > 1.0)
            throw EvalError("RunReport: accuracy outside [0,1]");
        r.rows.push_back(std::move(row));
    }
    return r;
}

RunReport merge(const std::vector<RunReport>& reports) {
    if (reports.empty()) throw EvalError("merge: no reports");
    RunReport out = reports.front();
    for (std::size_t i = 1; i < reports.size(); ++i) {
        if (reports[i].n_classes != out.n_classes)
            throw EvalError("merge: mixed class counts across reports");
        if (reports[i].dataset_hash != out.dataset_hash)
            throw EvalError("merge: mixed dataset hashes across reports");
        out.rows.insert(out.rows.end(), reports[i].rows.begin(), reports[i].rows.end());
    }
    return out;
}

namespace {

int method_order(const std::string& m) {
    if (m == "baseline") return 0;
    if (m == "mmd") return 1;
    if (m == "iscon") return 2;
    return 3;
}

struct Key {
    int subject;
    std::size_t k;
    int morder;
    std::string method;
    bool operator<(const Key& o) const {
        return std::tie(subject, k, morder) < std::tie(o.subject, o.k, o.morder);
    }
};

std::pair<double, double> mean_std(const std::vector<double>& xs) {
    const double n = double(xs.size());
    double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    if (xs.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / (n - 1.0))};
}

std::string pct(double frac) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", frac * 100.0);
    return buf;
}

}  // namespace

std::vector<Aggregate> aggregate(const RunReport& report) {
    std::map<Key, std::pair<std::vector<double>, std::vector<double>>> groups;
    for (auto& r : report.rows) {
        if (r.val_acc < 0.0 || r.val_acc > 1.0 || r.test_acc < 0.0 || r.test_acc > 1.0)
            throw EvalError("aggregate: accuracy outside [0,1]");
        auto& g = groups[Key{r.subject, r.k, method_order(r.method), r.method}];
        g.first.push_back(r.val_acc);
        g.second.push_back(r.test_acc);
    }
    std::vector<Aggregate> out;
    for (auto& [key, vals] : groups) {
        Aggregate a;
        a.subject = key.subject;
        a.k = key.k;
        a.method = key.method;
        a.n_seeds = vals.first.size();
        a.single_seed = vals.first.size() == 1;
        std::tie(a.val_mean, a.val_std) = mean_std(vals.first);
        std::tie(a.test_mean, a.test_std) = mean_std(vals.second);
        out.push_back(std::move(a));
    }
    return out;
}

TableFormat table_format_from_name(const std::string& name) {
    if (name == "tsv") return TableFormat::tsv;
    if (name == "markdown") return TableFormat::markdown;
    if (name == "json") return TableFormat::json;
    throw EvalError("unknown table format: " + name);
}

std::string render_table(const RunReport& report, TableFormat format) {
    const auto aggs = aggregate(report);
    std::ostringstream os;
    switch (format) {
        case TableFormat::json:
            return report.to_json().dump(2) + "\n";
        case TableFormat::tsv: {
            os << "subject\tk\tmethod\tseeds\tval_mean\tval_std\ttest_mean\ttest_std\n";
            for (auto& a : aggs)
                os << a.subject << '\t' << a.k << '\t' << a.method << '\t' << a.n_seeds << '\t'
                   << pct(a.val_mean) << '\t' << pct(a.val_std) << '\t' << pct(a.test_mean)
                   << '\t' << pct(a.test_std) << '\n';
            return os.str();
        }
        case TableFormat::markdown: {
            os << "| subject | k | method | seeds | val acc | test acc |\n";
            os << "|---|---|---|---|---|---|\n";
            for (auto& a : aggs)
                os << "| " << a.subject << " | " << a.k << " | " << a.method << " | " << a.n_seeds
                   << " | " << pct(a.val_mean) << " \xc2\xb1" << pct(a.val_std) << " | "
                   << pct(a.test_mean) << " \xc2\xb1" << pct(a.test_std) << " |\n";
            return os.str();
        }
    }
    throw EvalError("render_table: bad format");
}

}  // namespace sofa::eval
