#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "sofa/data.hpp"
#include "sofa/models.hpp"

namespace sofa::eval {

struct EvalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Fraction of samples whose argmax logit equals the label; ties broken
/// toward the lowest class index.
double top1_accuracy(const models::ClassifierModel& model, const data::Dataset& ds,
                     const std::vector<std::size_t>& indices);
double top1_accuracy(const models::ClassifierModel& model, const data::Dataset& ds);

struct RunRow {
    int subject = 0;
    std::size_t k = 0;
    std::string method;
    std::uint64_t seed = 0;
    double val_acc = 0.0;
    double test_acc = 0.0;
};

struct Aggregate {
    int subject = 0;
    std::size_t k = 0;
    std::string method;
    std::size_t n_seeds = 0;
    double val_mean = 0.0, val_std = 0.0;
    double test_mean = 0.0, test_std = 0.0;
    bool single_seed = false;  // stddev reported as 0 and flagged
};

struct RunReport {
    int n_classes = 0;
    std::uint64_t dataset_hash = 0;
    std::vector<RunRow> rows;

    nlohmann::json to_json() const;
    static RunReport from_json(const nlohmann::json& j);
};

/// Merges reports and computes mean / sample (n-1) stddev per
/// (subject, k, method). Mixed class counts or dataset hashes are an error.
RunReport merge(const std::vector<RunReport>& reports);
std::vector<Aggregate> aggregate(const RunReport& report);

enum class TableFormat { tsv, markdown, json };
TableFormat table_format_from_name(const std::string& name);

/// Deterministic ordering: subject asc, k asc, method in
/// {baseline, mmd, iscon} order; percentages with one decimal.
std::string render_table(const RunReport& report, TableFormat format);

}  // namespace sofa::eval
