#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "embedlab/metrics.hpp"
#include "embedlab/types.hpp"

namespace embedlab::cli {

// options shared by every verb
struct CommonOpts {
    std::uint64_t seed = 42;
    std::size_t n_boot = 1000;
    unsigned threads = 0;  // 0 = EMBEDLAB_THREADS env or hardware
    bool no_timestamp = false;
    std::string out;
};

// header-indexed CSV without quoting (ids, numbers and bare strings)
struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    bool has(const std::string& name) const;
    std::size_t col(const std::string& name) const;  // throws DataError
    std::vector<double> numeric(const std::string& name) const;
    std::vector<int> integer(const std::string& name) const;
    std::vector<std::string> strings(const std::string& name) const;
    std::vector<std::string> columns_with_prefix(const std::string& prefix) const;
};

CsvTable read_csv_table(const std::string& path);

// predictions table: y_true, y_pred, optional score / prob_<c> columns
struct Predictions {
    std::vector<int> y_true;
    std::vector<int> y_pred;
    std::vector<double> score;  // empty when absent
    MatrixXdRM probs;           // 0x0 when absent
    std::size_t num_classes = 0;
};
Predictions read_predictions(const std::string& path);

// survival records: time, event, optional risk / cov_* / group columns
struct SurvivalTable {
    std::vector<double> time;
    std::vector<int> event;
    std::vector<double> risk;           // empty when absent
    MatrixXdRM covariates;              // 0x0 when absent
    std::vector<std::string> cov_names;
    std::vector<std::string> group;     // empty when absent
};
SurvivalTable read_survival(const std::string& path);

// class-name -> file-name token (spaces and path separators to underscores)
std::string sanitize_class_filename(const std::string& name);

// bootstrap a label-based metric over (y_true, y_pred) resamples
MetricEntry bootstrap_label_metric(
    const std::function<double(std::span<const int>, std::span<const int>)>& metric,
    std::span<const int> y_true, std::span<const int> y_pred, const CommonOpts& opts);

// parse "5,10,50" style lists
std::vector<std::size_t> parse_size_list(const std::string& csv);
std::vector<double> parse_double_list(const std::string& csv);

}  // namespace embedlab::cli
