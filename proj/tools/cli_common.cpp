#include "cli_common.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "embedlab/errors.hpp"
#include "embedlab/parallel.hpp"

namespace embedlab::cli {

bool CsvTable::has(const std::string& name) const {
    return std::find(columns.begin(), columns.end(), name) != columns.end();
}

std::size_t CsvTable::col(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end())
        throw DataError("missing column '" + name + "'");
    return static_cast<std::size_t>(it - columns.begin());
}

std::vector<double> CsvTable::numeric(const std::string& name) const {
    const std::size_t c = col(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::string& s = rows[i][c];
        double v = 0.0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
            throw DataError("row " + std::to_string(i + 2) + ", column '" + name +
                            "': bad number '" + s + "'");
        out.push_back(v);
    }
    return out;
}

std::vector<int> CsvTable::integer(const std::string& name) const {
    const auto vals = numeric(name);
    std::vector<int> out(vals.size());
    for (std::size_t i = 0; i < vals.size(); ++i) {
        out[i] = static_cast<int>(vals[i]);
        if (static_cast<double>(out[i]) != vals[i])
            throw DataError("column '" + name + "' must be integer");
    }
    return out;
}

std::vector<std::string> CsvTable::strings(const std::string& name) const {
    const std::size_t c = col(name);
    std::vector<std::string> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[c]);
    return out;
}

std::vector<std::string> CsvTable::columns_with_prefix(const std::string& prefix) const {
    std::vector<std::string> out;
    for (const auto& c : columns)
        if (c.rfind(prefix, 0) == 0) out.push_back(c);
    return out;
}

CsvTable read_csv_table(const std::string& path) {
    if (!std::filesystem::exists(path))
        throw FileNotFound(path);
    std::ifstream is(path);
    if (!is)
        throw FileNotFound(path);
    CsvTable t;
    std::string line;
    if (!std::getline(is, line))
        throw FormatError("empty CSV: " + path);
    auto split = [](const std::string& s) {
        std::vector<std::string> parts;
        std::stringstream ss(s);
        std::string tok;
        while (std::getline(ss, tok, ',')) parts.push_back(tok);
        if (!s.empty() && s.back() == ',') parts.push_back("");
        return parts;
    };
    t.columns = split(line);
    if (!t.columns.empty() && !t.columns.back().empty() && t.columns.back().back() == '\r')
        t.columns.back().pop_back();
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto parts = split(line);
        if (parts.size() != t.columns.size())
            throw FormatError(path + " line " + std::to_string(lineno) + ": expected " +
                              std::to_string(t.columns.size()) + " fields, got " +
                              std::to_string(parts.size()));
        t.rows.push_back(std::move(parts));
    }
    return t;
}

Predictions read_predictions(const std::string& path) {
    const auto t = read_csv_table(path);
    Predictions p;
    p.y_true = t.integer("y_true");
    p.y_pred = t.integer("y_pred");
    if (t.has("score")) p.score = t.numeric("score");
    const auto prob_cols = t.columns_with_prefix("prob_");
    if (!prob_cols.empty()) {
        p.probs.resize(static_cast<Eigen::Index>(t.rows.size()),
                       static_cast<Eigen::Index>(prob_cols.size()));
        for (std::size_t c = 0; c < prob_cols.size(); ++c) {
            const auto expected = "prob_" + std::to_string(c);
            if (std::find(prob_cols.begin(), prob_cols.end(), expected) == prob_cols.end())
                throw DataError("probability columns must be prob_0..prob_{C-1}");
            const auto vals = t.numeric(expected);
            for (std::size_t i = 0; i < vals.size(); ++i)
                p.probs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = vals[i];
        }
    }
    int mx = 0;
    for (int v : p.y_true) mx = std::max(mx, v);
    for (int v : p.y_pred) mx = std::max(mx, v);
    p.num_classes = static_cast<std::size_t>(mx) + 1;
    if (p.probs.size() > 0)
        p.num_classes = std::max(p.num_classes, static_cast<std::size_t>(p.probs.cols()));
    return p;
}

SurvivalTable read_survival(const std::string& path) {
    const auto t = read_csv_table(path);
    SurvivalTable s;
    s.time = t.numeric("time");
    s.event = t.integer("event");
    if (t.has("risk")) s.risk = t.numeric("risk");
    if (t.has("group")) s.group = t.strings("group");
    s.cov_names = t.columns_with_prefix("cov_");
    if (!s.cov_names.empty()) {
        s.covariates.resize(static_cast<Eigen::Index>(t.rows.size()),
                            static_cast<Eigen::Index>(s.cov_names.size()));
        for (std::size_t c = 0; c < s.cov_names.size(); ++c) {
            const auto vals = t.numeric(s.cov_names[c]);
            for (std::size_t i = 0; i < vals.size(); ++i)
                s.covariates(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = vals[i];
        }
    }
    return s;
}

std::string sanitize_class_filename(const std::string& name) {
    std::string out = name;
    for (char& c : out)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '.') c = '_';
    return out;
}

MetricEntry bootstrap_label_metric(
    const std::function<double(std::span<const int>, std::span<const int>)>& metric,
    std::span<const int> y_true, std::span<const int> y_pred, const CommonOpts& opts) {
    auto stat = [&](std::span<const std::size_t> idx) {
        std::vector<int> yt(idx.size()), yp(idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i) {
            yt[i] = y_true[idx[i]];
            yp[i] = y_pred[idx[i]];
        }
        return metric(yt, yp);
    };
    return bootstrap_ci(stat, y_true.size(), opts.n_boot, opts.seed, resolve_threads(opts.threads));
}

std::vector<std::size_t> parse_size_list(const std::string& csv) {
    std::vector<std::size_t> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        out.push_back(static_cast<std::size_t>(std::stoull(tok)));
    }
    if (out.empty())
        throw RangeError("empty list: '" + csv + "'");
    return out;
}

std::vector<double> parse_double_list(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        out.push_back(std::stod(tok));
    }
    if (out.empty())
        throw RangeError("empty list: '" + csv + "'");
    return out;
}

}  // namespace embedlab::cli
