#include "embedlab/report.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>

#include "embedlab/errors.hpp"
#include "embedlab/version.hpp"

namespace embedlab {

ReportBuilder::ReportBuilder(std::string command, std::uint64_t seed, std::size_t n_boot) {
    root_["tool"] = kToolName;
    root_["version"] = kVersion;
    root_["command"] = std::move(command);
    root_["seed"] = seed;
    root_["n_boot"] = n_boot;
    root_["config"] = nlohmann::json::object();
    root_["results"] = nlohmann::json::object();
}

void ReportBuilder::set_config(nlohmann::json config) { root_["config"] = std::move(config); }

void ReportBuilder::add_metric(const std::string& name, const MetricEntry& entry) {
    root_["results"]["metrics"][name] = {
        {"point", entry.point}, {"ci_lo", entry.ci_lo},   {"ci_hi", entry.ci_hi},
        {"n_boot", entry.n_boot}, {"seed", entry.seed},
    };
}

void ReportBuilder::add_result(const std::string& key, nlohmann::json value) {
    root_["results"][key] = std::move(value);
}

void ReportBuilder::write(const std::string& path, bool with_timestamp,
                          double wall_time_s) const {
    nlohmann::json out = root_;
    if (with_timestamp) {
        const auto now = std::chrono::system_clock::now();
        const std::time_t tt = std::chrono::system_clock::to_time_t(now);
        char buf[32];
        std::tm tm_utc{};
        gmtime_r(&tt, &tm_utc);
        std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
        out["timestamp"] = buf;
        out["wall_time_s"] = wall_time_s;
    }
    std::ofstream os(path);
    if (!os)
        throw DataError("cannot open for writing: " + path);
    os << out.dump(2) << "\n";
}

void write_curve_csv(const std::string& path, const std::vector<CurvePoint>& points) {
    std::ofstream os(path);
    if (!os)
        throw DataError("cannot open for writing: " + path);
    os << "series,x,y,lo,hi\n";
    char buf[256];
    for (const auto& p : points) {
        std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g,%.17g\n", p.series.c_str(), p.x,
                      p.y, p.lo, p.hi);
        os << buf;
    }
}

}  // namespace embedlab
