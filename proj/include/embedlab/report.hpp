#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "embedlab/metrics.hpp"

namespace embedlab {

// Assembles the JSON run report shared by every CLI verb. Keys are emitted
// in sorted order and doubles with shortest round-trip formatting, so a rerun
// with the same config and seed is byte-identical (timestamps are optional
// for that reason).
class ReportBuilder {
public:
    ReportBuilder(std::string command, std::uint64_t seed, std::size_t n_boot);

    void set_config(nlohmann::json config);
    void add_metric(const std::string& name, const MetricEntry& entry);
    void add_result(const std::string& key, nlohmann::json value);

    // with_timestamp also records wall time; disabled under --no-timestamp
    void write(const std::string& path, bool with_timestamp, double wall_time_s) const;

    const nlohmann::json& json() const { return root_; }

private:
    nlohmann::json root_;
};

struct CurvePoint {
    std::string series;
    double x = 0.0;
    double y = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

// Tidy CSV (series,x,y,lo,hi) for downstream plotting.
void write_curve_csv(const std::string& path, const std::vector<CurvePoint>& points);

}  // namespace embedlab
