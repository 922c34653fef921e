#pragma once

// Runtime scaling of optimize() on synthetic hierarchies.

#include <cstdint>
#include <span>
#include <vector>

#include "nvpax/allocator.hpp"
#include "nvpax/synthetic.hpp"
#include "nvpax/trace.hpp"

namespace nvpax {

struct BenchConfig {
    std::vector<std::size_t> sizes{1000, 10000, 100000};  ///< strictly increasing, at least two
    int runs = 5;
    std::uint64_t seed = 1;
    double factor = 0.85;
    HierarchyShape shape;
    SyntheticTraceConfig demand;  ///< only the first frame is used; frames is forced to 1
    RunConfig run;
};

struct BenchPoint {
    std::size_t devices = 0;
    int runs = 0;
    double mean_ms = 0.0;
    double std_ms = 0.0;
    double min_ms = 0.0;
    double max_ms = 0.0;
};

struct BenchReport {
    std::vector<BenchPoint> points;
    double exponent = 0.0;  ///< least-squares slope of log(mean_ms) against log(n)
};

/// Least-squares slope of log y against log x. Throws Error for fewer than two
/// points or non-positive values.
double fit_loglog_slope(std::span<const double> x, std::span<const double> y);

/// Each run uses a fresh hierarchy and demand frame seeded from (seed, size,
/// run); only the optimize() call is timed. Throws Error on invalid sizes.
BenchReport run_bench(const BenchConfig& config);

}  // namespace nvpax
