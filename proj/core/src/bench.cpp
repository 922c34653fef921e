#include "nvpax/bench.hpp"

#include <chrono>
#include <cmath>

#include "nvpax/errors.hpp"
#include "nvpax/metrics.hpp"

namespace nvpax {

double fit_loglog_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw Error("slope fit needs at least two paired points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw Error("slope fit needs positive values");
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(y.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    if (sxx == 0.0) throw Error("slope fit needs distinct x values");
    return sxy / sxx;
}

BenchReport run_bench(const BenchConfig& config) {
    if (config.sizes.size() < 2) throw Error("benchmark needs at least two sizes");
    for (std::size_t k = 0; k < config.sizes.size(); ++k) {
        if (config.sizes[k] < 1 || (k > 0 && config.sizes[k] <= config.sizes[k - 1])) {
            throw Error("benchmark sizes must be positive and strictly increasing");
        }
    }
    if (config.runs < 1) throw Error("benchmark needs at least one run per size");

    BenchReport report;
    std::vector<double> xs, ys;
    for (std::size_t n : config.sizes) {
        std::vector<double> times;
        for (int run = 0; run < config.runs; ++run) {
            const std::uint64_t seed = config.seed * 1000003ULL + n * 101ULL + static_cast<std::uint64_t>(run);
            const auto topology = generate_synthetic_hierarchy(n, config.shape, config.factor, seed);
            SyntheticTraceConfig demand = config.demand;
            demand.frames = 1;
            demand.seed = seed;
            const auto frame =
                preprocess_frame(topology, generate_trace(topology, demand).front().power, config.run.idle_threshold_w);
            const auto start = std::chrono::steady_clock::now();
            const auto result = optimize(topology, frame, config.run);
            times.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count());
            (void)result;
        }
        const auto m = summarize(std::span<const double>(times));
        report.points.push_back({n, config.runs, m.mean, m.std, m.min, m.max});
        xs.push_back(static_cast<double>(n));
        ys.push_back(m.mean);
    }
    report.exponent = fit_loglog_slope(xs, ys);
    return report;
}

}  // namespace nvpax
