#pragma once

// Evaluation quantities per frame and their aggregation over a run.
// Undefined values (zero demand, degenerate tenant bounds) are absent, never 0.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nvpax/baselines.hpp"
#include "nvpax/constraints.hpp"
#include "nvpax/pdn.hpp"

namespace nvpax {

/// U = sum_i min(r_i, a_i). Throws Error on a size mismatch.
double useful_utilization(std::span<const double> requests, std::span<const double> allocation);

/// U / sum r, absent when sum r is not positive.
std::optional<double> satisfaction_ratio(std::span<const double> requests, std::span<const double> allocation);

/// (U - U_base) / U_base * 100. Throws Error when U_base is not positive.
double relative_improvement(double u_policy, double u_baseline);

struct TenantMetrics {
    std::string id;
    double allocated = 0.0;                 ///< sum of a over the tenant
    std::optional<double> satisfaction;     ///< S_k
    std::optional<double> margin;           ///< M_k^min, needs finite b_min < b_max
    bool min_violated = false;
    bool max_violated = false;
};

std::vector<TenantMetrics> tenant_metrics(const PdnTopology& topology, std::span<const double> requests,
                                          std::span<const double> allocation, FeasibilityTolerance tolerance = {});

struct PolicyMetrics {
    Policy policy = Policy::Nvpax;
    double utilization = 0.0;
    std::optional<double> satisfaction;
    std::vector<TenantMetrics> tenants;
    int violations = 0;  ///< verify_allocation findings of every kind
    int tenant_min_violations = 0;
    int tenant_max_violations = 0;
    double wall_ms = 0.0;

    std::optional<double> worst_margin() const;
    std::optional<double> mean_margin() const;
    std::optional<double> mean_tenant_satisfaction() const;
};

/// Scores one allocation of one policy on a frame.
PolicyMetrics evaluate(Policy policy, const PdnTopology& topology, std::span<const double> requests,
                       std::span<const double> allocation, double wall_ms = 0.0);

struct FrameMetrics {
    std::size_t index = 0;
    double timestamp = 0.0;
    double demand = 0.0;  ///< sum of requests
    std::vector<PolicyMetrics> policies;

    const PolicyMetrics* find(Policy policy) const;
    /// Delta U of `policy` against `baseline`, absent if either is missing or U_base is 0.
    std::optional<double> improvement(Policy policy, Policy baseline) const;
};

struct Moments {
    std::size_t count = 0;
    double mean = 0.0;
    double std = 0.0;  ///< population standard deviation
    double min = 0.0;
    double max = 0.0;
};

/// Moments of the present values; count 0 when none are present.
Moments summarize(std::span<const std::optional<double>> values);
Moments summarize(std::span<const double> values);

struct PolicySummary {
    Policy policy = Policy::Nvpax;
    Moments satisfaction;
    Moments utilization;
    Moments wall_ms;
    Moments tenant_satisfaction;  ///< over every (tenant, frame) pair
    Moments mean_margin;          ///< per-frame mean over tenants, then over frames
    Moments worst_margin;         ///< per-frame minimum over tenants, then over frames
    Moments improvement_vs_static;
    Moments improvement_vs_greedy;
    long long violations = 0;
    long long tenant_min_violations = 0;
    long long tenant_max_violations = 0;
};

struct RunSummary {
    std::size_t frames = 0;
    std::vector<PolicySummary> policies;

    const PolicySummary* find(Policy policy) const;
};

/// Throws Error on an empty list.
RunSummary aggregate_run(std::span<const FrameMetrics> frames);

}  // namespace nvpax
