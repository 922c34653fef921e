#pragma once

// Three-phase allocation: priority-ordered request satisfaction (QP per
// priority level), max-min surplus distribution to active devices, then to
// idle devices, each surplus phase driven by a saturation loop.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nvpax/constraints.hpp"
#include "nvpax/pdn.hpp"
#include "nvpax/solver.hpp"

namespace nvpax {

/// How the surplus phases compute each saturation round.
enum class SurplusMethod {
    /// Closed-form filling whenever every non-raised device is pinned (the
    /// round LP then has a known optimum); LP rounds otherwise.
    Auto,
    /// Solve the round LP every time.
    LinearProgram,
};

/// Tie-break term of the surplus LP for devices being raised.
enum class SurplusTieBreak {
    /// Penalize total allocation so the LP returns the smallest point at the
    /// optimal water level (scaled by 1/sum of weights).
    MinimalLevel,
    /// Reward total allocation with +epsilon per watt.
    Inflate,
};

struct RunConfig {
    double epsilon = 1e-5;
    double idle_threshold_w = kDefaultIdleThresholdW;
    double slack_tolerance_w = 1e-6;
    bool normalized = false;
    /// Safety valve on LP rounds per surplus phase; defaults to |A|.
    std::optional<int> max_saturation_rounds;
    SurplusMethod surplus_method = SurplusMethod::Auto;
    SurplusTieBreak tie_break = SurplusTieBreak::MinimalLevel;
    SolverOptions solver;
};

/// A: devices being optimized, F: devices fixed at given values, L: the rest.
struct PhasePartition {
    std::vector<int> A;
    std::map<int, double> F;
    std::vector<int> L;
};

struct PhaseStats {
    double wall_ms = 0.0;
    int rounds = 0;             ///< QP solves (phase 1) or saturation rounds (phases 2-3)
    int solver_iterations = 0;  ///< interior point iterations summed over solves
    int lp_solves = 0;
    SolveStatus status = SolveStatus::Optimal;
};

struct AllocationResult {
    std::vector<double> allocation;  ///< final, aligned with device indices
    std::vector<double> phase1;
    std::vector<double> phase2;
    std::vector<double> phase3;
    DemandFrame frame;
    PhaseStats stats[3];
    double wall_ms = 0.0;

    std::map<std::string, double> by_id(const PdnTopology& topology) const;
};

/// Priority-ordered request satisfaction. Throws InfeasibleError carrying the
/// priority level, or SolverError.
std::vector<double> phase1(const PdnTopology& topology, const ConstraintSystem& system, const DemandFrame& frame,
                           const RunConfig& config, PhaseStats* stats = nullptr);

/// Surplus distribution to active devices, starting from `a1`.
std::vector<double> phase2(const PdnTopology& topology, const ConstraintSystem& system, const DemandFrame& frame,
                           std::span<const double> a1, const RunConfig& config, PhaseStats* stats = nullptr);

/// Surplus distribution to idle devices with actives fixed at `a2`.
std::vector<double> phase3(const PdnTopology& topology, const ConstraintSystem& system, const DemandFrame& frame,
                           std::span<const double> a2, const RunConfig& config, PhaseStats* stats = nullptr);

/// Members of `candidates` with no room left: own upper bound, an ancestor
/// node capacity, or a tenant maximum within `tolerance_w`. The tolerance
/// grows to 1e-12 of the bound for very large bounds.
std::vector<int> detect_saturated(const PdnTopology& topology, std::span<const double> allocation,
                                  std::span<const int> candidates, double tolerance_w = 1e-6);

/// Full pipeline on a preprocessed frame.
AllocationResult optimize(const PdnTopology& topology, const DemandFrame& frame, const RunConfig& config = {});

/// Full pipeline from raw measured power (clip and idle classification first).
AllocationResult optimize_measured(const PdnTopology& topology, std::span<const double> measured_w,
                                   const RunConfig& config = {});

}  // namespace nvpax
