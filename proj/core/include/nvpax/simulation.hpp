#pragma once

// Trace replay: every frame is preprocessed, handed to each policy, audited
// and scored. Frames are independent and may run on several workers.

#include <iosfwd>
#include <vector>

#include "nvpax/allocator.hpp"
#include "nvpax/baselines.hpp"
#include "nvpax/metrics.hpp"
#include "nvpax/trace.hpp"

namespace nvpax {

struct SimulationConfig {
    std::vector<Policy> policies{Policy::Nvpax, Policy::Static, Policy::Greedy};
    RunConfig run;  ///< nvPAX parameters; idle_threshold_w also drives preprocessing
    int workers = 1;
};

struct SimulationResult {
    std::vector<FrameMetrics> frames;  ///< in trace order
    RunSummary summary;
};

/// Throws Error for an empty trace or policy list. nvPAX failures are
/// rethrown with the frame index and timestamp prepended, keeping their type;
/// an nvPAX allocation that fails the audit raises SolverError.
SimulationResult run_simulation(const PdnTopology& topology, const std::vector<TraceFrame>& trace,
                                const SimulationConfig& config);

/// One CSV row per (frame, policy), then '#'-prefixed summary lines.
/// Satisfaction and margins are written as percentages.
void write_results(std::ostream& out, const SimulationResult& result);

}  // namespace nvpax
