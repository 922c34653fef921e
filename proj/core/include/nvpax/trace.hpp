#pragma once

// Per-device power telemetry: CSV reading/writing and a seeded synthetic
// generator.
//
// File format: header `timestamp,<device-id>,...`, then one row per frame of
// comma-separated decimal watts. A missing column or empty cell reads 0 W.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "nvpax/pdn.hpp"

namespace nvpax {

struct TraceFrame {
    double timestamp = 0.0;     ///< seconds since epoch
    std::vector<double> power;  ///< measured watts, aligned with device indices
};

/// Frames are returned sorted by timestamp. Throws TraceError with a line
/// number for malformed input or ids unknown to the topology.
std::vector<TraceFrame> parse_trace(std::istream& in, const PdnTopology& topology);
std::vector<TraceFrame> load_trace(const std::filesystem::path& path, const PdnTopology& topology);

void write_trace(std::ostream& out, const PdnTopology& topology, const std::vector<TraceFrame>& frames);
void save_trace(const std::filesystem::path& path, const PdnTopology& topology, const std::vector<TraceFrame>& frames);

/// Two-state idle/active process per device with AR(1) active power.
struct SyntheticTraceConfig {
    std::size_t frames = 100;
    double interval_s = 30.0;
    double start_timestamp = 0.0;
    double idle_probability = 0.2;  ///< stationary share of idle frames
    /// Per-frame chance of redrawing the state from the stationary law; 1 makes
    /// states independent across frames.
    double switch_rate = 0.1;
    double active_low = 0.5;   ///< active power range as fractions of u
    double active_high = 1.0;
    double correlation = 0.8;  ///< AR(1) coefficient of active power, in [0, 1)
    double idle_power_w = 60.0;  ///< reading while idle, capped at u
    std::uint64_t seed = 1;

    /// Throws Error when a field is out of range.
    void validate() const;
};

/// Pure function of (topology, config).
std::vector<TraceFrame> generate_trace(const PdnTopology& topology, const SyntheticTraceConfig& config);

}  // namespace nvpax
