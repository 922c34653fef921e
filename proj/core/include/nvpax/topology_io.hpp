#pragma once

#include <filesystem>
#include <string>

#include "nvpax/pdn.hpp"

namespace nvpax {

/// Parses a topology document:
///
///     {"nodes":   [{"id", "capacity"?, "children": [...], "devices": [...]}],
///      "devices": [{"id", "l", "u", "priority"?, "weight"?}],
///      "tenants": [{"id", "devices": [...], "b_min"?, "b_max"?}]}
///
/// `children` entries may be node ids or nested node objects. A missing
/// `b_max` (or `null`) means unbounded. Throws TopologyError on malformed input.
TopologySpec parse_topology_json(const std::string& text);

/// Serializes with a flat node list and id references.
std::string topology_to_json(const TopologySpec& spec, int indent = 2);

/// Reads, fills missing capacities with `factor`, validates and indexes.
PdnTopology load_topology(const std::filesystem::path& path, double factor = 0.85);

/// Reads the document without validation (for `validate`).
TopologySpec read_topology_spec(const std::filesystem::path& path);

void write_topology(const std::filesystem::path& path, const TopologySpec& spec);

}  // namespace nvpax
