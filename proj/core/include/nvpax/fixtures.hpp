#pragma once

// Built-in golden instances.

#include <string>
#include <vector>

#include "nvpax/pdn.hpp"

namespace nvpax {

/// A topology plus one demand vector aligned with the spec's device list.
struct FixtureCase {
    TopologySpec spec;
    std::vector<double> demand;  ///< watts, same order as spec.devices
};

/// Non-uniform bottleneck example: a 10 kW root over three 6 kW racks. Rack A
/// feeds two 2.5 kW servers (six 750 W devices and three 150 W devices);
/// racks B and C each feed one 6 kW server with ten 350 W devices. Every
/// device is active with l = 0 and u equal to its demand.
FixtureCase bottleneck_fixture();

/// Names accepted by fixture_by_name().
std::vector<std::string> fixture_names();

/// Throws Error for an unknown name.
FixtureCase fixture_by_name(const std::string& name);

}  // namespace nvpax
