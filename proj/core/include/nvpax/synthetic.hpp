#pragma once

// Seeded random PDN hierarchies and tenant assignments.

#include <cstdint>

#include "nvpax/pdn.hpp"

namespace nvpax {

struct HierarchyShape {
    int devices_per_server_min = 4;
    int devices_per_server_max = 8;
    int branching_min = 2;  ///< children per internal node
    int branching_max = 8;
    double device_lower_w = 200.0;
    double device_upper_w = 700.0;

    /// Throws Error when a field is out of range.
    void validate() const;
};

/// Devices sit under servers; servers are grouped into random-width levels
/// until one root remains. Capacities come from the oversubscription rule
/// with `factor`. Pure function of its arguments. Throws Error for n < 1.
TopologySpec generate_synthetic_spec(std::size_t n_devices, const HierarchyShape& shape, double factor,
                                     std::uint64_t seed);

PdnTopology generate_synthetic_hierarchy(std::size_t n_devices, const HierarchyShape& shape, double factor,
                                         std::uint64_t seed);

struct TenantAssignment {
    int tenants = 10;
    int devices_per_tenant = 20;
    double min_fraction = 0.4;  ///< b_min as a fraction of the tenant's sum of u
    double max_fraction = 0.8;
    int max_priority = 3;  ///< tenant devices get a priority drawn from 1..max_priority
};

/// Adds disjoint tenants over randomly chosen devices. Devices outside every
/// tenant keep priority 1. Throws Error if there are not enough devices.
TopologySpec assign_tenants(TopologySpec spec, const TenantAssignment& assignment, std::uint64_t seed);

}  // namespace nvpax
