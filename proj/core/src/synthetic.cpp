#include "nvpax/synthetic.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <string>

#include "nvpax/errors.hpp"

namespace nvpax {

void HierarchyShape::validate() const {
    if (devices_per_server_min < 1 || devices_per_server_max < devices_per_server_min) {
        throw Error("devices per server must satisfy 1 <= min <= max");
    }
    if (branching_min < 2 || branching_max < branching_min) throw Error("branching must satisfy 2 <= min <= max");
    if (!(device_lower_w >= 0.0) || !(device_upper_w >= device_lower_w)) {
        throw Error("device bounds must satisfy 0 <= lower <= upper");
    }
}

TopologySpec generate_synthetic_spec(std::size_t n_devices, const HierarchyShape& shape, double factor,
                                     std::uint64_t seed) {
    if (n_devices < 1) throw Error("a synthetic hierarchy needs at least one device");
    shape.validate();
    std::mt19937_64 rng(seed);
    auto draw = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

    TopologySpec spec;
    spec.devices.reserve(n_devices);
    std::vector<std::string> level;
    std::size_t placed = 0;
    while (placed < n_devices) {
        const auto k = std::min<std::size_t>(n_devices - placed,
                                             draw(shape.devices_per_server_min, shape.devices_per_server_max));
        PdnNode server{"server-" + std::to_string(level.size()), std::nullopt, {}, {}};
        for (std::size_t j = 0; j < k; ++j, ++placed) {
            const std::string id = "gpu-" + std::to_string(placed);
            server.devices.push_back(id);
            spec.devices.push_back({id, shape.device_lower_w, shape.device_upper_w, 1, std::nullopt});
        }
        level.push_back(server.id);
        spec.nodes.push_back(std::move(server));
    }

    int depth = 0;
    while (level.size() > 1 || depth == 0) {
        ++depth;
        std::vector<std::string> next;
        for (std::size_t pos = 0; pos < level.size();) {
            const auto width = std::min<std::size_t>(level.size() - pos, draw(shape.branching_min, shape.branching_max));
            PdnNode group{"l" + std::to_string(depth) + "-" + std::to_string(next.size()), std::nullopt, {}, {}};
            group.children.assign(level.begin() + static_cast<std::ptrdiff_t>(pos),
                                  level.begin() + static_cast<std::ptrdiff_t>(pos + width));
            pos += width;
            next.push_back(group.id);
            spec.nodes.push_back(std::move(group));
        }
        level = std::move(next);
    }
    spec.nodes.back().id = "root";
    std::rotate(spec.nodes.rbegin(), spec.nodes.rbegin() + 1, spec.nodes.rend());
    return compute_oversubscribed_capacities(std::move(spec), factor);
}

PdnTopology generate_synthetic_hierarchy(std::size_t n_devices, const HierarchyShape& shape, double factor,
                                         std::uint64_t seed) {
    return PdnTopology::build(generate_synthetic_spec(n_devices, shape, factor, seed));
}

TopologySpec assign_tenants(TopologySpec spec, const TenantAssignment& a, std::uint64_t seed) {
    if (a.tenants < 0 || a.devices_per_tenant < 1) throw Error("tenant counts must be positive");
    if (!(a.min_fraction >= 0.0 && a.min_fraction <= a.max_fraction)) {
        throw Error("tenant fractions must satisfy 0 <= min <= max");
    }
    if (a.max_priority < 1) throw Error("max priority must be at least 1");
    const auto needed = static_cast<std::size_t>(a.tenants) * static_cast<std::size_t>(a.devices_per_tenant);
    if (needed > spec.devices.size()) {
        throw Error("need " + std::to_string(needed) + " devices for tenants, have " +
                    std::to_string(spec.devices.size()));
    }
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> order(spec.devices.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::uniform_int_distribution<int> priority(1, a.max_priority);
    std::size_t next = 0;
    for (int k = 0; k < a.tenants; ++k) {
        TenantSla t{"tenant-" + std::to_string(k), {}, 0.0, kInfinity};
        double total_upper = 0.0;
        for (int j = 0; j < a.devices_per_tenant; ++j) {
            auto& d = spec.devices[order[next++]];
            d.priority = priority(rng);
            t.devices.push_back(d.id);
            total_upper += d.upper;
        }
        t.b_min = a.min_fraction * total_upper;
        t.b_max = a.max_fraction * total_upper;
        spec.tenants.push_back(std::move(t));
    }
    return spec;
}

}  // namespace nvpax
