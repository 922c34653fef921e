#pragma once

#include <string>
#include <vector>

#include "nvpax/pdn.hpp"

namespace nvpax::testing {

struct Dev {
    std::string id;
    double lower;
    double upper;
    int priority = 1;
};

/// Root node with every device attached directly.
inline TopologySpec flat_spec(double root_capacity, const std::vector<Dev>& devices) {
    TopologySpec spec;
    PdnNode root{"root", root_capacity, {}, {}};
    for (const auto& d : devices) {
        root.devices.push_back(d.id);
        spec.devices.push_back({d.id, d.lower, d.upper, d.priority, std::nullopt});
    }
    spec.nodes.push_back(root);
    return spec;
}

inline PdnTopology flat(double root_capacity, const std::vector<Dev>& devices) {
    return PdnTopology::build(flat_spec(root_capacity, devices));
}

/// Values aligned with topology device order, looked up by id.
inline std::vector<double> by_ids(const PdnTopology& t, const std::vector<std::pair<std::string, double>>& values) {
    std::vector<double> out(t.device_count(), 0.0);
    for (const auto& [id, v] : values) out[t.device_index(id)] = v;
    return out;
}

inline DemandFrame frame_of(const PdnTopology& t, const std::vector<std::pair<std::string, double>>& requests,
                            const std::vector<std::string>& idle = {}) {
    DemandFrame f = all_active(t, by_ids(t, requests));
    for (const auto& id : idle) {
        const auto i = t.device_index(id);
        f.state[i] = DeviceState::Idle;
        f.request[i] = t.device(i).lower;
    }
    return f;
}

}  // namespace nvpax::testing
