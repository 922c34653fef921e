#include "nvpax/pdn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "nvpax/errors.hpp"

namespace nvpax {

std::string_view to_string(IssueKind kind) noexcept {
    switch (kind) {
        case IssueKind::EmptyTopology: return "empty topology";
        case IssueKind::DuplicateNodeId: return "duplicate node id";
        case IssueKind::DuplicateDeviceId: return "duplicate device id";
        case IssueKind::DuplicateTenantId: return "duplicate tenant id";
        case IssueKind::DuplicateDevicePlacement: return "duplicate device placement";
        case IssueKind::UnknownChild: return "unknown child node";
        case IssueKind::UnknownDeviceInNode: return "unknown device in node";
        case IssueKind::UnknownDeviceInTenant: return "unknown device in tenant";
        case IssueKind::UnplacedDevice: return "device not placed in tree";
        case IssueKind::NotATree: return "not a rooted tree";
        case IssueKind::InvalidDeviceBounds: return "invalid device bounds";
        case IssueKind::InvalidWeight: return "invalid weight";
        case IssueKind::InvalidPriority: return "invalid priority";
        case IssueKind::MissingCapacity: return "missing capacity";
        case IssueKind::NonPositiveCapacity: return "non-positive capacity";
        case IssueKind::EmptyTenant: return "empty tenant";
        case IssueKind::InvalidTenantBounds: return "invalid tenant bounds";
    }
    return "unknown issue";
}

namespace {

void add_issue(ValidationReport& report, IssueKind kind, const std::string& subject,
               const std::string& detail = {}) {
    std::string message{to_string(kind)};
    message += " '" + subject + "'";
    if (!detail.empty()) {
        message += ": " + detail;
    }
    report.push_back({kind, subject, std::move(message)});
}

}  // namespace

ValidationReport validate_topology(const TopologySpec& spec, bool require_capacities) {
    ValidationReport report;
    if (spec.nodes.empty()) {
        report.push_back({IssueKind::EmptyTopology, "", "empty topology: no nodes"});
        return report;
    }

    std::unordered_map<std::string, std::size_t> node_ids;
    for (std::size_t j = 0; j < spec.nodes.size(); ++j) {
        const auto& node = spec.nodes[j];
        if (!node_ids.emplace(node.id, j).second) {
            add_issue(report, IssueKind::DuplicateNodeId, node.id);
        }
        if (!node.capacity) {
            if (require_capacities) {
                add_issue(report, IssueKind::MissingCapacity, node.id);
            }
        } else if (!std::isfinite(*node.capacity) || *node.capacity <= 0.0) {
            add_issue(report, IssueKind::NonPositiveCapacity, node.id,
                      "capacity " + std::to_string(*node.capacity));
        }
    }

    std::unordered_set<std::string> device_ids;
    for (const auto& device : spec.devices) {
        if (!device_ids.insert(device.id).second) {
            add_issue(report, IssueKind::DuplicateDeviceId, device.id);
        }
        const bool finite = std::isfinite(device.lower) && std::isfinite(device.upper);
        if (!finite || device.lower < 0.0 || device.lower > device.upper) {
            add_issue(report, IssueKind::InvalidDeviceBounds, device.id,
                      "l=" + std::to_string(device.lower) + " u=" + std::to_string(device.upper));
        }
        const double w = device.scale();
        if (!std::isfinite(w) || w <= 0.0) {
            add_issue(report, IssueKind::InvalidWeight, device.id);
        }
        if (device.priority < 1) {
            add_issue(report, IssueKind::InvalidPriority, device.id);
        }
    }

    // Parent links and device placement.
    std::vector<int> parent_count(spec.nodes.size(), 0);
    std::unordered_map<std::string, int> placements;
    for (const auto& node : spec.nodes) {
        for (const auto& child : node.children) {
            auto it = node_ids.find(child);
            if (it == node_ids.end()) {
                add_issue(report, IssueKind::UnknownChild, child, "referenced by node '" + node.id + "'");
                continue;
            }
            if (++parent_count[it->second] == 2) {
                add_issue(report, IssueKind::NotATree, child, "node has more than one parent");
            }
        }
        for (const auto& dev : node.devices) {
            if (!device_ids.contains(dev)) {
                add_issue(report, IssueKind::UnknownDeviceInNode, dev, "referenced by node '" + node.id + "'");
                continue;
            }
            if (++placements[dev] == 2) {
                add_issue(report, IssueKind::DuplicateDevicePlacement, dev);
            }
        }
    }
    for (const auto& device : spec.devices) {
        if (!placements.contains(device.id)) {
            add_issue(report, IssueKind::UnplacedDevice, device.id);
        }
    }

    std::vector<std::size_t> roots;
    for (std::size_t j = 0; j < spec.nodes.size(); ++j) {
        if (parent_count[j] == 0) {
            roots.push_back(j);
        }
    }
    if (roots.size() != 1) {
        const std::string subject = roots.empty() ? spec.nodes.front().id : spec.nodes[roots[1]].id;
        add_issue(report, IssueKind::NotATree, subject,
                  std::to_string(roots.size()) + " root candidates (expected exactly one)");
    } else {
        // Every node must be reachable from the root; unreachable ones sit on a cycle.
        std::vector<char> seen(spec.nodes.size(), 0);
        std::vector<std::size_t> stack{roots.front()};
        seen[roots.front()] = 1;
        while (!stack.empty()) {
            const auto j = stack.back();
            stack.pop_back();
            for (const auto& child : spec.nodes[j].children) {
                auto it = node_ids.find(child);
                if (it != node_ids.end() && !seen[it->second]) {
                    seen[it->second] = 1;
                    stack.push_back(it->second);
                }
            }
        }
        for (std::size_t j = 0; j < spec.nodes.size(); ++j) {
            if (!seen[j]) {
                add_issue(report, IssueKind::NotATree, spec.nodes[j].id, "node unreachable from root (cycle)");
            }
        }
    }

    std::unordered_set<std::string> tenant_ids;
    for (const auto& tenant : spec.tenants) {
        if (!tenant_ids.insert(tenant.id).second) {
            add_issue(report, IssueKind::DuplicateTenantId, tenant.id);
        }
        if (tenant.devices.empty()) {
            add_issue(report, IssueKind::EmptyTenant, tenant.id);
        }
        for (const auto& dev : tenant.devices) {
            if (!device_ids.contains(dev)) {
                add_issue(report, IssueKind::UnknownDeviceInTenant, dev, "in tenant '" + tenant.id + "'");
            }
        }
        if (std::isnan(tenant.b_min) || std::isnan(tenant.b_max) || !std::isfinite(tenant.b_min) ||
            tenant.b_min < 0.0 || tenant.b_min > tenant.b_max) {
            add_issue(report, IssueKind::InvalidTenantBounds, tenant.id,
                      "b_min=" + std::to_string(tenant.b_min) + " b_max=" + std::to_string(tenant.b_max));
        }
    }
    return report;
}

PdnTopology PdnTopology::build(const TopologySpec& spec) {
    if (auto report = validate_topology(spec); !report.empty()) {
        std::string what = "invalid topology:";
        for (const auto& issue : report) {
            what += "\n  " + issue.message;
        }
        throw TopologyError(what);
    }

    PdnTopology topo;
    topo.devices_ = spec.devices;
    std::sort(topo.devices_.begin(), topo.devices_.end(),
              [](const Device& a, const Device& b) { return a.id < b.id; });
    for (std::size_t i = 0; i < topo.devices_.size(); ++i) {
        topo.device_lookup_.emplace(topo.devices_[i].id, i);
    }

    std::unordered_map<std::string, std::size_t> spec_index;
    std::vector<char> is_child(spec.nodes.size(), 0);
    for (std::size_t j = 0; j < spec.nodes.size(); ++j) {
        spec_index.emplace(spec.nodes[j].id, j);
    }
    for (const auto& node : spec.nodes) {
        for (const auto& child : node.children) {
            is_child[spec_index.at(child)] = 1;
        }
    }
    const auto root = static_cast<std::size_t>(
        std::find(is_child.begin(), is_child.end(), 0) - is_child.begin());

    // Pre-order DFS with children in declaration order.
    topo.device_node_.assign(topo.devices_.size(), -1);
    std::vector<std::pair<std::size_t, int>> stack{{root, -1}};
    while (!stack.empty()) {
        auto [sj, parent] = stack.back();
        stack.pop_back();
        const auto& src = spec.nodes[sj];
        const int index = static_cast<int>(topo.nodes_.size());
        Node node;
        node.id = src.id;
        node.capacity = *src.capacity;
        node.parent = parent;
        for (const auto& dev : src.devices) {
            const auto di = topo.device_lookup_.at(dev);
            node.devices.push_back(static_cast<int>(di));
            topo.device_node_[di] = index;
        }
        topo.node_lookup_.emplace(node.id, topo.nodes_.size());
        topo.nodes_.push_back(std::move(node));
        if (parent >= 0) {
            topo.nodes_[static_cast<std::size_t>(parent)].children.push_back(index);
        }
        for (auto it = src.children.rbegin(); it != src.children.rend(); ++it) {
            stack.emplace_back(spec_index.at(*it), index);
        }
    }

    topo.device_tenants_.assign(topo.devices_.size(), {});
    for (const auto& src : spec.tenants) {
        Tenant tenant;
        tenant.id = src.id;
        tenant.b_min = src.b_min;
        tenant.b_max = src.b_max;
        for (const auto& dev : src.devices) {
            tenant.devices.push_back(static_cast<int>(topo.device_lookup_.at(dev)));
        }
        std::sort(tenant.devices.begin(), tenant.devices.end());
        tenant.devices.erase(std::unique(tenant.devices.begin(), tenant.devices.end()), tenant.devices.end());
        const int k = static_cast<int>(topo.tenants_.size());
        for (int d : tenant.devices) {
            topo.device_tenants_[static_cast<std::size_t>(d)].push_back(k);
        }
        topo.tenants_.push_back(std::move(tenant));
    }
    return topo;
}

std::optional<std::size_t> PdnTopology::find_device(std::string_view id) const {
    auto it = device_lookup_.find(std::string(id));
    if (it == device_lookup_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::optional<std::size_t> PdnTopology::find_node(std::string_view id) const {
    auto it = node_lookup_.find(std::string(id));
    if (it == node_lookup_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::size_t PdnTopology::device_index(std::string_view id) const {
    if (auto i = find_device(id)) {
        return *i;
    }
    throw TopologyError("unknown device id '" + std::string(id) + "'");
}

std::size_t PdnTopology::node_index(std::string_view id) const {
    if (auto j = find_node(id)) {
        return *j;
    }
    throw TopologyError("unknown node id '" + std::string(id) + "'");
}

std::vector<int> PdnTopology::subtree_devices(std::size_t j) const {
    std::vector<int> out;
    std::vector<std::size_t> stack{j};
    while (!stack.empty()) {
        const auto& node = nodes_.at(stack.back());
        stack.pop_back();
        out.insert(out.end(), node.devices.begin(), node.devices.end());
        for (int c : node.children) {
            stack.push_back(static_cast<std::size_t>(c));
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<int> PdnTopology::post_order() const {
    // Reverse pre-order puts every child before its parent.
    std::vector<int> order(nodes_.size());
    std::iota(order.rbegin(), order.rend(), 0);
    return order;
}

int PdnTopology::device_depth(std::size_t i) const {
    int depth = 0;
    for (int j = device_node_.at(i); j >= 0; j = nodes_[static_cast<std::size_t>(j)].parent) {
        ++depth;
    }
    return depth;
}

bool PdnTopology::has_tenant_minimums() const noexcept {
    return std::any_of(tenants_.begin(), tenants_.end(), [](const Tenant& t) { return t.b_min > 0.0; });
}

TopologySpec PdnTopology::to_spec() const {
    TopologySpec spec;
    spec.devices = devices_;
    for (const auto& node : nodes_) {
        PdnNode out;
        out.id = node.id;
        out.capacity = node.capacity;
        for (int c : node.children) {
            out.children.push_back(nodes_[static_cast<std::size_t>(c)].id);
        }
        for (int d : node.devices) {
            out.devices.push_back(devices_[static_cast<std::size_t>(d)].id);
        }
        spec.nodes.push_back(std::move(out));
    }
    for (const auto& tenant : tenants_) {
        TenantSla out;
        out.id = tenant.id;
        out.b_min = tenant.b_min;
        out.b_max = tenant.b_max;
        for (int d : tenant.devices) {
            out.devices.push_back(devices_[static_cast<std::size_t>(d)].id);
        }
        spec.tenants.push_back(std::move(out));
    }
    return spec;
}

std::set<std::string> subtree_devices(const PdnTopology& topology, std::string_view node_id) {
    std::set<std::string> ids;
    for (int d : topology.subtree_devices(topology.node_index(node_id))) {
        ids.insert(topology.device(static_cast<std::size_t>(d)).id);
    }
    return ids;
}

double clip_request(double raw, double lower, double upper) noexcept {
    return std::min(std::max(raw, lower), upper);
}

DeviceState classify_state(double measured_w, double idle_threshold_w) noexcept {
    return measured_w < idle_threshold_w ? DeviceState::Idle : DeviceState::Active;
}

TopologySpec compute_oversubscribed_capacities(TopologySpec skeleton, double factor) {
    if (!(factor > 0.0 && factor <= 1.0)) {
        throw TopologyError("oversubscription factor must lie in (0, 1], got " + std::to_string(factor));
    }
    if (skeleton.nodes.empty()) {
        throw TopologyError("cannot compute capacities of an empty tree");
    }
    if (auto report = validate_topology(skeleton, /*require_capacities=*/false); !report.empty()) {
        throw TopologyError("malformed skeleton: " + report.front().message);
    }

    std::unordered_map<std::string, double> upper_of;
    for (const auto& d : skeleton.devices) {
        upper_of.emplace(d.id, d.upper);
    }
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t j = 0; j < skeleton.nodes.size(); ++j) {
        index.emplace(skeleton.nodes[j].id, j);
    }

    // Iterative post-order so deep chains do not recurse.
    std::vector<char> done(skeleton.nodes.size(), 0);
    std::vector<char> is_child(skeleton.nodes.size(), 0);
    for (const auto& n : skeleton.nodes) {
        for (const auto& c : n.children) {
            is_child[index.at(c)] = 1;
        }
    }
    const auto root = static_cast<std::size_t>(std::find(is_child.begin(), is_child.end(), 0) - is_child.begin());
    std::vector<std::size_t> stack{root};
    while (!stack.empty()) {
        const auto j = stack.back();
        auto& node = skeleton.nodes[j];
        bool ready = true;
        for (const auto& c : node.children) {
            if (!done[index.at(c)]) {
                ready = false;
                stack.push_back(index.at(c));
            }
        }
        if (!ready) {
            continue;
        }
        stack.pop_back();
        if (done[j]) {
            continue;
        }
        done[j] = 1;
        if (node.capacity) {
            continue;
        }
        double attached = 0.0;
        for (const auto& d : node.devices) {
            attached += upper_of.at(d);
        }
        if (node.children.empty()) {
            if (attached <= 0.0) {
                throw TopologyError("leaf node '" + node.id + "' has no device power to derive a capacity from");
            }
            node.capacity = attached;
        } else {
            double child_sum = 0.0;
            for (const auto& c : node.children) {
                child_sum += *skeleton.nodes[index.at(c)].capacity;
            }
            node.capacity = factor * (child_sum + attached);
        }
    }
    return skeleton;
}

DemandFrame preprocess_frame(const PdnTopology& topology, std::span<const double> measured_w,
                             double idle_threshold_w) {
    if (measured_w.size() != topology.device_count()) {
        throw TopologyError("measurement vector has " + std::to_string(measured_w.size()) +
                            " entries, topology has " + std::to_string(topology.device_count()) + " devices");
    }
    DemandFrame frame;
    frame.request.resize(measured_w.size());
    frame.state.resize(measured_w.size());
    for (std::size_t i = 0; i < measured_w.size(); ++i) {
        const auto& d = topology.device(i);
        frame.state[i] = classify_state(measured_w[i], idle_threshold_w);
        frame.request[i] = frame.state[i] == DeviceState::Idle
                               ? d.lower
                               : clip_request(measured_w[i], d.lower, d.upper);
    }
    return frame;
}

DemandFrame all_active(const PdnTopology& topology, std::span<const double> requests_w) {
    if (requests_w.size() != topology.device_count()) {
        throw TopologyError("request vector size does not match device count");
    }
    DemandFrame frame;
    frame.request.resize(requests_w.size());
    frame.state.assign(requests_w.size(), DeviceState::Active);
    for (std::size_t i = 0; i < requests_w.size(); ++i) {
        const auto& d = topology.device(i);
        frame.request[i] = clip_request(requests_w[i], d.lower, d.upper);
    }
    return frame;
}

}  // namespace nvpax
