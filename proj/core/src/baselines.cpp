#include "nvpax/baselines.hpp"

#include <algorithm>

#include "nvpax/constraints.hpp"
#include "nvpax/errors.hpp"

namespace nvpax {

std::vector<double> static_alloc(const PdnTopology& topology) {
    const std::size_t n = topology.device_count();
    if (n == 0) throw Error("static allocation needs at least one device");
    const double share = topology.root().capacity / static_cast<double>(n);
    std::vector<double> a(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& d = topology.device(i);
        a[i] = std::clamp(share, d.lower, d.upper);
    }
    return a;
}

GreedyNodeAggregates greedy_aggregate(const PdnTopology& topology, std::span<const double> demand) {
    if (demand.size() != topology.device_count()) throw Error("demand size does not match device count");
    const std::size_t m = topology.node_count();
    GreedyNodeAggregates g;
    g.min_load.assign(m, 0.0);
    g.extra_demand.assign(m, 0.0);
    g.extra_room.assign(m, 0.0);
    g.weight.assign(m, 0.0);
    for (int v : topology.post_order()) {
        const auto& node = topology.node(v);
        CompensatedSum lo, extra;
        for (int i : node.devices) {
            lo.add(topology.device(i).lower);
            extra.add(demand[i] - topology.device(i).lower);
        }
        for (int c : node.children) {
            lo.add(g.min_load[c]);
            extra.add(g.extra_demand[c]);
        }
        g.min_load[v] = lo.value();
        g.extra_demand[v] = std::max(0.0, extra.value());
        g.extra_room[v] = std::max(0.0, node.capacity - g.min_load[v]);
        g.weight[v] = std::min(g.extra_demand[v], g.extra_room[v]);
    }
    return g;
}

namespace {

void distribute(const PdnTopology& topology, const GreedyNodeAggregates& g, std::span<const double> extra, int v,
                double budget, std::vector<double>& a) {
    if (budget <= 0.0) return;
    const auto& node = topology.node(v);
    double total = 0.0;
    for (int c : node.children) total += g.weight[c];
    for (int i : node.devices) total += extra[i];
    if (total <= 0.0) return;
    for (int c : node.children) {
        const double w = g.weight[c];
        const double share = total > 0.0 ? std::min(budget * w / total, w) : 0.0;
        distribute(topology, g, extra, c, share, a);
        budget -= share;
        total -= w;
    }
    for (int i : node.devices) {
        const double e = extra[i];
        const double share = total > 0.0 ? std::min(budget * e / total, e) : 0.0;
        a[i] += share;
        budget -= share;
        total -= e;
    }
}

}  // namespace

std::vector<double> greedy_distribute(const PdnTopology& topology, std::span<const double> demand,
                                      const GreedyNodeAggregates& aggregates) {
    const std::size_t n = topology.device_count();
    if (demand.size() != n) throw Error("demand size does not match device count");
    std::vector<double> a(n), extra(n);
    for (std::size_t i = 0; i < n; ++i) {
        a[i] = topology.device(i).lower;
        extra[i] = std::max(0.0, demand[i] - a[i]);
    }
    distribute(topology, aggregates, extra, 0, aggregates.weight[0], a);
    return a;
}

std::vector<double> greedy_alloc(const PdnTopology& topology, std::span<const double> requests) {
    const std::size_t n = topology.device_count();
    if (requests.size() != n) throw Error("request size does not match device count");
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) {
        d[i] = clip_request(requests[i], topology.device(i).lower, topology.device(i).upper);
    }
    return greedy_distribute(topology, d, greedy_aggregate(topology, d));
}

std::string_view to_string(Policy policy) noexcept {
    switch (policy) {
        case Policy::Nvpax: return "nvpax";
        case Policy::Static: return "static";
        case Policy::Greedy: return "greedy";
    }
    return "unknown";
}

Policy parse_policy(std::string_view name) {
    for (Policy p : {Policy::Nvpax, Policy::Static, Policy::Greedy}) {
        if (name == to_string(p)) return p;
    }
    throw Error("unknown policy '" + std::string(name) + "'");
}

std::vector<double> allocate(Policy policy, const PdnTopology& topology, const DemandFrame& frame,
                             const RunConfig& config) {
    switch (policy) {
        case Policy::Nvpax: return optimize(topology, frame, config).allocation;
        case Policy::Static: return static_alloc(topology);
        case Policy::Greedy: return greedy_alloc(topology, frame.request);
    }
    throw Error("unknown policy");
}

}  // namespace nvpax
