#include "nvpax/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "nvpax/errors.hpp"

namespace nvpax {

double useful_utilization(std::span<const double> requests, std::span<const double> allocation) {
    if (requests.size() != allocation.size()) throw Error("request and allocation sizes differ");
    CompensatedSum u;
    for (std::size_t i = 0; i < requests.size(); ++i) u.add(std::min(requests[i], allocation[i]));
    return u.value();
}

std::optional<double> satisfaction_ratio(std::span<const double> requests, std::span<const double> allocation) {
    const double u = useful_utilization(requests, allocation);
    CompensatedSum total;
    for (double r : requests) total.add(r);
    if (total.value() <= 0.0) return std::nullopt;
    return u / total.value();
}

double relative_improvement(double u_policy, double u_baseline) {
    if (!(u_baseline > 0.0)) throw Error("relative improvement needs a positive baseline utilization");
    return (u_policy - u_baseline) / u_baseline * 100.0;
}

std::vector<TenantMetrics> tenant_metrics(const PdnTopology& topology, std::span<const double> requests,
                                          std::span<const double> allocation, FeasibilityTolerance tolerance) {
    if (requests.size() != topology.device_count() || allocation.size() != topology.device_count()) {
        throw Error("request or allocation size does not match device count");
    }
    std::vector<TenantMetrics> out;
    out.reserve(topology.tenant_count());
    for (const auto& t : topology.tenants()) {
        TenantMetrics m;
        m.id = t.id;
        CompensatedSum a, r, useful;
        for (int i : t.devices) {
            a.add(allocation[i]);
            r.add(requests[i]);
            useful.add(std::min(requests[i], allocation[i]));
        }
        m.allocated = a.value();
        if (r.value() > 0.0) m.satisfaction = useful.value() / r.value();
        if (std::isfinite(t.b_max) && t.b_max > t.b_min) m.margin = (m.allocated - t.b_min) / (t.b_max - t.b_min);
        m.min_violated = t.b_min - m.allocated > tolerance.at(t.b_min);
        m.max_violated = std::isfinite(t.b_max) && m.allocated - t.b_max > tolerance.at(t.b_max);
        out.push_back(std::move(m));
    }
    return out;
}

namespace {

template <class F>
std::optional<double> reduce_margins(const std::vector<TenantMetrics>& tenants, F combine) {
    std::optional<double> acc;
    for (const auto& t : tenants) {
        if (t.margin) acc = acc ? combine(*acc, *t.margin) : *t.margin;
    }
    return acc;
}

}  // namespace

std::optional<double> PolicyMetrics::worst_margin() const {
    return reduce_margins(tenants, [](double x, double y) { return std::min(x, y); });
}

std::optional<double> PolicyMetrics::mean_margin() const {
    std::vector<std::optional<double>> v;
    for (const auto& t : tenants) v.push_back(t.margin);
    const auto m = summarize(v);
    if (m.count == 0) return std::nullopt;
    return m.mean;
}

std::optional<double> PolicyMetrics::mean_tenant_satisfaction() const {
    std::vector<std::optional<double>> v;
    for (const auto& t : tenants) v.push_back(t.satisfaction);
    const auto m = summarize(v);
    if (m.count == 0) return std::nullopt;
    return m.mean;
}

PolicyMetrics evaluate(Policy policy, const PdnTopology& topology, std::span<const double> requests,
                       std::span<const double> allocation, double wall_ms) {
    PolicyMetrics m;
    m.policy = policy;
    m.utilization = useful_utilization(requests, allocation);
    m.satisfaction = satisfaction_ratio(requests, allocation);
    m.tenants = tenant_metrics(topology, requests, allocation);
    m.violations = static_cast<int>(verify_allocation(allocation, topology).size());
    for (const auto& t : m.tenants) {
        m.tenant_min_violations += t.min_violated;
        m.tenant_max_violations += t.max_violated;
    }
    m.wall_ms = wall_ms;
    return m;
}

const PolicyMetrics* FrameMetrics::find(Policy policy) const {
    for (const auto& p : policies) {
        if (p.policy == policy) return &p;
    }
    return nullptr;
}

std::optional<double> FrameMetrics::improvement(Policy policy, Policy baseline) const {
    const auto* p = find(policy);
    const auto* b = find(baseline);
    if (!p || !b || !(b->utilization > 0.0)) return std::nullopt;
    return relative_improvement(p->utilization, b->utilization);
}

Moments summarize(std::span<const std::optional<double>> values) {
    std::vector<double> present;
    for (const auto& v : values) {
        if (v) present.push_back(*v);
    }
    return summarize(std::span<const double>(present));
}

Moments summarize(std::span<const double> values) {
    Moments m;
    m.count = values.size();
    if (values.empty()) return m;
    CompensatedSum s;
    for (double v : values) s.add(v);
    m.mean = s.value() / static_cast<double>(m.count);
    CompensatedSum sq;
    for (double v : values) sq.add((v - m.mean) * (v - m.mean));
    m.std = std::sqrt(sq.value() / static_cast<double>(m.count));
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    m.min = *lo;
    m.max = *hi;
    return m;
}

const PolicySummary* RunSummary::find(Policy policy) const {
    for (const auto& p : policies) {
        if (p.policy == policy) return &p;
    }
    return nullptr;
}

RunSummary aggregate_run(std::span<const FrameMetrics> frames) {
    if (frames.empty()) throw Error("cannot aggregate an empty run");
    RunSummary out;
    out.frames = frames.size();
    std::vector<Policy> order;
    for (const auto& f : frames) {
        for (const auto& p : f.policies) {
            if (std::find(order.begin(), order.end(), p.policy) == order.end()) order.push_back(p.policy);
        }
    }
    for (Policy policy : order) {
        PolicySummary s;
        s.policy = policy;
        std::vector<std::optional<double>> sat, util, wall, tsat, mean_m, worst_m, vs_static, vs_greedy;
        for (const auto& f : frames) {
            const auto* p = f.find(policy);
            if (!p) continue;
            sat.push_back(p->satisfaction);
            util.push_back(p->utilization);
            wall.push_back(p->wall_ms);
            for (const auto& t : p->tenants) tsat.push_back(t.satisfaction);
            mean_m.push_back(p->mean_margin());
            worst_m.push_back(p->worst_margin());
            if (policy != Policy::Static) vs_static.push_back(f.improvement(policy, Policy::Static));
            if (policy != Policy::Greedy) vs_greedy.push_back(f.improvement(policy, Policy::Greedy));
            s.violations += p->violations;
            s.tenant_min_violations += p->tenant_min_violations;
            s.tenant_max_violations += p->tenant_max_violations;
        }
        s.satisfaction = summarize(sat);
        s.utilization = summarize(util);
        s.wall_ms = summarize(wall);
        s.tenant_satisfaction = summarize(tsat);
        s.mean_margin = summarize(mean_m);
        s.worst_margin = summarize(worst_m);
        s.improvement_vs_static = summarize(vs_static);
        s.improvement_vs_greedy = summarize(vs_greedy);
        out.policies.push_back(std::move(s));
    }
    return out;
}

}  // namespace nvpax
