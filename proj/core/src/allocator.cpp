#include "nvpax/allocator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>

#include "nvpax/errors.hpp"

namespace nvpax {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

double slack_tolerance(double tolerance_w, double bound) {
    return std::max(tolerance_w, 1e-12 * std::abs(bound));
}

/// Upper-bounded sum rows that limit raising a device: every node capacity
/// and every finite tenant maximum.
struct PackingRows {
    std::vector<double> cap;
    std::vector<std::vector<int>> members;
    std::vector<std::vector<int>> device_rows;
};

PackingRows packing_rows(const PdnTopology& topology) {
    PackingRows rows;
    rows.device_rows.resize(topology.device_count());
    auto add = [&](double cap, std::vector<int> members) {
        const int r = static_cast<int>(rows.cap.size());
        for (int d : members) {
            rows.device_rows[static_cast<std::size_t>(d)].push_back(r);
        }
        rows.cap.push_back(cap);
        rows.members.push_back(std::move(members));
    };
    for (std::size_t j = 0; j < topology.node_count(); ++j) {
        add(topology.node(j).capacity, topology.subtree_devices(j));
    }
    for (const auto& t : topology.tenants()) {
        if (std::isfinite(t.b_max)) {
            add(t.b_max, t.devices);
        }
    }
    return rows;
}

std::vector<double> row_loads(const PackingRows& rows, std::span<const double> x) {
    std::vector<double> load(rows.cap.size());
    for (std::size_t r = 0; r < rows.cap.size(); ++r) {
        CompensatedSum s;
        for (int d : rows.members[r]) {
            s.add(x[static_cast<std::size_t>(d)]);
        }
        load[r] = s.value();
    }
    return load;
}

/// Remaining room of device d at x: its own bound and every packing row.
double device_slack(const PdnTopology& topology, const PackingRows& rows, const std::vector<double>& load,
                    std::span<const double> x, int d, double tolerance_w, bool& saturated) {
    const auto& dev = topology.device(static_cast<std::size_t>(d));
    double slack = dev.upper - x[static_cast<std::size_t>(d)];
    saturated = slack <= slack_tolerance(tolerance_w, dev.upper);
    for (int r : rows.device_rows[static_cast<std::size_t>(d)]) {
        const double s = rows.cap[r] - load[r];
        slack = std::min(slack, s);
        saturated = saturated || s <= slack_tolerance(tolerance_w, rows.cap[r]);
    }
    return slack;
}

std::vector<double> raise_weights(const PdnTopology& topology, const RunConfig& config) {
    std::vector<double> w(topology.device_count(), 1.0);
    if (config.normalized) {
        for (std::size_t i = 0; i < w.size(); ++i) {
            w[i] = topology.device(i).scale();
        }
    }
    return w;
}

/// Progressive filling: every device in `group` rises along base_i + t*w_i
/// while all other devices stay at `point`. A device stops at its upper
/// bound or when a packing row containing it fills. This is the fixed point
/// of the saturation loop whenever the round LP has no other free columns.
struct FillResult {
    std::vector<double> point;
    std::vector<double> level;      ///< per group member, the level at which it stopped
    std::vector<char> own_bound;    ///< per group member, stopped by its own bound
    double first_row_level = kInfinity;
    int events = 0;                 ///< distinct stop levels
};

FillResult progressive_fill(const PdnTopology& topology, const PackingRows& rows, std::span<const double> point,
                            std::span<const int> group, std::span<const double> w) {
    FillResult out;
    out.point.assign(point.begin(), point.end());
    const std::size_t m = rows.cap.size();
    std::vector<int> slot(topology.device_count(), -1);
    for (std::size_t k = 0; k < group.size(); ++k) {
        slot[static_cast<std::size_t>(group[k])] = static_cast<int>(k);
    }
    out.level.assign(group.size(), 0.0);
    out.own_bound.assign(group.size(), 0);

    // Row r at level t holds fixed[r] + base_sum[r] + t * weight[r].
    std::vector<CompensatedSum> fixed(m), base_sum(m);
    std::vector<double> weight(m, 0.0);
    std::vector<int> version(m, 0);
    std::vector<int> rising(m, 0);
    for (std::size_t r = 0; r < m; ++r) {
        for (int d : rows.members[r]) {
            const double v = point[static_cast<std::size_t>(d)];
            if (slot[static_cast<std::size_t>(d)] >= 0) {
                base_sum[r].add(v);
                weight[r] += w[static_cast<std::size_t>(d)];
                ++rising[r];
            } else {
                fixed[r].add(v);
            }
        }
    }
    auto row_level = [&](std::size_t r) {
        if (weight[r] <= 0.0) return kInfinity;
        return (rows.cap[r] - fixed[r].value() - base_sum[r].value()) / weight[r];
    };

    struct Event {
        double level;
        int kind;  ///< 0 = device bound, 1 = row
        int id;
        int version;
        bool operator>(const Event& o) const { return level > o.level || (level == o.level && kind > o.kind); }
    };
    std::priority_queue<Event, std::vector<Event>, std::greater<>> heap;
    for (int d : group) {
        const auto& dev = topology.device(static_cast<std::size_t>(d));
        heap.push({(dev.upper - point[static_cast<std::size_t>(d)]) / w[static_cast<std::size_t>(d)], 0, d, 0});
    }
    for (std::size_t r = 0; r < m; ++r) {
        if (weight[r] > 0.0) {
            heap.push({row_level(r), 1, static_cast<int>(r), 0});
        }
    }

    std::vector<char> frozen(group.size(), 0);
    std::size_t remaining = group.size();
    double t = 0.0;
    double last_event = -kInfinity;
    auto freeze = [&](int d, double value, bool own) {
        const int k = slot[static_cast<std::size_t>(d)];
        frozen[k] = 1;
        --remaining;
        out.level[k] = t;
        out.own_bound[k] = own;
        const double base = point[static_cast<std::size_t>(d)];
        out.point[static_cast<std::size_t>(d)] = value;
        for (int r : rows.device_rows[static_cast<std::size_t>(d)]) {
            fixed[r].add(value);
            base_sum[r].add(-base);
            weight[r] -= w[static_cast<std::size_t>(d)];
            ++version[r];
            if (--rising[r] > 0) {
                heap.push({row_level(static_cast<std::size_t>(r)), 1, r, version[r]});
            } else {
                weight[r] = 0.0;
            }
        }
    };

    while (remaining > 0 && !heap.empty()) {
        const Event e = heap.top();
        heap.pop();
        if (e.kind == 0) {
            if (frozen[slot[static_cast<std::size_t>(e.id)]]) continue;
        } else if (e.version != version[e.id] || weight[e.id] <= 0.0) {
            continue;
        }
        t = std::max(t, e.level);
        if (t > last_event) {
            ++out.events;
            last_event = t;
        }
        if (e.kind == 0) {
            freeze(e.id, topology.device(static_cast<std::size_t>(e.id)).upper, true);
            continue;
        }
        out.first_row_level = std::min(out.first_row_level, t);
        for (int d : rows.members[static_cast<std::size_t>(e.id)]) {
            const int k = slot[static_cast<std::size_t>(d)];
            if (k < 0 || frozen[k]) continue;
            const double base = point[static_cast<std::size_t>(d)];
            const double upper = topology.device(static_cast<std::size_t>(d)).upper;
            freeze(d, std::min(upper, base + t * w[static_cast<std::size_t>(d)]), false);
        }
    }
    return out;
}

void throw_for(const SolveResult& res, int phase, int priority = 0) {
    if (res.status == SolveStatus::Infeasible) {
        std::string what = "phase " + std::to_string(phase);
        if (priority) what += " (priority " + std::to_string(priority) + ")";
        throw InfeasibleError(what + " is infeasible: " + res.message, phase, priority);
    }
    throw SolverError("phase " + std::to_string(phase) + " solver failure: " + res.message, phase);
}

/// Saturation loop with one LP per round. `base` holds the phase-start point;
/// `free_rest` marks non-group devices the LP may move (pushed toward l).
std::vector<double> lp_rounds(const PdnTopology& topology, const ConstraintSystem& system, const PackingRows& rows,
                              std::span<const double> base, std::vector<int> group,
                              const std::vector<char>& free_rest, std::span<const double> w,
                              const RunConfig& config, int phase, PhaseStats& stats) {
    const std::size_t n = topology.device_count();
    std::vector<double> cur(base.begin(), base.end());
    const int max_rounds = config.max_saturation_rounds.value_or(static_cast<int>(group.size()));
    std::vector<char> in_group(n, 0);
    for (int d : group) in_group[static_cast<std::size_t>(d)] = 1;

    auto drop = [&](const std::vector<int>& leaving) {
        for (int d : leaving) in_group[static_cast<std::size_t>(d)] = 0;
        group.erase(std::remove_if(group.begin(), group.end(),
                                   [&](int d) { return !in_group[static_cast<std::size_t>(d)]; }),
                    group.end());
    };

    while (!group.empty()) {
        if (stats.rounds >= max_rounds) {
            throw SolverError("phase " + std::to_string(phase) + " exceeded " + std::to_string(max_rounds) +
                                  " saturation rounds",
                              phase);
        }
        ++stats.rounds;

        // Devices that hit their own bound before any row fills under a
        // uniform raise with everything else held still go straight to u.
        // The LP can only do better, so they saturate at u regardless.
        {
            const auto fill = progressive_fill(topology, rows, cur, group, w);
            std::vector<int> pinned;
            for (std::size_t k = 0; k < group.size(); ++k) {
                if (fill.own_bound[k] && fill.level[k] < fill.first_row_level) {
                    const int d = group[k];
                    cur[static_cast<std::size_t>(d)] = topology.device(static_cast<std::size_t>(d)).upper;
                    pinned.push_back(d);
                }
            }
            drop(pinned);
            if (group.empty()) break;
        }

        LinearProgram lp;
        lp.sense = Sense::Maximize;
        lp.cost.assign(n, 0.0);
        lp.lower.assign(n, -kInfinity);
        double sum_w = 0.0;
        double t_max = 0.0;
        for (int d : group) {
            const auto i = static_cast<std::size_t>(d);
            sum_w += w[i];
            t_max = std::max(t_max, (topology.device(i).upper - base[i]) / w[i]);
        }
        lp.aux = AuxColumn{0.0, t_max, 1.0};
        for (std::size_t i = 0; i < n; ++i) {
            if (in_group[i]) {
                lp.cost[i] = config.tie_break == SurplusTieBreak::MinimalLevel ? -config.epsilon / sum_w : config.epsilon;
                lp.extra_rows.push_back({{static_cast<int>(i)}, {1.0}, -w[i], base[i], kInfinity});
                lp.lower[i] = cur[i];
            } else if (free_rest[i]) {
                lp.cost[i] = -config.epsilon;
            } else {
                lp.fixed.push_back({static_cast<int>(i), cur[i]});
            }
        }
        const auto res = solve_lp(system, lp, config.solver);
        ++stats.lp_solves;
        stats.solver_iterations += res.iterations;
        stats.status = res.status;
        if (!res.ok()) throw_for(res, phase);

        std::vector<double> x = res.point;
        const double t_star = res.aux;

        // Exact water level for devices sitting on it: the largest uniform
        // level they reach with every other device at its LP value.
        std::vector<int> level_set;
        for (int d : group) {
            const auto i = static_cast<std::size_t>(d);
            if (x[i] <= base[i] + t_star * w[i] + 1e-7 * std::max(1.0, topology.device(i).upper)) {
                level_set.push_back(d);
            }
        }
        if (!level_set.empty()) {
            std::vector<double> start = x;
            for (int d : level_set) start[static_cast<std::size_t>(d)] = base[static_cast<std::size_t>(d)];
            double t_hat = kInfinity;
            std::vector<char> member(n, 0);
            for (int d : level_set) {
                const auto i = static_cast<std::size_t>(d);
                member[i] = 1;
                t_hat = std::min(t_hat, (topology.device(i).upper - base[i]) / w[i]);
            }
            for (std::size_t r = 0; r < rows.cap.size(); ++r) {
                CompensatedSum load;
                double wsum = 0.0;
                for (int d : rows.members[r]) {
                    load.add(start[static_cast<std::size_t>(d)]);
                    if (member[static_cast<std::size_t>(d)]) wsum += w[static_cast<std::size_t>(d)];
                }
                if (wsum > 0.0) t_hat = std::min(t_hat, (rows.cap[r] - load.value()) / wsum);
            }
            if (t_hat >= t_star - 1e-6 && std::isfinite(t_hat)) {
                std::vector<double> refined = x;
                for (int d : level_set) {
                    const auto i = static_cast<std::size_t>(d);
                    refined[i] = std::min(topology.device(i).upper, base[i] + t_hat * w[i]);
                }
                // Snapping can lower devices slightly above the level; keep the
                // LP point if that breaks a tenant minimum.
                if (verify_allocation(refined, topology).empty()) x = std::move(refined);
            }
        }

        auto saturated = detect_saturated(topology, x, group, config.slack_tolerance_w);
        if (saturated.empty()) {
            double gain = 0.0;
            for (int d : group) gain += x[static_cast<std::size_t>(d)] - cur[static_cast<std::size_t>(d)];
            if (t_star <= config.slack_tolerance_w && gain <= config.slack_tolerance_w) {
                cur = std::move(x);
                break;
            }
            // Degenerate round: fix the device with the least room.
            const auto load = row_loads(rows, x);
            int pick = group.front();
            double best = kInfinity;
            for (int d : group) {
                bool sat = false;
                const double s = device_slack(topology, rows, load, x, d, config.slack_tolerance_w, sat);
                if (s < best) {
                    best = s;
                    pick = d;
                }
            }
            saturated = {pick};
        }
        cur = std::move(x);
        drop(saturated);
    }
    return cur;
}

std::vector<double> surplus_phase(const PdnTopology& topology, const ConstraintSystem& system,
                                  std::span<const double> start, std::vector<int> group,
                                  const std::vector<char>& free_rest, const RunConfig& config, int phase,
                                  PhaseStats* stats_out) {
    const auto t0 = Clock::now();
    PhaseStats stats;
    const auto rows = packing_rows(topology);
    const auto w = raise_weights(topology, config);
    const bool any_free = std::any_of(free_rest.begin(), free_rest.end(), [](char c) { return c != 0; });
    std::vector<double> out;
    if (group.empty()) {
        out.assign(start.begin(), start.end());
    } else if (config.surplus_method == SurplusMethod::Auto && !any_free &&
               config.tie_break == SurplusTieBreak::MinimalLevel) {
        auto fill = progressive_fill(topology, rows, start, group, w);
        stats.rounds = fill.events;
        out = std::move(fill.point);
    } else {
        out = lp_rounds(topology, system, rows, start, std::move(group), free_rest, w, config, phase, stats);
    }
    stats.wall_ms = elapsed_ms(t0);
    if (stats_out) *stats_out = stats;
    return out;
}

}  // namespace

std::map<std::string, double> AllocationResult::by_id(const PdnTopology& topology) const {
    std::map<std::string, double> out;
    for (std::size_t i = 0; i < allocation.size(); ++i) {
        out[topology.device(i).id] = allocation[i];
    }
    return out;
}

std::vector<int> detect_saturated(const PdnTopology& topology, std::span<const double> allocation,
                                  std::span<const int> candidates, double tolerance_w) {
    const auto rows = packing_rows(topology);
    const auto load = row_loads(rows, allocation);
    std::vector<int> out;
    for (int d : candidates) {
        bool saturated = false;
        device_slack(topology, rows, load, allocation, d, tolerance_w, saturated);
        if (saturated) out.push_back(d);
    }
    return out;
}

std::vector<double> phase1(const PdnTopology& topology, const ConstraintSystem& system, const DemandFrame& frame,
                           const RunConfig& config, PhaseStats* stats_out) {
    const auto t0 = Clock::now();
    PhaseStats stats;
    const std::size_t n = topology.device_count();
    if (frame.size() != n) {
        throw Error("demand frame covers " + std::to_string(frame.size()) + " devices, topology has " +
                    std::to_string(n));
    }
    const bool regularize = topology.has_tenant_minimums();
    std::vector<double> scale2(n, 1.0);
    if (config.normalized) {
        for (std::size_t i = 0; i < n; ++i) {
            const double s = topology.device(i).scale();
            scale2[i] = 1.0 / (s * s);
        }
    }
    std::set<int, std::greater<>> levels;
    for (std::size_t i = 0; i < n; ++i) {
        if (frame.state[i] == DeviceState::Active) levels.insert(topology.device(i).priority);
    }

    std::vector<double> a(n);
    for (std::size_t i = 0; i < n; ++i) a[i] = topology.device(i).lower;
    std::vector<char> done(n, 0);

    auto solve_level = [&](int priority) {
        QuadraticProgram qp;
        qp.quadratic.assign(n, 0.0);
        qp.linear.assign(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto& dev = topology.device(i);
            const bool in_level = frame.state[i] == DeviceState::Active && dev.priority == priority;
            if (in_level) {
                qp.quadratic[i] = scale2[i];
                qp.linear[i] = -2.0 * scale2[i] * frame.request[i];
            } else if (done[i]) {
                qp.fixed.push_back({static_cast<int>(i), a[i]});
            } else if (regularize) {
                qp.quadratic[i] = config.epsilon * scale2[i];
                qp.linear[i] = -2.0 * config.epsilon * scale2[i] * dev.lower;
            } else {
                qp.fixed.push_back({static_cast<int>(i), dev.lower});
            }
        }
        const auto res = solve_qp(system, qp, config.solver);
        ++stats.rounds;
        stats.solver_iterations += res.iterations;
        stats.status = res.status;
        if (!res.ok()) throw_for(res, 1, priority);
        return res.point;
    };

    if (levels.empty()) {
        if (regularize) a = solve_level(0);
    } else {
        std::vector<double> last;
        for (int p : levels) {
            last = solve_level(p);
            for (std::size_t i = 0; i < n; ++i) {
                if (frame.state[i] == DeviceState::Active && topology.device(i).priority == p) {
                    a[i] = last[i];
                    done[i] = 1;
                }
            }
        }
        a = std::move(last);
    }
    stats.wall_ms = elapsed_ms(t0);
    if (stats_out) *stats_out = stats;
    return a;
}

std::vector<double> phase2(const PdnTopology& topology, const ConstraintSystem& system, const DemandFrame& frame,
                           std::span<const double> a1, const RunConfig& config, PhaseStats* stats) {
    const std::size_t n = topology.device_count();
    std::vector<int> active;
    std::vector<char> free_rest(n, 0);
    const bool idle_free = topology.has_tenant_minimums();
    for (std::size_t i = 0; i < n; ++i) {
        if (frame.state[i] == DeviceState::Active) {
            active.push_back(static_cast<int>(i));
        } else {
            free_rest[i] = idle_free;
        }
    }
    return surplus_phase(topology, system, a1, std::move(active), free_rest, config, 2, stats);
}

std::vector<double> phase3(const PdnTopology& topology, const ConstraintSystem& system, const DemandFrame& frame,
                           std::span<const double> a2, const RunConfig& config, PhaseStats* stats) {
    const std::size_t n = topology.device_count();
    std::vector<int> idle;
    for (std::size_t i = 0; i < n; ++i) {
        if (frame.state[i] == DeviceState::Idle) idle.push_back(static_cast<int>(i));
    }
    return surplus_phase(topology, system, a2, std::move(idle), std::vector<char>(n, 0), config, 3, stats);
}

AllocationResult optimize(const PdnTopology& topology, const DemandFrame& frame, const RunConfig& config) {
    const auto t0 = Clock::now();
    const auto issues = check_necessary_feasibility(topology);
    if (!issues.empty()) {
        std::string what = "instance is infeasible: " + issues.front().message;
        for (std::size_t k = 1; k < issues.size(); ++k) what += "; " + issues[k].message;
        throw InfeasibleError(what, 1);
    }
    const auto system = build_constraints(topology);
    AllocationResult out;
    out.frame = frame;
    out.phase1 = phase1(topology, system, frame, config, &out.stats[0]);
    out.phase2 = phase2(topology, system, frame, out.phase1, config, &out.stats[1]);
    out.phase3 = phase3(topology, system, frame, out.phase2, config, &out.stats[2]);
    out.allocation = out.phase3;
    const auto violations = verify_allocation(out.allocation, topology);
    if (!violations.empty()) {
        const auto& v = violations.front();
        std::ostringstream msg;
        msg.precision(12);
        msg << "final allocation violates " << to_string(v.kind) << " of '" << v.subject << "' by " << v.excess;
        throw SolverError(msg.str(), 3);
    }
    out.wall_ms = elapsed_ms(t0);
    return out;
}

AllocationResult optimize_measured(const PdnTopology& topology, std::span<const double> measured_w,
                                   const RunConfig& config) {
    return optimize(topology, preprocess_frame(topology, measured_w, config.idle_threshold_w), config);
}

}  // namespace nvpax
