#include "nvpax/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "nvpax/errors.hpp"

namespace nvpax {

namespace {

using Clock = std::chrono::steady_clock;

std::string attribution(std::size_t index, double timestamp) {
    std::ostringstream s;
    s << "frame " << index << " (t=" << std::setprecision(12) << timestamp << "): ";
    return s.str();
}

FrameMetrics simulate_frame(const PdnTopology& topology, const TraceFrame& tf, std::size_t index,
                            const SimulationConfig& config) {
    const DemandFrame frame = preprocess_frame(topology, tf.power, config.run.idle_threshold_w);
    FrameMetrics fm;
    fm.index = index;
    fm.timestamp = tf.timestamp;
    CompensatedSum demand;
    for (double r : frame.request) demand.add(r);
    fm.demand = demand.value();
    for (Policy policy : config.policies) {
        std::vector<double> allocation;
        double wall_ms = 0.0;
        if (policy == Policy::Nvpax) {
            const auto prefix = attribution(index, tf.timestamp);
            try {
                const auto start = Clock::now();
                allocation = optimize(topology, frame, config.run).allocation;
                wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
            } catch (const InfeasibleError& e) {
                throw InfeasibleError(prefix + e.what(), e.phase(), e.priority_level());
            } catch (const SolverError& e) {
                throw SolverError(prefix + e.what(), e.phase());
            }
            const auto audit = verify_allocation(allocation, topology);
            if (!audit.empty()) {
                throw SolverError(prefix + "allocation fails audit on '" + audit.front().subject + "'", 3);
            }
        } else {
            allocation = allocate(policy, topology, frame, config.run);
        }
        fm.policies.push_back(evaluate(policy, topology, frame.request, allocation, wall_ms));
    }
    return fm;
}

}  // namespace

SimulationResult run_simulation(const PdnTopology& topology, const std::vector<TraceFrame>& trace,
                                const SimulationConfig& config) {
    if (trace.empty()) throw Error("trace has no frames");
    if (config.policies.empty()) throw Error("no policies selected");
    for (const auto& f : trace) {
        if (f.power.size() != topology.device_count()) throw TraceError("frame size does not match device count");
    }

    SimulationResult result;
    result.frames.resize(trace.size());
    const auto workers = static_cast<std::size_t>(std::clamp<int>(config.workers, 1, 256));
    std::atomic<std::size_t> next{0};
    std::mutex failure_mutex;
    std::size_t failed_index = trace.size();
    std::exception_ptr failure;

    auto work = [&] {
        while (true) {
            const std::size_t k = next.fetch_add(1);
            if (k >= trace.size()) return;
            try {
                result.frames[k] = simulate_frame(topology, trace[k], k, config);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (k < failed_index) {
                    failed_index = k;
                    failure = std::current_exception();
                }
                next.store(trace.size());
                return;
            }
        }
    };

    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < std::min(workers, trace.size()); ++w) pool.emplace_back(work);
    }
    if (failure) std::rethrow_exception(failure);
    result.summary = aggregate_run(result.frames);
    return result;
}

namespace {

void cell(std::ostream& out, const std::optional<double>& v, double scale = 1.0) {
    out << ',';
    if (v) out << *v * scale;
}

void moments(std::ostream& out, std::string_view policy, std::string_view metric, const Moments& m) {
    out << "# " << policy << ',' << metric << ',' << m.count;
    if (m.count > 0) out << ',' << m.mean << ',' << m.std << ',' << m.min << ',' << m.max;
    else out << ",,,,";
    out << '\n';
}

Moments scaled(Moments m, double s) {
    m.mean *= s;
    m.std *= s;
    m.min *= s;
    m.max *= s;
    return m;
}

}  // namespace

void write_results(std::ostream& out, const SimulationResult& result) {
    out << "frame,timestamp,policy,demand_w,utilization_w,satisfaction_pct,delta_u_static_pct,delta_u_greedy_pct,"
           "wall_ms,violations,tenant_min_violations,tenant_max_violations,worst_tenant_margin_pct,"
           "mean_tenant_margin_pct\n";
    out << std::setprecision(10);
    for (const auto& f : result.frames) {
        for (const auto& p : f.policies) {
            out << f.index << ',' << f.timestamp << ',' << to_string(p.policy) << ',' << f.demand << ','
                << p.utilization;
            cell(out, p.satisfaction, 100.0);
            cell(out, p.policy == Policy::Static ? std::nullopt : f.improvement(p.policy, Policy::Static));
            cell(out, p.policy == Policy::Greedy ? std::nullopt : f.improvement(p.policy, Policy::Greedy));
            out << ',' << p.wall_ms << ',' << p.violations << ',' << p.tenant_min_violations << ','
                << p.tenant_max_violations;
            cell(out, p.worst_margin(), 100.0);
            cell(out, p.mean_margin(), 100.0);
            out << '\n';
        }
    }
    out << "# summary frames=" << result.summary.frames << '\n';
    out << "# policy,metric,count,mean,std,min,max\n";
    for (const auto& s : result.summary.policies) {
        const auto name = to_string(s.policy);
        moments(out, name, "satisfaction_pct", scaled(s.satisfaction, 100.0));
        moments(out, name, "utilization_w", s.utilization);
        if (s.policy != Policy::Static) moments(out, name, "delta_u_static_pct", s.improvement_vs_static);
        if (s.policy != Policy::Greedy) moments(out, name, "delta_u_greedy_pct", s.improvement_vs_greedy);
        if (s.policy == Policy::Nvpax) moments(out, name, "wall_ms", s.wall_ms);
        if (s.tenant_satisfaction.count > 0) {
            moments(out, name, "tenant_satisfaction_pct", scaled(s.tenant_satisfaction, 100.0));
            moments(out, name, "mean_tenant_margin_pct", scaled(s.mean_margin, 100.0));
            moments(out, name, "worst_tenant_margin_pct", scaled(s.worst_margin, 100.0));
        }
        out << "# " << name << ",violations," << s.violations << '\n';
        out << "# " << name << ",tenant_min_violations," << s.tenant_min_violations << '\n';
        out << "# " << name << ",tenant_max_violations," << s.tenant_max_violations << '\n';
    }
}

}  // namespace nvpax
