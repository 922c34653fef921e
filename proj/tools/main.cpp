// nvpax command line: topology validation, synthetic data, trace replay and
// runtime scaling.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "nvpax/bench.hpp"
#include "nvpax/constraints.hpp"
#include "nvpax/errors.hpp"
#include "nvpax/fixtures.hpp"
#include "nvpax/simulation.hpp"
#include "nvpax/synthetic.hpp"
#include "nvpax/topology_io.hpp"
#include "nvpax/trace.hpp"

namespace {

enum ExitCode { kOk = 0, kInvalid = 1, kInfeasible = 2, kSolverFailure = 3 };

std::vector<nvpax::Policy> parse_policies(const std::string& list) {
    std::vector<nvpax::Policy> out;
    std::stringstream s(list);
    std::string name;
    while (std::getline(s, name, ',')) {
        if (!name.empty()) out.push_back(nvpax::parse_policy(name));
    }
    return out;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw nvpax::Error("cannot write '" + path + "'");
    return out;
}

int cmd_validate(const std::string& path, double factor) {
    const auto spec = nvpax::read_topology_spec(path);
    const auto issues = nvpax::validate_topology(spec, false);
    for (const auto& issue : issues) {
        std::cerr << nvpax::to_string(issue.kind) << " '" << issue.subject << "': " << issue.message << '\n';
    }
    if (!issues.empty()) return kInvalid;
    const auto topology = nvpax::PdnTopology::build(nvpax::compute_oversubscribed_capacities(spec, factor));
    const auto feasibility = nvpax::check_necessary_feasibility(topology);
    for (const auto& f : feasibility) std::cerr << "infeasible: " << f.message << '\n';
    if (!feasibility.empty()) return kInfeasible;
    std::cout << "ok: " << topology.device_count() << " devices, " << topology.node_count() << " nodes, "
              << topology.tenant_count() << " tenants, root capacity " << topology.root().capacity << " W\n";
    return kOk;
}

void print_summary(const nvpax::RunSummary& summary) {
    std::printf("%zu frames\n", summary.frames);
    std::printf("%-8s %10s %10s %10s %10s %12s %12s %10s\n", "policy", "S mean%", "S std%", "S min%", "S max%",
                "dU static%", "dU greedy%", "viol");
    for (const auto& p : summary.policies) {
        auto pct = [](const nvpax::Moments& m, double v) { return m.count ? 100.0 * v : 0.0; };
        std::printf("%-8s %10.3f %10.3f %10.3f %10.3f %12.3f %12.3f %10lld\n",
                    std::string(nvpax::to_string(p.policy)).c_str(), pct(p.satisfaction, p.satisfaction.mean),
                    pct(p.satisfaction, p.satisfaction.std), pct(p.satisfaction, p.satisfaction.min),
                    pct(p.satisfaction, p.satisfaction.max), p.improvement_vs_static.mean,
                    p.improvement_vs_greedy.mean, p.violations);
        if (p.policy == nvpax::Policy::Nvpax) {
            std::printf("  nvpax optimize(): mean %.3f ms, max %.3f ms\n", p.wall_ms.mean, p.wall_ms.max);
        }
        if (p.tenant_satisfaction.count) {
            std::printf("  tenants: S_k mean %.3f%%, margin mean %.3f%%, worst-tenant margin mean %.3f%% (min %.3f%%), "
                        "min/max SLA violations %lld/%lld\n",
                        100 * p.tenant_satisfaction.mean, 100 * p.mean_margin.mean, 100 * p.worst_margin.mean,
                        100 * p.worst_margin.min, p.tenant_min_violations, p.tenant_max_violations);
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hierarchical power allocation: nvPAX policy, baselines and trace simulator"};
    app.require_subcommand(1);

    double factor = 0.85;

    auto* validate = app.add_subcommand("validate", "Check a topology file");
    std::string validate_path;
    validate->add_option("topology", validate_path, "Topology JSON")->required();
    validate->add_option("--factor", factor, "Oversubscription factor for missing capacities");

    auto* gen_topo = app.add_subcommand("generate-topology", "Write a random hierarchy");
    std::size_t devices = 1000;
    std::uint64_t seed = 1;
    nvpax::HierarchyShape shape;
    nvpax::TenantAssignment tenants;
    tenants.tenants = 0;
    std::string out_path;
    gen_topo->add_option("--devices", devices, "Device count")->check(CLI::PositiveNumber);
    gen_topo->add_option("--factor", factor, "Oversubscription factor");
    gen_topo->add_option("--seed", seed, "Random seed");
    gen_topo->add_option("--branching-min", shape.branching_min);
    gen_topo->add_option("--branching-max", shape.branching_max);
    gen_topo->add_option("--devices-per-server-min", shape.devices_per_server_min);
    gen_topo->add_option("--devices-per-server-max", shape.devices_per_server_max);
    gen_topo->add_option("--lower", shape.device_lower_w, "Device minimum power (W)");
    gen_topo->add_option("--upper", shape.device_upper_w, "Device maximum power (W)");
    gen_topo->add_option("--tenants", tenants.tenants, "Tenant count");
    gen_topo->add_option("--devices-per-tenant", tenants.devices_per_tenant);
    gen_topo->add_option("--tenant-min", tenants.min_fraction, "b_min as a fraction of tenant sum of u");
    gen_topo->add_option("--tenant-max", tenants.max_fraction, "b_max as a fraction of tenant sum of u");
    gen_topo->add_option("--out", out_path, "Output JSON")->required();

    auto* gen_trace = app.add_subcommand("generate-trace", "Write a synthetic telemetry trace");
    std::string topology_path;
    nvpax::SyntheticTraceConfig trace_cfg;
    gen_trace->add_option("--topology", topology_path)->required();
    gen_trace->add_option("--factor", factor, "Oversubscription factor for missing capacities");
    gen_trace->add_option("--frames", trace_cfg.frames);
    gen_trace->add_option("--interval", trace_cfg.interval_s, "Seconds between frames");
    gen_trace->add_option("--idle-probability", trace_cfg.idle_probability);
    gen_trace->add_option("--switch-rate", trace_cfg.switch_rate);
    gen_trace->add_option("--active-low", trace_cfg.active_low, "Fraction of u");
    gen_trace->add_option("--active-high", trace_cfg.active_high, "Fraction of u");
    gen_trace->add_option("--correlation", trace_cfg.correlation);
    gen_trace->add_option("--idle-power", trace_cfg.idle_power_w, "Reading while idle (W)");
    gen_trace->add_option("--seed", trace_cfg.seed);
    gen_trace->add_option("--out", out_path)->required();

    auto* run = app.add_subcommand("run", "Replay a trace through the selected policies");
    std::string trace_path, policies = "nvpax,static,greedy";
    nvpax::SimulationConfig sim;
    run->add_option("--topology", topology_path)->required();
    run->add_option("--trace", trace_path)->required();
    run->add_option("--factor", factor, "Oversubscription factor for missing capacities");
    run->add_option("--policies", policies, "Comma separated: nvpax,static,greedy");
    run->add_option("--epsilon", sim.run.epsilon);
    run->add_option("--idle-threshold", sim.run.idle_threshold_w, "Watts");
    run->add_flag("--normalized", sim.run.normalized, "Weight-normalized objectives");
    run->add_option("--workers", sim.workers)->check(CLI::PositiveNumber);
    run->add_option("--out", out_path, "Results CSV");

    auto* bench = app.add_subcommand("bench", "Time optimize() on synthetic hierarchies");
    nvpax::BenchConfig bench_cfg;
    std::string json_path;
    bench->add_option("--sizes", bench_cfg.sizes, "Device counts")->delimiter(',');
    bench->add_option("--runs", bench_cfg.runs);
    bench->add_option("--seed", bench_cfg.seed);
    bench->add_option("--factor", bench_cfg.factor);
    bench->add_option("--json", json_path, "Write the report as JSON");

    auto* fixture = app.add_subcommand("fixture", "Emit a built-in instance");
    std::string fixture_name, demand_path;
    fixture->add_option("name", fixture_name)->required()->check(CLI::IsMember(nvpax::fixture_names()));
    fixture->add_option("--topology-out", out_path, "Topology JSON")->required();
    fixture->add_option("--trace-out", demand_path, "Demand as a one-frame trace")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kInvalid;
    }

    try {
        if (*validate) return cmd_validate(validate_path, factor);

        if (*gen_topo) {
            auto spec = nvpax::generate_synthetic_spec(devices, shape, factor, seed);
            if (tenants.tenants > 0) spec = nvpax::assign_tenants(std::move(spec), tenants, seed + 1);
            nvpax::write_topology(out_path, spec);
            std::cout << "wrote " << out_path << " (" << spec.devices.size() << " devices, " << spec.nodes.size()
                      << " nodes, " << spec.tenants.size() << " tenants)\n";
            return kOk;
        }

        if (*gen_trace) {
            const auto topology = nvpax::load_topology(topology_path, factor);
            const auto frames = nvpax::generate_trace(topology, trace_cfg);
            nvpax::save_trace(out_path, topology, frames);
            std::cout << "wrote " << out_path << " (" << frames.size() << " frames)\n";
            return kOk;
        }

        if (*run) {
            const auto topology = nvpax::load_topology(topology_path, factor);
            const auto trace = nvpax::load_trace(trace_path, topology);
            sim.policies = parse_policies(policies);
            const auto result = nvpax::run_simulation(topology, trace, sim);
            if (!out_path.empty()) {
                auto out = open_output(out_path);
                nvpax::write_results(out, result);
            }
            print_summary(result.summary);
            return kOk;
        }

        if (*bench) {
            const auto report = nvpax::run_bench(bench_cfg);
            std::printf("%10s %6s %12s %12s %12s %12s\n", "devices", "runs", "mean ms", "std ms", "min ms", "max ms");
            for (const auto& p : report.points) {
                std::printf("%10zu %6d %12.3f %12.3f %12.3f %12.3f\n", p.devices, p.runs, p.mean_ms, p.std_ms,
                            p.min_ms, p.max_ms);
            }
            std::printf("fitted exponent: %.3f\n", report.exponent);
            if (!json_path.empty()) {
                nlohmann::json j;
                j["exponent"] = report.exponent;
                for (const auto& p : report.points) {
                    j["points"].push_back({{"devices", p.devices}, {"runs", p.runs}, {"mean_ms", p.mean_ms},
                                           {"std_ms", p.std_ms}, {"min_ms", p.min_ms}, {"max_ms", p.max_ms}});
                }
                open_output(json_path) << j.dump(2) << '\n';
            }
            return kOk;
        }

        if (*fixture) {
            const auto fc = nvpax::fixture_by_name(fixture_name);
            const auto topology = nvpax::PdnTopology::build(fc.spec);
            nvpax::TraceFrame frame{0.0, std::vector<double>(topology.device_count())};
            for (std::size_t k = 0; k < fc.spec.devices.size(); ++k) {
                frame.power[topology.device_index(fc.spec.devices[k].id)] = fc.demand[k];
            }
            nvpax::write_topology(out_path, fc.spec);
            nvpax::save_trace(demand_path, topology, {frame});
            std::cout << "wrote " << out_path << " and " << demand_path << '\n';
            return kOk;
        }
    } catch (const nvpax::InfeasibleError& e) {
        std::cerr << "infeasible (phase " << e.phase() << "): " << e.what() << '\n';
        return kInfeasible;
    } catch (const nvpax::SolverError& e) {
        std::cerr << "solver failure (phase " << e.phase() << "): " << e.what() << '\n';
        return kSolverFailure;
    } catch (const nvpax::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInvalid;
    }
    return kOk;
}
