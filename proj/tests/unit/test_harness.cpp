#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "builders.hpp"
#include "nvpax/bench.hpp"
#include "nvpax/errors.hpp"
#include "nvpax/fixtures.hpp"
#include "nvpax/simulation.hpp"
#include "nvpax/synthetic.hpp"
#include "nvpax/trace.hpp"

using namespace nvpax;
using namespace nvpax::testing;

namespace {

PdnTopology three_devices() { return flat(2000, {{"a", 100, 700}, {"b", 100, 700}, {"c", 100, 700}}); }

std::vector<TraceFrame> parse(const std::string& text, const PdnTopology& t) {
    std::istringstream in(text);
    return parse_trace(in, t);
}

}  // namespace

TEST(Trace, ParsesAndSortsFrames) {
    const auto t = three_devices();
    const auto frames = parse("timestamp,c,a,b\n60,1,2,3\n30,400,500,600\n", t);
    ASSERT_EQ(frames.size(), 2u);
    EXPECT_DOUBLE_EQ(frames[0].timestamp, 30.0);
    EXPECT_DOUBLE_EQ(frames[0].power[t.device_index("c")], 400.0);
    EXPECT_DOUBLE_EQ(frames[1].power[t.device_index("b")], 3.0);
    EXPECT_EQ(frames[1].power.size(), 3u);
}

TEST(Trace, UnknownColumnIsRejected) {
    const auto t = three_devices();
    EXPECT_THROW(parse("timestamp,a,gpu-x\n0,1,2\n", t), TraceError);
}

TEST(Trace, MissingReadingIsZeroAndIdle) {
    const auto t = three_devices();
    const auto frames = parse("timestamp,a,b\n0,400,\n", t);
    EXPECT_DOUBLE_EQ(frames[0].power[t.device_index("b")], 0.0);
    EXPECT_DOUBLE_EQ(frames[0].power[t.device_index("c")], 0.0);
    const auto f = preprocess_frame(t, frames[0].power);
    EXPECT_EQ(f.state[t.device_index("c")], DeviceState::Idle);
    EXPECT_EQ(f.state[t.device_index("a")], DeviceState::Active);
}

TEST(Trace, ErrorsCarryLineNumbers) {
    const auto t = three_devices();
    try {
        parse("timestamp,a\n0,1\n5,abc\n", t);
        FAIL();
    } catch (const TraceError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
    EXPECT_THROW(parse("timestamp,a\n0,-4\n", t), TraceError);
    EXPECT_THROW(parse("timestamp,a\n0,1,2\n", t), TraceError);
    EXPECT_THROW(parse("time,a\n0,1\n", t), TraceError);
    EXPECT_THROW(parse("", t), TraceError);
}

TEST(Trace, WriteThenReadRoundTrips) {
    const auto t = three_devices();
    SyntheticTraceConfig cfg;
    cfg.frames = 5;
    const auto frames = generate_trace(t, cfg);
    std::stringstream io;
    write_trace(io, t, frames);
    const auto back = parse_trace(io, t);
    ASSERT_EQ(back.size(), frames.size());
    for (std::size_t k = 0; k < frames.size(); ++k) {
        EXPECT_EQ(back[k].timestamp, frames[k].timestamp);
        EXPECT_EQ(back[k].power, frames[k].power);
    }
}

TEST(GenerateTrace, SeedDeterminism) {
    const auto t = generate_synthetic_hierarchy(50, {}, 0.85, 3);
    SyntheticTraceConfig cfg;
    cfg.frames = 20;
    cfg.seed = 9;
    const auto x = generate_trace(t, cfg);
    const auto y = generate_trace(t, cfg);
    for (std::size_t k = 0; k < x.size(); ++k) EXPECT_EQ(x[k].power, y[k].power);
    cfg.seed = 10;
    EXPECT_NE(generate_trace(t, cfg)[5].power, x[5].power);
}

TEST(GenerateTrace, AllIdle) {
    const auto t = generate_synthetic_hierarchy(40, {}, 0.85, 3);
    SyntheticTraceConfig cfg;
    cfg.frames = 10;
    cfg.idle_probability = 1.0;
    for (const auto& f : generate_trace(t, cfg)) {
        const auto frame = preprocess_frame(t, f.power);
        for (auto s : frame.state) EXPECT_EQ(s, DeviceState::Idle);
    }
}

TEST(GenerateTrace, FullPowerDemandMatchesOversubscription) {
    // Two-level tree: racks of 4 servers of 4 devices, factor 0.85 at each
    // internal level, so demand / C_root = 1 / 0.85^2.
    TopologySpec spec;
    spec.nodes.push_back({"root", std::nullopt, {}, {}});
    for (int r = 0; r < 3; ++r) {
        const std::string rack = "r" + std::to_string(r);
        spec.nodes[0].children.push_back(rack);
        PdnNode rn{rack, std::nullopt, {}, {}};
        for (int s = 0; s < 4; ++s) {
            const std::string sid = rack + "s" + std::to_string(s);
            rn.children.push_back(sid);
            PdnNode sn{sid, std::nullopt, {}, {}};
            for (int d = 0; d < 4; ++d) {
                sn.devices.push_back(sid + "d" + std::to_string(d));
                spec.devices.push_back({sn.devices.back(), 200, 700, 1, std::nullopt});
            }
            spec.nodes.push_back(sn);
        }
        spec.nodes.push_back(rn);
    }
    const auto t = PdnTopology::build(compute_oversubscribed_capacities(spec, 0.85));
    SyntheticTraceConfig cfg;
    cfg.frames = 3;
    cfg.idle_probability = 0.0;
    cfg.active_low = cfg.active_high = 1.0;
    for (const auto& f : generate_trace(t, cfg)) {
        double total = 0.0;
        for (double w : f.power) total += w;
        EXPECT_NEAR(total, 48 * 700.0, 1e-9);
        EXPECT_NEAR(total / t.root().capacity, 1.0 / (0.85 * 0.85), 1e-12);
    }
}

TEST(GenerateTrace, RejectsBadConfig) {
    const auto t = three_devices();
    SyntheticTraceConfig cfg;
    cfg.correlation = 1.0;
    EXPECT_THROW(generate_trace(t, cfg), Error);
    cfg = {};
    cfg.active_low = 0.9;
    cfg.active_high = 0.5;
    EXPECT_THROW(generate_trace(t, cfg), Error);
}

TEST(Synthetic, SingleDevice) {
    const auto t = generate_synthetic_hierarchy(1, {}, 0.85, 1);
    EXPECT_EQ(t.device_count(), 1u);
    EXPECT_EQ(t.node_count(), 2u);
    EXPECT_EQ(t.root().id, "root");
}

TEST(Synthetic, DeterministicAndValid) {
    const auto a = generate_synthetic_spec(1000, {}, 0.85, 42);
    const auto b = generate_synthetic_spec(1000, {}, 0.85, 42);
    EXPECT_TRUE(validate_topology(a).empty());
    ASSERT_EQ(a.nodes.size(), b.nodes.size());
    for (std::size_t j = 0; j < a.nodes.size(); ++j) {
        EXPECT_EQ(a.nodes[j].id, b.nodes[j].id);
        EXPECT_EQ(a.nodes[j].capacity, b.nodes[j].capacity);
        EXPECT_EQ(a.nodes[j].children, b.nodes[j].children);
    }
    EXPECT_EQ(PdnTopology::build(a).device_count(), 1000u);
    EXPECT_THROW(generate_synthetic_spec(0, {}, 0.85, 1), Error);
}

TEST(Synthetic, TenantsAreDisjointWithScaledBounds) {
    const auto spec = assign_tenants(generate_synthetic_spec(300, {}, 0.85, 1), {}, 4);
    const auto t = PdnTopology::build(spec);
    ASSERT_EQ(t.tenant_count(), 10u);
    std::set<int> used;
    for (const auto& tenant : t.tenants()) {
        EXPECT_EQ(tenant.devices.size(), 20u);
        EXPECT_DOUBLE_EQ(tenant.b_min, 0.4 * 20 * 700);
        EXPECT_DOUBLE_EQ(tenant.b_max, 0.8 * 20 * 700);
        for (int i : tenant.devices) EXPECT_TRUE(used.insert(i).second);
    }
    TenantAssignment big;
    big.tenants = 100;
    EXPECT_THROW(assign_tenants(spec, big, 1), Error);
}

TEST(Simulation, NvpaxImprovesOnStaticWhenCapped) {
    const auto t = flat(1000, {{"a", 100, 700}, {"b", 100, 700}, {"c", 100, 700}, {"d", 100, 700}});
    const std::vector<TraceFrame> trace{{0.0, {600, 400, 200, 120}}};
    const auto res = run_simulation(t, trace, {});
    ASSERT_EQ(res.frames.size(), 1u);
    EXPECT_GT(*res.frames[0].improvement(Policy::Nvpax, Policy::Static), 0.0);
    EXPECT_EQ(res.frames[0].find(Policy::Nvpax)->violations, 0);
}

TEST(Simulation, BottleneckFixtureGap) {
    const auto fc = bottleneck_fixture();
    const auto t = PdnTopology::build(fc.spec);
    TraceFrame f{0.0, std::vector<double>(t.device_count())};
    for (std::size_t k = 0; k < fc.spec.devices.size(); ++k) f.power[t.device_index(fc.spec.devices[k].id)] = fc.demand[k];
    const auto res = run_simulation(t, {f}, {});
    const double gap = *res.frames[0].find(Policy::Nvpax)->satisfaction - *res.frames[0].find(Policy::Greedy)->satisfaction;
    EXPECT_GE(gap, 0.09);
}

TEST(Simulation, WorkersAndFrameOrderDoNotChangeRows) {
    const auto t = generate_synthetic_hierarchy(60, {}, 0.85, 7);
    SyntheticTraceConfig cfg;
    cfg.frames = 12;
    auto trace = generate_trace(t, cfg);
    SimulationConfig one;
    SimulationConfig four;
    four.workers = 4;
    const auto a = run_simulation(t, trace, one);
    std::reverse(trace.begin(), trace.end());
    const auto b = run_simulation(t, trace, four);
    for (std::size_t k = 0; k < trace.size(); ++k) {
        const auto& x = a.frames[k];
        const auto& y = b.frames[trace.size() - 1 - k];
        EXPECT_EQ(x.timestamp, y.timestamp);
        for (std::size_t p = 0; p < x.policies.size(); ++p) {
            EXPECT_EQ(x.policies[p].utilization, y.policies[p].utilization);
        }
    }
}

TEST(Simulation, InfeasibleFrameIsAttributed) {
    auto spec = flat_spec(1000, {{"a", 0, 700}, {"b", 0, 700}});
    spec.tenants.push_back({"t", {"a", "b"}, 1200, kInfinity});
    const auto t = PdnTopology::build(spec);
    const std::vector<TraceFrame> trace{{0.0, {500, 500}}, {30.0, {500, 500}}};
    try {
        run_simulation(t, trace, {});
        FAIL();
    } catch (const InfeasibleError& e) {
        EXPECT_NE(std::string(e.what()).find("frame 0"), std::string::npos) << e.what();
    }
}

TEST(Simulation, ResultsFileHasRowsAndSummary) {
    const auto t = three_devices();
    const std::vector<TraceFrame> trace{{0.0, {600, 400, 200}}, {30.0, {700, 700, 700}}};
    std::ostringstream out;
    write_results(out, run_simulation(t, trace, {}));
    std::istringstream in(out.str());
    std::string line;
    int rows = 0, summary = 0;
    std::getline(in, line);
    EXPECT_EQ(line.rfind("frame,timestamp,policy", 0), 0u);
    while (std::getline(in, line)) (line[0] == '#' ? summary : rows)++;
    EXPECT_EQ(rows, 6);
    EXPECT_GT(summary, 3);
    EXPECT_NE(out.str().find("# nvpax,satisfaction_pct,2"), std::string::npos);
}

TEST(Bench, SlopeFit) {
    const std::vector<double> x{10, 100, 1000}, y{3, 300, 30000};
    EXPECT_NEAR(fit_loglog_slope(x, y), 2.0, 1e-12);
    EXPECT_THROW(fit_loglog_slope(std::vector<double>{1}, std::vector<double>{1}), Error);
    EXPECT_THROW(fit_loglog_slope(std::vector<double>{1, 2}, std::vector<double>{0, 1}), Error);
}

TEST(Bench, SmallRunReportsEverySize) {
    BenchConfig cfg;
    cfg.sizes = {50, 200};
    cfg.runs = 2;
    const auto report = run_bench(cfg);
    ASSERT_EQ(report.points.size(), 2u);
    EXPECT_EQ(report.points[1].devices, 200u);
    EXPECT_GT(report.points[0].mean_ms, 0.0);
    EXPECT_TRUE(std::isfinite(report.exponent));
    cfg.sizes = {200, 50};
    EXPECT_THROW(run_bench(cfg), Error);
}
