#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "builders.hpp"
#include "nvpax/allocator.hpp"
#include "nvpax/errors.hpp"
#include "nvpax/fixtures.hpp"

using namespace nvpax;
using namespace nvpax::testing;

namespace {

double at(const PdnTopology& t, const std::vector<double>& a, const std::string& id) {
    return a[t.device_index(id)];
}

}  // namespace

TEST(Phase1, SharedShortfallUnderRootCap) {
    const auto t = flat(1000, {{"a", 200, 700}, {"b", 200, 700}, {"c", 200, 700}});
    const auto sys = build_constraints(t);
    const auto a = phase1(t, sys, frame_of(t, {{"a", 500}, {"b", 400}, {"c", 300}}), {});
    EXPECT_NEAR(at(t, a, "a"), 1300.0 / 3, 1e-6);
    EXPECT_NEAR(at(t, a, "b"), 1000.0 / 3, 1e-6);
    EXPECT_NEAR(at(t, a, "c"), 700.0 / 3, 1e-6);
}

TEST(Phase1, HigherPrioritySatisfiedFirst) {
    const auto t = flat(800, {{"hi", 100, 700, 2}, {"lo", 100, 700, 1}});
    const auto sys = build_constraints(t);
    PhaseStats stats;
    const auto a = phase1(t, sys, frame_of(t, {{"hi", 500}, {"lo", 500}}), {}, &stats);
    EXPECT_NEAR(at(t, a, "hi"), 500.0, 1e-6);
    EXPECT_NEAR(at(t, a, "lo"), 300.0, 1e-6);
    EXPECT_EQ(stats.rounds, 2);
}

TEST(Phase1, TenantMinimumForcesOverAllocation) {
    auto spec = flat_spec(5000, {{"a", 0, 700}, {"b", 0, 700}});
    spec.tenants.push_back({"t", {"a", "b"}, 900.0, kInfinity});
    const auto t = PdnTopology::build(spec);
    const auto sys = build_constraints(t);
    const auto a = phase1(t, sys, frame_of(t, {{"a", 300}, {"b", 300}}), {});
    EXPECT_NEAR(at(t, a, "a"), 450.0, 1e-6);
    EXPECT_NEAR(at(t, a, "b"), 450.0, 1e-6);
}

// Squared deviations are divided by weight^2, so stationarity equalizes (a - r) / w^2.
TEST(Phase1, NormalizedDeviationsAreBalancedOnSlackDevices) {
    const auto t = flat(900, {{"a", 0, 400}, {"b", 0, 800}, {"c", 0, 1000}});
    const auto sys = build_constraints(t);
    RunConfig cfg;
    cfg.normalized = true;
    const std::vector<std::pair<std::string, double>> r{{"a", 300}, {"b", 500}, {"c", 600}};
    const auto a = phase1(t, sys, frame_of(t, r), cfg);
    const double da = (at(t, a, "a") - 300) / (400.0 * 400.0);
    const double db = (at(t, a, "b") - 500) / (800.0 * 800.0);
    const double dc = (at(t, a, "c") - 600) / (1000.0 * 1000.0);
    EXPECT_NEAR(da, db, 1e-10);
    EXPECT_NEAR(db, dc, 1e-10);
    EXPECT_NEAR(at(t, a, "a"), 300.0 - 500.0 * 16.0 / 180.0, 1e-6);
    EXPECT_NEAR(at(t, a, "a") + at(t, a, "b") + at(t, a, "c"), 900.0, 1e-6);
}

TEST(Phase2, TwoDevicesShareSurplusInOneRound) {
    const auto t = flat(1000, {{"a", 0, 700}, {"b", 0, 700}});
    const auto sys = build_constraints(t);
    const auto f = frame_of(t, {{"a", 300}, {"b", 300}});
    const auto a1 = phase1(t, sys, f, {});
    for (auto method : {SurplusMethod::Auto, SurplusMethod::LinearProgram}) {
        RunConfig cfg;
        cfg.surplus_method = method;
        PhaseStats stats;
        const auto a2 = phase2(t, sys, f, a1, cfg, &stats);
        EXPECT_NEAR(at(t, a2, "a"), 500.0, 1e-6);
        EXPECT_NEAR(at(t, a2, "b"), 500.0, 1e-6);
        EXPECT_EQ(stats.rounds, 1);
    }
}

TEST(Phase2, OwnBoundThenRootCap) {
    const auto t = flat(1000, {{"a", 0, 350}, {"b", 0, 700}});
    const auto sys = build_constraints(t);
    const auto f = frame_of(t, {{"a", 300}, {"b", 300}});
    const auto a1 = phase1(t, sys, f, {});
    for (auto method : {SurplusMethod::Auto, SurplusMethod::LinearProgram}) {
        RunConfig cfg;
        cfg.surplus_method = method;
        const auto a2 = phase2(t, sys, f, a1, cfg);
        EXPECT_NEAR(at(t, a2, "a"), 350.0, 1e-6);
        EXPECT_NEAR(at(t, a2, "b"), 650.0, 1e-6);
    }
}

TEST(Phase2, NoSurplusLeavesPhaseOneResult) {
    const auto t = flat(600, {{"a", 0, 700}, {"b", 0, 700}});
    const auto sys = build_constraints(t);
    const auto f = frame_of(t, {{"a", 400}, {"b", 300}});
    const auto a1 = phase1(t, sys, f, {});
    for (auto method : {SurplusMethod::Auto, SurplusMethod::LinearProgram}) {
        RunConfig cfg;
        cfg.surplus_method = method;
        const auto a2 = phase2(t, sys, f, a1, cfg);
        EXPECT_NEAR(at(t, a2, "a"), at(t, a1, "a"), 1e-6);
        EXPECT_NEAR(at(t, a2, "b"), at(t, a1, "b"), 1e-6);
    }
}

TEST(Phase2, IdleDevicesWaitForPhaseThree) {
    const auto t = flat(2000, {{"a", 100, 700}, {"i", 100, 700}});
    const auto sys = build_constraints(t);
    const auto f = frame_of(t, {{"a", 300}}, {"i"});
    const auto a1 = phase1(t, sys, f, {});
    const auto a2 = phase2(t, sys, f, a1, {});
    EXPECT_DOUBLE_EQ(at(t, a2, "i"), 100.0);
    EXPECT_NEAR(at(t, a2, "a"), 700.0, 1e-6);
    const auto a3 = phase3(t, sys, f, a2, {});
    EXPECT_NEAR(at(t, a3, "i"), 700.0, 1e-6);
    EXPECT_DOUBLE_EQ(at(t, a3, "a"), at(t, a2, "a"));
}

TEST(Phase3, SymmetricIdleFill) {
    const auto t = flat(900, {{"x", 200, 700}, {"y", 200, 700}, {"z", 200, 700}});
    const auto sys = build_constraints(t);
    const auto f = frame_of(t, {}, {"x", "y", "z"});
    const auto a1 = phase1(t, sys, f, {});
    const auto a2 = phase2(t, sys, f, a1, {});
    const auto a3 = phase3(t, sys, f, a2, {});
    for (const char* id : {"x", "y", "z"}) EXPECT_NEAR(at(t, a3, id), 300.0, 1e-6);
}

TEST(Phase3, TightRackStopsEarly) {
    TopologySpec spec;
    spec.nodes.push_back({"root", 600.0, {"r1", "r2"}, {}});
    spec.nodes.push_back({"r1", 150.0, {}, {"i1"}});
    spec.nodes.push_back({"r2", 700.0, {}, {"i2"}});
    spec.devices.push_back({"i1", 100, 700, 1, std::nullopt});
    spec.devices.push_back({"i2", 100, 700, 1, std::nullopt});
    const auto t = PdnTopology::build(spec);
    const auto sys = build_constraints(t);
    const auto f = frame_of(t, {}, {"i1", "i2"});
    const auto a1 = phase1(t, sys, f, {});
    for (auto method : {SurplusMethod::Auto, SurplusMethod::LinearProgram}) {
        RunConfig cfg;
        cfg.surplus_method = method;
        PhaseStats stats;
        const auto a3 = phase3(t, sys, f, a1, cfg, &stats);
        EXPECT_NEAR(at(t, a3, "i1"), 150.0, 1e-6);
        EXPECT_NEAR(at(t, a3, "i2"), 450.0, 1e-6);
        EXPECT_EQ(stats.rounds, 2);
    }
}

TEST(DetectSaturated, OwnBoundRootAndSlack) {
    const auto t = flat(1000, {{"a", 0, 350}, {"b", 0, 700}});
    const std::vector<int> both{0, 1};
    EXPECT_EQ(detect_saturated(t, by_ids(t, {{"a", 350}, {"b", 650}}), both).size(), 2u);
    EXPECT_EQ(detect_saturated(t, by_ids(t, {{"a", 350}, {"b", 600}}), both), std::vector<int>{0});
    const auto wide = flat(5000, {{"a", 0, 350}, {"b", 0, 700}});
    EXPECT_TRUE(detect_saturated(wide, by_ids(wide, {{"a", 340}, {"b", 690}}), both).empty());
}

TEST(Optimize, BottleneckFixtureSatisfaction) {
    const auto fc = bottleneck_fixture();
    const auto t = PdnTopology::build(fc.spec);
    std::vector<double> demand(t.device_count());
    for (std::size_t k = 0; k < fc.spec.devices.size(); ++k) demand[t.device_index(fc.spec.devices[k].id)] = fc.demand[k];
    const auto res = optimize(t, all_active(t, demand));
    double u = 0.0, total = 0.0;
    for (std::size_t i = 0; i < demand.size(); ++i) {
        u += std::min(demand[i], res.allocation[i]);
        total += demand[i];
    }
    // Rack B and C demand 3500 W each, rack A is limited to 2500 + 450 W.
    EXPECT_NEAR(u, 9950.0, 1e-4);
    EXPECT_NEAR(u / total, 9950.0 / 11950.0, 1e-9);
    EXPECT_TRUE(verify_allocation(res.allocation, t).empty());
}

TEST(Optimize, AllIdleWithTenantMinimum) {
    auto spec = flat_spec(1200, {{"a", 100, 700}, {"b", 100, 700}, {"c", 100, 700}});
    spec.tenants.push_back({"t", {"a", "b"}, 500.0, kInfinity});
    const auto t = PdnTopology::build(spec);
    const auto res = optimize(t, frame_of(t, {}, {"a", "b", "c"}));
    EXPECT_NEAR(at(t, res.phase1, "a") + at(t, res.phase1, "b"), 500.0, 1e-6);
    EXPECT_NEAR(at(t, res.phase1, "c"), 100.0, 1e-4);
    EXPECT_NEAR(res.allocation[0] + res.allocation[1] + res.allocation[2], 1200.0, 1e-6);
    EXPECT_TRUE(verify_allocation(res.allocation, t).empty());
}

TEST(Optimize, InfeasibleMinimumLoadIsReported) {
    const auto t = flat(500, {{"a", 300, 700}, {"b", 300, 700}});
    try {
        optimize(t, frame_of(t, {{"a", 400}, {"b", 400}}));
        FAIL() << "expected InfeasibleError";
    } catch (const InfeasibleError& e) {
        EXPECT_EQ(e.phase(), 1);
        EXPECT_NE(std::string(e.what()).find("root"), std::string::npos) << e.what();
    }
}

TEST(Optimize, InfeasibleTenantCombinationNamesPriority) {
    auto spec = flat_spec(1000, {{"a", 0, 700, 2}, {"b", 0, 700, 1}});
    spec.tenants.push_back({"ta", {"a"}, 600.0, kInfinity});
    spec.tenants.push_back({"tb", {"b"}, 600.0, kInfinity});
    const auto t = PdnTopology::build(spec);
    try {
        optimize(t, frame_of(t, {{"a", 650}, {"b", 650}}));
        FAIL() << "expected InfeasibleError";
    } catch (const InfeasibleError& e) {
        EXPECT_EQ(e.phase(), 1);
        EXPECT_EQ(e.priority_level(), 2);
    }
}

TEST(Optimize, SurplusMethodsAgreeOnRandomTrees) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 15; ++trial) {
        TopologySpec spec;
        const int racks = 2 + static_cast<int>(unit(rng) * 3);
        PdnNode root{"root", std::nullopt, {}, {}};
        int dev = 0;
        for (int r = 0; r < racks; ++r) {
            const std::string rack = "rack" + std::to_string(r);
            root.children.push_back(rack);
            PdnNode rn{rack, std::nullopt, {}, {}};
            const int servers = 1 + static_cast<int>(unit(rng) * 3);
            for (int s = 0; s < servers; ++s) {
                const std::string sid = rack + "-s" + std::to_string(s);
                rn.children.push_back(sid);
                PdnNode sn{sid, std::nullopt, {}, {}};
                const int k = 1 + static_cast<int>(unit(rng) * 4);
                for (int d = 0; d < k; ++d) {
                    const std::string id = "g" + std::to_string(dev++);
                    sn.devices.push_back(id);
                    const double l = 50 + 100 * unit(rng);
                    spec.devices.push_back({id, l, l + 200 + 500 * unit(rng), 1, std::nullopt});
                }
                spec.nodes.push_back(sn);
            }
            spec.nodes.push_back(rn);
        }
        spec.nodes.insert(spec.nodes.begin(), root);
        spec = compute_oversubscribed_capacities(spec, 0.6 + 0.35 * unit(rng));
        const auto t = PdnTopology::build(spec);
        std::vector<double> measured(t.device_count());
        for (auto& m : measured) m = unit(rng) < 0.3 ? 50.0 : 150 + 600 * unit(rng);
        const auto frame = preprocess_frame(t, measured);
        RunConfig lp_cfg;
        lp_cfg.surplus_method = SurplusMethod::LinearProgram;
        const auto fast = optimize(t, frame);
        const auto lp = optimize(t, frame, lp_cfg);
        for (std::size_t i = 0; i < t.device_count(); ++i) {
            ASSERT_NEAR(fast.allocation[i], lp.allocation[i], 1e-5) << "trial " << trial << " device " << i;
        }
    }
}
