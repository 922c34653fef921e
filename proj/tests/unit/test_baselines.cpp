#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "builders.hpp"
#include "nvpax/baselines.hpp"
#include "nvpax/errors.hpp"
#include "nvpax/fixtures.hpp"
#include "nvpax/metrics.hpp"

using namespace nvpax;
using namespace nvpax::testing;

namespace {

std::vector<double> fixture_demand(const PdnTopology& t, const FixtureCase& fc) {
    std::vector<double> demand(t.device_count());
    for (std::size_t k = 0; k < fc.spec.devices.size(); ++k) demand[t.device_index(fc.spec.devices[k].id)] = fc.demand[k];
    return demand;
}

}  // namespace

TEST(Static, EqualShare) {
    const auto t = flat(1000, {{"a", 200, 700}, {"b", 200, 700}, {"c", 200, 700}, {"d", 200, 700}});
    for (double a : static_alloc(t)) EXPECT_DOUBLE_EQ(a, 250.0);
}

TEST(Static, ShareBelowMinimumIsClampedAndAuditFlagsIt) {
    std::vector<Dev> devs;
    for (int i = 0; i < 10; ++i) devs.push_back({"d" + std::to_string(i), 200, 700});
    const auto t = flat(1000, devs);
    const auto a = static_alloc(t);
    for (double v : a) EXPECT_DOUBLE_EQ(v, 200.0);
    const auto v = verify_allocation(a, t);
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0].kind, ViolationKind::NodeCapacity);
}

TEST(Greedy, AggregatesOfBottleneckFixture) {
    const auto fc = bottleneck_fixture();
    const auto t = PdnTopology::build(fc.spec);
    const auto g = greedy_aggregate(t, fixture_demand(t, fc));
    const auto a1 = t.node_index("server-a1");
    EXPECT_DOUBLE_EQ(g.min_load[a1], 0.0);
    EXPECT_NEAR(g.extra_demand[a1], 4500.0, 1e-9);
    EXPECT_NEAR(g.extra_room[a1], 2500.0, 1e-9);
    EXPECT_NEAR(g.weight[a1], 2500.0, 1e-9);
    EXPECT_NEAR(g.weight[t.node_index("rack-b")], 3500.0, 1e-9);
    EXPECT_NEAR(g.weight[0], 10000.0, 1e-9);
}

TEST(Greedy, NodeBelowMinimumLoadHasNoWeight) {
    const auto t = flat(300, {{"a", 200, 700}, {"b", 200, 700}});
    const auto g = greedy_aggregate(t, std::vector<double>{500, 500});
    EXPECT_DOUBLE_EQ(g.extra_room[0], 0.0);
    EXPECT_DOUBLE_EQ(g.weight[0], 0.0);
    const auto a = greedy_alloc(t, std::vector<double>{500, 500});
    EXPECT_DOUBLE_EQ(a[0], 200.0);
}

TEST(Greedy, ProportionalSplitOfOneNode) {
    const auto t = flat(20, {{"a", 0, 100}, {"b", 0, 100}});
    const auto a = greedy_alloc(t, std::vector<double>{10, 30});
    EXPECT_NEAR(a[0], 5.0, 1e-12);
    EXPECT_NEAR(a[1], 15.0, 1e-12);
}

TEST(Greedy, AmpleBudgetGrantsFullDemand) {
    const auto t = flat(5000, {{"a", 100, 700}, {"b", 100, 700}});
    const auto a = greedy_alloc(t, std::vector<double>{400, 650});
    EXPECT_NEAR(a[0], 400.0, 1e-9);
    EXPECT_NEAR(a[1], 650.0, 1e-9);
}

TEST(Greedy, DemandAtMinimumGivesMinimum) {
    const auto t = flat(5000, {{"a", 100, 700}, {"b", 150, 700}});
    const auto a = greedy_alloc(t, std::vector<double>{100, 150});
    EXPECT_DOUBLE_EQ(a[0], 100.0);
    EXPECT_DOUBLE_EQ(a[1], 150.0);
}

TEST(Greedy, BottleneckFixtureSatisfaction) {
    const auto fc = bottleneck_fixture();
    const auto t = PdnTopology::build(fc.spec);
    const auto d = fixture_demand(t, fc);
    const auto a = greedy_alloc(t, d);
    // Root split: rack A gets 10000 * 4950 / 11950, B and C share the rest.
    const double rack_a = 10000.0 * 4950.0 / 11950.0;
    const double rack_b = (10000.0 - rack_a) / 2.0;
    const double expected_u = 2500.0 + 450.0 + 2.0 * rack_b;
    EXPECT_NEAR(useful_utilization(d, a), expected_u, 1e-9);
    EXPECT_NEAR(*satisfaction_ratio(d, a), 0.73705, 5e-5);
    EXPECT_NEAR(a[t.device_index("a1-0")], 2500.0 / 6.0, 1e-9);
    EXPECT_TRUE(verify_allocation(a, t).empty());
}

TEST(Greedy, RespectsCapacitiesButIgnoresTenants) {
    auto spec = flat_spec(1000, {{"a", 0, 700}, {"b", 0, 700}});
    spec.tenants.push_back({"t", {"a"}, 700.0, kInfinity});
    const auto t = PdnTopology::build(spec);
    const std::vector<double> r{700, 700};
    const auto v = verify_allocation(greedy_alloc(t, r), t);
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0].kind, ViolationKind::TenantMinimum);
}

TEST(Greedy, NeverExceedsClippedDemandOnRandomTrees) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        TopologySpec spec;
        spec.nodes.push_back({"root", std::nullopt, {}, {}});
        const int servers = 2 + static_cast<int>(unit(rng) * 5);
        for (int s = 0; s < servers; ++s) {
            const std::string sid = "s" + std::to_string(s);
            spec.nodes[0].children.push_back(sid);
            PdnNode sn{sid, std::nullopt, {}, {}};
            for (int k = 0; k < 4; ++k) {
                const std::string id = sid + "-" + std::to_string(k);
                sn.devices.push_back(id);
                spec.devices.push_back({id, 100, 700, 1, std::nullopt});
            }
            spec.nodes.push_back(sn);
        }
        spec.nodes[0].devices.push_back("loose");
        spec.devices.push_back({"loose", 50, 300, 1, std::nullopt});
        spec = compute_oversubscribed_capacities(spec, 0.5 + 0.5 * unit(rng));
        const auto t = PdnTopology::build(spec);
        std::vector<double> r(t.device_count());
        for (auto& v : r) v = 800 * unit(rng);
        const auto a = greedy_alloc(t, r);
        EXPECT_TRUE(verify_allocation(a, t).empty());
        for (std::size_t i = 0; i < r.size(); ++i) {
            const auto& d = t.device(i);
            EXPECT_LE(a[i], clip_request(r[i], d.lower, d.upper) + 1e-9);
        }
    }
}

TEST(Policy, NamesRoundTrip) {
    for (Policy p : {Policy::Nvpax, Policy::Static, Policy::Greedy}) EXPECT_EQ(parse_policy(to_string(p)), p);
    EXPECT_THROW(parse_policy("fifo"), Error);
}

TEST(Policy, NvpaxBeatsGreedyOnFixture) {
    const auto fc = bottleneck_fixture();
    const auto t = PdnTopology::build(fc.spec);
    const auto d = fixture_demand(t, fc);
    const auto frame = all_active(t, d);
    const double s_nvpax = *satisfaction_ratio(d, allocate(Policy::Nvpax, t, frame));
    const double s_greedy = *satisfaction_ratio(d, allocate(Policy::Greedy, t, frame));
    EXPECT_GE(s_nvpax - s_greedy, 0.09);
}
