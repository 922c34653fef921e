#include <gtest/gtest.h>

#include "builders.hpp"
#include "nvpax/errors.hpp"
#include "nvpax/metrics.hpp"

using namespace nvpax;
using namespace nvpax::testing;

TEST(Utilization, CappedByRequest) {
    EXPECT_DOUBLE_EQ(useful_utilization(std::vector<double>{500, 300}, std::vector<double>{400, 400}), 700.0);
    EXPECT_DOUBLE_EQ(useful_utilization(std::vector<double>{500, 300}, std::vector<double>{500, 300}), 800.0);
    EXPECT_DOUBLE_EQ(useful_utilization(std::vector<double>{500, 300}, std::vector<double>{0, 0}), 0.0);
    EXPECT_THROW(useful_utilization(std::vector<double>{1}, std::vector<double>{1, 2}), Error);
}

TEST(Satisfaction, RatioAndAbsence) {
    EXPECT_DOUBLE_EQ(*satisfaction_ratio(std::vector<double>{400, 200}, std::vector<double>{200, 100}), 0.5);
    EXPECT_DOUBLE_EQ(*satisfaction_ratio(std::vector<double>{400, 200}, std::vector<double>{500, 200}), 1.0);
    EXPECT_FALSE(satisfaction_ratio(std::vector<double>{0, 0}, std::vector<double>{10, 10}).has_value());
}

TEST(Satisfaction, ScaleInvariant) {
    const std::vector<double> r{420, 130, 700}, a{300, 200, 650};
    std::vector<double> r3, a3;
    for (double v : r) r3.push_back(3.7 * v);
    for (double v : a) a3.push_back(3.7 * v);
    EXPECT_NEAR(*satisfaction_ratio(r, a), *satisfaction_ratio(r3, a3), 1e-14);
}

TEST(Improvement, Percentages) {
    EXPECT_DOUBLE_EQ(relative_improvement(1000, 800), 25.0);
    EXPECT_DOUBLE_EQ(relative_improvement(800, 800), 0.0);
    EXPECT_THROW(relative_improvement(10, 0), Error);
}

TEST(Tenants, MarginBoundaries) {
    auto spec = flat_spec(1e9, {{"a", 0, 30000}, {"b", 0, 30000}, {"c", 0, 30000}});
    spec.tenants.push_back({"t", {"a", "b"}, 28000, 56000});
    spec.tenants.push_back({"open", {"c"}, 0, kInfinity});
    const auto t = PdnTopology::build(spec);
    const std::vector<double> r{20000, 20000, 0};
    auto at = [&](double a, double b) { return tenant_metrics(t, r, std::vector<double>{a, b, 10}); };
    EXPECT_DOUBLE_EQ(*at(14000, 14000)[0].margin, 0.0);
    EXPECT_DOUBLE_EQ(*at(28000, 28000)[0].margin, 1.0);
    EXPECT_NEAR(*at(21620.8, 21620.8)[0].margin, 15241.6 / 28000.0, 1e-12);
    EXPECT_NEAR(*at(21620.8, 21620.8)[0].margin, 0.5444, 1e-4);
    EXPECT_FALSE(at(1, 1)[1].margin.has_value());
    EXPECT_FALSE(at(1, 1)[1].satisfaction.has_value());
    const auto low = at(10000, 10000)[0];
    EXPECT_TRUE(low.min_violated);
    EXPECT_FALSE(low.max_violated);
    EXPECT_DOUBLE_EQ(*low.satisfaction, 0.5);
    EXPECT_TRUE(at(30000, 30000)[0].max_violated);
}

TEST(Tenants, DegenerateBoundsGiveNoMargin) {
    auto spec = flat_spec(1e9, {{"a", 0, 300}});
    spec.tenants.push_back({"t", {"a"}, 100, 100});
    const auto t = PdnTopology::build(spec);
    EXPECT_FALSE(tenant_metrics(t, std::vector<double>{100}, std::vector<double>{100})[0].margin.has_value());
}

TEST(Summary, MomentsAndAbsentValues) {
    const std::vector<double> constant{4, 4, 4};
    EXPECT_DOUBLE_EQ(summarize(constant).std, 0.0);
    const std::vector<std::optional<double>> mixed{1.0, std::nullopt, 3.0};
    const auto m = summarize(mixed);
    EXPECT_EQ(m.count, 2u);
    EXPECT_DOUBLE_EQ(m.mean, 2.0);
    EXPECT_DOUBLE_EQ(m.std, 1.0);
    EXPECT_DOUBLE_EQ(m.min, 1.0);
    EXPECT_DOUBLE_EQ(m.max, 3.0);
}

namespace {

PolicyMetrics with_margins(Policy p, std::vector<double> margins, double u) {
    PolicyMetrics m;
    m.policy = p;
    m.utilization = u;
    m.satisfaction = u / 1000.0;
    for (double v : margins) {
        TenantMetrics t;
        t.margin = v;
        m.tenants.push_back(t);
    }
    return m;
}

}  // namespace

TEST(Summary, WorstTenantMarginIsAveragedPerFrame) {
    std::vector<FrameMetrics> frames(2);
    frames[0].policies = {with_margins(Policy::Nvpax, {0.2, 0.6}, 900), with_margins(Policy::Static, {}, 800)};
    frames[1].policies = {with_margins(Policy::Nvpax, {0.8, 0.4}, 1000), with_margins(Policy::Static, {}, 800)};
    const auto run = aggregate_run(frames);
    EXPECT_EQ(run.frames, 2u);
    const auto* n = run.find(Policy::Nvpax);
    ASSERT_NE(n, nullptr);
    EXPECT_DOUBLE_EQ(n->worst_margin.mean, 0.3);
    EXPECT_DOUBLE_EQ(n->mean_margin.mean, 0.5);
    EXPECT_DOUBLE_EQ(n->improvement_vs_static.mean, (12.5 + 25.0) / 2);
    EXPECT_EQ(n->improvement_vs_greedy.count, 0u);
    EXPECT_EQ(run.find(Policy::Greedy), nullptr);
}

TEST(Summary, SingleFrameEqualsFrame) {
    std::vector<FrameMetrics> frames(1);
    frames[0].policies = {with_margins(Policy::Nvpax, {0.25}, 640)};
    const auto run = aggregate_run(frames);
    EXPECT_DOUBLE_EQ(run.policies[0].satisfaction.mean, 0.64);
    EXPECT_DOUBLE_EQ(run.policies[0].worst_margin.mean, 0.25);
    EXPECT_THROW(aggregate_run(std::span<const FrameMetrics>{}), Error);
}

TEST(Evaluate, CountsViolations) {
    auto spec = flat_spec(1000, {{"a", 0, 700}, {"b", 0, 700}});
    spec.tenants.push_back({"t", {"a"}, 600, kInfinity});
    const auto t = PdnTopology::build(spec);
    const auto m = evaluate(Policy::Static, t, std::vector<double>{700, 700}, std::vector<double>{500, 500});
    EXPECT_EQ(m.violations, 1);
    EXPECT_EQ(m.tenant_min_violations, 1);
    EXPECT_DOUBLE_EQ(m.utilization, 1000.0);
}
