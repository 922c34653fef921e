#include <benchmark/benchmark.h>

#include "nvpax/baselines.hpp"
#include "nvpax/synthetic.hpp"
#include "nvpax/trace.hpp"

namespace {

struct Instance {
    nvpax::PdnTopology topology;
    nvpax::DemandFrame frame;
};

Instance make_instance(std::size_t n, bool tenants) {
    auto spec = nvpax::generate_synthetic_spec(n, {}, 0.85, 17);
    if (tenants) {
        nvpax::TenantAssignment a;
        a.tenants = static_cast<int>(n / 100);
        a.devices_per_tenant = 50;
        spec = nvpax::assign_tenants(std::move(spec), a, 18);
    }
    auto topology = nvpax::PdnTopology::build(spec);
    nvpax::SyntheticTraceConfig demand;
    demand.frames = 1;
    demand.seed = 19;
    auto frame = nvpax::preprocess_frame(topology, nvpax::generate_trace(topology, demand).front().power);
    return {std::move(topology), std::move(frame)};
}

void run_policy(benchmark::State& state, nvpax::Policy policy, bool tenants) {
    const auto inst = make_instance(static_cast<std::size_t>(state.range(0)), tenants);
    for (auto _ : state) {
        auto a = nvpax::allocate(policy, inst.topology, inst.frame);
        benchmark::DoNotOptimize(a.data());
    }
    state.SetComplexityN(state.range(0));
}

void BM_Nvpax(benchmark::State& state) { run_policy(state, nvpax::Policy::Nvpax, false); }
void BM_NvpaxTenants(benchmark::State& state) { run_policy(state, nvpax::Policy::Nvpax, true); }
void BM_Greedy(benchmark::State& state) { run_policy(state, nvpax::Policy::Greedy, false); }

void BM_NvpaxLpRounds(benchmark::State& state) {
    const auto inst = make_instance(static_cast<std::size_t>(state.range(0)), false);
    nvpax::RunConfig cfg;
    cfg.surplus_method = nvpax::SurplusMethod::LinearProgram;
    for (auto _ : state) {
        auto r = nvpax::optimize(inst.topology, inst.frame, cfg);
        benchmark::DoNotOptimize(r.allocation.data());
    }
    state.SetComplexityN(state.range(0));
}

}  // namespace

BENCHMARK(BM_Nvpax)->Arg(1000)->Arg(5000)->Arg(10000)->Arg(50000)->Unit(benchmark::kMillisecond)->Complexity();
BENCHMARK(BM_NvpaxTenants)->Arg(1000)->Arg(5000)->Arg(10000)->Unit(benchmark::kMillisecond)->Complexity();
BENCHMARK(BM_Greedy)->Arg(1000)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond)->Complexity();
BENCHMARK(BM_NvpaxLpRounds)->Arg(100)->Arg(300)->Arg(1000)->Unit(benchmark::kMillisecond)->Complexity();

BENCHMARK_MAIN();
