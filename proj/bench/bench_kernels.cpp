// OpenMP kernels against their serial references on a mid-sized synthetic organization.

#include <benchmark/benchmark.h>

#include "departnet/pipeline.hpp"

using namespace departnet;

namespace {

struct Fixture {
    SimOutput sim;
    GraphSeries graphs;
    NodeMetricTable table;
    std::vector<SocializationSet> sets;
};

const Fixture& fixture() {
    static const Fixture f = [] {
        SimConfig c;
        c.seed = 3;
        c.n_employees = 1000;
        c.n_teams = 100;
        c.n_weeks = 48;
        c.random_schedule = RandomSchedule{80, 17, 31, false};
        Fixture out;
        out.sim = generate_log(c);
        PipelineConfig p;
        auto run = run_cohort(out.sim.log, out.sim.attributes, p);
        out.graphs = std::move(run.graphs);
        out.table = std::move(run.table);
        out.sets = run.matched.treated;
        out.sets.insert(out.sets.end(), run.matched.controls.begin(), run.matched.controls.end());
        return out;
    }();
    return f;
}

void graph_series_parallel(benchmark::State& state) {
    const auto& f = fixture();
    for (auto _ : state) benchmark::DoNotOptimize(build_graph_series(f.sim.log, CalendarConfig{}, Weighting::sum));
}

void graph_series_serial(benchmark::State& state) {
    const auto& f = fixture();
    for (auto _ : state)
        benchmark::DoNotOptimize(build_graph_series_serial(f.sim.log, CalendarConfig{}, Weighting::sum));
}

void node_metrics_parallel(benchmark::State& state) {
    const auto& f = fixture();
    for (auto _ : state) benchmark::DoNotOptimize(compute_node_metrics(f.graphs));
}

void node_metrics_serial(benchmark::State& state) {
    const auto& f = fixture();
    for (auto _ : state) benchmark::DoNotOptimize(compute_node_metrics_serial(f.graphs));
}

void series_parallel(benchmark::State& state) {
    const auto& f = fixture();
    for (auto _ : state)
        benchmark::DoNotOptimize(compute_series(f.sets, f.graphs, f.table, f.sim.log.roster));
}

void series_serial(benchmark::State& state) {
    const auto& f = fixture();
    for (auto _ : state)
        benchmark::DoNotOptimize(compute_series_serial(f.sets, f.graphs, f.table, f.sim.log.roster));
}

}  // namespace

BENCHMARK(graph_series_parallel)->Unit(benchmark::kMillisecond);
BENCHMARK(graph_series_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(node_metrics_parallel)->Unit(benchmark::kMillisecond);
BENCHMARK(node_metrics_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(series_parallel)->Unit(benchmark::kMillisecond);
BENCHMARK(series_serial)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
