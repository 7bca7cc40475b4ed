#include <benchmark/benchmark.h>

#include <filesystem>
#include <vector>

#include "snapweight/baselines.hpp"
#include "snapweight/io.hpp"
#include "snapweight/lstm.hpp"
#include "snapweight/pipeline.hpp"
#include "snapweight/residuals.hpp"
#include "snapweight/rng.hpp"
#include "snapweight/sim.hpp"
#include "snapweight/solver.hpp"

using namespace snapweight;

namespace {

// A few hundred urban epochs, reused by every benchmark.
const std::vector<Epoch>& urban_epochs() {
    static const std::vector<Epoch> epochs = [] {
        ScenarioConfig cfg = ScenarioConfig::for_environment(Environment::UrbanCanyon);
        cfg.seed = 5;
        cfg.duration = 60.0;
        return generate_session(cfg).epochs;
    }();
    return epochs;
}

FeatureMatrix random_rows(std::size_t n, std::size_t width) {
    Rng rng(9);
    FeatureMatrix fm;
    fm.rows.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(width));
    for (Eigen::Index i = 0; i < fm.rows.size(); ++i) fm.rows.data()[i] = rng.normal();
    return fm;
}

}  // namespace

static void BM_SolveColdStart(benchmark::State& state) {
    const auto& epochs = urban_epochs();
    std::size_t k = 0;
    for (auto _ : state) {
        const Epoch& e = epochs[k++ % epochs.size()];
        benchmark::DoNotOptimize(solve_wls(e, equal_weights(e)));
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()));
}
BENCHMARK(BM_SolveColdStart);

static void BM_ResidualMatrix(benchmark::State& state) {
    const auto& epochs = urban_epochs();
    std::size_t k = 0;
    for (auto _ : state) {
        const Epoch& e = epochs[k++ % epochs.size()];
        benchmark::DoNotOptimize(build_residual_matrix(e));
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()));
}
BENCHMARK(BM_ResidualMatrix);

static void BM_FdeSolve(benchmark::State& state) {
    const auto& epochs = urban_epochs();
    std::size_t k = 0;
    for (auto _ : state) {
        const Epoch& e = epochs[k++ % epochs.size()];
        try {
            benchmark::DoNotOptimize(fde_solve(e, FdeConfig{}));
        } catch (const Error&) {
        }
    }
}
BENCHMARK(BM_FdeSolve);

static void BM_LstmForward(benchmark::State& state) {
    const auto hidden = static_cast<std::size_t>(state.range(0));
    const LstmModel m = LstmModel::initialized(14, hidden, 2, 1);
    const FeatureMatrix fm = random_rows(16, 14);
    for (auto _ : state) benchmark::DoNotOptimize(lstm_forward(m, fm));
}
BENCHMARK(BM_LstmForward)->Arg(16)->Arg(64);

static void BM_LstmBackward(benchmark::State& state) {
    const auto hidden = static_cast<std::size_t>(state.range(0));
    const LstmModel m = LstmModel::initialized(14, hidden, 2, 1);
    const FeatureMatrix fm = random_rows(16, 14);
    const std::vector<double> targets(16, 0.5);
    for (auto _ : state) benchmark::DoNotOptimize(lstm_backward(m, fm, targets));
}
BENCHMARK(BM_LstmBackward)->Arg(16)->Arg(64);

static void BM_SimulateSession(benchmark::State& state) {
    ScenarioConfig cfg = ScenarioConfig::for_environment(Environment::UrbanCanyon);
    cfg.duration = 20.0;
    for (auto _ : state) {
        cfg.seed += 1;
        benchmark::DoNotOptimize(generate_session(cfg));
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * cfg.epoch_count()));
}
BENCHMARK(BM_SimulateSession)->Unit(benchmark::kMillisecond);

static void BM_ProcessSession(benchmark::State& state) {
    CampaignConfig cc;
    cc.seed = 3;
    cc.profiles[0].sessions = 5;
    cc.profiles[0].scenario.duration = 20.0;
    const Dataset data = generate_campaign(cc).dataset;
    for (auto _ : state) benchmark::DoNotOptimize(process_split(data, Split::Train, PipelineConfig{}));
}
BENCHMARK(BM_ProcessSession)->Unit(benchmark::kMillisecond);

static void BM_DatasetRoundTrip(benchmark::State& state) {
    CampaignConfig cc;
    cc.seed = 4;
    cc.profiles[0].sessions = 5;
    cc.profiles[0].scenario.duration = 20.0;
    const Dataset data = generate_campaign(cc).dataset;
    const auto path = std::filesystem::temp_directory_path() / "snapweight_bench.jsonl";
    for (auto _ : state) {
        write_dataset(data, path);
        benchmark::DoNotOptimize(read_dataset(path));
    }
    std::filesystem::remove(path);
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * data.epochs.size()));
}
BENCHMARK(BM_DatasetRoundTrip)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
