// Serial reference vs batched OpenMP kernels.
//
//   holdstab_bench --benchmark_filter=LossGrad

#include <benchmark/benchmark.h>

#include <vector>

#include "holdstab/core/rng.hpp"
#include "holdstab/features/embedder.hpp"
#include "holdstab/features/standardizer.hpp"
#include "holdstab/model/network.hpp"
#include "holdstab/model/reference.hpp"
#include "holdstab/simulate/catalog.hpp"
#include "holdstab/simulate/simulator.hpp"

using namespace holdstab;

namespace {

// Desk-scale training shapes: 20 timesteps of V+T features, hidden 64.
constexpr int kT = 20, kD = 135, kH = 64, kBatch = 64;

struct Inputs {
    std::vector<Eigen::MatrixXd> xs;
    std::vector<Example> batch;

    Inputs() : xs(kBatch, Eigen::MatrixXd(kT, kD)) {
        Rng rng(1);
        for (auto& x : xs)
            for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = standard_normal(rng);
        for (std::size_t i = 0; i < xs.size(); ++i) batch.push_back({&xs[i], static_cast<int>(i % 2)});
    }
};

const Inputs& inputs() {
    static const Inputs in;
    return in;
}

ModelConfig lstm() {
    ModelConfig c;
    c.input_dim = kD;
    c.hidden = kH;
    c.layers = 2;
    return c;
}

void LossGradReference(benchmark::State& state) {
    const auto m = Model<double>::init(lstm(), 1);
    std::vector<double> g;
    for (auto _ : state) benchmark::DoNotOptimize(reference::loss_and_grad(m, inputs().batch, 0.1, 7, &g));
    state.SetItemsProcessed(state.iterations() * kBatch);
}

template <class S>
void LossGradBatched(benchmark::State& state) {
    const auto exec = state.range(0) ? Exec::Parallel : Exec::Serial;
    const auto m = Model<S>::init(lstm(), 1);
    std::vector<S> g;
    for (auto _ : state) benchmark::DoNotOptimize(loss_and_grad<S>(m, inputs().batch, 0.1, 7, &g, exec));
    state.SetItemsProcessed(state.iterations() * kBatch);
}

void FitStandardizer(benchmark::State& state) {
    const auto exec = state.range(0) ? Exec::Parallel : Exec::Serial;
    std::vector<FeatureSequence> seqs(1000);
    for (std::size_t i = 0; i < seqs.size(); ++i) seqs[i].matrix = inputs().xs[i % kBatch];
    for (auto _ : state) benchmark::DoNotOptimize(fit_standardizer(seqs, exec));
}

const Dataset& small_dataset() {
    static const Dataset d = synthesize_dataset(generate_catalog(2, 3), SimConfig{}, 3, Exec::Parallel);
    return d;
}

void Synthesize(benchmark::State& state) {
    const auto exec = state.range(0) ? Exec::Parallel : Exec::Serial;
    const auto catalog = generate_catalog(2, 3);
    for (auto _ : state) benchmark::DoNotOptimize(synthesize_dataset(catalog, SimConfig{}, 3, exec));
}

void ExtractFeatures(benchmark::State& state) {
    const auto exec = state.range(0) ? Exec::Parallel : Exec::Serial;
    const auto usable = filter_usable(small_dataset());
    const auto& t = usable.cycles.front().tactile.samples.front();
    const auto& v = usable.cycles.front().rgb.samples.front();
    const RandomProjectionEmbedder tactile(t.height, t.width, t.channels, 64, 4, 11);
    const RandomProjectionEmbedder rgb(v.height, v.width, v.channels, 64, 4, 12);
    for (auto _ : state)
        benchmark::DoNotOptimize(
            extract_features(usable.cycles, tactile, rgb, Span::GraspToPoseEnd, kDefaultTimesteps, exec));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(usable.cycles.size()));
}

}  // namespace

BENCHMARK(LossGradReference)->Unit(benchmark::kMillisecond);
BENCHMARK(LossGradBatched<double>)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(LossGradBatched<float>)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(FitStandardizer)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(Synthesize)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(ExtractFeatures)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
