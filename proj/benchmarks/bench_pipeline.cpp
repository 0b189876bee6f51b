#include <benchmark/benchmark.h>

#include "scs/bench.hpp"
#include "scs/clustering.hpp"
#include "scs/estimation.hpp"
#include "scs/model.hpp"
#include "scs/subspace.hpp"

namespace {

scs::Dataset make_dataset(int horizon, double se2, double sw2) {
  std::vector<Eigen::MatrixXd> thetas(2, Eigen::MatrixXd(1, 1));
  thetas[0] << 0.7;
  thetas[1] << 0.8;
  scs::ModelSpec spec(2, 1, 1, std::move(thetas), se2, sw2,
                      scs::EpochSchedule::blocks({horizon / 2, horizon - horizon / 2}));
  scs::UniformBoxInput input{Eigen::VectorXd::Constant(1, -1.0),
                             Eigen::VectorXd::Constant(1, 1.0), 7};
  return scs::generate(spec, horizon, input, 11);
}

void BM_SignalSubspace(benchmark::State& state) {
  const scs::StackedObservations z = scs::stack(make_dataset(state.range(0), 1e-4, 1e-4));
  for (auto _ : state) {
    auto subspace = scs::signal_subspace(z, 2);
    benchmark::DoNotOptimize(subspace.v);
  }
}
BENCHMARK(BM_SignalSubspace)->Arg(400)->Arg(1600);

void BM_Similarity(benchmark::State& state) {
  const scs::StackedObservations z = scs::stack(make_dataset(state.range(0), 1e-4, 1e-4));
  const scs::SignalSubspace subspace = scs::signal_subspace(z, 2);
  for (auto _ : state) {
    auto graph = scs::similarity(subspace);
    benchmark::DoNotOptimize(graph.w);
  }
}
BENCHMARK(BM_Similarity)->Arg(400)->Arg(1600);

void BM_SpectralEmbed(benchmark::State& state) {
  const scs::StackedObservations z = scs::stack(make_dataset(state.range(0), 1e-4, 1e-4));
  const scs::NormalizedLaplacian lap =
      scs::normalized_laplacian(scs::similarity(scs::signal_subspace(z, 2)));
  for (auto _ : state) {
    auto embedding = scs::spectral_embed(lap, 2);
    benchmark::DoNotOptimize(embedding.coords);
  }
}
BENCHMARK(BM_SpectralEmbed)->Arg(400)->Arg(1600);

void BM_ScsIdentify(benchmark::State& state) {
  const scs::Dataset ds = make_dataset(state.range(0), 1e-4, 1e-4);
  scs::IdentifyConfig cfg;
  cfg.noise_ratio = 1.0;
  for (auto _ : state) {
    auto est = scs::identify(ds, 2, 1, cfg);
    benchmark::DoNotOptimize(est.thetas_hat);
  }
}
BENCHMARK(BM_ScsIdentify)->Arg(400)->Arg(1600);

void BM_TlsSubmodel(benchmark::State& state) {
  const scs::StackedObservations z = scs::stack(make_dataset(state.range(0), 1e-4, 1e-4));
  for (auto _ : state) {
    auto fit = scs::tls_submodel(z.z, 1, 1.0);
    benchmark::DoNotOptimize(fit.theta);
  }
}
BENCHMARK(BM_TlsSubmodel)->Arg(400)->Arg(4000);

}  // namespace

BENCHMARK_MAIN();
