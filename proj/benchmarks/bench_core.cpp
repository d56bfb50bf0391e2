#include <benchmark/benchmark.h>

#include <Eigen/Core>

#include "ptrans/chain.hpp"
#include "ptrans/mc.hpp"
#include "ptrans/ncd.hpp"
#include "ptrans/poisson.hpp"
#include "ptrans/quadrature.hpp"
#include "ptrans/rng.hpp"

using namespace ptrans;

namespace {

const ConditionalEnergyModel& chain_model() {
  static const ConditionalEnergyModel model = toy_model();
  return model;
}

const QuadratureRule& rule() {
  static const QuadratureRule r =
      gauss_legendre(kDefaultQuadratureNodes, chain_model().domain);
  return r;
}

SampleSet chain_data(int n) {
  Rng rng = make_rng(derive_seed(4242u, static_cast<std::uint64_t>(n)));
  Eigen::VectorXd theta(2);
  theta << 0.5, 4.0;
  return sample_chain(chain_model(), theta, n, 0.0, rule(), rng);
}

}  // namespace

static void BM_LogPartition(benchmark::State& state) {
  const QuadratureRule r =
      gauss_legendre(static_cast<int>(state.range(0)), chain_model().domain);
  Eigen::VectorXd theta(2);
  theta << 0.5, 4.0;
  for (auto _ : state)
    benchmark::DoNotOptimize(nu_star(chain_model(), theta, 0.3, r));
}
BENCHMARK(BM_LogPartition)->Arg(101)->Arg(401)->Arg(1001);

static void BM_ExactLoglik(benchmark::State& state) {
  const SampleSet s = chain_data(static_cast<int>(state.range(0)));
  Eigen::VectorXd theta(2);
  theta << 0.4, 3.0;
  for (auto _ : state)
    benchmark::DoNotOptimize(exact_loglik(chain_model(), theta, s, rule()));
}
BENCHMARK(BM_ExactLoglik)->Arg(500)->Arg(2000);

static void BM_SampleChain(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Eigen::VectorXd theta(2);
  theta << 0.5, 4.0;
  Rng rng = make_rng(7u);
  for (auto _ : state)
    benchmark::DoNotOptimize(sample_chain(chain_model(), theta, n, 0.0, rule(), rng));
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_SampleChain)->Arg(500)->Arg(2000);

static void BM_FitMl(benchmark::State& state) {
  const SampleSet s = chain_data(static_cast<int>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(fit_ml(chain_model(), s, rule()));
}
BENCHMARK(BM_FitMl)->Arg(500)->Arg(2000);

static void BM_FitPoissonJoint(benchmark::State& state) {
  const SampleSet s = chain_data(static_cast<int>(state.range(0)));
  const ConditionalEnergyModel iid = toy_iid_model(s.initial);
  for (auto _ : state)
    benchmark::DoNotOptimize(fit_poisson_joint(iid, s, rule()));
}
BENCHMARK(BM_FitPoissonJoint)->Arg(500)->Arg(2000);

static void BM_McGradient(benchmark::State& state) {
  const SampleSet s = chain_data(500);
  const ConditionalEnergyModel iid = toy_iid_model(s.initial);
  const ReferenceDensity q = uniform_reference(iid.domain);
  Eigen::VectorXd theta(2);
  theta << 0.4, 3.0;
  Rng rng = make_rng(11u);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        mc_gradient(iid, theta, -0.5, s, q, static_cast<int>(state.range(0)), rng));
}
BENCHMARK(BM_McGradient)->Arg(100)->Arg(1000);

static void BM_FitNcdParam(benchmark::State& state) {
  const SampleSet s = chain_data(static_cast<int>(state.range(0)));
  const ReferenceDensity q = uniform_reference(chain_model().domain);
  Rng rng = make_rng(13u);
  const NcdDataset ds = build_dataset(s, q, 30, rng);
  for (auto _ : state)
    benchmark::DoNotOptimize(fit_ncd_param(chain_model(), ds));
}
BENCHMARK(BM_FitNcdParam)->Arg(500)->Arg(2000);

static void BM_FitNcdSemi(benchmark::State& state) {
  const SampleSet s = chain_data(static_cast<int>(state.range(0)));
  const ReferenceDensity q = uniform_reference(chain_model().domain);
  Rng rng = make_rng(17u);
  const NcdDataset ds = build_dataset(s, q, 30, rng);
  const Kernel kernel{median_bandwidth(ds.ancestors)};
  for (auto _ : state)
    benchmark::DoNotOptimize(fit_ncd_semi(chain_model(), ds, kernel, 1e-4));
}
BENCHMARK(BM_FitNcdSemi)->Arg(500)->Arg(2000);

static void BM_LambdaPath(benchmark::State& state) {
  const SampleSet s = chain_data(200);
  std::vector<double> ancestors;
  for (std::size_t t = 0; t < s.size(); ++t) ancestors.push_back(s.ancestor(t));
  const Kernel kernel{0.5 * median_bandwidth(ancestors)};
  const std::vector<double> grid{10.0, 1.0, 0.1, 0.01, 1e-4, 1e-6};
  for (auto _ : state)
    benchmark::DoNotOptimize(
        lambda_path(chain_model(), s, rule(), kernel, grid, {}, 1e-6));
}
BENCHMARK(BM_LambdaPath);

BENCHMARK_MAIN();
