#include <benchmark/benchmark.h>

#include "vpatch/contour.hpp"
#include "vpatch/solver.hpp"
#include "vpatch/spectral.hpp"

using namespace vpatch;

namespace {

PatchSystem make_system(int nodes, int truncation) {
  std::vector<double> c1(static_cast<std::size_t>(truncation), 0.0);
  std::vector<double> c2 = c1, c3 = c1;
  c1[0] = 1e-3;
  c2[0] = -5e-4;
  c3[0] = 2e-4;
  EvenTuple r = {EvenSeries(2, c1), EvenSeries(2, c2), EvenSeries(2, c3)};
  return PatchSystem(2, {{1.0, 1.0}, {0.5, -5.0}, {0.17, 8.4}}, r, nodes);
}

}  // namespace

static void BM_SelfInteraction(benchmark::State& state) {
  const PatchSystem sys = make_system(static_cast<int>(state.range(0)), 16);
  for (auto _ : state) benchmark::DoNotOptimize(interaction(sys, 0, 0));
}
BENCHMARK(BM_SelfInteraction)->Arg(128)->Arg(256)->Arg(512)->Arg(1024);

static void BM_Stationarity(benchmark::State& state) {
  const PatchSystem sys = make_system(static_cast<int>(state.range(0)), 16);
  for (auto _ : state) benchmark::DoNotOptimize(stationarity(sys));
}
BENCHMARK(BM_Stationarity)->Arg(256)->Arg(512)->Arg(1024);

static void BM_JacobianFD(benchmark::State& state) {
  const int J = static_cast<int>(state.range(0));
  const BifurcationPoint point = three_layer_bifurcation(0.5, -5.0, 2, 10);
  const Problem problem(point, J, 256);
  const ThreeLayerFamily family{2, 0.5, -5.0, J, 256};
  auto f = [&](const Eigen::VectorXd& x) {
    const auto [th, R] = problem.unpack(x);
    return problem.flatten(family.residual(th, R));
  };
  const Eigen::VectorXd x0 = problem.pack(point.theta_star, zero_tuple(3, 2, J));
  for (auto _ : state) benchmark::DoNotOptimize(jacobian_fd(f, x0, 1e-6));
}
BENCHMARK(BM_JacobianFD)->Arg(8)->Arg(16);

static void BM_ThreeLayerCertificate(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(three_layer_bifurcation(0.5, -5.0, 2, 50));
}
BENCHMARK(BM_ThreeLayerCertificate);

static void BM_NewtonSolve(benchmark::State& state) {
  const BifurcationPoint point = three_layer_bifurcation(0.5, -5.0, 2, 10);
  ContinuationConfig cfg;
  cfg.truncation = 12;
  cfg.quadrature_nodes = 128;
  const Problem problem(point, cfg.truncation, cfg.quadrature_nodes);
  EvenTuple predictor;
  for (const auto& c : problem.unit_kernel())
    predictor.push_back((1e-3 * c).truncated(cfg.truncation));
  for (auto _ : state)
    benchmark::DoNotOptimize(
        newton_solve(problem, problem.theta_star(), predictor, 1e-3, cfg));
}
BENCHMARK(BM_NewtonSolve);

BENCHMARK_MAIN();
