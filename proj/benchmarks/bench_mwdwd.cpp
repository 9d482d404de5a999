#include <benchmark/benchmark.h>

#include "mwdwd/rng.hpp"
#include "mwdwd/solver.hpp"
#include "mwdwd/tensor.hpp"
#include "mwdwd/tuning.hpp"

using namespace mwdwd;

namespace {

CPFactors make_factors(const Shape& dims, std::size_t rank, Rng& rng) {
  std::vector<Eigen::MatrixXd> u;
  for (auto p : dims) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(rank));
    for (Eigen::Index r = 0; r < m.cols(); ++r)
      for (Eigen::Index j = 0; j < m.rows(); ++j) m(j, r) = rng.normal();
    u.push_back(std::move(m));
  }
  return CPFactors(std::move(u));
}

Dataset make_data(const Shape& dims, std::size_t n, Rng& rng) {
  const std::size_t F = shape_size(dims);
  std::vector<double> x(n * F);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = i % 2 ? 1 : -1;
    for (std::size_t p = 0; p < F; ++p) x[i * F + p] = rng.normal() + (y[i] > 0 && p % 4 == 0 ? 0.5 : 0.0);
  }
  return Dataset(dims, std::move(x), std::move(y));
}

Shape cube(benchmark::State& state) {
  const auto p = static_cast<std::size_t>(state.range(0));
  return {2 * p, p, p};
}

}  // namespace

static void BM_ProjectOut(benchmark::State& state) {
  Rng rng(1);
  const Shape dims = cube(state);
  const CPFactors f = make_factors(dims, 2, rng);
  std::vector<double> x(shape_size(dims));
  for (auto& v : x) v = rng.normal();
  const ModeKernels kern = mode_kernels(f, 0);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(dims[0]), 2);
  for (auto _ : state) {
    project_out(x, kern, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(x.size()));
}
BENCHMARK(BM_ProjectOut)->Arg(5)->Arg(10)->Arg(15);

static void BM_Assemble(benchmark::State& state) {
  Rng rng(2);
  const CPFactors f = make_factors(cube(state), 2, rng);
  for (auto _ : state) benchmark::DoNotOptimize(assemble(f));
}
BENCHMARK(BM_Assemble)->Arg(5)->Arg(10)->Arg(15);

static void BM_UpdateBlock(benchmark::State& state) {
  Rng rng(3);
  const Shape dims = cube(state);
  const Dataset d = make_data(dims, 100, rng);
  FitConfig cfg;
  cfg.rank = 2;
  cfg.penalty = {PenaltyVariant::Coupled, 0.01, 1.0};
  cfg.max_inner = 1;
  const CPFactors f = make_factors(dims, 2, rng);
  SolverState st{f.factors(), 0.0, {}};
  st.margins = compute_margins(d, st.factors, 0.0);
  for (auto _ : state) {
    update_block(st, d, cfg, 0);
    benchmark::DoNotOptimize(st.b0);
  }
}
BENCHMARK(BM_UpdateBlock)->Arg(5)->Arg(10)->Arg(15);

static void BM_Fit(benchmark::State& state) {
  Rng rng(4);
  const Shape dims = cube(state);
  const Dataset d = make_data(dims, 100, rng);
  FitConfig cfg;
  cfg.rank = static_cast<std::size_t>(state.range(1));
  cfg.penalty = {PenaltyVariant::Coupled, 0.01, 1.0};
  for (auto _ : state) benchmark::DoNotOptimize(fit(d, cfg).b0);
}
BENCHMARK(BM_Fit)->Args({5, 1})->Args({5, 2})->Args({10, 1})->Unit(benchmark::kMillisecond);

static void BM_SelectLambdas(benchmark::State& state) {
  Rng rng(5);
  const Dataset d = make_data({10, 4, 5}, 100, rng);
  CVConfig cv;
  cv.n_folds = 5;
  cv.lambda2_grid = {0.5, 1.0};
  for (auto _ : state) benchmark::DoNotOptimize(select_lambdas(d, cv).chosen);
}
BENCHMARK(BM_SelectLambdas)->Unit(benchmark::kMillisecond)->Iterations(1);

BENCHMARK_MAIN();
