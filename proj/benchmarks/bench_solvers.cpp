#include <benchmark/benchmark.h>

#include <random>

#include "pvcm/pvcm.hpp"

using namespace pvcm;

namespace {

Dictionary diffusion_dictionary(int b_count, int te_count) {
  AcquisitionSchedule sched;
  sched.kernel = Kernel::diffusion_t2;
  sched.entries.resize(b_count * te_count, 2);
  for (int t = 0; t < te_count; ++t) {
    for (int b = 0; b < b_count; ++b) {
      sched.entries(b_count * t + b, 0) = 3000.0 * b / std::max(1, b_count - 1);
      sched.entries(b_count * t + b, 1) = 0.01 + 0.29 * t / std::max(1, te_count - 1);
    }
  }
  const std::vector<AxisSpec> axes{AxisSpec{1e-4, 5e-3, 20, Spacing::logarithmic},
                                   AxisSpec{0.01, 0.5, 20, Spacing::logarithmic}};
  return build_dictionary(sched, build_grid(axes));
}

Eigen::MatrixXd random_block(Eigen::Index rows, Eigen::Index cols, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

// f-update on a 32 x 32 image, Q = 400: truncated SVD vs dense inverse.
void BM_FUpdateLowRank(benchmark::State& state) {
  const Dictionary dict = diffusion_dictionary(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  const LowRankDictionary lrd = truncate_dictionary(dict);
  const auto inv = RegularizedInverse::low_rank(lrd, default_beta(lrd));
  const Eigen::MatrixXd c = random_block(dict.spectral_size(), 1024, 1);
  Eigen::MatrixXd out(c.rows(), c.cols());
  for (auto _ : state) {
    inv.apply(c, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.counters["rank"] = static_cast<double>(lrd.rank());
}
BENCHMARK(BM_FUpdateLowRank)->Args({6, 4})->Args({20, 20})->Unit(benchmark::kMillisecond);

void BM_FUpdateDense(benchmark::State& state) {
  const Dictionary dict = diffusion_dictionary(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  const LowRankDictionary lrd = truncate_dictionary(dict);
  const auto inv = RegularizedInverse::dense(dict, default_beta(lrd));
  const Eigen::MatrixXd c = random_block(dict.spectral_size(), 1024, 1);
  Eigen::MatrixXd out(c.rows(), c.cols());
  for (auto _ : state) {
    inv.apply(c, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_FUpdateDense)->Args({6, 4})->Args({20, 20})->Unit(benchmark::kMillisecond);

// Noniterative z-update on a square lattice.
void BM_ZUpdate(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const SpatialGraph graph = build_spatial_graph(NdArray({side, side}, std::vector<double>(side * side, 1.0)));
  const Eigen::Index q = 400;
  const Eigen::MatrixXd z = random_block(q, graph.voxels(), 2).cwiseAbs();
  const Eigen::MatrixXd f = random_block(q, graph.voxels(), 3);
  const Eigen::MatrixXd d = random_block(q, graph.voxels(), 4);
  const double xi = compute_xi_p(0.01, operator_norm_dtd(graph));
  for (auto _ : state) {
    benchmark::DoNotOptimize(z_update(graph, z, f, d, 0.01, xi, 0.01));
  }
}
BENCHMARK(BM_ZUpdate)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

// Whole iterations of each solver on the 16 x 16 diffusion phantom.
template <bool Ladmm>
void BM_SolverIterations(benchmark::State& state) {
  const PhantomPreset preset = diffusion_phantom(16, 1);
  const Dictionary dict = preset.dictionary();
  const LowRankDictionary lrd = truncate_dictionary(dict);
  const SpatialGraph graph = build_spatial_graph(preset.mask());
  const Phantom ph = generate_phantom(preset.spec, dict, graph);
  const Problem problem{ph.data, dict, lrd, graph, preset.lambda};
  SolverConfig cfg;
  cfg.beta = 0.01;
  cfg.max_iters = 50;
  cfg.trace_every = 0;
  cfg.threads = static_cast<int>(state.range(0));
  for (auto _ : state) {
    const SolveResult r = Ladmm ? solve_ladmm(problem, cfg) : solve_admm(problem, cfg);
    benchmark::DoNotOptimize(r.f.values.data());
  }
  state.SetItemsProcessed(state.iterations() * cfg.max_iters);
}
BENCHMARK_TEMPLATE(BM_SolverIterations, true)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK_TEMPLATE(BM_SolverIterations, false)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

// Voxelwise Lawson-Hanson on the standard phantom.
void BM_NnlsVoxelwise(benchmark::State& state) {
  const PhantomPreset preset = standard_phantom(1);
  const Dictionary dict = preset.dictionary();
  const SpatialGraph graph = build_spatial_graph(preset.mask());
  const Phantom ph = generate_phantom(preset.spec, dict, graph);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_nnls_voxelwise(dict, ph.data).values.data());
  }
}
BENCHMARK(BM_NnlsVoxelwise)->Unit(benchmark::kMillisecond);

void BM_Truncate(benchmark::State& state) {
  const Dictionary dict = diffusion_dictionary(20, 20);
  for (auto _ : state) benchmark::DoNotOptimize(truncate_dictionary(dict).rank());
}
BENCHMARK(BM_Truncate)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
