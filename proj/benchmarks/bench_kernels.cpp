#include <benchmark/benchmark.h>

#include <memory>
#include <random>

#include "ddseg/attention_fusion.hpp"
#include "ddseg/discrepancy_markov.hpp"
#include "ddseg/discrepancy_ot.hpp"
#include "ddseg/pipeline.hpp"
#include "ddseg/synthetic.hpp"
#include "ddseg/upsample_jbu.hpp"

namespace {

using namespace ddseg;

Matrix random_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c) {
  std::uniform_real_distribution<double> d(0.0, 1.0);
  Matrix m(r, c);
  for (double& v : m.data()) v = d(rng);
  return m;
}

std::vector<double> random_simplex(std::mt19937_64& rng, std::size_t n) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> v(n);
  double s = 0.0;
  for (double& x : v) s += (x = e(rng));
  for (double& x : v) x /= s;
  return v;
}

void BM_Sinkhorn(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  const auto kernel = std::make_shared<const Matrix>(gibbs_kernel(random_matrix(rng, n, n), 0.1));
  const ClassDistribution f{0, random_simplex(rng, n)};
  const DegenerateTarget target(n);
  for (auto _ : state) benchmark::DoNotOptimize(sinkhorn_solve(f, target, kernel));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Sinkhorn)->RangeMultiplier(4)->Range(16, 1024)->Complexity();

void BM_IpfBalance(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(2);
  const auto c = random_matrix(rng, n, n);
  for (auto _ : state) benchmark::DoNotOptimize(ipf_balance(c));
}
BENCHMARK(BM_IpfBalance)->RangeMultiplier(4)->Range(16, 1024);

void BM_ConvergenceVelocity(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(3);
  const auto t = ipf_balance(random_matrix(rng, n, n));
  const ClassDistribution f{0, random_simplex(rng, n)};
  for (auto _ : state) benchmark::DoNotOptimize(convergence_velocity(f, t));
}
BENCHMARK(BM_ConvergenceVelocity)->RangeMultiplier(4)->Range(16, 1024);

void BM_FuseAttention(benchmark::State& state) {
  std::mt19937_64 rng(4);
  const Grid coarse{16, 16};
  const Grid fine{32, 32};
  AttentionStack stack;
  stack.blocks.push_back({"up0", {random_matrix(rng, coarse.size(), coarse.size())}, coarse, 0.5});
  stack.blocks.push_back({"up1", {random_matrix(rng, fine.size(), fine.size())}, fine, 0.5});
  for (auto _ : state) benchmark::DoNotOptimize(fuse_attention(stack, fine));
}
BENCHMARK(BM_FuseAttention);

void BM_JbuUpsample(benchmark::State& state) {
  const auto classes = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(5);
  std::vector<Matrix> low;
  for (std::size_t k = 0; k < classes; ++k) low.push_back(random_matrix(rng, 32, 32));
  std::uniform_real_distribution<double> d(0.0, 1.0);
  GuidanceImage guide{448, 448, std::vector<double>(448 * 448 * 3)};
  for (double& v : guide.pixels) v = d(rng);
  for (auto _ : state) benchmark::DoNotOptimize(jbu_upsample(low, guide));
}
BENCHMARK(BM_JbuUpsample)->Arg(1)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_SegmentFixture(benchmark::State& state) {
  const auto fx = make_two_cluster_fixture(1);
  EngineOptions opt;
  opt.mode = static_cast<Mode>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(segment(fx.inputs, opt));
  state.SetLabel(std::string(mode_name(opt.mode)));
}
BENCHMARK(BM_SegmentFixture)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
