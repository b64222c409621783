#include <benchmark/benchmark.h>

#include "lionlab/optim.hpp"
#include "lionlab/problems.hpp"
#include "lionlab/rng.hpp"

using namespace lionlab;

namespace {

ParamVector random_vec(std::uint64_t key, std::uint64_t t, std::size_t d) {
  ParamVector v(d);
  for (std::size_t j = 0; j < d; ++j) v[j] = rng::gauss(key, t * d + j);
  return v;
}

OptimizerConfig config_for(Method m) {
  OptimizerConfig cfg;
  cfg.method = m;
  cfg.eta = 1e-3;
  cfg.beta1 = 0.9;
  cfg.beta2 = 0.99;
  cfg.lambda = m == Method::signsgd ? 0.0 : 1e-4;
  cfg.nu = 1e-3;
  return cfg;
}

void bench_step(benchmark::State& state, Method m) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const std::uint64_t key = rng::stream_key(1, rng::Role::dataset);
  const OptimizerConfig cfg = config_for(m);
  ParamVector w = random_vec(key, 0, d);
  ParamVector g = random_vec(key, 1, d);
  OptimizerState st = make_state(cfg, d);
  for (auto _ : state) {
    StepResult r = optimizer_step(w, g, st, cfg);
    benchmark::DoNotOptimize(r.w.data());
    st = std::move(r.state);
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(d));
}

void BM_lion(benchmark::State& s) { bench_step(s, Method::lion); }
void BM_clion(benchmark::State& s) { bench_step(s, Method::clion); }
void BM_rlion(benchmark::State& s) { bench_step(s, Method::rlion); }
void BM_adamw(benchmark::State& s) { bench_step(s, Method::adamw); }
void BM_signsgd(benchmark::State& s) { bench_step(s, Method::signsgd); }

BENCHMARK(BM_lion)->Arg(1000)->Arg(100000);
BENCHMARK(BM_clion)->Arg(1000)->Arg(100000);
BENCHMARK(BM_rlion)->Arg(1000)->Arg(100000);
BENCHMARK(BM_adamw)->Arg(1000)->Arg(100000);
BENCHMARK(BM_signsgd)->Arg(1000)->Arg(100000);

void BM_full_grad_logistic(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Problem p = make_problem(ProblemKind::logistic, 20);
  const Dataset ds = make_dataset(GeneratorId::two_cluster, 3, n, 20);
  const ParamVector w = random_vec(rng::stream_key(2, rng::Role::dataset), 0, 20);
  for (auto _ : state) {
    ParamVector g = full_grad(p, w, ds);
    benchmark::DoNotOptimize(g.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(n));
}
BENCHMARK(BM_full_grad_logistic)->Arg(500)->Arg(5000);

void BM_mlp2_backprop(benchmark::State& state) {
  Problem p = make_problem(ProblemKind::mlp2, 20);
  const Dataset ds = make_dataset(GeneratorId::two_cluster, 4, 64, 20);
  const ParamVector w =
      random_vec(rng::stream_key(3, rng::Role::dataset), 0, p.dim);
  std::size_t i = 0;
  for (auto _ : state) {
    ParamVector g = grad(p, w, ds.samples[i++ % ds.n()]);
    benchmark::DoNotOptimize(g.data());
  }
}
BENCHMARK(BM_mlp2_backprop);

}  // namespace

BENCHMARK_MAIN();
