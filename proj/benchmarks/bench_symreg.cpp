#include <benchmark/benchmark.h>

#include "symreg/dct.hpp"
#include "symreg/infix.hpp"
#include "symreg/levmar.hpp"
#include "symreg/rng.hpp"
#include "symreg/sampler.hpp"

using namespace symreg;

namespace {

TokenLibrary bench_lib() {
  return TokenLibrary::build(1, {"sin", "cos"}, {"add", "sub", "mul", "div"}, true,
                             true);
}

Model bench_model(const TokenLibrary& lib, int ff = 64) {
  ModelConfig mc;
  mc.vocab = lib.size();
  mc.embed_dim = 10;
  mc.layers = 1;
  mc.heads = 1;
  mc.ff_dim = ff;
  mc.dct_clip = 8;
  return Model(mc);
}

void BM_DctRoundTrip(benchmark::State& state) {
  const int N = static_cast<int>(state.range(0));
  Rng rng(1);
  Eigen::MatrixXd H(N, 10);
  for (int i = 0; i < H.size(); ++i) H.data()[i] = rng.next_normal();
  for (auto _ : state) {
    Eigen::MatrixXd back = idct_restore(clip_frequencies(dct_forward(H), 8), N);
    benchmark::DoNotOptimize(back.data());
  }
}
BENCHMARK(BM_DctRoundTrip)->Arg(8)->Arg(24)->Arg(64);

void BM_ForwardStep(benchmark::State& state) {
  TokenLibrary lib = bench_lib();
  Model model = bench_model(lib, static_cast<int>(state.range(0)));
  Eigen::VectorXd theta = model.init_params(7);
  std::vector<Trajectory> batch =
      sample_batch(model, lib, theta, SampleConfig{1, 1.0, 24, 1}, 3);
  const Trajectory& t = batch.front();
  int step = t.length() - 1;
  auto ctx = step_context(lib, t.tokens, step);
  for (auto _ : state) {
    Eigen::VectorXd logits = model.forward(ctx, theta);
    benchmark::DoNotOptimize(logits.data());
  }
}
BENCHMARK(BM_ForwardStep)->Arg(64)->Arg(2048);

void BM_ForwardBackward(benchmark::State& state) {
  TokenLibrary lib = bench_lib();
  Model model = bench_model(lib);
  Eigen::VectorXd theta = model.init_params(7);
  std::vector<Trajectory> batch =
      sample_batch(model, lib, theta, SampleConfig{1, 1.0, 24, 1}, 3);
  const Trajectory& t = batch.front();
  auto ctx = step_context(lib, t.tokens, t.length() - 1);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(model.param_count());
  Eigen::VectorXd dlogits = Eigen::VectorXd::Ones(lib.size());
  for (auto _ : state) {
    StepTrace trace;
    Eigen::VectorXd logits = model.forward(ctx, theta, &trace);
    model.backward(trace, dlogits, grad);
    benchmark::DoNotOptimize(grad.data());
  }
}
BENCHMARK(BM_ForwardBackward);

void BM_SampleBatch(benchmark::State& state) {
  TokenLibrary lib = bench_lib();
  Model model = bench_model(lib);
  Eigen::VectorXd theta = model.init_params(7);
  SampleConfig cfg;
  cfg.batch = static_cast<int>(state.range(0));
  cfg.oversampling = 2.0;
  cfg.max_nodes = 24;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    auto batch = sample_batch(model, lib, theta, cfg, seed++);
    benchmark::DoNotOptimize(batch.data());
  }
  state.SetItemsProcessed(state.iterations() * cfg.batch);
}
BENCHMARK(BM_SampleBatch)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_FitConstants(benchmark::State& state) {
  TokenLibrary lib = bench_lib();
  Expression e = parse_infix("c*sin(c*x1) + c", lib);
  Rng rng(5);
  Eigen::MatrixXd X(100, 1);
  Eigen::VectorXd y(100);
  for (int i = 0; i < 100; ++i) {
    X(i, 0) = 2.0 * rng.next_double() - 1.0;
    y[i] = 1.7 * std::sin(2.4 * X(i, 0)) - 0.3;
  }
  for (auto _ : state) {
    LMResult fit = fit_constants(lib, e, X, y, LMConfig{});
    benchmark::DoNotOptimize(fit.sse);
  }
}
BENCHMARK(BM_FitConstants);

void BM_Evaluate(benchmark::State& state) {
  TokenLibrary lib = bench_lib();
  Expression e = parse_infix("sin(x1)*cos(x1) + x1*x1/(1 + x1*x1)", lib);
  Rng rng(5);
  Eigen::MatrixXd X(static_cast<int>(state.range(0)), 1);
  for (int i = 0; i < X.rows(); ++i) X(i, 0) = rng.next_normal();
  for (auto _ : state) {
    EvalResult r = evaluate(lib, e, X);
    benchmark::DoNotOptimize(r.values.data());
  }
  state.SetItemsProcessed(state.iterations() * X.rows());
}
BENCHMARK(BM_Evaluate)->Arg(100)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
