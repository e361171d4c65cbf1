// OpenMP kernels against their serial references.
#include <benchmark/benchmark.h>

#include "wpv/harness.hpp"

using namespace wpv;

namespace {

StateVector random_state(int qubits) {
  const Layout l({{"A", 2}, {"B", 1 << (qubits - 1)}});
  CVec a = CVec::Random(static_cast<Eigen::Index>(l.size()));
  return StateVector(l, a / a.norm());
}

CMat hadamard() {
  CMat h(2, 2);
  h << 1, 1, 1, -1;
  return h / std::sqrt(2.0);
}

void BM_ApplyOp(benchmark::State& st) {
  StateVector s = random_state(static_cast<int>(st.range(0)));
  const CMat h = hadamard();
  for (auto _ : st) {
    apply_op(s, h, {"A"});
    benchmark::DoNotOptimize(s.amp.data());
  }
}

void BM_ApplyOpSerial(benchmark::State& st) {
  StateVector s = random_state(static_cast<int>(st.range(0)));
  const CMat h = hadamard();
  for (auto _ : st) {
    apply_op_serial(s, h, {"A"});
    benchmark::DoNotOptimize(s.amp.data());
  }
}

void BM_ValEstCollapsed(benchmark::State& st) {
  const QmaVerifier v = fixture_verifier("haar-2q");
  Rng rng = make_rng(2);
  FixtureSpec f;
  f.witness = "random";
  const StateVector w = fixture_witness(v, f, rng);
  for (auto _ : st) {
    benchmark::DoNotOptimize(val_est(v, w, 0.2, 0.1, rng).p.value);
  }
}

void BM_ValEstDense(benchmark::State& st) {
  const QmaVerifier v = fixture_verifier("haar-2q");
  Rng rng = make_rng(2);
  FixtureSpec f;
  f.witness = "random";
  const StateVector w = fixture_witness(v, f, rng);
  for (auto _ : st) {
    benchmark::DoNotOptimize(val_est_dense(v, w, 0.2, 0.1, rng).p.value);
  }
}

const TrialFn kTrial = [](int, Rng& rng) {
  double acc = 0.0;
  for (int i = 0; i < 20000; ++i) acc += uniform01(rng);
  return Record{{"x", acc}};
};

void BM_TrialsParallel(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(run_trials_parallel(64, 1, kTrial).size());
}

void BM_TrialsSerial(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(run_trials_serial(64, 1, kTrial).size());
}

}  // namespace

BENCHMARK(BM_ApplyOp)->Arg(12)->Arg(16)->Arg(20);
BENCHMARK(BM_ApplyOpSerial)->Arg(12)->Arg(16)->Arg(20);
BENCHMARK(BM_ValEstCollapsed);
BENCHMARK(BM_ValEstDense);
BENCHMARK(BM_TrialsParallel);
BENCHMARK(BM_TrialsSerial);

BENCHMARK_MAIN();
