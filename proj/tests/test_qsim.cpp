#include <doctest.h>

#include <cmath>

#include "wpv/qsim.hpp"

using namespace wpv;

namespace {

CMat gate_x() {
  CMat x(2, 2);
  x << 0, 1, 1, 0;
  return x;
}

CMat gate_h() {
  CMat h(2, 2);
  const double r = 1.0 / std::sqrt(2.0);
  h << r, r, r, -r;
  return h;
}

CVec plus() { return CVec::Constant(2, cplx(1.0 / std::sqrt(2.0))); }

Layout qubits(int n) {
  std::vector<Register> r;
  for (int i = 0; i < n; ++i) r.push_back({"q" + std::to_string(i), 2});
  return Layout(r);
}

}  // namespace

TEST_CASE("apply_unitary: identity, X and H twice") {
  Rng rng = make_rng(1);
  const Layout l = qubits(2);
  const StateVector s = random_state(l, rng);
  const StateVector id = apply_unitary(s, CMat::Identity(2, 2), {"q1"});
  CHECK((id.amp - s.amp).norm() < 1e-12);

  const StateVector one = apply_unitary(StateVector::zero(qubits(1)), gate_x(), {"q0"});
  CHECK(std::abs(one.amp(1) - cplx(1.0)) < 1e-12);
  CHECK(std::abs(one.amp(0)) < 1e-12);

  StateVector h2 = apply_unitary(StateVector::zero(qubits(1)), gate_h(), {"q0"});
  h2 = apply_unitary(h2, gate_h(), {"q0"});
  CHECK(std::abs(h2.amp(0) - cplx(1.0)) < 1e-12);
}

TEST_CASE("apply_op targets the named register only") {
  // X on the least significant qubit of |00> gives |01> = index 1.
  StateVector s = StateVector::zero(qubits(2));
  apply_op(s, gate_x(), {"q1"});
  CHECK(std::abs(s.amp(1) - cplx(1.0)) < 1e-12);
  apply_op(s, gate_x(), {"q0"});
  CHECK(std::abs(s.amp(3) - cplx(1.0)) < 1e-12);
}

TEST_CASE("apply_op: OpenMP path equals the serial reference") {
  Rng rng = make_rng(2);
  const Layout l = qubits(14);
  const StateVector s0 = random_state(l, rng);
  for (const auto& targets : std::vector<std::vector<std::string>>{{"q0"}, {"q13"}, {"q3", "q9"}, {"q12", "q1"}}) {
    const CMat u = haar_unitary(1 << targets.size(), rng);
    StateVector a = s0, b = s0;
    apply_op(a, u, targets);
    apply_op_serial(b, u, targets);
    CHECK((a.amp - b.amp).norm() < 1e-12);
    CHECK(std::abs(a.norm() - 1.0) < 1e-9);
  }
}

TEST_CASE("measure_projective examples") {
  Rng rng = make_rng(3);
  const Layout l = qubits(1);
  const Measurement m0 = measure_basis(StateVector::zero(l), "q0", rng);
  CHECK(m0.outcome == 0);
  CHECK(m0.prob == doctest::Approx(1.0));

  const StateVector p(l, plus());
  const Measurement id = measure_projective(p, {CMat::Identity(2, 2)}, rng);
  CHECK(id.outcome == 0);
  CHECK((id.post.amp - p.amp).norm() < 1e-12);

  int zeros = 0;
  const int shots = 10000;
  for (int i = 0; i < shots; ++i) zeros += measure_basis(p, "q0", rng).outcome == 0;
  CHECK(std::abs(zeros / double(shots) - 0.5) <= 0.02);
}

TEST_CASE("acceptance_operator examples") {
  QuantumAlgorithm id;
  id.input_dim = 2;
  id.dilation = CMat::Identity(2, 2);
  id.accept = CMat::Identity(2, 2);
  CHECK((acceptance_operator(id) - CMat::Identity(2, 2)).norm() < 1e-12);

  QuantumAlgorithm one = id;
  one.accept = projector_onto(CVec::Unit(2, 1));
  CHECK((acceptance_operator(one) - one.accept).norm() < 1e-12);

  // Random 2-qubit algorithm: spectrum inside [0, 1] and the operator matches
  // the direct acceptance probability of the dilated circuit.
  Rng rng = make_rng(4);
  QuantumAlgorithm r;
  r.input_dim = 2;
  r.ancilla_dims = {2};
  r.dilation = haar_unitary(4, rng);
  r.accept = kron(CMat::Identity(2, 2), projector_onto(CVec::Unit(2, 1)));
  const CMat v = acceptance_operator(r);
  const Eigh e = eigh(v);
  CHECK(e.values.minCoeff() >= -1e-12);
  CHECK(e.values.maxCoeff() <= 1.0 + 1e-12);
  const StateVector w = random_state(Layout({{"W", 2}}), rng);
  const CVec full = r.dilation * kron(w.amp, CVec::Unit(2, 0));
  const double direct = (full.adjoint() * r.accept * full)(0, 0).real();
  CHECK((w.amp.adjoint() * v * w.amp)(0, 0).real() == doctest::Approx(direct).epsilon(1e-12));

  // Monte-Carlo acceptance with 1e5 shots within 3 standard errors.
  const Layout lw({{"W", 2}, {"anc", 2}});
  const StateVector run(lw, full);
  int acc = 0;
  const int shots = 100000;
  for (int i = 0; i < shots; ++i) acc += measure_basis(run, "anc", rng).outcome == 1;
  const double se = std::sqrt(direct * (1 - direct) / shots);
  CHECK(std::abs(acc / double(shots) - direct) <= 3 * se + 1e-12);
}

TEST_CASE("trace_distance examples and triangle inequality") {
  const Layout l = qubits(1);
  const StateVector z = StateVector::zero(l), o = StateVector::basis(l, 1), p(l, plus());
  CHECK(trace_distance(z, z) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(trace_distance(z, o) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(trace_distance(z, p) - std::sqrt(0.5)) < 1e-9);

  Rng rng = make_rng(5);
  const Layout l2 = qubits(2);
  for (int i = 0; i < 50; ++i) {
    const auto a = DensityMatrix::from_pure(random_state(l2, rng));
    const auto b = DensityMatrix::from_pure(random_state(l2, rng));
    const auto c = DensityMatrix::from_pure(random_state(l2, rng));
    CHECK(trace_distance(a, c) <= trace_distance(a, b) + trace_distance(b, c) + 1e-12);
  }
}

TEST_CASE("partial_trace of a product state") {
  Rng rng = make_rng(6);
  const StateVector a = random_state(Layout({{"A", 2}}), rng);
  const StateVector b = random_state(Layout({{"B", 3}}), rng);
  const DensityMatrix r = partial_trace(tensor(a, b), {"B"});
  CHECK((r.rho - b.amp * b.amp.adjoint()).norm() < 1e-12);
}

TEST_CASE("good_bad_decomposition examples") {
  const CVec e0 = CVec::Unit(2, 0), e1 = CVec::Unit(2, 1);
  const CMat accept = projector_onto(e0);
  const Layout l({{"W", 2}});

  const GoodBadSplit pure = good_bad_decomposition(DensityMatrix(l, projector_onto(e0)), accept, 0.3);
  CHECK(pure.q_bad == doctest::Approx(0.0));

  const CMat mix = 0.99 * projector_onto(e0) + 0.01 * projector_onto(e1);
  const GoodBadSplit m = good_bad_decomposition(DensityMatrix(l, mix), accept, 0.01);
  CHECK(m.q_bad == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(m.q_bad <= std::sqrt(0.01));

  const GoodBadSplit mm = good_bad_decomposition(DensityMatrix(l, 0.5 * CMat::Identity(2, 2)), accept, 0.5);
  CHECK(mm.q_bad <= std::sqrt(0.5) + 1e-12);
  CHECK(mm.q_good + mm.q_bad == doctest::Approx(1.0));
}

TEST_CASE("max_dim guard") {
  const std::size_t old = max_dim();
  set_max_dim(8);
  CHECK_THROWS_AS(check_dim(16, "test"), std::length_error);
  set_max_dim(old);
  CHECK_NOTHROW(check_dim(16, "test"));
}

TEST_CASE("seeded rng streams are reproducible") {
  Rng a = make_rng(9, 3), b = make_rng(9, 3), c = make_rng(9, 4);
  const auto x = a(), y = b(), z = c();
  CHECK(x == y);
  CHECK(x != z);
}
