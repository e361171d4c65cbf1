#include <doctest.h>

#include <cmath>

#include "wpv/qma.hpp"

using namespace wpv;

namespace {

CVec plus() { return CVec::Constant(2, cplx(1.0 / std::sqrt(2.0))); }

double overlap(const CVec& a, const CVec& b) { return std::abs(a.dot(b)); }

}  // namespace

TEST_CASE("eigen_spectrum examples") {
  const EigenSpectrum d = eigen_spectrum(diagonal_verifier({1.0, 0.0}));
  REQUIRE(d.pairs.size() == 2);
  CHECK(d.pairs[0].value == doctest::Approx(1.0));
  CHECK(d.pairs[1].value == doctest::Approx(0.0));
  CHECK(overlap(d.pairs[0].vector, CVec::Unit(2, 0)) == doctest::Approx(1.0));
  CHECK(overlap(d.pairs[1].vector, CVec::Unit(2, 1)) == doctest::Approx(1.0));

  const EigenSpectrum p = eigen_spectrum(projector_verifier(projector_onto(plus())));
  CHECK(p.pairs[0].value == doctest::Approx(1.0));
  CHECK(p.pairs[1].value == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(overlap(p.pairs[0].vector, plus()) == doctest::Approx(1.0));

  Rng rng = make_rng(11);
  const QmaVerifier r = random_verifier(3, rng);
  const EigenSpectrum s = eigen_spectrum(r);
  CMat rec = CMat::Zero(8, 8);
  for (const auto& e : s.pairs) rec += e.value * e.vector * e.vector.adjoint();
  CHECK((rec - r.operator_v()).norm() < 1e-8);
  for (std::size_t i = 1; i < s.pairs.size(); ++i) CHECK(s.pairs[i - 1].value >= s.pairs[i].value);
}

TEST_CASE("make_witness examples") {
  const QmaVerifier v = diagonal_verifier({1.0, 0.0});
  const EigenSpectrum sp = eigen_spectrum(v);
  const StateVector w1 = make_witness(sp, 1.0);
  CHECK(overlap(w1.amp, CVec::Unit(2, 0)) == doctest::Approx(1.0));

  const StateVector half = make_witness(sp, 0.5, WitnessMode::superposition);
  CHECK(std::abs(brute_force_acceptance(v, half) - 0.5) < 1e-9);

  const StateVector w75 = make_witness(sp, 0.75, WitnessMode::superposition);
  CHECK(std::abs(std::abs(w75.amp(0)) - std::sqrt(0.75)) < 1e-9);
  CHECK(std::abs(std::abs(w75.amp(1)) - std::sqrt(0.25)) < 1e-9);
  CHECK(std::abs(brute_force_acceptance(v, w75) - 0.75) < 1e-9);

  CHECK_THROWS_AS(make_witness(sp, 0.4), std::invalid_argument);
}

TEST_CASE("brute_force_acceptance traces out other registers") {
  const QmaVerifier v = diagonal_verifier({0.9, 0.1});
  // (|0>|0> + |1>|1>)/sqrt2 on (W, REF): reduced W state is maximally mixed.
  CVec a = CVec::Zero(4);
  a(0) = a(3) = 1.0 / std::sqrt(2.0);
  const StateVector s(Layout({{"W", 2}, {"REF", 2}}), a);
  CHECK(brute_force_acceptance(v, s) == doctest::Approx(0.5));
}

TEST_CASE("diagonal verifier dilation is unitary with the listed spectrum") {
  const QmaVerifier v = diagonal_verifier({0.8, 0.3, 0.0});
  CHECK(is_unitary(v.algorithm().dilation));
  CHECK(is_projector(v.algorithm().accept));
  const EigenSpectrum sp = eigen_spectrum(v);
  CHECK(sp.pairs[0].value == doctest::Approx(0.8));
  CHECK(sp.pairs[1].value == doctest::Approx(0.3));
}

TEST_CASE("mw_amplify: eigenvalues 1 and 0 are deterministic") {
  const QmaVerifier v = diagonal_verifier({1.0, 0.0});
  const EigenSpectrum sp = eigen_spectrum(v);
  Rng rng = make_rng(12);
  for (int lambda : {1, 5, 20}) {
    for (int i = 0; i < 20; ++i) {
      const MwResult a = mw_amplify(v, lambda, make_witness(sp, 1.0), rng);
      CHECK(a.accept);
      CHECK(a.repeat_fraction == doctest::Approx(1.0));
      CHECK(trace_distance(a.post, make_witness(sp, 1.0)) < 1e-9);
      const MwResult r = mw_amplify(v, lambda, make_witness(sp, 0.0), rng);
      CHECK_FALSE(r.accept);
    }
  }
}

TEST_CASE("mw_amplify: eigenvalue 0.9 at lambda 10") {
  const QmaVerifier v = diagonal_verifier({0.9, 0.1});
  const StateVector w = make_witness(eigen_spectrum(v), 0.9);
  Rng rng = make_rng(13);
  const int trials = 10000;
  int acc = 0;
  for (int i = 0; i < trials; ++i) acc += mw_amplify(v, 10, w, rng).accept;
  const double rate = acc / double(trials);
  const double target = 1.0 - std::pow(2.0, -10);
  const double se = std::sqrt(target * (1 - target) / trials);
  CHECK(rate >= target - 3 * se);
}

TEST_CASE("mw_amplify: collapsed kernel matches the dense reference") {
  // Eigenvalue 0.5 sits on the decision threshold, so both outcomes occur.
  const QmaVerifier v = diagonal_verifier({0.5, 0.2});
  const StateVector w = make_witness(eigen_spectrum(v), 0.5);
  Rng r1 = make_rng(14), r2 = make_rng(15);
  const int trials = 2000;
  double f1 = 0, f2 = 0, a1 = 0, a2 = 0;
  for (int i = 0; i < trials; ++i) {
    const MwResult x = mw_amplify(v, 1, w, r1);
    const MwResult y = mw_amplify_dense(v, 1, w, r2);
    f1 += x.repeat_fraction;
    f2 += y.repeat_fraction;
    a1 += x.accept;
    a2 += y.accept;
    CHECK(std::abs(x.post.norm() - 1.0) < 1e-9);
    CHECK(std::abs(y.post.norm() - 1.0) < 1e-9);
  }
  f1 /= trials;
  f2 /= trials;
  // Repeat fraction of a p-block has mean p^2 + (1-p)^2 = 0.5 at p = 0.5.
  const long n = mw_iterations(1, v.a(), v.b());
  const double se = std::sqrt(0.25 / n / trials);
  CHECK(std::abs(f1 - 0.5) < 4 * se);
  CHECK(std::abs(f2 - 0.5) < 4 * se);
  CHECK(std::abs(a1 - a2) / trials < 4 * std::sqrt(0.5 / trials));
}

TEST_CASE("mw_amplify leaves other registers alone") {
  const QmaVerifier v = diagonal_verifier({1.0, 0.0});
  CVec a = CVec::Zero(4);
  a(0) = 1.0 / std::sqrt(2.0);  // |0>_W |0>_E
  a(1) = 1.0 / std::sqrt(2.0);  // |0>_W |1>_E
  const StateVector s(Layout({{"W", 2}, {"E", 2}}), a);
  Rng rng = make_rng(16);
  const MwResult r = mw_amplify(v, 4, s, rng);
  CHECK(r.accept);
  CHECK(trace_distance(r.post, s) < 1e-9);
}

TEST_CASE("verifier JSON round trip") {
  Rng rng = make_rng(17);
  const QmaVerifier v = random_verifier(1, rng);
  const QmaVerifier w = verifier_from_json(verifier_to_json(v));
  CHECK((v.operator_v() - w.operator_v()).norm() < 1e-12);
  CHECK(w.a() == v.a());
}

TEST_CASE("verifier rejects a closed gap") {
  QuantumAlgorithm alg;
  alg.input_dim = 1;
  alg.dilation = CMat::Identity(1, 1);
  alg.accept = CMat::Identity(1, 1);
  CHECK_THROWS_AS(QmaVerifier("x", alg, 0.5, 0.5), std::invalid_argument);
}
