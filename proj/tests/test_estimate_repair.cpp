#include <doctest.h>

#include <cmath>

#include "wpv/estimate_repair.hpp"

using namespace wpv;

namespace {

CVec plus() { return CVec::Constant(2, cplx(1.0 / std::sqrt(2.0))); }

CMat random_projector(int d, int rank, Rng& rng) {
  const CMat u = haar_unitary(d, rng);
  return u.leftCols(rank) * u.leftCols(rank).adjoint();
}

}  // namespace

TEST_CASE("jordan_decompose examples") {
  const CMat p0 = projector_onto(CVec::Unit(2, 0));
  const JordanDecomposition same = jordan_decompose(p0, p0);
  REQUIRE(same.blocks.size() == 1);
  CHECK(same.blocks[0].p == doctest::Approx(1.0));
  CHECK(same.blocks[0].one_dim);

  const JordanDecomposition half = jordan_decompose(p0, projector_onto(plus()));
  REQUIRE(half.blocks.size() == 1);
  CHECK(half.blocks[0].p == doctest::Approx(0.5));
  CHECK_FALSE(half.blocks[0].one_dim);
}

TEST_CASE("jordan_decompose agrees with a generic eigensolver") {
  Rng rng = make_rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const CMat a = random_projector(6, 1 + trial % 4, rng);
    const CMat b = random_projector(6, 1 + (trial / 4) % 4, rng);
    const JordanDecomposition j = jordan_decompose(a, b);
    const int rank_b = static_cast<int>(std::lround(b.trace().real()));
    REQUIRE(static_cast<int>(j.blocks.size()) == rank_b);
    Eigen::ComplexEigenSolver<CMat> es(b * a * b);
    std::vector<double> ev;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) ev.push_back(es.eigenvalues()(i).real());
    std::sort(ev.rbegin(), ev.rend());
    ev.resize(static_cast<std::size_t>(rank_b));
    std::sort(ev.begin(), ev.end());
    for (int i = 0; i < rank_b; ++i) CHECK(std::abs(j.blocks[i].p - ev[i]) < 1e-8);
    for (const auto& blk : j.blocks) {
      CHECK((b * blk.b_vec - blk.b_vec).norm() < 1e-8);
      if (blk.a_vec.size()) CHECK((a * blk.a_vec - blk.a_vec).norm() < 1e-8);
    }
  }
}

TEST_CASE("valest_t and the estimate grid") {
  CHECK(valest_t(0.1, 0.01) == static_cast<long>(std::ceil(400 * std::log(400.0))));
  CHECK(grid_value(0, 10) == doctest::Approx(-0.5));
  CHECK(grid_value(20, 10) == doctest::Approx(1.5));
  CHECK_THROWS_AS(valest_t(0.0, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(valest_t(0.1, 0.0), std::invalid_argument);
}

TEST_CASE("val_est on eigenstates") {
  const QmaVerifier v = diagonal_verifier({1.0, 0.0});
  const EigenSpectrum sp = eigen_spectrum(v);
  Rng rng = make_rng(22);
  const double eps = 0.1, delta = 0.01;
  const int trials = 2000;
  int near1 = 0, near0 = 0;
  for (int i = 0; i < trials; ++i) {
    near1 += std::abs(val_est(v, make_witness(sp, 1.0), eps, delta, rng).p.value - 1.0) <= eps;
    near0 += std::abs(val_est(v, make_witness(sp, 0.0), eps, delta, rng).p.value) <= eps;
  }
  const double se = std::sqrt(delta * (1 - delta) / trials);
  CHECK(near1 / double(trials) >= 1 - delta - 3 * se);
  CHECK(near0 / double(trials) >= 1 - delta - 3 * se);
}

TEST_CASE("val_est leaves an eigenstate in place") {
  const QmaVerifier v = diagonal_verifier({0.8, 0.3});
  const StateVector w = make_witness(eigen_spectrum(v), 0.8);
  Rng rng = make_rng(23);
  for (int i = 0; i < 20; ++i) {
    const ValEstResult r = val_est(v, w, 0.1, 0.05, rng);
    CHECK(r.completed);
    CHECK(trace_distance(r.post, w) < 1e-9);
  }
}

TEST_CASE("val_est expectation on a superposition") {
  const QmaVerifier v = diagonal_verifier({1.0, 0.0});
  const StateVector w = make_witness(eigen_spectrum(v), 0.5, WitnessMode::superposition);
  Rng rng = make_rng(24);
  const int trials = 10000;
  double sum = 0, sq = 0;
  for (int i = 0; i < trials; ++i) {
    const double p = val_est(v, w, 0.1, 0.01, rng).p.value;
    sum += p;
    sq += p * p;
  }
  const double mean = sum / trials;
  const double se = std::sqrt((sq / trials - mean * mean) / trials);
  CHECK(std::abs(mean - 0.5) <= 3 * se);
}

TEST_CASE("val_est: collapsed kernel matches the dense reference") {
  const QmaVerifier v = diagonal_verifier({0.7, 0.2});
  const StateVector w = make_witness(eigen_spectrum(v), 0.45, WitnessMode::superposition);
  const double eps = 0.5, delta = 0.3;
  Rng r1 = make_rng(25), r2 = make_rng(26);
  const int trials = 3000;
  double m1 = 0, m2 = 0, hi1 = 0, hi2 = 0;
  for (int i = 0; i < trials; ++i) {
    const ValEstResult a = val_est(v, w, eps, delta, r1);
    const ValEstResult b = val_est_dense(v, w, eps, delta, r2);
    CHECK(a.p.t == b.p.t);
    m1 += a.p.value;
    m2 += b.p.value;
    hi1 += a.p.value > 0.45;
    hi2 += b.p.value > 0.45;
    CHECK(std::abs(b.post.norm() - 1.0) < 1e-9);
  }
  // Outcome law is a 50/50 mixture of the two eigenvalue branches.
  CHECK(std::abs(m1 - m2) / trials < 0.03);
  CHECK(std::abs(hi1 - hi2) / trials < 4 * std::sqrt(0.5 / trials));
}

TEST_CASE("valest_tail_prob matches Monte-Carlo") {
  const QmaVerifier v = diagonal_verifier({0.6, 0.2});
  const StateVector w = make_witness(eigen_spectrum(v), 0.6);
  const double eps = 0.2, delta = 0.2;
  const long t = valest_t(eps, delta);
  const double thr = 0.62;
  const double exact = valest_tail_prob(v, w.amp * w.amp.adjoint(), thr, t);
  Rng rng = make_rng(27);
  const int trials = 5000;
  int hit = 0;
  for (int i = 0; i < trials; ++i) hit += val_est(v, w, eps, delta, rng).p.value >= thr;
  const double se = std::sqrt(exact * (1 - exact) / trials);
  CHECK(std::abs(hit / double(trials) - exact) <= 3 * se + 1e-3);
}

TEST_CASE("repair: commuting disturbance returns at once") {
  const QmaVerifier v = diagonal_verifier({0.8, 0.3});
  const StateVector w = make_witness(eigen_spectrum(v), 0.8);
  const double eps = 0.1, delta = 0.001;
  const Estimator m = [&](const StateVector& s, Rng& r) { return val_est(v, s, eps, delta, r); };
  const BinaryMeasurement pi = [](StateVector& s, Rng& r) {
    Measurement o = measure_basis(s, "W", r);
    s = std::move(o.post);
    return o.outcome;
  };
  Rng rng = make_rng(28);
  int quick = 0;
  const int trials = 200;
  for (int i = 0; i < trials; ++i) {
    const ValEstResult pre = m(w, rng);
    StateVector damaged = pre.post;
    pi(damaged, rng);
    CHECK(trace_distance(damaged, w) < 1e-9);
    const RepairResult r = repair(m, pi, damaged, pre.p.value, 2 * eps, default_t_max(delta), rng);
    quick += r.ok && r.oracle_calls <= 2;
    CHECK(trace_distance(r.state, w) < 1e-9);
  }
  CHECK(quick >= trials - 3);
}

TEST_CASE("repair: rank-1 damage on an eigenvalue-0.8 eigenstate") {
  const QmaVerifier v = diagonal_verifier({0.8, 0.3});
  const StateVector w = make_witness(eigen_spectrum(v), 0.8);
  const double eps = 0.1, delta = 0.001;
  const CMat p = projector_onto(CVec::Constant(2, cplx(1.0 / std::sqrt(2.0))));
  const CMat q = CMat::Identity(2, 2) - p;
  const Estimator m = [&](const StateVector& s, Rng& r) { return val_est(v, s, eps, delta, r); };
  const BinaryMeasurement pi = [&](StateVector& s, Rng& r) {
    Measurement o = measure_projective(s, {q, p}, {"W"}, r);
    s = std::move(o.post);
    return o.outcome;
  };
  Rng rng = make_rng(29);
  const int trials = 1000;
  int good = 0;
  double calls = 0;
  for (int i = 0; i < trials; ++i) {
    const ValEstResult pre = m(w, rng);
    StateVector damaged = pre.post;
    pi(damaged, rng);
    const RepairResult r = repair(m, pi, damaged, pre.p.value, eps, default_t_max(delta), rng);
    calls += r.oracle_calls;
    good += std::abs(m(r.state, rng).p.value - 0.8) <= 2 * eps;
  }
  CHECK(good / double(trials) >= 1.0 - 10 * std::sqrt(delta));
  CHECK(calls / trials <= 7.0);
}

TEST_CASE("repair respects its budget") {
  const QmaVerifier v = diagonal_verifier({0.8, 0.3});
  const StateVector w = make_witness(eigen_spectrum(v), 0.3);
  const Estimator m = [&](const StateVector& s, Rng& r) { return val_est(v, s, 0.05, 0.01, r); };
  const BinaryMeasurement pi = [](StateVector&, Rng&) { return 0; };
  Rng rng = make_rng(30);
  const RepairResult r = repair(m, pi, w, 0.8, 0.05, 5, rng);
  CHECK_FALSE(r.ok);
  CHECK(r.oracle_calls == 5);
  CHECK_THROWS_AS(repair(m, pi, w, 0.8, 0.05, 0, rng), std::invalid_argument);
}

TEST_CASE("classify_repairable examples") {
  const QmaVerifier v = diagonal_verifier({0.9, 0.1});
  const EigenSpectrum sp = eigen_spectrum(v);
  Rng rng = make_rng(31);
  const RepairableVerdict yes = classify_repairable(make_witness(sp, 0.9), v, 0.9, 0.05, 10, 400, rng);
  CHECK(yes.verdict);
  CHECK(yes.fraction_below < 0.05);

  const StateVector mix = make_witness(sp, 0.5, WitnessMode::superposition);
  const RepairableVerdict no = classify_repairable(mix, v, 0.9, 0.05, 10, 400, rng);
  CHECK_FALSE(no.verdict);
  CHECK(std::abs(no.fraction_below - 0.5) < 0.1);

  // Nearly perfect witness.
  const QmaVerifier hi = diagonal_verifier({1.0 - 1e-6, 0.1});
  const RepairableVerdict h = classify_repairable(make_witness(eigen_spectrum(hi), 1.0 - 1e-6), hi, 1.0 - 1e-6, 0.05, 10, 200, rng);
  CHECK(h.verdict);
}

TEST_CASE("repaired_purity_diagnostic examples") {
  const QmaVerifier v = diagonal_verifier({1.0, 0.0});
  const EigenSpectrum sp = eigen_spectrum(v);
  const StateVector e1 = make_witness(sp, 1.0);
  const PurityReport pure = repaired_purity_diagnostic(e1.amp * e1.amp.adjoint(), v, 0.9, 0.1, 0.01, 0.05);
  CHECK(pure.q_bad == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(pure.ok);

  const StateVector e0 = make_witness(sp, 0.0);
  const CMat rho = 0.8 * e1.amp * e1.amp.adjoint() + 0.2 * e0.amp * e0.amp.adjoint();
  const PurityReport mix = repaired_purity_diagnostic(rho, v, 0.9, 0.1, 0.01, 0.25);
  CHECK(mix.q_good == doctest::Approx(0.8).epsilon(1e-6));
  CHECK(mix.q_bad == doctest::Approx(0.2).epsilon(1e-6));
  CHECK(mix.ok);

  CHECK_THROWS_AS(repaired_purity_diagnostic(rho, v, 0.9, 0.1, 0.01, 0.05), std::domain_error);
}
