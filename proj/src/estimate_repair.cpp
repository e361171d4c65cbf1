#include "wpv/estimate_repair.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/distributions/binomial.hpp>

#include "wpv/alternating.hpp"

namespace wpv {

JordanDecomposition jordan_decompose(const CMat& pi_a, const CMat& pi_b) {
  if (!is_projector(pi_a, 1e-8) || !is_projector(pi_b, 1e-8))
    throw std::invalid_argument("jordan_decompose: inputs must be Hermitian projectors");
  if (pi_a.rows() != pi_b.rows()) throw std::invalid_argument("jordan_decompose: dimension mismatch");
  const Eigh eb = eigh(pi_b);
  std::vector<Eigen::Index> range_cols;
  for (Eigen::Index j = 0; j < eb.values.size(); ++j)
    if (eb.values(j) > 0.5) range_cols.push_back(j);
  CMat q(pi_b.rows(), static_cast<Eigen::Index>(range_cols.size()));
  for (std::size_t c = 0; c < range_cols.size(); ++c) q.col(static_cast<Eigen::Index>(c)) = eb.vectors.col(range_cols[c]);

  JordanDecomposition out;
  if (q.cols() == 0) return out;
  const Eigh m = eigh(q.adjoint() * pi_a * q);
  for (Eigen::Index j = 0; j < m.values.size(); ++j) {
    JordanBlock b;
    b.p = std::clamp(m.values(j), 0.0, 1.0);
    b.b_vec = q * m.vectors.col(j);
    fix_phase(b.b_vec);
    const CVec a = pi_a * b.b_vec;
    if (a.norm() > 1e-12) {
      b.a_vec = a / a.norm();
      fix_phase(b.a_vec);
    }
    b.one_dim = b.p < 1e-9 || b.p > 1.0 - 1e-9;
    out.blocks.push_back(std::move(b));
  }
  return out;
}

long valest_t(double epsilon, double delta) {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw std::invalid_argument("val_est: epsilon must lie in (0,1]");
  if (!(delta > 0.0 && delta <= 1.0)) throw std::invalid_argument("val_est: delta must lie in (0,1]");
  return static_cast<long>(std::ceil(4.0 * std::log(4.0 / delta) / (epsilon * epsilon)));
}

double grid_value(long k, long t) { return static_cast<double>(k) / static_cast<double>(t) - 0.5; }

namespace {

const char* kR = "__ve_R";
const char* kT = "__ve_T";

// T basis order: |0>, |top>, |bot>.
CVec plus_top_bot() {
  CVec v(3);
  v << 1.0 / std::sqrt(2.0), 0.5, 0.5;
  return v;
}

CMat pi_g(const QmaVerifier& v) {
  const Eigen::Index dd = static_cast<Eigen::Index>(v.witness_dim()) * v.ancilla_dim();
  CMat t0 = CMat::Zero(3, 3), ttop = CMat::Zero(3, 3);
  t0(0, 0) = 1.0;
  ttop(1, 1) = 1.0;
  return kron(v.dilated_accept(), t0) + kron(CMat::Identity(dd, dd), ttop);
}

Estimate make_estimate(long k, long t, double eps, double delta) {
  Estimate e;
  e.k = k;
  e.t = t;
  e.value = grid_value(k, t);
  e.epsilon = eps;
  e.delta = delta;
  e.grid_size = 2 * t + 1;
  return e;
}

}  // namespace

ValEstResult val_est(const QmaVerifier& v, const StateVector& state, double epsilon, double delta, Rng& rng,
                     const std::string& reg) {
  const long t = valest_t(epsilon, delta);
  check_dim(state.layout.size() * v.ancilla_dim() * 3, "val_est");
  const Eigh& e = v.eigen();
  const RVec p = (e.values.cwiseMax(0.0).cwiseMin(1.0) * 0.5).array() + 0.25;
  const CMat coeffs = e.vectors.adjoint() * split_witness(state, reg);
  const AlternatingOutcome o = alternate_collapsed(p, coeffs, 2 * t, 2 * t, rng);

  ValEstResult out;
  out.p = make_estimate(o.repeats, t, epsilon, delta);
  out.completed = o.returned;
  out.completion_steps = o.completion_steps;
  if (o.returned) {
    out.post = join_witness(e.vectors * o.coeffs, state.layout, reg);
    return out;
  }
  // Completion failed: rebuild the B-side "0" vectors and discard R, T by measuring them.
  const int d = v.witness_dim(), da = v.ancilla_dim();
  const CMat g = pi_g(v);
  const CVec plus = plus_top_bot();
  CMat b0(static_cast<Eigen::Index>(d) * da * 3, p.size());
  for (Eigen::Index j = 0; j < p.size(); ++j) {
    CVec b1 = CVec::Zero(b0.rows());
    for (int w = 0; w < d; ++w)
      for (int s = 0; s < 3; ++s) b1((w * da) * 3 + s) = e.vectors(w, j) * plus(s);
    const CVec a1 = g * b1 / std::sqrt(p(j));
    b0.col(j) = (a1 - std::sqrt(p(j)) * b1) / std::sqrt(1.0 - p(j));
  }
  const StateVector full = assemble_blocks(b0, o.coeffs, state.layout, reg, {{kR, da}, {kT, 3}});
  out.post = discard_unravel(full, {kR, kT}, rng);
  return out;
}

ValEstResult val_est(const QmaVerifier& v, const DensityMatrix& rho, double epsilon, double delta, Rng& rng,
                     const std::string& reg) {
  const Eigh e = eigh(rho.rho);
  std::vector<double> w(static_cast<std::size_t>(e.values.size()));
  for (Eigen::Index j = 0; j < e.values.size(); ++j) w[j] = std::max(0.0, e.values(j));
  const auto j = static_cast<Eigen::Index>(sample_discrete(w, rng));
  return val_est(v, StateVector(rho.layout, e.vectors.col(j)), epsilon, delta, rng, reg);
}

ValEstResult val_est_dense(const QmaVerifier& v, const StateVector& state, double epsilon, double delta, Rng& rng,
                           const std::string& reg) {
  const long t = valest_t(epsilon, delta);
  const int da = v.ancilla_dim();
  StateVector start = append_zero(state, {{kR, da}, {kT, 3}});
  const CVec plus = plus_top_bot();
  CMat prep = CMat::Zero(3, 3);
  prep.col(0) = plus;
  apply_op(start, prep, {kT});

  const CMat reset = kron(projector_onto(CVec::Unit(da, 0)), plus * plus.adjoint());
  const DenseAlternatingOutcome o = alternate_dense(start, pi_g(v), {reg, kR, kT}, reset, {kR, kT}, 2 * t, 2 * t, rng);

  ValEstResult out;
  out.p = make_estimate(o.repeats, t, epsilon, delta);
  out.completed = o.returned;
  out.completion_steps = o.completion_steps;
  if (o.returned) {
    StateVector s = o.post;
    CMat unprep = CMat::Zero(3, 3);
    unprep.row(0) = plus.adjoint();
    apply_op(s, unprep, {kT});
    out.post = discard_zero(s, {kR, kT}, 1e-6);
  } else {
    out.post = discard_unravel(o.post, {kR, kT}, rng);
  }
  return out;
}

double valest_tail_prob(const QmaVerifier& v, const CMat& rho, double threshold, long t) {
  const Eigh& e = v.eigen();
  const long n = 2 * t;
  long kmin = static_cast<long>(std::ceil((threshold + 0.5) * static_cast<double>(t) - 1e-9));
  kmin = std::clamp(kmin, 0L, n + 1);
  double total = 0.0;
  for (Eigen::Index j = 0; j < e.values.size(); ++j) {
    const CVec u = e.vectors.col(j);
    const double w = (u.adjoint() * rho * u)(0).real();
    if (w <= 0.0) continue;
    const double pj = std::clamp(e.values(j), 0.0, 1.0) * 0.5 + 0.25;
    double tail;
    if (kmin <= 0) {
      tail = 1.0;
    } else if (kmin > n) {
      tail = 0.0;
    } else {
      boost::math::binomial_distribution<double> bin(static_cast<double>(n), pj);
      tail = boost::math::cdf(boost::math::complement(bin, static_cast<double>(kmin - 1)));
    }
    total += w * tail;
  }
  return total / rho.trace().real();
}

long default_t_max(double delta) { return static_cast<long>(std::ceil(1.0 / std::sqrt(delta))); }

RepairResult repair(const Estimator& m, const BinaryMeasurement& pi, const StateVector& damaged, double p,
                    double radius, long t_max, Rng& rng) {
  if (t_max < 1) throw std::invalid_argument("repair: t_max must be >= 1");
  RepairResult out;
  out.state = damaged;
  while (out.oracle_calls < t_max) {
    ValEstResult r = m(out.state, rng);
    ++out.oracle_calls;
    out.state = std::move(r.post);
    out.estimates.push_back(r.p.value);
    if (std::abs(r.p.value - p) <= radius + 1e-12) {
      out.ok = true;
      return out;
    }
    if (out.oracle_calls >= t_max) break;
    out.pi_outcomes.push_back(pi(out.state, rng));
    ++out.oracle_calls;
  }
  return out;
}

RepairableVerdict classify_repairable(const StateVector& state, const QmaVerifier& v, double p, double epsilon,
                                      int lambda, int trials, Rng& rng, const std::string& reg) {
  if (trials < 1) throw std::invalid_argument("classify_repairable: trials must be >= 1");
  const double delta = std::ldexp(1.0, -lambda);
  int below = 0;
  for (int i = 0; i < trials; ++i)
    if (val_est(v, state, epsilon, delta, rng, reg).p.value < p - epsilon) ++below;
  RepairableVerdict out;
  out.trials = trials;
  out.fraction_below = static_cast<double>(below) / trials;
  out.std_error = std::sqrt(out.fraction_below * (1.0 - out.fraction_below) / trials);
  out.threshold = std::sqrt(std::ldexp(1.0, 1 - lambda));
  out.verdict = out.fraction_below <= out.threshold + 3.0 * out.std_error;
  return out;
}

PurityReport repaired_purity_diagnostic(const CMat& rho, const QmaVerifier& v, double p_star, double epsilon,
                                        double delta, double gamma) {
  const long t = valest_t(epsilon, delta);
  const Eigh& e = v.eigen();
  // POVM element of "estimate >= p*": diagonal in the eigenbasis of V.
  CMat accept = CMat::Zero(rho.rows(), rho.cols());
  for (Eigen::Index j = 0; j < e.values.size(); ++j) {
    const CVec u = e.vectors.col(j);
    accept += valest_tail_prob(v, u * u.adjoint(), p_star, t) * (u * u.adjoint());
  }
  PurityReport out;
  out.acceptance = (rho * accept).trace().real();
  out.sqrt_gamma = std::sqrt(gamma);
  out.precondition = out.acceptance >= 1.0 - gamma - tol::construction;
  if (!out.precondition) throw std::domain_error("repaired_purity_diagnostic: Pr[p >= p*] below 1-gamma");
  const GoodBadSplit s = good_bad_decomposition(DensityMatrix(Layout({{"W", static_cast<int>(rho.rows())}}), rho), accept, gamma);
  out.q_good = s.q_good;
  out.q_bad = s.q_bad;
  out.eigen_acceptance = s.eigen_acceptance;
  out.ok = out.q_bad <= out.sqrt_gamma + tol::construction;
  return out;
}

}  // namespace wpv
