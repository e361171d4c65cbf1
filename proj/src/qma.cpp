#include "wpv/qma.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "wpv/alternating.hpp"

namespace wpv {

QmaVerifier::QmaVerifier(std::string instance, QuantumAlgorithm alg, double a, double b, double gap_floor)
    : instance_(std::move(instance)), alg_(std::move(alg)), a_(a), b_(b) {
  if (!(0.0 <= b && b < a && a <= 1.0)) throw std::invalid_argument("QmaVerifier: need 0 <= b < a <= 1");
  if (a - b < gap_floor) throw std::invalid_argument("QmaVerifier: gap a-b below floor");
  check_dim(static_cast<std::size_t>(alg_.input_dim) * alg_.ancilla_dim(), "QmaVerifier");
  v_ = acceptance_operator(alg_);
  g_ = alg_.dilation.adjoint() * alg_.accept * alg_.dilation;
  g_ = 0.5 * (g_ + g_.adjoint());
  eig_ = eigh(v_);
}

EigenSpectrum eigen_spectrum(const QmaVerifier& v) {
  const Eigh& e = v.eigen();
  EigenSpectrum out;
  for (Eigen::Index j = e.values.size() - 1; j >= 0; --j)
    out.pairs.push_back({std::clamp(e.values(j), 0.0, 1.0), e.vectors.col(j)});
  return out;
}

StateVector make_witness(const EigenSpectrum& spectrum, double target, WitnessMode mode, const std::string& reg) {
  if (spectrum.pairs.empty()) throw std::invalid_argument("make_witness: empty spectrum");
  const int d = static_cast<int>(spectrum.pairs.front().vector.size());
  Layout l({{reg, d}});
  if (mode == WitnessMode::eigenstate) {
    const EigenPair* best = nullptr;
    for (const auto& p : spectrum.pairs)
      if (!best || std::abs(p.value - target) < std::abs(best->value - target)) best = &p;
    if (std::abs(best->value - target) > tol::assertion)
      throw std::invalid_argument("make_witness: no eigenvalue within 1e-6 of target");
    return StateVector(l, best->vector);
  }
  // Superposition of the closest eigenvalues bracketing the target.
  const EigenPair* hi = nullptr;
  const EigenPair* lo = nullptr;
  for (const auto& p : spectrum.pairs) {
    if (p.value >= target - tol::construction && (!hi || p.value < hi->value)) hi = &p;
    if (p.value <= target + tol::construction && (!lo || p.value > lo->value)) lo = &p;
  }
  if (!hi || !lo) throw std::invalid_argument("make_witness: target not bracketed by the spectrum");
  if (std::abs(hi->value - lo->value) < tol::construction) return StateVector(l, hi->vector);
  const double wh = (target - lo->value) / (hi->value - lo->value);
  CVec v = std::sqrt(wh) * hi->vector + std::sqrt(1.0 - wh) * lo->vector;
  StateVector s(l, v);
  s.normalize();
  return s;
}

double brute_force_acceptance(const QmaVerifier& v, const StateVector& s, const std::string& reg) {
  const CMat m = split_witness(s, reg);
  if (m.rows() != v.witness_dim()) throw std::invalid_argument("brute_force_acceptance: witness dim mismatch");
  check_dim(s.layout.size(), "brute_force_acceptance");
  const CMat rho = m * m.adjoint();
  return (rho * v.operator_v()).trace().real() / rho.trace().real();
}

QmaVerifier diagonal_verifier(const std::vector<double>& spectrum, const std::string& label) {
  const int d = static_cast<int>(spectrum.size());
  if (d < 1) throw std::invalid_argument("diagonal_verifier: empty spectrum");
  QuantumAlgorithm alg;
  alg.input_dim = d;
  alg.ancilla_dims = {2};
  alg.dilation = CMat::Zero(2 * d, 2 * d);
  alg.accept = CMat::Zero(2 * d, 2 * d);
  for (int j = 0; j < d; ++j) {
    const double p = spectrum[j];
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("diagonal_verifier: eigenvalue outside [0,1]");
    const double c = std::sqrt(1.0 - p), s = std::sqrt(p);
    alg.dilation(2 * j, 2 * j) = c;
    alg.dilation(2 * j + 1, 2 * j) = s;
    alg.dilation(2 * j, 2 * j + 1) = -s;
    alg.dilation(2 * j + 1, 2 * j + 1) = c;
    alg.accept(2 * j + 1, 2 * j + 1) = 1.0;
  }
  return QmaVerifier(label, alg);
}

QmaVerifier projector_verifier(const CMat& p, const std::string& label) {
  QuantumAlgorithm alg;
  alg.input_dim = static_cast<int>(p.rows());
  alg.dilation = CMat::Identity(p.rows(), p.cols());
  alg.accept = p;
  return QmaVerifier(label, alg);
}

QmaVerifier random_verifier(int witness_qubits, Rng& rng, const std::string& label) {
  const int d = 1 << witness_qubits;
  QuantumAlgorithm alg;
  alg.input_dim = d;
  alg.ancilla_dims = {2};
  alg.dilation = haar_unitary(2 * d, rng);
  alg.accept = kron(CMat::Identity(d, d), projector_onto(CVec::Unit(2, 1)));
  return QmaVerifier(label, alg);
}

long mw_iterations(int lambda, double a, double b) {
  if (lambda < 1) throw std::invalid_argument("mw_iterations: lambda must be >= 1");
  long k = static_cast<long>(std::ceil(8.0 * lambda / ((a - b) * (a - b))));
  return k + (k % 2);
}

CMat split_witness(const StateVector& s, const std::string& reg) {
  const auto sub = sub_offsets(s.layout, {reg});
  const auto rest = rest_offsets(s.layout, {reg});
  CMat m(static_cast<Eigen::Index>(sub.size()), static_cast<Eigen::Index>(rest.size()));
  for (std::size_t c = 0; c < rest.size(); ++c)
    for (std::size_t r = 0; r < sub.size(); ++r) m(r, c) = s.amp(static_cast<Eigen::Index>(sub[r] + rest[c]));
  return m;
}

StateVector join_witness(const CMat& m, const Layout& layout, const std::string& reg) {
  const auto sub = sub_offsets(layout, {reg});
  const auto rest = rest_offsets(layout, {reg});
  CVec a(static_cast<Eigen::Index>(layout.size()));
  for (std::size_t c = 0; c < rest.size(); ++c)
    for (std::size_t r = 0; r < sub.size(); ++r) a(static_cast<Eigen::Index>(sub[r] + rest[c])) = m(r, c);
  StateVector s(layout, a);
  s.normalize();
  return s;
}

namespace {
const char* kMwAnc = "__mw_anc";
}  // namespace

MwResult mw_amplify(const QmaVerifier& v, int lambda, const StateVector& state, Rng& rng, const std::string& reg) {
  const long n = mw_iterations(lambda, v.a(), v.b());
  const Eigh& e = v.eigen();
  const RVec p = e.values.cwiseMax(0.0).cwiseMin(1.0);
  const CMat coeffs = e.vectors.adjoint() * split_witness(state, reg);
  const AlternatingOutcome o = alternate_collapsed(p, coeffs, n, n, rng);

  MwResult out;
  out.iterations = n;
  out.repeat_fraction = static_cast<double>(o.repeats) / static_cast<double>(n);
  out.accept = out.repeat_fraction > 0.5 * (v.a() + v.b());
  out.returned = o.returned;
  if (o.returned) {
    out.post = join_witness(e.vectors * o.coeffs, state.layout, reg);
    return out;
  }
  const int d = v.witness_dim(), da = v.ancilla_dim();
  CMat b0 = CMat::Zero(static_cast<Eigen::Index>(d) * da, e.values.size());
  for (Eigen::Index j = 0; j < e.values.size(); ++j) {
    const double pj = p(j);
    if (pj <= 1e-12 || pj >= 1.0 - 1e-12) continue;
    CVec b1 = CVec::Zero(static_cast<Eigen::Index>(d) * da);
    for (int w = 0; w < d; ++w) b1(w * da) = e.vectors(w, j);
    const CVec a1 = v.dilated_accept() * b1 / std::sqrt(pj);
    b0.col(j) = (a1 - std::sqrt(pj) * b1) / std::sqrt(1.0 - pj);
  }
  out.post = discard_unravel(assemble_blocks(b0, o.coeffs, state.layout, reg, {{kMwAnc, da}}), {kMwAnc}, rng);
  return out;
}

MwResult mw_amplify_dense(const QmaVerifier& v, int lambda, const StateVector& state, Rng& rng,
                          const std::string& reg) {
  const long n = mw_iterations(lambda, v.a(), v.b());
  const int da = v.ancilla_dim();
  const StateVector start = append_zero(state, {{kMwAnc, da}});
  const CMat reset = projector_onto(CVec::Unit(da, 0));
  const DenseAlternatingOutcome o =
      alternate_dense(start, v.dilated_accept(), {reg, kMwAnc}, reset, {kMwAnc}, n, n, rng);
  MwResult out;
  out.iterations = n;
  out.repeat_fraction = static_cast<double>(o.repeats) / static_cast<double>(n);
  out.accept = out.repeat_fraction > 0.5 * (v.a() + v.b());
  out.returned = o.returned;
  out.post = o.returned ? discard_zero(o.post, {kMwAnc}, 1e-6) : discard_unravel(o.post, {kMwAnc}, rng);
  return out;
}

// ---------------------------------------------------------------- JSON

namespace {
nlohmann::json mat_to_json(const CMat& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) rows.push_back({m(i, j).real(), m(i, j).imag()});
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"entries", rows}};
}

CMat mat_from_json(const nlohmann::json& j) {
  const auto r = j.at("rows").get<Eigen::Index>(), c = j.at("cols").get<Eigen::Index>();
  const auto& e = j.at("entries");
  if (e.size() != static_cast<std::size_t>(r * c)) throw std::invalid_argument("matrix entry count mismatch");
  CMat m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index k = 0; k < c; ++k) {
      const auto& z = e[static_cast<std::size_t>(i * c + k)];
      m(i, k) = cplx(z.at(0).get<double>(), z.at(1).get<double>());
    }
  return m;
}
}  // namespace

nlohmann::json verifier_to_json(const QmaVerifier& v) {
  return {{"instance", v.instance()},
          {"a", v.a()},
          {"b", v.b()},
          {"input_dim", v.algorithm().input_dim},
          {"ancilla_dims", v.algorithm().ancilla_dims},
          {"dilation", mat_to_json(v.algorithm().dilation)},
          {"accept", mat_to_json(v.algorithm().accept)}};
}

QmaVerifier verifier_from_json(const nlohmann::json& j) {
  QuantumAlgorithm alg;
  alg.input_dim = j.at("input_dim").get<int>();
  alg.ancilla_dims = j.at("ancilla_dims").get<std::vector<int>>();
  alg.dilation = mat_from_json(j.at("dilation"));
  alg.accept = mat_from_json(j.at("accept"));
  return QmaVerifier(j.value("instance", std::string("json")), alg, j.value("a", 2.0 / 3.0), j.value("b", 1.0 / 3.0));
}

}  // namespace wpv
