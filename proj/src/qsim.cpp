#include "wpv/qsim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace wpv {

namespace {
std::atomic<std::size_t> g_max_dim{std::size_t{1} << 14};
}

std::size_t max_dim() { return g_max_dim.load(); }
void set_max_dim(std::size_t d) { g_max_dim.store(d); }

void check_dim(std::size_t d, const char* what) {
  if (d > max_dim())
    throw std::length_error(std::string(what) + ": dimension " + std::to_string(d) +
                            " exceeds cap " + std::to_string(max_dim()));
}

Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

std::size_t sample_discrete(const std::vector<double>& w, Rng& rng) {
  double total = 0.0;
  for (double x : w) total += x;
  if (!(total > 0.0)) throw std::domain_error("sample_discrete: no positive weight");
  double u = uniform01(rng) * total;
  std::size_t last = 0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] <= 0.0) continue;
    last = i;
    if (u < w[i]) return i;
    u -= w[i];
  }
  return last;
}

// ---------------------------------------------------------------- Layout

Layout::Layout(std::vector<Register> regs) : regs_(std::move(regs)) {
  strides_.assign(regs_.size(), 1);
  size_ = 1;
  for (int i = static_cast<int>(regs_.size()) - 1; i >= 0; --i) {
    if (regs_[i].dim < 1) throw std::invalid_argument("register '" + regs_[i].name + "' has dim < 1");
    strides_[i] = size_;
    size_ *= static_cast<std::size_t>(regs_[i].dim);
  }
  for (std::size_t i = 0; i < regs_.size(); ++i)
    for (std::size_t j = i + 1; j < regs_.size(); ++j)
      if (regs_[i].name == regs_[j].name) throw std::invalid_argument("duplicate register '" + regs_[i].name + "'");
}

int Layout::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < regs_.size(); ++i)
    if (regs_[i].name == name) return static_cast<int>(i);
  throw std::out_of_range("no register named '" + name + "'");
}

bool Layout::has(const std::string& name) const {
  return std::any_of(regs_.begin(), regs_.end(), [&](const Register& r) { return r.name == name; });
}

std::size_t Layout::dims_of(const std::vector<std::string>& names) const {
  std::size_t d = 1;
  for (const auto& n : names) d *= static_cast<std::size_t>(dim(n));
  return d;
}

Layout Layout::appended(const std::vector<Register>& extra) const {
  auto r = regs_;
  r.insert(r.end(), extra.begin(), extra.end());
  return Layout(std::move(r));
}

Layout Layout::without(const std::vector<std::string>& names) const {
  std::vector<Register> r;
  for (const auto& reg : regs_)
    if (std::find(names.begin(), names.end(), reg.name) == names.end()) r.push_back(reg);
  return Layout(std::move(r));
}

Layout Layout::only(const std::vector<std::string>& names) const {
  std::vector<Register> r;
  for (const auto& n : names) r.push_back(regs_[index_of(n)]);
  return Layout(std::move(r));
}

std::vector<std::string> Layout::names() const {
  std::vector<std::string> out;
  for (const auto& r : regs_) out.push_back(r.name);
  return out;
}

bool Layout::operator==(const Layout& o) const {
  if (regs_.size() != o.regs_.size()) return false;
  for (std::size_t i = 0; i < regs_.size(); ++i)
    if (regs_[i].name != o.regs_[i].name || regs_[i].dim != o.regs_[i].dim) return false;
  return true;
}

namespace {
std::vector<std::size_t> offsets_for(const Layout& l, const std::vector<int>& idx) {
  std::vector<std::size_t> out{0};
  for (int r : idx) {
    std::vector<std::size_t> next;
    next.reserve(out.size() * l.regs()[r].dim);
    for (std::size_t base : out)
      for (int v = 0; v < l.regs()[r].dim; ++v) next.push_back(base + v * l.stride(r));
    out.swap(next);
  }
  return out;
}
}  // namespace

std::vector<std::size_t> sub_offsets(const Layout& l, const std::vector<std::string>& targets) {
  std::vector<int> idx;
  for (const auto& t : targets) idx.push_back(l.index_of(t));
  return offsets_for(l, idx);
}

std::vector<std::size_t> rest_offsets(const Layout& l, const std::vector<std::string>& targets) {
  std::vector<int> idx;
  for (int i = 0; i < static_cast<int>(l.regs().size()); ++i)
    if (std::find(targets.begin(), targets.end(), l.regs()[i].name) == targets.end()) idx.push_back(i);
  return offsets_for(l, idx);
}

// ---------------------------------------------------------------- states

StateVector::StateVector(Layout l, CVec a) : layout(std::move(l)), amp(std::move(a)) {
  if (static_cast<std::size_t>(amp.size()) != layout.size())
    throw std::invalid_argument("StateVector: amplitude length does not match layout");
}

StateVector StateVector::basis(const Layout& l, std::size_t index) {
  check_dim(l.size(), "StateVector");
  CVec a = CVec::Zero(static_cast<Eigen::Index>(l.size()));
  a(static_cast<Eigen::Index>(index)) = 1.0;
  return StateVector(l, a);
}

void StateVector::normalize() {
  double n = amp.norm();
  if (!(n > 0.0)) throw std::domain_error("cannot normalize zero vector");
  amp /= n;
}

void StateVector::check_normalized(double eps) const {
  if (std::abs(amp.squaredNorm() - 1.0) > eps) throw std::domain_error("state not normalized");
}

DensityMatrix::DensityMatrix(Layout l, CMat r) : layout(std::move(l)), rho(std::move(r)) {
  if (static_cast<std::size_t>(rho.rows()) != layout.size() || rho.rows() != rho.cols())
    throw std::invalid_argument("DensityMatrix: shape does not match layout");
}

DensityMatrix DensityMatrix::from_pure(const StateVector& s) {
  return DensityMatrix(s.layout, s.amp * s.amp.adjoint());
}

void DensityMatrix::check_valid(double eps) const {
  if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > eps) throw std::domain_error("density not Hermitian");
  if (std::abs(rho.trace().real() - 1.0) > eps) throw std::domain_error("density trace != 1");
  Eigen::SelfAdjointEigenSolver<CMat> es(rho, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -eps) throw std::domain_error("density has negative eigenvalue");
}

StateVector tensor(const StateVector& a, const StateVector& b) {
  Layout l = a.layout.appended(b.layout.regs());
  check_dim(l.size(), "tensor");
  CVec out(static_cast<Eigen::Index>(l.size()));
  const Eigen::Index nb = b.amp.size();
  for (Eigen::Index i = 0; i < a.amp.size(); ++i) out.segment(i * nb, nb) = a.amp(i) * b.amp;
  return StateVector(l, out);
}

StateVector append_zero(const StateVector& s, const std::vector<Register>& extra) {
  Layout l = s.layout.appended(extra);
  check_dim(l.size(), "append_zero");
  const std::size_t block = l.size() / s.layout.size();
  CVec out = CVec::Zero(static_cast<Eigen::Index>(l.size()));
  for (Eigen::Index i = 0; i < s.amp.size(); ++i) out(i * block) = s.amp(i);
  return StateVector(l, out);
}

namespace {

void apply_blocks(StateVector& s, const CMat& op, const std::vector<std::string>& targets, bool parallel) {
  if (targets.empty()) {
    if (op.rows() != s.amp.size()) throw std::invalid_argument("apply_op: dimension mismatch");
    s.amp = op * s.amp;
    return;
  }
  const auto sub = sub_offsets(s.layout, targets);
  if (static_cast<std::size_t>(op.rows()) != sub.size() || op.cols() != op.rows())
    throw std::invalid_argument("apply_op: operator dimension does not match targets");
  const auto rest = rest_offsets(s.layout, targets);
  const Eigen::Index d = static_cast<Eigen::Index>(sub.size());
  const auto nb = static_cast<std::ptrdiff_t>(rest.size());
  // Blocks are disjoint, so each thread owns its slice of the amplitudes.
#pragma omp parallel if (parallel && nb >= 64 && s.amp.size() >= 4096)
  {
    CVec v(d), w(d);
#pragma omp for schedule(static)
    for (std::ptrdiff_t b = 0; b < nb; ++b) {
      const std::size_t base = rest[static_cast<std::size_t>(b)];
      for (Eigen::Index i = 0; i < d; ++i) v(i) = s.amp(static_cast<Eigen::Index>(base + sub[i]));
      w.noalias() = op * v;
      for (Eigen::Index i = 0; i < d; ++i) s.amp(static_cast<Eigen::Index>(base + sub[i])) = w(i);
    }
  }
}

}  // namespace

void apply_op(StateVector& s, const CMat& op, const std::vector<std::string>& targets) {
  apply_blocks(s, op, targets, true);
}

void apply_op_serial(StateVector& s, const CMat& op, const std::vector<std::string>& targets) {
  apply_blocks(s, op, targets, false);
}

void apply_op(DensityMatrix& dm, const CMat& op, const std::vector<std::string>& targets) {
  const Eigen::Index n = dm.rho.rows();
  StateVector col(dm.layout, CVec::Zero(n));
  for (Eigen::Index c = 0; c < n; ++c) {
    col.amp = dm.rho.col(c);
    apply_op(col, op, targets);
    dm.rho.col(c) = col.amp;
  }
  const CMat opc = op.conjugate();
  for (Eigen::Index r = 0; r < n; ++r) {
    col.amp = dm.rho.row(r).transpose();
    apply_op(col, opc, targets);
    dm.rho.row(r) = col.amp.transpose();
  }
}

StateVector apply_unitary(const StateVector& s, const CMat& u, const std::vector<std::string>& targets) {
  if (!is_unitary(u, tol::assertion)) throw std::invalid_argument("apply_unitary: operator is not unitary");
  StateVector out = s;
  apply_op(out, u, targets);
  return out;
}

void apply_permutation(StateVector& s, const std::vector<std::size_t>& perm) {
  if (perm.size() != static_cast<std::size_t>(s.amp.size())) throw std::invalid_argument("permutation size");
  CVec out = CVec::Zero(s.amp.size());
  for (std::size_t i = 0; i < perm.size(); ++i) out(static_cast<Eigen::Index>(perm[i])) += s.amp(static_cast<Eigen::Index>(i));
  s.amp.swap(out);
}

// ---------------------------------------------------------------- measurement

double projector_prob(const StateVector& s, const CMat& p, const std::vector<std::string>& targets) {
  StateVector t = s;
  apply_op(t, p, targets);
  return t.amp.squaredNorm();
}

Measurement measure_projective(const StateVector& s, const std::vector<CMat>& projectors,
                               const std::vector<std::string>& targets, Rng& rng) {
  if (projectors.empty()) throw std::invalid_argument("measure_projective: no projectors");
  const Eigen::Index d = projectors.front().rows();
  CMat sum = CMat::Zero(d, d);
  for (const auto& p : projectors) {
    if (p.rows() != d || p.cols() != d) throw std::invalid_argument("measure_projective: projector shapes differ");
    sum += p;
  }
  if ((sum - CMat::Identity(d, d)).cwiseAbs().maxCoeff() > tol::construction)
    throw std::invalid_argument("measure_projective: projectors do not resolve the identity");
  for (std::size_t i = 0; i < projectors.size(); ++i)
    for (std::size_t j = i + 1; j < projectors.size(); ++j)
      if ((projectors[i] * projectors[j]).cwiseAbs().maxCoeff() > tol::construction)
        throw std::invalid_argument("measure_projective: projectors not orthogonal");

  std::vector<StateVector> branches;
  std::vector<double> probs;
  for (const auto& p : projectors) {
    StateVector t = s;
    apply_op(t, p, targets);
    probs.push_back(t.amp.squaredNorm());
    branches.push_back(std::move(t));
  }
  const std::size_t k = sample_discrete(probs, rng);
  Measurement m;
  m.outcome = static_cast<int>(k);
  m.prob = probs[k] / std::accumulate(probs.begin(), probs.end(), 0.0);
  m.post = std::move(branches[k]);
  m.post.normalize();
  return m;
}

Measurement measure_projective(const StateVector& s, const std::vector<CMat>& projectors, Rng& rng) {
  return measure_projective(s, projectors, {}, rng);
}

Measurement measure_basis(const StateVector& s, const std::string& reg, Rng& rng) {
  const int r = s.layout.index_of(reg);
  std::vector<double> probs(s.layout.regs()[r].dim, 0.0);
  for (Eigen::Index i = 0; i < s.amp.size(); ++i)
    probs[s.layout.digit(static_cast<std::size_t>(i), r)] += std::norm(s.amp(i));
  const int v = static_cast<int>(sample_discrete(probs, rng));
  Measurement m;
  m.outcome = v;
  m.post = s;
  m.prob = project_basis(m.post, reg, v);
  return m;
}

double project_basis(StateVector& s, const std::string& reg, int value) {
  const int r = s.layout.index_of(reg);
  for (Eigen::Index i = 0; i < s.amp.size(); ++i)
    if (s.layout.digit(static_cast<std::size_t>(i), r) != value) s.amp(i) = 0.0;
  const double p = s.amp.squaredNorm();
  s.normalize();
  return p;
}

// ---------------------------------------------------------------- partial trace

namespace {
// Rows indexed by `keep` multi-index, columns by the complement.
CMat as_matrix(const StateVector& s, const std::vector<std::string>& keep) {
  const auto sub = sub_offsets(s.layout, keep);
  const auto rest = rest_offsets(s.layout, keep);
  CMat m(static_cast<Eigen::Index>(sub.size()), static_cast<Eigen::Index>(rest.size()));
  for (std::size_t j = 0; j < rest.size(); ++j)
    for (std::size_t i = 0; i < sub.size(); ++i)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = s.amp(static_cast<Eigen::Index>(sub[i] + rest[j]));
  return m;
}
}  // namespace

DensityMatrix partial_trace(const StateVector& s, const std::vector<std::string>& keep) {
  const CMat m = as_matrix(s, keep);
  return DensityMatrix(s.layout.only(keep), m * m.adjoint());
}

DensityMatrix partial_trace(const DensityMatrix& d, const std::vector<std::string>& keep) {
  const auto sub = sub_offsets(d.layout, keep);
  const auto rest = rest_offsets(d.layout, keep);
  const Eigen::Index n = static_cast<Eigen::Index>(sub.size());
  CMat out = CMat::Zero(n, n);
  for (std::size_t r : rest)
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        out(i, j) += d.rho(static_cast<Eigen::Index>(sub[i] + r), static_cast<Eigen::Index>(sub[j] + r));
  return DensityMatrix(d.layout.only(keep), out);
}

StateVector reorder(const StateVector& s, const std::vector<std::string>& order) {
  if (order.size() != s.layout.regs().size()) throw std::invalid_argument("reorder: must name every register");
  const auto sub = sub_offsets(s.layout, order);
  CVec out(s.amp.size());
  for (std::size_t i = 0; i < sub.size(); ++i) out(static_cast<Eigen::Index>(i)) = s.amp(static_cast<Eigen::Index>(sub[i]));
  return StateVector(s.layout.only(order), out);
}

StateVector discard_unravel(const StateVector& s, const std::vector<std::string>& drop, Rng& rng) {
  if (drop.empty()) return s;
  std::vector<std::string> keep;
  for (const auto& n : s.layout.names())
    if (std::find(drop.begin(), drop.end(), n) == drop.end()) keep.push_back(n);
  const CMat m = as_matrix(s, keep);  // keep x drop
  std::vector<double> w(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index j = 0; j < m.cols(); ++j) w[j] = m.col(j).squaredNorm();
  const auto j = static_cast<Eigen::Index>(sample_discrete(w, rng));
  StateVector out(s.layout.only(keep), m.col(j));
  out.normalize();
  return out;
}

StateVector discard_zero(const StateVector& s, const std::vector<std::string>& drop, double eps) {
  std::vector<std::string> keep;
  for (const auto& n : s.layout.names())
    if (std::find(drop.begin(), drop.end(), n) == drop.end()) keep.push_back(n);
  const CMat m = as_matrix(s, keep);
  const double lost = 1.0 - m.col(0).squaredNorm() / s.amp.squaredNorm();
  if (lost > eps) throw std::domain_error("discard_zero: registers not in |0>, weight " + std::to_string(lost));
  StateVector out(s.layout.only(keep), m.col(0));
  out.normalize();
  return out;
}

// ---------------------------------------------------------------- algorithms

int QuantumAlgorithm::ancilla_dim() const {
  int d = 1;
  for (int a : ancilla_dims) d *= a;
  return d;
}

void QuantumAlgorithm::validate() const {
  const Eigen::Index d = static_cast<Eigen::Index>(input_dim) * ancilla_dim();
  if (dilation.rows() != d || dilation.cols() != d) throw std::invalid_argument("dilation has wrong dimension");
  if (accept.rows() != d || accept.cols() != d) throw std::invalid_argument("accept projector has wrong dimension");
  if (!is_unitary(dilation)) throw std::invalid_argument("dilation is not unitary");
  if (!is_projector(accept)) throw std::invalid_argument("accept is not a projector");
}

CMat acceptance_operator(const QuantumAlgorithm& alg) {
  alg.validate();
  const int da = alg.ancilla_dim();
  const CMat g = alg.dilation.adjoint() * alg.accept * alg.dilation;
  CMat v(alg.input_dim, alg.input_dim);
  for (int i = 0; i < alg.input_dim; ++i)
    for (int j = 0; j < alg.input_dim; ++j) v(i, j) = g(i * da, j * da);
  return 0.5 * (v + v.adjoint());
}

// ---------------------------------------------------------------- linear algebra

void fix_phase(Eigen::Ref<CVec> v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > 1e-12) {
      v *= std::conj(v(i)) / std::abs(v(i));
      return;
    }
  }
}

Eigh eigh(const CMat& h) {
  Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (h + h.adjoint()));
  if (es.info() != Eigen::Success) throw std::runtime_error("eigh failed");
  Eigh out{es.eigenvalues(), es.eigenvectors()};
  for (Eigen::Index c = 0; c < out.vectors.cols(); ++c) fix_phase(out.vectors.col(c));
  return out;
}

double trace_distance(const CMat& a, const CMat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("trace_distance: shape mismatch");
  Eigen::SelfAdjointEigenSolver<CMat> es(a - b, Eigen::EigenvaluesOnly);
  return std::min(1.0, 0.5 * es.eigenvalues().cwiseAbs().sum());
}

double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
  if (!(a.layout == b.layout)) throw std::invalid_argument("trace_distance: layout mismatch");
  return trace_distance(a.rho, b.rho);
}

double trace_distance(const StateVector& a, const StateVector& b) {
  if (!(a.layout == b.layout)) throw std::invalid_argument("trace_distance: layout mismatch");
  const double ov = std::norm(a.amp.dot(b.amp)) / (a.amp.squaredNorm() * b.amp.squaredNorm());
  return std::sqrt(std::max(0.0, 1.0 - ov));
}

GoodBadSplit good_bad_decomposition(const DensityMatrix& rho, const CMat& accept, double gamma) {
  if (accept.rows() != rho.rho.rows()) throw std::invalid_argument("good_bad_decomposition: shape mismatch");
  const double acc = (rho.rho * accept).trace().real();
  if (acc < 1.0 - gamma - tol::construction)
    throw std::domain_error("good_bad_decomposition: acceptance " + std::to_string(acc) + " below 1-gamma");
  const Eigh e = eigh(rho.rho);
  const double thr = 1.0 - std::sqrt(gamma);
  const Eigen::Index n = rho.rho.rows();
  GoodBadSplit out;
  out.rho_good = CMat::Zero(n, n);
  out.rho_bad = CMat::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double w = e.values(j);
    if (w <= tol::construction) continue;
    const CVec v = e.vectors.col(j);
    const double a = (v.adjoint() * accept * v)(0).real();
    out.eigen_acceptance.push_back(a);
    if (a >= thr) {
      out.q_good += w;
      out.rho_good += w * v * v.adjoint();
    } else {
      out.q_bad += w;
      out.rho_bad += w * v * v.adjoint();
    }
  }
  if (out.q_good > 0) out.rho_good /= out.q_good;
  if (out.q_bad > 0) out.rho_bad /= out.q_bad;
  return out;
}

CMat haar_unitary(int d, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  CMat z(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) z(i, j) = cplx(g(rng), g(rng));
  Eigen::HouseholderQR<CMat> qr(z);
  CMat q = qr.householderQ();
  CMat r = qr.matrixQR();
  for (int j = 0; j < d; ++j) {
    const cplx rj = r(j, j);
    q.col(j) *= rj / std::abs(rj);
  }
  return q;
}

StateVector random_state(const Layout& l, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  CVec a(static_cast<Eigen::Index>(l.size()));
  for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = cplx(g(rng), g(rng));
  StateVector s(l, a);
  s.normalize();
  return s;
}

CMat kron(const CMat& a, const CMat& b) {
  CMat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

CMat outer(const CVec& a, const CVec& b) { return a * b.adjoint(); }

CMat projector_onto(const CVec& v) {
  const CVec u = v / v.norm();
  return u * u.adjoint();
}

bool is_unitary(const CMat& u, double eps) {
  if (u.rows() != u.cols()) return false;
  return (u.adjoint() * u - CMat::Identity(u.rows(), u.cols())).cwiseAbs().maxCoeff() <= eps;
}

bool is_projector(const CMat& p, double eps) {
  if (p.rows() != p.cols()) return false;
  return (p - p.adjoint()).cwiseAbs().maxCoeff() <= eps && (p * p - p).cwiseAbs().maxCoeff() <= eps;
}

}  // namespace wpv
