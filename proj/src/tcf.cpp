#include "wpv/tcf.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace wpv {

std::string to_string(TcfMode m) { return m == TcfMode::recovery ? "recovery" : "injective"; }
std::string to_string(TcfInstantiation i) { return i == TcfInstantiation::ideal ? "ideal" : "lattice"; }

std::int64_t mod_q(std::int64_t v, std::int64_t q) {
  const std::int64_t r = v % q;
  return r < 0 ? r + q : r;
}

std::int64_t centered(std::int64_t v, std::int64_t q) {
  const std::int64_t r = mod_q(v, q);
  return r > q / 2 ? r - q : r;
}

namespace {

bool is_prime(std::int64_t q) {
  if (q < 2) return false;
  for (std::int64_t d = 2; d * d <= q; ++d)
    if (q % d == 0) return false;
  return true;
}

ZVec mod_vec(const ZVec& v, std::int64_t q) {
  ZVec out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out(i) = mod_q(v(i), q);
  return out;
}

ZMat mod_mat(const ZMat& m, std::int64_t q) {
  ZMat out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out(i, j) = mod_q(m(i, j), q);
  return out;
}

ZVec centered_vec(const ZVec& v, std::int64_t q) {
  ZVec out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out(i) = centered(v(i), q);
  return out;
}

std::int64_t inf_norm(const ZVec& v) {
  std::int64_t m = 0;
  for (Eigen::Index i = 0; i < v.size(); ++i) m = std::max(m, std::abs(v(i)));
  return m;
}

double l2_norm(const ZVec& v) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += static_cast<double>(v(i)) * static_cast<double>(v(i));
  return std::sqrt(s);
}

std::int64_t ipow(std::int64_t b, int e) {
  std::int64_t r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

// Truncated discrete Gaussian on [-bound, bound] with width sigma, normalized.
std::vector<double> truncated_gaussian(int bound, double sigma) {
  std::vector<double> w(static_cast<std::size_t>(2 * bound + 1));
  double z = 0.0;
  for (int v = -bound; v <= bound; ++v) {
    const double p = sigma > 0.0 ? std::exp(-0.5 * v * v / (sigma * sigma)) : (v == 0 ? 1.0 : 0.0);
    w[static_cast<std::size_t>(v + bound)] = p;
    z += p;
  }
  for (double& p : w) p /= z;
  return w;
}

std::int64_t sample_trunc(int bound, double sigma, Rng& rng) {
  if (bound == 0) return 0;
  return static_cast<std::int64_t>(sample_discrete(truncated_gaussian(bound, sigma), rng)) - bound;
}

ZVec uniform_vec(Eigen::Index len, std::int64_t q, Rng& rng) {
  std::uniform_int_distribution<std::int64_t> d(0, q - 1);
  ZVec v(len);
  for (Eigen::Index i = 0; i < len; ++i) v(i) = d(rng);
  return v;
}

// Enumerates every d in Z_q^n (row-major digits).
template <class F>
void for_each_vec(int n, std::int64_t q, F&& f) {
  const std::int64_t total = ipow(q, n);
  if (total > (std::int64_t{1} << 24)) throw std::length_error("lattice enumeration budget exceeded");
  ZVec d(n);
  for (std::int64_t idx = 0; idx < total; ++idx) {
    std::int64_t t = idx;
    for (int i = n - 1; i >= 0; --i) {
      d(i) = t % q;
      t /= q;
    }
    f(d);
  }
}

// Closest-vector decode of y against A by enumeration; ties go to the smaller index.
Inversion decode_bruteforce(const ZMat& a, std::int64_t q, const ZVec& y) {
  Inversion best;
  double best_norm = std::numeric_limits<double>::infinity();
  for_each_vec(static_cast<int>(a.cols()), q, [&](const ZVec& x) {
    const ZVec e = centered_vec(y - a * x, q);
    const double nrm = l2_norm(e);
    if (nrm < best_norm - 1e-12) {
      best_norm = nrm;
      best.s = x;
      best.e = e;
    }
  });
  best.ok = true;
  return best;
}

// Full decode against the key (trapdoor when present); no norm check.
Inversion decode_key(const LatticeKey& k, const ZVec& y) {
  if (k.has_gadget) return invert_mp(k.gadget, k.params, y, std::numeric_limits<double>::infinity());
  return decode_bruteforce(k.a, k.params.q, y);
}

void require_lattice(const TcfKeypair& kp, const char* what) {
  if (kp.inst != TcfInstantiation::lattice) throw std::invalid_argument(std::string(what) + ": lattice keypair required");
}

}  // namespace

// ---------------------------------------------------------------- parameters

int LweParams::k() const { return static_cast<int>(std::ceil(std::log2(static_cast<double>(q)))); }

double LweParams::invert_bound() const {
  return static_cast<double>(q) / (c * std::sqrt(n * std::log2(static_cast<double>(q))));
}

double LweParams::b_prime_bound() const {
  return static_cast<double>(q) / (2.0 * c * std::sqrt(n * m * std::log2(static_cast<double>(q))));
}

double LweParams::recovery_lambda() const {
  if (b == 0) return std::numeric_limits<double>::infinity();
  return std::log2(b_prime / (2.0 * std::numbers::pi * m * b)) / recovery_lambda_mult;
}

std::vector<std::string> LweParams::violations() const {
  std::vector<std::string> v;
  if (!is_prime(q)) v.push_back("q is not prime");
  if (m < n * k()) v.push_back("m < n*k (no gadget trapdoor)");
  if (b_prime > b_prime_bound()) v.push_back("B' exceeds q/(2C sqrt(n m log q))");
  if (recovery_lambda() < 1.0) v.push_back("B/B' rule gives lambda' < 1");
  if (b < 0 || b_prime < 1 || b > b_prime) v.push_back("need 0 <= B <= B' and B' >= 1");
  return v;
}

LweParams LweParams::classical_fixture() { return LweParams{}; }

LweParams LweParams::quantum_micro(int b) {
  LweParams p;
  p.q = 13;
  p.n = 1;
  p.m = 1;
  p.b = b;
  p.b_prime = 2;
  return p;
}

double hellinger_sq(const LweParams& p) {
  return 1.0 - std::exp(-2.0 * std::numbers::pi * p.m * static_cast<double>(p.b) / p.b_prime);
}

double recovery_bound(const LweParams& p) {
  const double f = 1.0 - hellinger_sq(p);
  return std::sqrt(std::max(0.0, 1.0 - f * f));
}

// ---------------------------------------------------------------- trapdoor

ZMat gadget_matrix(int n, std::int64_t q) {
  const int k = static_cast<int>(std::ceil(std::log2(static_cast<double>(q))));
  ZMat g = ZMat::Zero(n * k, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < k; ++j) g(i * k + j, i) = mod_q(std::int64_t{1} << j, q);
  return g;
}

GadgetTrapdoor trapgen_mp(const LweParams& p, Rng& rng) {
  const int nk = p.n * p.k();
  const int mbar = p.m - nk;
  if (mbar < 0) throw std::invalid_argument("trapgen_mp: need m >= n*k");
  GadgetTrapdoor td;
  td.g = gadget_matrix(p.n, p.q);
  td.a_bar = ZMat(mbar, p.n);
  std::uniform_int_distribution<std::int64_t> uq(0, p.q - 1), bit(0, 1);
  for (int i = 0; i < mbar; ++i)
    for (int j = 0; j < p.n; ++j) td.a_bar(i, j) = uq(rng);
  td.r = ZMat(mbar, nk);
  for (int i = 0; i < mbar; ++i)
    for (int j = 0; j < nk; ++j) td.r(i, j) = bit(rng);
  td.t = ZMat::Identity(p.m, p.m);
  td.t_inv = ZMat::Identity(p.m, p.m);
  td.t.topRightCorner(mbar, nk) = -td.r;
  td.t_inv.topRightCorner(mbar, nk) = td.r;
  td.t = mod_mat(td.t, p.q);
  ZMat a_prime(p.m, p.n);
  a_prime << td.a_bar, td.g;
  td.a = mod_mat(td.t * a_prime, p.q);
  return td;
}

Inversion invert_mp(const GadgetTrapdoor& td, const LweParams& p, const ZVec& y, double bound) {
  if (y.size() != p.m) throw std::invalid_argument("invert_mp: y has wrong length");
  const int k = p.k(), nk = p.n * k;
  const ZVec z = mod_vec(td.t_inv * mod_vec(y, p.q), p.q);
  const ZVec zb = z.tail(nk);
  Inversion out;
  out.s = ZVec(p.n);
  // Per coordinate: closest point of {g * x} to the gadget block, by enumeration over Z_q.
  for (int i = 0; i < p.n; ++i) {
    std::int64_t best_x = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::int64_t x = 0; x < p.q; ++x) {
      double d = 0.0;
      for (int j = 0; j < k; ++j) {
        const double c = static_cast<double>(centered(zb(i * k + j) - td.g(i * k + j, i) * x, p.q));
        d += c * c;
      }
      if (d < best) {
        best = d;
        best_x = x;
      }
    }
    out.s(i) = best_x;
  }
  out.e = centered_vec(y - td.a * out.s, p.q);
  out.ok = l2_norm(out.e) <= bound;
  return out;
}

Inversion invert_mp(const GadgetTrapdoor& td, const LweParams& p, const ZVec& y) {
  return invert_mp(td, p, y, p.invert_bound());
}

InjectivityMargins injectivity_margins(const TcfKeypair& kp) {
  require_lattice(kp, "injectivity_margins");
  const auto& k = kp.lattice;
  InjectivityMargins out{std::numeric_limits<std::int64_t>::max(), std::numeric_limits<std::int64_t>::max()};
  for_each_vec(k.params.n, k.params.q, [&](const ZVec& d) {
    const ZVec ad = k.a * d;
    if (d.any()) out.lattice_min = std::min(out.lattice_min, inf_norm(centered_vec(ad, k.params.q)));
    out.offset_min = std::min(out.offset_min, inf_norm(centered_vec(k.u - ad, k.params.q)));
  });
  return out;
}

// ---------------------------------------------------------------- setup

TcfKeypair setup_ideal(int domain_bits, TcfMode mode, Rng& rng, int kappa) {
  if (domain_bits < 1) throw std::invalid_argument("setup_ideal: domain_bits must be >= 1");
  if (kappa < 1 || kappa > 16) throw std::invalid_argument("setup_ideal: kappa out of range");
  TcfKeypair kp;
  kp.mode = mode;
  kp.inst = TcfInstantiation::ideal;
  kp.domain_bits = domain_bits;
  kp.ideal.kappa = kappa;
  std::uniform_int_distribution<std::uint32_t> d(0, (1u << kappa) - 1);
  for (int i = 0; i < domain_bits; ++i) {
    std::uint32_t g0 = d(rng), g1 = d(rng);
    if (g0 == g1) g1 ^= 1u;  // distinct images per branch before recovery
    kp.ideal.g.push_back({g0, g1});
  }
  return kp;
}

TcfKeypair lattice_micro_key(const LweParams& params, const ZMat& a, const ZVec& s, const ZVec& e, int domain_bits) {
  if (a.rows() != params.m || a.cols() != params.n || s.size() != params.n || e.size() != params.m)
    throw std::invalid_argument("lattice_micro_key: dimension mismatch");
  TcfKeypair kp;
  kp.mode = TcfMode::recovery;
  kp.inst = TcfInstantiation::lattice;
  kp.domain_bits = domain_bits;
  auto& k = kp.lattice;
  k.params = params;
  k.a = mod_mat(a, params.q);
  k.s = mod_vec(s, params.q);
  k.e = centered_vec(e, params.q);
  k.u = mod_vec(k.a * k.s + k.e, params.q);
  return kp;
}

TcfKeypair setup_lattice(const LweParams& p, TcfMode mode, Rng& rng, int domain_bits) {
  if (domain_bits < 1) throw std::invalid_argument("setup_lattice: domain_bits must be >= 1");
  TcfKeypair kp;
  kp.mode = mode;
  kp.inst = TcfInstantiation::lattice;
  kp.domain_bits = domain_bits;
  auto& k = kp.lattice;
  k.params = p;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    if (p.m >= p.n * p.k()) {
      k.gadget = trapgen_mp(p, rng);
      k.a = k.gadget.a;
      k.has_gadget = true;
    } else {
      k.a = ZMat(p.m, p.n);
      for (int i = 0; i < p.m; ++i) k.a.row(i) = uniform_vec(p.n, p.q, rng).transpose();
      k.has_gadget = false;
    }
    if (mode == TcfMode::recovery) {
      k.s = uniform_vec(p.n, p.q, rng);
      k.e = ZVec(p.m);
      for (int i = 0; i < p.m; ++i) k.e(i) = sample_trunc(p.b, p.b / 3.0, rng);
      k.u = mod_vec(k.a * k.s + k.e, p.q);
      return kp;
    }
    // Injective: u must sit more than 2B' (l_inf) from every lattice point.
    k.u = uniform_vec(p.m, p.q, rng);
    InjectivityMargins mg = injectivity_margins(kp);
    if (mg.offset_min <= 2 * p.b_prime) {
      k.u = mod_vec(k.u + ZVec::Constant(p.m, p.q / 2), p.q);
      mg = injectivity_margins(kp);
    }
    if (mg.offset_min > 2 * p.b_prime && mg.lattice_min > 2 * p.b_prime) return kp;
  }
  throw std::runtime_error("setup_lattice: no injective key at these parameters");
}

// ---------------------------------------------------------------- classical evaluation

ZVec eval_lattice(const TcfKeypair& kp, int b, const LatticeRandom& r) {
  require_lattice(kp, "eval");
  const auto& k = kp.lattice;
  if (b != 0 && b != 1) throw std::invalid_argument("eval: input bit must be 0 or 1");
  if (r.x.size() != k.params.n || r.ep.size() != k.params.m) throw std::invalid_argument("eval: randomness shape");
  if (inf_norm(r.ep) > k.params.b_prime) throw std::invalid_argument("eval: out-of-support randomness");
  return mod_vec(k.a * r.x + b * k.u + r.ep, k.params.q);
}

LatticeRandom sample_lattice_random(const LweParams& p, Rng& rng) {
  LatticeRandom r{uniform_vec(p.n, p.q, rng), ZVec(p.m)};
  for (int i = 0; i < p.m; ++i) r.ep(i) = sample_trunc(p.b_prime, p.sigma(), rng);
  return r;
}

std::uint32_t eval_ideal(const TcfKeypair& kp, int bit, int b, std::uint32_t r) {
  if (kp.inst != TcfInstantiation::ideal) throw std::invalid_argument("eval_ideal: ideal keypair required");
  if (r >= (1u << kp.ideal.kappa)) throw std::invalid_argument("eval: out-of-support randomness");
  if (kp.mode == TcfMode::injective) return (static_cast<std::uint32_t>(b) << kp.ideal.kappa) | r;
  return r ^ kp.ideal.g.at(static_cast<std::size_t>(bit))[static_cast<std::size_t>(b)];
}

ExtResult ext_lattice(const TcfKeypair& kp, const ZVec& y) {
  require_lattice(kp, "ext");
  if (kp.mode != TcfMode::injective) throw std::invalid_argument("ext: injective keypair required");
  const auto& k = kp.lattice;
  const Inversion i0 = decode_key(k, y);
  if (inf_norm(i0.e) <= k.params.b_prime) return {true, 0};
  const Inversion i1 = decode_key(k, mod_vec(y - k.u, k.params.q));
  if (inf_norm(i1.e) <= k.params.b_prime) return {true, 1};
  return {false, 0};
}

ExtResult ext_ideal(const TcfKeypair& kp, std::uint32_t y) {
  if (kp.mode != TcfMode::injective) throw std::invalid_argument("ext: injective keypair required");
  if (y >= (2u << kp.ideal.kappa)) return {false, 0};
  return {true, static_cast<int>(y >> kp.ideal.kappa)};
}

// ---------------------------------------------------------------- register model

std::size_t rand_dim(const TcfKeypair& kp) {
  if (kp.inst == TcfInstantiation::ideal) return std::size_t{1} << kp.ideal.kappa;
  const auto& p = kp.lattice.params;
  const double d = std::pow(static_cast<double>(p.q), p.n + p.m);
  if (d > static_cast<double>(max_dim())) throw std::length_error("rand_dim: randomness register exceeds the dimension cap");
  return static_cast<std::size_t>(ipow(p.q, p.n + p.m));
}

std::size_t image_dim(const TcfKeypair& kp) {
  if (kp.inst == TcfInstantiation::ideal)
    return kp.mode == TcfMode::injective ? (std::size_t{2} << kp.ideal.kappa) : (std::size_t{1} << kp.ideal.kappa);
  return static_cast<std::size_t>(ipow(kp.lattice.params.q, kp.lattice.params.m));
}

namespace {

// r = (x, e') with x most significant; each coordinate in [0, q).
LatticeRandom split_rand(const LweParams& p, std::size_t r) {
  LatticeRandom out{ZVec(p.n), ZVec(p.m)};
  auto t = static_cast<std::int64_t>(r);
  for (int i = p.m - 1; i >= 0; --i) {
    out.ep(i) = centered(t % p.q, p.q);
    t /= p.q;
  }
  for (int i = p.n - 1; i >= 0; --i) {
    out.x(i) = t % p.q;
    t /= p.q;
  }
  return out;
}

std::size_t join_rand(const LweParams& p, const ZVec& x, const ZVec& ep) {
  std::int64_t idx = 0;
  for (int i = 0; i < p.n; ++i) idx = idx * p.q + mod_q(x(i), p.q);
  for (int i = 0; i < p.m; ++i) idx = idx * p.q + mod_q(ep(i), p.q);
  return static_cast<std::size_t>(idx);
}

std::size_t image_index(const LweParams& p, const ZVec& y) {
  std::int64_t idx = 0;
  for (int i = 0; i < p.m; ++i) idx = idx * p.q + mod_q(y(i), p.q);
  return static_cast<std::size_t>(idx);
}

ZVec image_vec(const LweParams& p, std::size_t y) {
  ZVec v(p.m);
  auto t = static_cast<std::int64_t>(y);
  for (int i = p.m - 1; i >= 0; --i) {
    v(i) = t % p.q;
    t /= p.q;
  }
  return v;
}

}  // namespace

CVec rand_amplitudes(const TcfKeypair& kp) {
  const std::size_t d = rand_dim(kp);
  CVec a = CVec::Zero(static_cast<Eigen::Index>(d));
  if (kp.inst == TcfInstantiation::ideal) {
    a.setConstant(1.0 / std::sqrt(static_cast<double>(d)));
    return a;
  }
  const auto& p = kp.lattice.params;
  const auto w = truncated_gaussian(p.b_prime, p.sigma());
  const double xnorm = 1.0 / static_cast<double>(ipow(p.q, p.n));
  for (std::size_t r = 0; r < d; ++r) {
    const LatticeRandom lr = split_rand(p, r);
    if (inf_norm(lr.ep) > p.b_prime) continue;
    double prob = xnorm;
    for (int i = 0; i < p.m; ++i) prob *= w[static_cast<std::size_t>(lr.ep(i) + p.b_prime)];
    a(static_cast<Eigen::Index>(r)) = std::sqrt(prob);
  }
  return a;
}

StateVector rand_superposition(const TcfKeypair& kp, const std::string& reg) {
  CVec a = rand_amplitudes(kp);
  StateVector s(Layout({{reg, static_cast<int>(a.size())}}), a);
  s.check_normalized(1e-9);
  return s;
}

long eval_index(const TcfKeypair& kp, int bit, int b, std::size_t r) {
  if (kp.inst == TcfInstantiation::ideal) {
    if (r >= rand_dim(kp)) return -1;
    return static_cast<long>(eval_ideal(kp, bit, b, static_cast<std::uint32_t>(r)));
  }
  const auto& p = kp.lattice.params;
  const LatticeRandom lr = split_rand(p, r);
  if (inf_norm(lr.ep) > p.b_prime) return -1;
  return static_cast<long>(image_index(p, eval_lattice(kp, b, lr)));
}

long recover_preimage(const TcfKeypair& kp, int bit, int b, std::size_t y) {
  if (kp.inst == TcfInstantiation::ideal) {
    if (kp.mode == TcfMode::injective) {
      if (static_cast<int>(y >> kp.ideal.kappa) != b) return -1;
      return static_cast<long>(y & ((std::size_t{1} << kp.ideal.kappa) - 1));
    }
    return static_cast<long>(y ^ kp.ideal.g.at(static_cast<std::size_t>(bit))[static_cast<std::size_t>(b)]);
  }
  const auto& k = kp.lattice;
  const Inversion inv = decode_key(k, image_vec(k.params, y));
  if (b == 0) return static_cast<long>(join_rand(k.params, inv.s, inv.e));
  // y = A x + u + e' = A (x + s) + (e + e'): shift the decoded pair by the setup secret.
  return static_cast<long>(join_rand(k.params, inv.s - k.s, inv.e - k.e));
}

std::size_t recover_shift(const TcfKeypair& kp, int bit, int b, std::size_t y, std::size_t r) {
  const long pre = recover_preimage(kp, bit, b, y);
  if (pre < 0) return r;
  if (kp.inst == TcfInstantiation::ideal) return r ^ static_cast<std::size_t>(pre);
  const auto& p = kp.lattice.params;
  const LatticeRandom a = split_rand(p, r), c = split_rand(p, static_cast<std::size_t>(pre));
  return join_rand(p, a.x - c.x, a.ep - c.ep);
}

std::size_t exp_measure(const TcfKeypair& kp, int bit, StateVector& s, const std::string& data_reg,
                        const std::string& rand_reg, Rng& rng) {
  if (s.layout.dim(data_reg) != 2) throw std::invalid_argument("exp_measure: data register must be a qubit");
  s = tensor(s, rand_superposition(kp, rand_reg));
  const int di = s.layout.index_of(data_reg), ri = s.layout.index_of(rand_reg);
  std::vector<double> py(image_dim(kp), 0.0);
  std::vector<long> ys(s.layout.size());
  for (std::size_t i = 0; i < s.layout.size(); ++i) {
    ys[i] = eval_index(kp, bit, s.layout.digit(i, di), static_cast<std::size_t>(s.layout.digit(i, ri)));
    if (ys[i] >= 0) py[static_cast<std::size_t>(ys[i])] += std::norm(s.amp(static_cast<Eigen::Index>(i)));
  }
  const std::size_t y = sample_discrete(py, rng);
  for (std::size_t i = 0; i < s.layout.size(); ++i)
    if (ys[i] != static_cast<long>(y)) s.amp(static_cast<Eigen::Index>(i)) = 0.0;
  s.normalize();
  return y;
}

void recover(const TcfKeypair& kp, int bit, StateVector& s, const std::string& data_reg, const std::string& rand_reg,
             std::size_t y) {
  if (kp.mode != TcfMode::recovery) throw std::invalid_argument("recover: recovery keypair required");
  const int di = s.layout.index_of(data_reg), ri = s.layout.index_of(rand_reg);
  const std::size_t rs = s.layout.stride(ri);
  std::array<std::vector<std::size_t>, 2> shift;
  for (int b = 0; b < 2; ++b) {
    shift[b].resize(rand_dim(kp));
    for (std::size_t r = 0; r < shift[b].size(); ++r) shift[b][r] = recover_shift(kp, bit, b, y, r);
  }
  std::vector<std::size_t> perm(s.layout.size());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    const int b = s.layout.digit(i, di);
    const auto r = static_cast<std::size_t>(s.layout.digit(i, ri));
    perm[i] = i - r * rs + shift[b][r] * rs;
  }
  apply_permutation(s, perm);
}

// ---------------------------------------------------------------- Gram channels

CMat BitChannel::g_post_total() const {
  CMat t = CMat::Zero(2, 2);
  for (const auto& g : g_post) t += g;
  return t;
}

CMat BitChannel::g_pre_total() const {
  CMat t = CMat::Zero(2, 2);
  for (const auto& g : g_pre) t += g;
  return t;
}

BitChannel bit_channel(const TcfKeypair& kp, int bit) {
  const std::size_t dr = rand_dim(kp), dy = image_dim(kp);
  const CVec amp = rand_amplitudes(kp);
  // psi[b][y] = amplitudes of r with f(b; r) = y.
  std::vector<std::vector<CVec>> psi(2, std::vector<CVec>(dy, CVec::Zero(static_cast<Eigen::Index>(dr))));
  for (int b = 0; b < 2; ++b)
    for (std::size_t r = 0; r < dr; ++r) {
      const long y = eval_index(kp, bit, b, r);
      if (y >= 0) psi[b][static_cast<std::size_t>(y)](static_cast<Eigen::Index>(r)) = amp(static_cast<Eigen::Index>(r));
    }
  BitChannel ch;
  ch.likelihood.resize(dy);
  ch.g_pre.assign(dy, CMat::Zero(2, 2));
  ch.g_post.assign(dy, CMat::Zero(2, 2));
  for (std::size_t y = 0; y < dy; ++y) {
    std::array<CVec, 2> phi;
    for (int b = 0; b < 2; ++b) {
      ch.likelihood[y][b] = psi[b][y].squaredNorm();
      phi[b] = CVec::Zero(static_cast<Eigen::Index>(dr));
      if (kp.mode == TcfMode::recovery && ch.likelihood[y][b] > 0.0)
        for (std::size_t r = 0; r < dr; ++r)
          phi[b](static_cast<Eigen::Index>(recover_shift(kp, bit, b, y, r))) = psi[b][y](static_cast<Eigen::Index>(r));
      else
        phi[b] = psi[b][y];
    }
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c) {
        ch.g_pre[y](b, c) = psi[c][y].dot(psi[b][y]);
        ch.g_post[y](b, c) = phi[c].dot(phi[b]);
      }
  }
  return ch;
}

DensityMatrix recover_exp_channel(const TcfKeypair& kp, const DensityMatrix& rho, const std::vector<std::string>& bits) {
  DensityMatrix out = rho;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    const CMat g = bit_channel(kp, static_cast<int>(i)).g_post_total();
    const int ri = out.layout.index_of(bits[i]);
    if (out.layout.regs()[ri].dim != 2) throw std::invalid_argument("recover_exp_channel: data registers must be qubits");
    for (Eigen::Index a = 0; a < out.rho.rows(); ++a)
      for (Eigen::Index c = 0; c < out.rho.cols(); ++c)
        out.rho(a, c) *= g(out.layout.digit(static_cast<std::size_t>(a), ri), out.layout.digit(static_cast<std::size_t>(c), ri));
  }
  return out;
}

double channel_test(const TcfKeypair& kp, const std::vector<CMat>& ux, bool measure_a) {
  if (kp.mode != TcfMode::recovery) throw std::invalid_argument("channel_test: recovery keypair required");
  const int nb = kp.domain_bits;
  const int dx = 1 << nb;
  if (static_cast<int>(ux.size()) != dx) throw std::invalid_argument("channel_test: need one U_x per input");
  const int da = static_cast<int>(ux[0].rows());
  const int dd = da * dx;
  // Controlled unitary over (A, B_0..B_{n-1}).
  CMat u = CMat::Zero(dd, dd);
  for (int x = 0; x < dx; ++x) {
    if (!is_unitary(ux[static_cast<std::size_t>(x)], 1e-9)) throw std::invalid_argument("channel_test: U_x not unitary");
    u += kron(ux[static_cast<std::size_t>(x)], projector_onto(CVec::Unit(dx, x)));
  }
  std::vector<Register> regs{{"A", da}};
  std::vector<std::string> data, rands, ab{"A"};
  for (int i = 0; i < nb; ++i) {
    data.push_back("B" + std::to_string(i));
    rands.push_back("R" + std::to_string(i));
    regs.push_back({data.back(), 2});
    ab.push_back(data.back());
  }
  regs.push_back({"REF", dd});
  const Layout probe_layout(regs);
  auto dephase_a = [&](CMat& rho, const Layout& l) {
    const int ai = l.index_of("A");
    for (Eigen::Index i = 0; i < rho.rows(); ++i)
      for (Eigen::Index j = 0; j < rho.cols(); ++j)
        if (l.digit(static_cast<std::size_t>(i), ai) != l.digit(static_cast<std::size_t>(j), ai)) rho(i, j) = 0.0;
  };

  const std::size_t dy = image_dim(kp);
  std::size_t ny = 1;
  for (int i = 0; i < nb; ++i) ny *= dy;
  double worst = 0.0;
  // Generalized Bell basis: (X^a Z^b on AB) |Phi>.
  for (int xa = 0; xa < dd; ++xa)
    for (int zb = 0; zb < dd; ++zb) {
      CVec phi = CVec::Zero(static_cast<Eigen::Index>(probe_layout.size()));
      for (int i = 0; i < dd; ++i) {
        const double ang = 2.0 * std::numbers::pi * zb * i / dd;
        phi(static_cast<Eigen::Index>(((i + xa) % dd) * dd + i)) = std::polar(1.0 / std::sqrt(dd), ang);
      }
      StateVector probe(probe_layout, phi);
      StateVector ideal = apply_unitary(probe, u, ab);
      CMat want = DensityMatrix::from_pure(ideal).rho;
      if (measure_a) dephase_a(want, probe_layout);

      StateVector full = probe;
      for (int i = 0; i < nb; ++i) full = tensor(full, rand_superposition(kp, rands[static_cast<std::size_t>(i)]));
      check_dim(full.layout.size(), "channel_test");
      std::vector<int> bi, ri;
      for (int i = 0; i < nb; ++i) {
        bi.push_back(full.layout.index_of(data[static_cast<std::size_t>(i)]));
        ri.push_back(full.layout.index_of(rands[static_cast<std::size_t>(i)]));
      }
      std::vector<std::size_t> yidx(full.layout.size(), 0);
      std::vector<bool> valid(full.layout.size(), true);
      for (std::size_t k = 0; k < full.layout.size(); ++k) {
        std::size_t code = 0;
        for (int i = 0; i < nb; ++i) {
          const long y = eval_index(kp, i, full.layout.digit(k, bi[i]), static_cast<std::size_t>(full.layout.digit(k, ri[i])));
          if (y < 0) valid[k] = false;
          code = code * dy + static_cast<std::size_t>(std::max(0L, y));
        }
        yidx[k] = code;
      }
      CMat got = CMat::Zero(want.rows(), want.cols());
      for (std::size_t code = 0; code < ny; ++code) {
        StateVector branch = full;
        bool any = false;
        for (std::size_t k = 0; k < full.layout.size(); ++k) {
          if (!valid[k] || yidx[k] != code) branch.amp(static_cast<Eigen::Index>(k)) = 0.0;
          else if (std::norm(branch.amp(static_cast<Eigen::Index>(k))) > 0.0) any = true;
        }
        if (!any) continue;
        branch = apply_unitary(branch, u, ab);
        std::size_t rem = code;
        std::vector<std::size_t> ys(static_cast<std::size_t>(nb));
        for (int i = nb - 1; i >= 0; --i) {
          ys[static_cast<std::size_t>(i)] = rem % dy;
          rem /= dy;
        }
        for (int i = 0; i < nb; ++i)
          recover(kp, i, branch, data[static_cast<std::size_t>(i)], rands[static_cast<std::size_t>(i)], ys[static_cast<std::size_t>(i)]);
        CMat part = partial_trace(branch, probe_layout.names()).rho;
        if (measure_a) dephase_a(part, probe_layout);
        got += part;
      }
      worst = std::max(worst, trace_distance(got, want));
    }
  return worst;
}

std::vector<Preimage> exhaustive_preimage_oracle(const TcfKeypair& kp, int bit, std::size_t y) {
  std::size_t dr = 0;
  try {
    dr = rand_dim(kp);
  } catch (const std::length_error&) {
    throw std::length_error("exhaustive_preimage_oracle: enumeration budget exceeded");
  }
  if (2 * dr > (std::size_t{1} << 24)) throw std::length_error("exhaustive_preimage_oracle: enumeration budget exceeded");
  std::vector<Preimage> out;
  for (int b = 0; b < 2; ++b)
    for (std::size_t r = 0; r < dr; ++r)
      if (eval_index(kp, bit, b, r) == static_cast<long>(y)) out.push_back({b, r});
  return out;
}

// ---------------------------------------------------------------- serialization

namespace {

void put_u64(std::ostream& os, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u32(std::ostream& os, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xff));
}
std::uint64_t get_u64(std::istream& is) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    const int c = is.get();
    if (c == EOF) throw std::runtime_error("read_keypair: truncated input");
    v |= static_cast<std::uint64_t>(c & 0xff) << (8 * i);
  }
  return v;
}
std::uint32_t get_u32(std::istream& is) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    const int c = is.get();
    if (c == EOF) throw std::runtime_error("read_keypair: truncated input");
    v |= static_cast<std::uint32_t>(c & 0xff) << (8 * i);
  }
  return v;
}

void put_mat(std::ostream& os, const ZMat& m, std::int64_t q) {
  put_u64(os, static_cast<std::uint64_t>(m.rows()));
  put_u64(os, static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) put_u32(os, static_cast<std::uint32_t>(q > 0 ? mod_q(m(i, j), q) : m(i, j)));
}

ZMat get_mat(std::istream& is, std::int64_t q) {
  const auto r = static_cast<Eigen::Index>(get_u64(is)), c = static_cast<Eigen::Index>(get_u64(is));
  if (r > (1 << 20) || c > (1 << 20)) throw std::runtime_error("read_keypair: implausible dimensions");
  ZMat m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) {
      const std::int64_t v = get_u32(is);
      m(i, j) = q > 0 ? centered(v, q) : v;
    }
  return m;
}

}  // namespace

// Layout: header (1 x 11, u32), then A, u, A_bar, R, s, e (mod q) and the ideal tables.
void write_keypair(std::ostream& os, const TcfKeypair& kp) {
  const auto& k = kp.lattice;
  ZMat hdr(1, 11);
  hdr << static_cast<int>(kp.mode), static_cast<int>(kp.inst), kp.domain_bits, kp.ideal.kappa, k.params.q, k.params.n,
      k.params.m, k.params.b, k.params.b_prime, k.has_gadget ? 1 : 0, k.params.recovery_lambda_mult;
  put_mat(os, hdr, 0);
  const std::int64_t q = k.params.q;
  put_mat(os, k.a, q);
  put_mat(os, k.u, q);
  put_mat(os, k.has_gadget ? k.gadget.a_bar : ZMat(0, 0), q);
  put_mat(os, k.has_gadget ? k.gadget.r : ZMat(0, 0), q);
  put_mat(os, k.s, q);
  put_mat(os, k.e, q);
  ZMat g(static_cast<Eigen::Index>(kp.ideal.g.size()), 2);
  for (std::size_t i = 0; i < kp.ideal.g.size(); ++i) {
    g(static_cast<Eigen::Index>(i), 0) = kp.ideal.g[i][0];
    g(static_cast<Eigen::Index>(i), 1) = kp.ideal.g[i][1];
  }
  put_mat(os, g, 0);
}

TcfKeypair read_keypair(std::istream& is) {
  const ZMat hdr = get_mat(is, 0);
  if (hdr.rows() != 1 || hdr.cols() != 11) throw std::runtime_error("read_keypair: bad header");
  TcfKeypair kp;
  kp.mode = static_cast<TcfMode>(hdr(0, 0));
  kp.inst = static_cast<TcfInstantiation>(hdr(0, 1));
  kp.domain_bits = static_cast<int>(hdr(0, 2));
  kp.ideal.kappa = static_cast<int>(hdr(0, 3));
  auto& k = kp.lattice;
  k.params.q = hdr(0, 4);
  k.params.n = static_cast<int>(hdr(0, 5));
  k.params.m = static_cast<int>(hdr(0, 6));
  k.params.b = static_cast<int>(hdr(0, 7));
  k.params.b_prime = static_cast<int>(hdr(0, 8));
  k.has_gadget = hdr(0, 9) != 0;
  k.params.recovery_lambda_mult = static_cast<int>(hdr(0, 10));
  const std::int64_t q = k.params.q;
  k.a = mod_mat(get_mat(is, q), q);
  k.u = mod_mat(get_mat(is, q), q);
  const ZMat a_bar = mod_mat(get_mat(is, q), q);
  const ZMat r = mod_mat(get_mat(is, q), q);
  k.s = mod_mat(get_mat(is, q), q);
  k.e = get_mat(is, q);
  const ZMat g = get_mat(is, 0);
  for (Eigen::Index i = 0; i < g.rows(); ++i)
    kp.ideal.g.push_back({static_cast<std::uint32_t>(g(i, 0)), static_cast<std::uint32_t>(g(i, 1))});
  if (k.has_gadget) {
    auto& td = k.gadget;
    const int nk = k.params.n * k.params.k(), mbar = k.params.m - nk;
    td.a_bar = a_bar;
    td.r = r;
    td.g = gadget_matrix(k.params.n, q);
    td.t = ZMat::Identity(k.params.m, k.params.m);
    td.t_inv = ZMat::Identity(k.params.m, k.params.m);
    td.t.topRightCorner(mbar, nk) = -r;
    td.t_inv.topRightCorner(mbar, nk) = r;
    td.t = mod_mat(td.t, q);
    td.a = k.a;
  }
  return kp;
}

}  // namespace wpv
