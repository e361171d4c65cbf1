#include "wpv/spa_np.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <sstream>
#include <stdexcept>

namespace wpv {

// ---------------------------------------------------------------- graphs

void Graph::validate() const {
  if (vertices < 1) throw std::invalid_argument("graph: need at least one vertex");
  if (edges.empty()) throw std::invalid_argument("graph: need at least one edge");
  for (const auto& [u, v] : edges) {
    if (u == v) throw std::invalid_argument("graph: self-loop");
    if (u < 0 || v < 0 || u >= vertices || v >= vertices) throw std::invalid_argument("graph: edge out of range");
  }
}

Graph Graph::parse(std::istream& is) {
  Graph g;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto h = line.find('#'); h != std::string::npos) line.resize(h);
    std::istringstream ls(line);
    int u = 0, v = 0;
    if (!(ls >> u)) continue;
    if (!(ls >> v)) throw std::invalid_argument("graph: malformed edge on line " + std::to_string(lineno));
    g.edges.emplace_back(u, v);
    g.vertices = std::max({g.vertices, u + 1, v + 1});
  }
  g.validate();
  return g;
}

std::string Graph::to_edge_list() const {
  std::ostringstream os;
  for (const auto& [u, v] : edges) os << u << ' ' << v << '\n';
  return os.str();
}

Graph Graph::complete(int n) {
  Graph g;
  g.vertices = n;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) g.edges.emplace_back(i, j);
  return g;
}

Graph Graph::path(int n) {
  Graph g;
  g.vertices = n;
  for (int i = 0; i + 1 < n; ++i) g.edges.emplace_back(i, i + 1);
  return g;
}

bool valid_coloring(const Graph& g, const std::vector<int>& c) {
  if (static_cast<int>(c.size()) != g.vertices) return false;
  for (int x : c)
    if (x < 0 || x > 2) return false;
  for (const auto& [u, v] : g.edges)
    if (c[static_cast<std::size_t>(u)] == c[static_cast<std::size_t>(v)]) return false;
  return true;
}

std::vector<std::vector<int>> valid_colorings(const Graph& g) {
  std::vector<std::vector<int>> out;
  std::vector<int> c(static_cast<std::size_t>(g.vertices), 0);
  const long total = static_cast<long>(std::pow(3, g.vertices));
  for (long idx = 0; idx < total; ++idx) {
    long t = idx;
    for (int i = g.vertices - 1; i >= 0; --i) {
      c[static_cast<std::size_t>(i)] = static_cast<int>(t % 3);
      t /= 3;
    }
    if (valid_coloring(g, c)) out.push_back(c);
  }
  return out;
}

const std::vector<std::array<int, 3>>& s3() {
  static const std::vector<std::array<int, 3>> perms = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  return perms;
}

int unique_permutation(int wi, int wj, int ci, int cj) {
  if (wi == wj || ci == cj) return -1;
  for (int p = 0; p < 6; ++p) {
    const auto& pi = s3()[static_cast<std::size_t>(p)];
    if (pi[static_cast<std::size_t>(wi)] == ci && pi[static_cast<std::size_t>(wj)] == cj) return p;
  }
  return -1;
}

std::vector<std::string> witness_registers(const Graph& g) {
  std::vector<std::string> out;
  for (int i = 0; i < g.vertices; ++i) out.push_back("W" + std::to_string(i));
  return out;
}

StateVector coloring_superposition(const Graph& g, const std::vector<std::vector<int>>& colorings,
                                   const std::vector<cplx>& amplitudes) {
  if (colorings.empty()) throw std::invalid_argument("coloring_superposition: no colorings");
  if (!amplitudes.empty() && amplitudes.size() != colorings.size())
    throw std::invalid_argument("coloring_superposition: amplitude count mismatch");
  std::vector<Register> regs;
  for (const auto& n : witness_registers(g)) regs.push_back({n, 3});
  Layout l(regs);
  check_dim(l.size(), "coloring_superposition");
  CVec a = CVec::Zero(static_cast<Eigen::Index>(l.size()));
  for (std::size_t k = 0; k < colorings.size(); ++k) {
    std::size_t idx = 0;
    for (int c : colorings[k]) {
      if (c < 0 || c > 2) throw std::invalid_argument("coloring_superposition: color out of range");
      idx = idx * 3 + static_cast<std::size_t>(c);
    }
    a(static_cast<Eigen::Index>(idx)) += amplitudes.empty() ? cplx(1.0) : amplitudes[k];
  }
  StateVector s(l, a);
  s.normalize();
  return s;
}

nlohmann::json SpaTranscript::to_json() const {
  nlohmann::json ys = nlohmann::json::array();
  for (const auto& v : y) ys.push_back({v[0], v[1]});
  return {{"y", ys},
          {"edge", {i, j}},
          {"opening", {{"ci", ci}, {"cj", cj}, {"ri", {ri[0], ri[1]}}, {"rj", {rj[0], rj[1]}}}},
          {"verdict", accept ? "Accept" : "Reject"},
          {"td_revealed", td_revealed}};
}

// ---------------------------------------------------------------- keys

namespace {
int color_bit(int c, int bit) { return bit == 0 ? (c >> 1) & 1 : c & 1; }
}  // namespace

SpaKeys::SpaKeys(TcfKeypair kp) : kp_(std::move(kp)) {
  if (kp_.mode != TcfMode::recovery) throw std::invalid_argument("SpaKeys: recovery-mode keypair required");
  if (kp_.inst == TcfInstantiation::ideal && kp_.domain_bits < 2)
    throw std::invalid_argument("SpaKeys: colors need a two-bit domain");
  ch_ = {bit_channel(kp_, 0), bit_channel(kp_, 1)};
  amp_ = rand_amplitudes(kp_);
}

std::size_t SpaKeys::sample_opening(int bit, int b, std::size_t y, Rng& rng) const {
  std::vector<double> w(static_cast<std::size_t>(amp_.size()), 0.0);
  for (std::size_t r = 0; r < w.size(); ++r)
    if (eval_index(kp_, bit, b, r) == static_cast<long>(y)) w[r] = std::norm(amp_(static_cast<Eigen::Index>(r)));
  return sample_discrete(w, rng);
}

// ---------------------------------------------------------------- sessions

SpaSession::SpaSession(const Graph& g, const SpaKeys& keys, std::string tag) : g_(g), keys_(keys), preg_("P_" + tag) {
  g_.validate();
}

namespace {

// Committed color of vertex k at basis index x: pi(w_k).
int committed(const Layout& l, std::size_t x, int wk, int pk) {
  return s3()[static_cast<std::size_t>(l.digit(x, pk))][static_cast<std::size_t>(l.digit(x, wk))];
}

}  // namespace

void SpaSession::begin(DensityMatrix& rho) {
  for (const auto& w : witness_registers(g_))
    if (rho.layout.dim(w) != 3) throw std::invalid_argument("spa: witness slots must have dimension 3");
  const Layout l = rho.layout.appended({{preg_, 6}});
  check_dim(l.size(), "spa session");
  rho = DensityMatrix(l, kron(rho.rho, CMat::Constant(6, 6, 1.0 / 6.0)));
  weight_.resize(l.size());
  for (std::size_t x = 0; x < l.size(); ++x) weight_[x] = std::max(0.0, rho.rho(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(x)).real());
  t_ = SpaTranscript{};
}

void SpaSession::commit(DensityMatrix& rho, Rng& rng) {
  const Layout& l = rho.layout;
  const int pk = l.index_of(preg_);
  t_.y.assign(static_cast<std::size_t>(g_.vertices), {0, 0});
  for (int k = 0; k < g_.vertices; ++k) {
    const int wk = l.index_of("W" + std::to_string(k));
    std::vector<double> pc(3, 0.0);
    for (std::size_t x = 0; x < l.size(); ++x) pc[static_cast<std::size_t>(committed(l, x, wk, pk))] += weight_[x];
    const int c = static_cast<int>(sample_discrete(pc, rng));
    std::array<std::size_t, 2> y{};
    for (int bit = 0; bit < 2; ++bit) {
      const auto& lik = keys_.channel(bit).likelihood;
      std::vector<double> py(lik.size());
      for (std::size_t v = 0; v < lik.size(); ++v) py[v] = lik[v][static_cast<std::size_t>(color_bit(c, bit))];
      y[static_cast<std::size_t>(bit)] = sample_discrete(py, rng);
    }
    t_.y[static_cast<std::size_t>(k)] = y;
    double z = 0.0;
    for (std::size_t x = 0; x < l.size(); ++x) {
      const int cx = committed(l, x, wk, pk);
      weight_[x] *= keys_.channel(0).likelihood[y[0]][static_cast<std::size_t>(color_bit(cx, 0))] *
                    keys_.channel(1).likelihood[y[1]][static_cast<std::size_t>(color_bit(cx, 1))];
      z += weight_[x];
    }
    for (double& w : weight_) w /= z;
  }
}

void SpaSession::challenge(Rng& rng, std::optional<int> forced_edge) {
  const int ne = static_cast<int>(g_.edges.size());
  if (forced_edge) {
    if (*forced_edge < 0 || *forced_edge >= ne) throw std::invalid_argument("spa: forced edge out of range");
    t_.edge = *forced_edge;
  } else {
    t_.edge = std::uniform_int_distribution<int>(0, ne - 1)(rng);
  }
  t_.i = g_.edges[static_cast<std::size_t>(t_.edge)].first;
  t_.j = g_.edges[static_cast<std::size_t>(t_.edge)].second;
}

void SpaSession::open(DensityMatrix& rho, Rng& rng) {
  const Layout& l = rho.layout;
  const int pk = l.index_of(preg_);
  const int wi = l.index_of("W" + std::to_string(t_.i)), wj = l.index_of("W" + std::to_string(t_.j));
  std::vector<double> pc(9, 0.0);
  for (std::size_t x = 0; x < l.size(); ++x)
    pc[static_cast<std::size_t>(committed(l, x, wi, pk) * 3 + committed(l, x, wj, pk))] += weight_[x];
  const auto cc = static_cast<int>(sample_discrete(pc, rng));
  t_.ci = cc / 3;
  t_.cj = cc % 3;
  for (int bit = 0; bit < 2; ++bit) {
    t_.ri[static_cast<std::size_t>(bit)] =
        keys_.sample_opening(bit, color_bit(t_.ci, bit), t_.y[static_cast<std::size_t>(t_.i)][static_cast<std::size_t>(bit)], rng);
    t_.rj[static_cast<std::size_t>(bit)] =
        keys_.sample_opening(bit, color_bit(t_.cj, bit), t_.y[static_cast<std::size_t>(t_.j)][static_cast<std::size_t>(bit)], rng);
  }
  // Verifier: distinct colors and consistent images.
  bool ok = t_.ci != t_.cj;
  for (int bit = 0; bit < 2 && ok; ++bit) {
    const auto b = static_cast<std::size_t>(bit);
    ok = eval_index(keys_.keypair(), bit, color_bit(t_.ci, bit), t_.ri[b]) == static_cast<long>(t_.y[static_cast<std::size_t>(t_.i)][b]) &&
         eval_index(keys_.keypair(), bit, color_bit(t_.cj, bit), t_.rj[b]) == static_cast<long>(t_.y[static_cast<std::size_t>(t_.j)][b]);
  }
  t_.accept = ok;
  t_.td_revealed = ok;
}

void SpaSession::finish(DensityMatrix& rho) {
  const Layout& l = rho.layout;
  const int pk = l.index_of(preg_);
  const auto n = static_cast<std::size_t>(g_.vertices);
  std::vector<int> wreg(n);
  for (std::size_t k = 0; k < n; ++k) wreg[k] = l.index_of("W" + std::to_string(k));

  // Per vertex 3x3 color factor: the recovered Gram on accept, the bare one otherwise.
  std::vector<CMat> f(n, CMat::Zero(3, 3));
  for (std::size_t k = 0; k < n; ++k) {
    const auto& y = t_.y[k];
    const CMat& g0 = t_.accept ? keys_.channel(0).g_post[y[0]] : keys_.channel(0).g_pre[y[0]];
    const CMat& g1 = t_.accept ? keys_.channel(1).g_post[y[1]] : keys_.channel(1).g_pre[y[1]];
    for (int c = 0; c < 3; ++c)
      for (int d = 0; d < 3; ++d) f[k](c, d) = g0(color_bit(c, 0), color_bit(d, 0)) * g1(color_bit(c, 1), color_bit(d, 1));
  }
  const auto ii = static_cast<std::size_t>(t_.i), jj = static_cast<std::size_t>(t_.j);
  std::vector<std::vector<int>> code(l.size(), std::vector<int>(n));
  std::vector<bool> opened_ok(l.size());
  for (std::size_t x = 0; x < l.size(); ++x) {
    for (std::size_t k = 0; k < n; ++k) code[x][k] = committed(l, x, wreg[k], pk);
    opened_ok[x] = code[x][ii] == t_.ci && code[x][jj] == t_.cj;
  }
  for (Eigen::Index a = 0; a < rho.rho.rows(); ++a)
    for (Eigen::Index b = 0; b < rho.rho.cols(); ++b) {
      const auto xa = static_cast<std::size_t>(a), xb = static_cast<std::size_t>(b);
      if (!opened_ok[xa] || !opened_ok[xb]) {
        rho.rho(a, b) = 0.0;
        continue;
      }
      cplx fac = 1.0;
      for (std::size_t k = 0; k < n; ++k) fac *= f[k](code[xa][k], code[xb][k]);
      rho.rho(a, b) *= fac;
    }
  const double tr = rho.rho.trace().real();
  if (tr <= 0.0) throw std::runtime_error("spa: opening has zero probability");
  rho.rho /= tr;

  if (t_.accept) {
    // |w, pi_{c,w}> <-> |w, id>.
    std::vector<std::size_t> perm(l.size());
    const std::size_t ps = l.stride(pk);
    for (std::size_t x = 0; x < l.size(); ++x) {
      perm[x] = x;
      const int p = l.digit(x, pk);
      const int target = unique_permutation(l.digit(x, wreg[ii]), l.digit(x, wreg[jj]), t_.ci, t_.cj);
      if (target <= 0) continue;
      if (p == target) perm[x] = x - static_cast<std::size_t>(p) * ps;
      else if (p == 0) perm[x] = x + static_cast<std::size_t>(target) * ps;
    }
    CMat out(rho.rho.rows(), rho.rho.cols());
    for (std::size_t a = 0; a < perm.size(); ++a)
      for (std::size_t b = 0; b < perm.size(); ++b)
        out(static_cast<Eigen::Index>(perm[a]), static_cast<Eigen::Index>(perm[b])) = rho.rho(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
    rho.rho.swap(out);
  }
  std::vector<std::string> keep;
  for (const auto& r : l.regs())
    if (r.name != preg_) keep.push_back(r.name);
  rho = partial_trace(rho, keep);
}

SpaResult spa_run(const Graph& g, const DensityMatrix& state, const SpaKeys& keys, Rng& rng, std::optional<int> forced_edge) {
  SpaSession s(g, keys, "spa");
  SpaResult out;
  out.leftover = state;
  s.begin(out.leftover);
  s.commit(out.leftover, rng);
  s.challenge(rng, forced_edge);
  s.open(out.leftover, rng);
  s.finish(out.leftover);
  out.transcript = s.transcript();
  out.accept = out.transcript.accept;
  return out;
}

namespace {
RepeatResult repeat(const Graph& g, const DensityMatrix& state, int n, const KeyFactory& keys, Rng& rng, bool stop_on_reject) {
  if (n < 1) throw std::invalid_argument("spa repetition: count must be >= 1");
  RepeatResult out;
  out.accept = true;
  out.leftover = state;
  for (int s = 0; s < n; ++s) {
    const SpaKeys k = keys(rng);
    SpaResult r = spa_run(g, out.leftover, k, rng);
    out.leftover = std::move(r.leftover);
    out.transcripts.push_back(r.transcript);
    out.accept = out.accept && r.accept;
    if (!r.accept && stop_on_reject) break;
  }
  return out;
}
}  // namespace

// Sessions read the witness only through computational-basis controls, so
// running them on coherent copies is the same as running them one after the
// other on a single register.
RepeatResult spa_parallel_repeat(const Graph& g, const DensityMatrix& state, int n, const KeyFactory& keys, Rng& rng) {
  return repeat(g, state, n, keys, rng, false);
}

RepeatResult spa_sequential_repeat(const Graph& g, const DensityMatrix& state, int k, const KeyFactory& keys, Rng& rng) {
  return repeat(g, state, k, keys, rng, true);
}

double spa_leftover_bound(const Graph& g, const TcfKeypair& kp) {
  if (kp.inst == TcfInstantiation::ideal) return 0.0;
  return std::max(0, g.vertices - 2) * 2.0 * recovery_bound(kp.lattice.params);
}

// ---------------------------------------------------------------- soundness / extraction

std::vector<ColorCommitment> commit_colors(const TcfKeypair& kp, const std::vector<int>& colors, Rng& rng) {
  std::vector<ColorCommitment> out(colors.size());
  for (std::size_t v = 0; v < colors.size(); ++v) {
    if (colors[v] < 0 || colors[v] > 3) throw std::invalid_argument("commit_colors: color must fit in two bits");
    for (int bit = 0; bit < 2; ++bit) {
      const int b = color_bit(colors[v], bit);
      if (kp.inst == TcfInstantiation::ideal) {
        const auto r = std::uniform_int_distribution<std::uint32_t>(0, (1u << kp.ideal.kappa) - 1)(rng);
        out[v].ideal_y[static_cast<std::size_t>(bit)] = eval_ideal(kp, bit, b, r);
      } else {
        out[v].lattice_y[static_cast<std::size_t>(bit)] = eval_lattice(kp, b, sample_lattice_random(kp.lattice.params, rng));
      }
    }
  }
  return out;
}

int extract_color(const TcfKeypair& kp, const ColorCommitment& c) {
  int color = 0;
  for (int bit = 0; bit < 2; ++bit) {
    const ExtResult e = kp.inst == TcfInstantiation::ideal
                            ? ext_ideal(kp, static_cast<std::uint32_t>(c.ideal_y[static_cast<std::size_t>(bit)]))
                            : ext_lattice(kp, c.lattice_y[static_cast<std::size_t>(bit)]);
    if (!e.in_image) return -1;
    color = color * 2 + e.b;
  }
  return color;
}

int bad_edges(const Graph& g, const std::vector<int>& c) {
  int bad = 0;
  for (const auto& [u, v] : g.edges) {
    const int a = c[static_cast<std::size_t>(u)], b = c[static_cast<std::size_t>(v)];
    if (a < 0 || a > 2 || b < 0 || b > 2 || a == b) ++bad;
  }
  return bad;
}

namespace {
template <class F>
void for_each_assignment(const Graph& g, F&& f) {
  if (g.vertices > 10) throw std::length_error("coloring enumeration budget exceeded");
  std::vector<int> c(static_cast<std::size_t>(g.vertices));
  const long total = 1L << (2 * g.vertices);
  for (long idx = 0; idx < total; ++idx) {
    long t = idx;
    for (int i = g.vertices - 1; i >= 0; --i) {
      c[static_cast<std::size_t>(i)] = static_cast<int>(t & 3);
      t >>= 2;
    }
    f(c);
  }
}
}  // namespace

int min_bad_edges(const Graph& g) {
  int best = static_cast<int>(g.edges.size());
  for_each_assignment(g, [&](const std::vector<int>& c) { best = std::min(best, bad_edges(g, c)); });
  return best;
}

std::vector<int> best_adversarial_coloring(const Graph& g) {
  std::vector<int> best;
  int bad = static_cast<int>(g.edges.size()) + 1;
  for_each_assignment(g, [&](const std::vector<int>& c) {
    const int b = bad_edges(g, c);
    if (b < bad) {
      bad = b;
      best = c;
    }
  });
  return best;
}

namespace {
TcfKeypair injective_keys(TcfInstantiation inst, Rng& rng) {
  if (inst == TcfInstantiation::ideal) return setup_ideal(2, TcfMode::injective, rng);
  return setup_lattice(LweParams::classical_fixture(), TcfMode::injective, rng, 2);
}

// One session against an injective key: true iff the challenged edge opens validly.
bool soundness_session(const Graph& g, const CommitStrategy& prover, TcfInstantiation inst, Rng& rng, double& exact) {
  const TcfKeypair kp = injective_keys(inst, rng);
  const auto com = prover(g, kp, rng);
  if (static_cast<int>(com.size()) != g.vertices) return false;
  std::vector<int> colors(com.size());
  for (std::size_t v = 0; v < com.size(); ++v) colors[v] = extract_color(kp, com[v]);
  exact = 1.0 - static_cast<double>(bad_edges(g, colors)) / static_cast<double>(g.edges.size());
  const auto e = g.edges[std::uniform_int_distribution<std::size_t>(0, g.edges.size() - 1)(rng)];
  const int a = colors[static_cast<std::size_t>(e.first)], b = colors[static_cast<std::size_t>(e.second)];
  return a >= 0 && a <= 2 && b >= 0 && b <= 2 && a != b;
}
}  // namespace

SoundnessReport spa_soundness_probe(const Graph& g, const CommitStrategy& prover, int trials, Rng& rng, TcfInstantiation inst) {
  g.validate();
  if (trials < 1) throw std::invalid_argument("spa_soundness_probe: trials must be >= 1");
  SoundnessReport r;
  r.trials = trials;
  r.bound = 1.0 - static_cast<double>(min_bad_edges(g)) / static_cast<double>(g.edges.size());
  int acc = 0;
  for (int t = 0; t < trials; ++t) {
    double exact = 0.0;
    if (soundness_session(g, prover, inst, rng, exact)) ++acc;
    r.exact_rate += exact / trials;
  }
  r.rate = static_cast<double>(acc) / trials;
  r.std_error = std::sqrt(r.rate * (1.0 - r.rate) / trials);
  return r;
}

SoundnessReport spa_soundness_repeat(const Graph& g, const CommitStrategy& prover, int n, int trials, Rng& rng) {
  g.validate();
  if (n < 1 || trials < 1) throw std::invalid_argument("spa_soundness_repeat: n and trials must be >= 1");
  SoundnessReport r;
  r.trials = trials;
  r.bound = std::pow(1.0 - static_cast<double>(min_bad_edges(g)) / static_cast<double>(g.edges.size()), n);
  int acc = 0;
  for (int t = 0; t < trials; ++t) {
    bool all = true;
    double exact_all = 1.0;
    for (int s = 0; s < n; ++s) {
      double exact = 0.0;
      all = soundness_session(g, prover, TcfInstantiation::ideal, rng, exact) && all;
      exact_all *= exact;
    }
    if (all) ++acc;
    r.exact_rate += exact_all / trials;
  }
  r.rate = static_cast<double>(acc) / trials;
  r.std_error = std::sqrt(r.rate * (1.0 - r.rate) / trials);
  return r;
}

CommitStrategy fixed_coloring_strategy(std::vector<int> colors) {
  return [colors = std::move(colors)](const Graph&, const TcfKeypair& kp, Rng& rng) { return commit_colors(kp, colors, rng); };
}

CommitStrategy honest_strategy(std::vector<int> coloring) {
  return [w = std::move(coloring)](const Graph&, const TcfKeypair& kp, Rng& rng) {
    const auto& pi = s3()[std::uniform_int_distribution<std::size_t>(0, 5)(rng)];
    std::vector<int> c(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) c[i] = pi[static_cast<std::size_t>(w[i])];
    return commit_colors(kp, c, rng);
  };
}

std::optional<std::vector<int>> spa_extract(const CommitStrategy& prover, const Graph& g, Rng& rng, TcfInstantiation inst) {
  g.validate();
  const TcfKeypair kp = injective_keys(inst, rng);
  const auto com = prover(g, kp, rng);
  if (static_cast<int>(com.size()) != g.vertices) return std::nullopt;
  std::vector<int> colors(com.size());
  for (std::size_t v = 0; v < com.size(); ++v) colors[v] = extract_color(kp, com[v]);
  if (!valid_coloring(g, colors)) return std::nullopt;
  return colors;
}

}  // namespace wpv
