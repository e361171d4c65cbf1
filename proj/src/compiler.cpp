#include "wpv/compiler.hpp"

#include <cmath>
#include <stdexcept>

namespace wpv {

std::string to_string(NdMode m) { return m == NdMode::high_completeness ? "high_completeness" : "general"; }

void schur_register(DensityMatrix& rho, const std::string& reg, const CMat& f) {
  const Layout& l = rho.layout;
  const int ri = l.index_of(reg);
  std::vector<int> dig(l.size());
  for (std::size_t x = 0; x < l.size(); ++x) dig[x] = l.digit(x, ri);
  for (Eigen::Index b = 0; b < rho.rho.cols(); ++b)
    for (Eigen::Index a = 0; a < rho.rho.rows(); ++a) rho.rho(a, b) *= f(dig[a], dig[b]);
}

StateVector sample_pure(const DensityMatrix& rho, Rng& rng) {
  const double purity = rho.rho.squaredNorm() / std::pow(rho.rho.trace().real(), 2);
  if (purity > 1.0 - 1e-10) {
    Eigen::Index j = 0;
    rho.rho.diagonal().real().maxCoeff(&j);
    CVec v = rho.rho.col(j) / std::sqrt(rho.rho(j, j).real());
    StateVector s(rho.layout, v);
    s.normalize();
    return s;
  }
  const Eigh e = eigh(rho.rho);
  std::vector<double> w(static_cast<std::size_t>(e.values.size()));
  for (Eigen::Index j = 0; j < e.values.size(); ++j) w[j] = std::max(0.0, e.values(j));
  return StateVector(rho.layout, e.vectors.col(static_cast<Eigen::Index>(sample_discrete(w, rng))));
}

namespace {

double normalize_trace(DensityMatrix& d) {
  const double tr = d.rho.trace().real();
  if (tr <= 0.0) throw std::runtime_error("compiler: state collapsed to zero");
  d.rho /= tr;
  return tr;
}

// Keeps only basis states with mask[x] set; returns the kept weight.
double project_mask(DensityMatrix& d, const std::vector<char>& mask) {
  for (Eigen::Index a = 0; a < d.rho.rows(); ++a)
    for (Eigen::Index b = 0; b < d.rho.cols(); ++b)
      if (!mask[static_cast<std::size_t>(a)] || !mask[static_cast<std::size_t>(b)]) d.rho(a, b) = 0.0;
  return normalize_trace(d);
}

double mask_weight(const DensityMatrix& d, const std::vector<char>& mask) {
  double p = 0.0;
  for (std::size_t x = 0; x < mask.size(); ++x)
    if (mask[x]) p += d.rho(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(x)).real();
  return p;
}

CMat round_op(const ToyBase& base, bool malformed, int round, int q) {
  CMat u = base.round_unitary(round, q);
  if (!malformed) return u;
  CMat x = CMat::Zero(2, 2);
  x(0, 1) = x(1, 0) = 1.0;
  return kron(CMat::Identity(u.rows() / 2, u.cols() / 2), x) * u;
}

bool gram_path(const NdOptions& o) { return o.inst == TcfInstantiation::ideal || o.key_mode == TcfMode::recovery; }

struct Channels {
  std::vector<BitChannel> bits;  // per domain bit (empty on the classical path)
};

Channels make_channels(const TcfKeypair& kp, const NdOptions& o) {
  Channels c;
  if (!gram_path(o)) return c;
  if (kp.inst == TcfInstantiation::lattice) {
    c.bits.assign(static_cast<std::size_t>(kp.domain_bits), bit_channel(kp, 0));
  } else {
    for (int b = 0; b < kp.domain_bits; ++b) c.bits.push_back(bit_channel(kp, b));
  }
  return c;
}

// Measures the image of one answer bit. The diagonal part of the channel is
// applied now; the coherent part is deferred until recovery is decided.
SlotImage commit_gram(NdSession& s, const std::string& reg, const BitChannel& ch, Rng& rng) {
  DensityMatrix& d = s.state;
  const int ri = d.layout.index_of(reg);
  std::array<double, 2> pb{0.0, 0.0};
  for (std::size_t x = 0; x < d.layout.size(); ++x)
    pb[static_cast<std::size_t>(d.layout.digit(x, ri))] += d.rho(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(x)).real();
  std::vector<double> py(ch.likelihood.size());
  for (std::size_t y = 0; y < py.size(); ++y) py[y] = pb[0] * ch.likelihood[y][0] + pb[1] * ch.likelihood[y][1];
  const std::size_t y = sample_discrete(py, rng);

  CMat scale(2, 2), h_pre = CMat::Zero(2, 2), h_post = CMat::Zero(2, 2);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      const double l = std::sqrt(ch.likelihood[y][static_cast<std::size_t>(a)] * ch.likelihood[y][static_cast<std::size_t>(b)]);
      scale(a, b) = l;
      if (l > 0.0) {
        h_pre(a, b) = ch.g_pre[y](a, b) / l;
        h_post(a, b) = ch.g_post[y](a, b) / l;
      }
    }
  schur_register(d, reg, scale);
  normalize_trace(d);
  s.pending.push_back({reg, h_pre, h_post});
  SlotImage out;
  out.index = y;
  return out;
}

// Injective lattice keys at classical sizes: the image determines the bit, so
// measuring the image is measuring the bit; the image itself is computed
// classically.
SlotImage commit_classical(NdSession& s, const std::string& reg, Rng& rng) {
  DensityMatrix& d = s.state;
  const int ri = d.layout.index_of(reg);
  std::vector<char> m0(d.layout.size()), m1(d.layout.size());
  for (std::size_t x = 0; x < d.layout.size(); ++x) {
    m0[x] = d.layout.digit(x, ri) == 0;
    m1[x] = !m0[x];
  }
  const int b = uniform01(rng) < mask_weight(d, m1) ? 1 : 0;
  project_mask(d, b ? m1 : m0);
  SlotImage out;
  out.vec = eval_lattice(s.keypair, b, sample_lattice_random(s.keypair.lattice.params, rng));
  return out;
}

nlohmann::json image_json(const SlotImage& y) {
  if (y.vec.size() == 0) return y.index;
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < y.vec.size(); ++i) a.push_back(y.vec(i));
  return a;
}

void resolve_pending(NdSession& s) {
  const bool recover = s.td_sent && s.keypair.mode == TcfMode::recovery;
  for (const auto& p : s.pending) schur_register(s.state, p.reg, recover ? p.h_post : p.h_pre);
  s.pending.clear();
  normalize_trace(s.state);
}

void uncompute_rounds(const ToyBase& base, const NdSession& s, StateVector* sv, DensityMatrix* dm) {
  for (int i = base.rounds; i >= 1; --i) {
    const CMat ud = round_op(base, s.malformed_nonce, i, s.st.queries[static_cast<std::size_t>(i - 1)]).adjoint();
    if (sv) apply_op(*sv, ud, base.round_targets(i));
    if (dm) apply_op(*dm, ud, base.round_targets(i));
  }
}

void compute_rounds(const ToyBase& base, const NdSession& s, StateVector& sv) {
  for (int i = 1; i <= base.rounds; ++i)
    apply_op(sv, round_op(base, s.malformed_nonce, i, s.st.queries[static_cast<std::size_t>(i - 1)]), base.round_targets(i));
}

TcfKeypair make_keys(const ToyBase& base, const NdOptions& o, Rng& rng) {
  const int bits = 2 * base.rounds;
  if (o.inst == TcfInstantiation::ideal) return setup_ideal(bits, o.key_mode, rng);
  return setup_lattice(o.lattice, o.key_mode, rng, bits);
}

}  // namespace

// ---------------------------------------------------------------- relation SPA

bool relation_spa(DensityMatrix& rho, const std::vector<std::string>& bits, Rng& rng, RelationSpaTranscript& t) {
  const int n = static_cast<int>(bits.size());
  const TcfKeypair kp = setup_ideal(n, TcfMode::recovery, rng);
  std::vector<BitChannel> ch;
  for (int k = 0; k < n; ++k) ch.push_back(bit_channel(kp, k));

  // Commit to a_k xor m_k with a uniform pad m_k: the image law is pad-averaged.
  t = RelationSpaTranscript{};
  for (int k = 0; k < n; ++k) {
    const auto& lik = ch[static_cast<std::size_t>(k)].likelihood;
    std::vector<double> py(lik.size());
    for (std::size_t y = 0; y < py.size(); ++y) py[y] = 0.5 * (lik[y][0] + lik[y][1]);
    t.commitments.push_back(sample_discrete(py, rng));
  }
  std::vector<char> open(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) open[static_cast<std::size_t>(k)] = uniform01(rng) < 0.5;

  bool ok = true;
  for (int k = 0; k < n; ++k) {
    const auto& c = ch[static_cast<std::size_t>(k)];
    const std::size_t y = t.commitments[static_cast<std::size_t>(k)];
    if (open[static_cast<std::size_t>(k)]) {
      // The opened value is pad-masked; unmasking (m ^= a) leaves the pad
      // classical, so the witness qubit is untouched.
      const int v = static_cast<int>(sample_discrete({c.likelihood[y][0], c.likelihood[y][1]}, rng));
      const long r = recover_preimage(kp, k, v, y);
      t.opened.push_back(k);
      t.values.push_back(v);
      t.randomness.push_back(r < 0 ? 0 : static_cast<std::size_t>(r));
      ok = ok && r >= 0 && eval_index(kp, k, v, static_cast<std::size_t>(r)) == static_cast<long>(y);
    } else {
      const double py = 0.5 * (c.likelihood[y][0] + c.likelihood[y][1]);
      CMat f(2, 2);
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) f(a, b) = 0.5 * (c.g_post[y](a, b) + c.g_post[y](a ^ 1, b ^ 1)) / py;
      schur_register(rho, bits[static_cast<std::size_t>(k)], f);
    }
  }
  normalize_trace(rho);
  t.accept = ok;
  return ok;
}

// ---------------------------------------------------------------- protocol

NdResult nd_compile_run(const ToyBase& base, const StateVector& witness, const NdOptions& opts, Rng& rng,
                        const RoundObserver& observer) {
  NdResult out;
  NdSession& s = out.session;
  const double delta = std::ldexp(1.0, -opts.lambda);
  const std::vector<std::string> wnames = witness.layout.names();

  // 1. Quality estimate (general mode only).
  StateVector w = witness;
  if (opts.mode == NdMode::general) {
    if (opts.p_star) {
      s.p_star = opts.p_star;
    } else {
      ValEstResult e = val_est(base.qma, w, opts.epsilon, delta, rng, "W");
      s.p_star = e.p;
      w = std::move(e.post);
    }
  }
  // 2-3. Registers, base queries, recovery-mode keys.
  s.state = DensityMatrix::from_pure(base.initial_state(w));
  s.st = base.verifier.sample(rng, opts.forced_phase);
  s.keypair = make_keys(base, opts, rng);
  s.malformed_nonce = opts.malformed_nonce;
  const Channels ch = make_channels(s.keypair, opts);

  // 4. Rounds: P_i(q_i), then commit both answer bits.
  bool aborted = false;
  for (int i = 1; i <= base.rounds; ++i) {
    const int q = s.st.queries[static_cast<std::size_t>(i - 1)];
    apply_op(s.state, round_op(base, s.malformed_nonce, i, q), base.round_targets(i));
    std::array<SlotImage, 2> y;
    for (int bit = 0; bit < 2; ++bit) {
      const std::string reg = bit == 0 ? ToyBase::frag_reg(i) : ToyBase::tag_reg(i);
      y[static_cast<std::size_t>(bit)] = ch.bits.empty() ? commit_classical(s, reg, rng)
                                                         : commit_gram(s, reg, ch.bits[static_cast<std::size_t>(2 * (i - 1) + bit)], rng);
    }
    s.y.push_back(y);
    s.transcript.push_back({{"round", i}, {"query", q}, {"answer_or_commitment", {image_json(y[0]), image_json(y[1])}}, {"phase", "commit"}});
    if (observer) observer(i, s);
    if (opts.abort) {
      aborted = true;
      break;
    }
  }

  if (aborted) {
    s.transcript.push_back({{"round", static_cast<int>(s.y.size())}, {"query", nullptr}, {"answer_or_commitment", nullptr}, {"phase", "abort"}});
    resolve_pending(s);
    out.leftover = partial_trace(s.state, wnames);
    out.leftover_distance = trace_distance(out.leftover, DensityMatrix::from_pure(witness));
    out.final_state = sample_pure(out.leftover, rng);
    return out;
  }

  // 5-6. st revealed; the prover measures V2 on its answers.
  const std::vector<char> acc = base.verdict_mask(s.state.layout, s.st, 1);
  s.b = uniform01(rng) < mask_weight(s.state, acc) ? 1 : 0;
  project_mask(s.state, s.b ? acc : base.verdict_mask(s.state.layout, s.st, 0));
  s.transcript.push_back({{"round", base.rounds}, {"query", to_string(s.st.phase)}, {"answer_or_commitment", s.b}, {"phase", "verdict"}});

  // 7. Argument for the NP statement, only on b = 1.
  if (s.b == 1) {
    s.spa_accept = opts.run_spa ? relation_spa(s.state, base.answer_regs(), rng, s.spa) : true;
    s.transcript.push_back({{"round", base.rounds}, {"query", nullptr}, {"answer_or_commitment", s.spa_accept}, {"phase", "spa"}});
  }
  // 8. The verifier outputs and releases td (also after an abort on b = 0).
  s.verdict = s.b == 1 && s.spa_accept;
  s.td_sent = true;
  out.verdict = s.verdict;

  // 9. Witness recovery.
  if (opts.mode == NdMode::high_completeness) {
    out.leftover = witness_recovery_high_c(base, s);
  } else {
    GeneralRecovery g = witness_recovery_general(base, s, *s.p_star, opts.epsilon, opts.lambda, rng, opts.t_max);
    out.p_star2 = g.p_star2;
    out.repair = std::move(g.repair);
    out.repair_failed = !out.repair.ok;
    out.leftover = partial_trace(g.state, wnames);
  }
  out.leftover_distance = trace_distance(out.leftover, DensityMatrix::from_pure(witness));
  if (opts.mode == NdMode::general) out.final_state = sample_pure(out.leftover, rng);
  return out;
}

DensityMatrix witness_recovery_high_c(const ToyBase& base, NdSession& s) {
  resolve_pending(s);
  uncompute_rounds(base, s, nullptr, &s.state);
  std::vector<std::string> keep;
  for (const auto& r : s.state.layout.regs()) {
    bool internal = false;
    for (const auto& n : base.internal_regs()) internal = internal || n == r.name;
    for (const auto& n : base.answer_regs()) internal = internal || n == r.name;
    if (!internal) keep.push_back(r.name);
  }
  return partial_trace(s.state, keep);
}

GeneralRecovery witness_recovery_general(const ToyBase& base, NdSession& s, const Estimate& p_star, double epsilon,
                                         int lambda, Rng& rng, long t_max) {
  const double delta = std::ldexp(1.0, -lambda);
  resolve_pending(s);
  // psi** = U_q^dagger psi*.
  StateVector psi = sample_pure(s.state, rng);
  uncompute_rounds(base, s, &psi, nullptr);

  const int b = s.b < 0 ? 0 : s.b;
  const Estimator m = [&](const StateVector& x, Rng& r) { return val_est(base.qma, x, epsilon, delta, r, "W"); };
  const BinaryMeasurement pi = [&](StateVector& x, Rng& r) {
    compute_rounds(base, s, x);
    DensityMatrix d = DensityMatrix::from_pure(x);
    const std::vector<char> in = base.verdict_mask(x.layout, s.st, b);
    const int outcome = uniform01(r) < mask_weight(d, in) ? 1 : 0;
    for (std::size_t i = 0; i < in.size(); ++i)
      if (static_cast<bool>(in[i]) != static_cast<bool>(outcome)) x.amp(static_cast<Eigen::Index>(i)) = 0.0;
    x.normalize();
    uncompute_rounds(base, s, &x, nullptr);
    return outcome;
  };
  GeneralRecovery g;
  g.repair = repair(m, pi, psi, p_star.value, epsilon, t_max > 0 ? t_max : default_t_max(delta), rng);
  ValEstResult fin = val_est(base.qma, g.repair.state, epsilon, delta, rng, "W");
  g.p_star2 = fin.p;
  g.state = std::move(fin.post);
  return g;
}

// ---------------------------------------------------------------- extraction

ExtractResult transcript_extract(const ToyBase& base, const StateVector& witness, const NdOptions& opts, Rng& rng,
                                 const ImageTamper& tamper) {
  NdOptions o = opts;
  o.key_mode = TcfMode::injective;
  o.mode = NdMode::high_completeness;
  NdResult r = nd_compile_run(base, witness, o, rng);
  if (tamper) tamper(r.session, rng);

  ExtractResult out;
  out.st = r.session.st;
  out.protocol_verdict = r.verdict;
  if (static_cast<int>(r.session.y.size()) != base.rounds) return out;  // prover aborted
  const TcfKeypair& kp = r.session.keypair;
  for (const auto& slot : r.session.y) {
    int a = 0;
    for (int bit = 0; bit < 2; ++bit) {
      const SlotImage& y = slot[static_cast<std::size_t>(bit)];
      ExtResult e;
      if (kp.inst == TcfInstantiation::lattice) {
        if (y.vec.size() == 0) return out;
        e = ext_lattice(kp, y.vec);
      } else {
        e = ext_ideal(kp, static_cast<std::uint32_t>(std::min<std::size_t>(y.index, 0xffffffffu)));
      }
      if (!e.in_image) return out;
      a = a * 2 + e.b;
    }
    out.answers.push_back(a);
  }
  out.ok = true;
  out.base_verdict = base.verifier.verdict(out.st, out.answers);
  return out;
}

// ---------------------------------------------------------------- sequential repetition

int threshold_count(double c, double s, int n_check) {
  return static_cast<int>(std::ceil((c + s) / 2.0 * n_check - 1e-9));
}

nlohmann::json RepairabilityLedger::to_json() const {
  std::vector<int> flags(repair_ok.begin(), repair_ok.end());
  return {{"p_chain", p_chain}, {"repair_flags", flags}, {"oracle_calls", oracle_calls}, {"p_initial", p_initial},
          {"p_final", p_final}, {"epsilon", epsilon}, {"grid_width", grid_width}};
}

nlohmann::json SeqRepResult::to_json() const {
  nlohmann::json verdicts = nlohmann::json::array(), phases = nlohmann::json::array();
  nlohmann::json quality = nlohmann::json::array(), test_pass = nlohmann::json::array();
  for (const auto& r : rounds) {
    verdicts.push_back(r.verdict ? 1 : 0);
    phases.push_back(to_string(r.phase));
    quality.push_back(r.quality_before);
    test_pass.push_back(r.test_pass);
  }
  return {{"accept", accept},       {"test_abort", test_abort},     {"N", stopped_at},
          {"n_check", n_check},     {"n_check_pass", n_check_pass}, {"threshold", threshold},
          {"verdicts", verdicts},   {"phases", phases},             {"quality_before", quality},
          {"test_pass", test_pass}, {"ledger", ledger.to_json()}};
}

namespace {

SeqRepResult seqrep_prefix(const SeqRepConfig& cfg, const ToyBase& base, const StateVector& witness, int reps,
                           Rng& rng) {
  if (cfg.n < 1) throw std::invalid_argument("seqrep: N must be >= 1");
  NdOptions o = cfg.nd;
  o.mode = NdMode::general;
  o.epsilon = cfg.epsilon;
  o.lambda = cfg.lambda;
  o.forced_phase.reset();

  SeqRepResult out;
  out.ledger.epsilon = cfg.epsilon;
  out.ledger.grid_width = 1.0 / static_cast<double>(valest_t(cfg.epsilon, std::ldexp(1.0, -cfg.lambda)));
  StateVector w = witness;
  std::optional<Estimate> p_star;
  for (int i = 1; i <= reps; ++i) {
    NdOptions oi = o;
    oi.p_star = p_star;
    oi.malformed_nonce = cfg.sabotage && cfg.sabotage(i);
    oi.abort = cfg.abort_after > 0 && i >= cfg.abort_after;

    SeqRepRound rec;
    rec.quality_before = brute_force_acceptance(base.qma, w, "W");
    if (cfg.test_pass_samples > 0) {
      NdOptions ot = oi;
      ot.forced_phase = Phase::test;
      int pass = 0;
      for (int k = 0; k < cfg.test_pass_samples; ++k) pass += nd_compile_run(base, w, ot, rng).verdict ? 1 : 0;
      rec.test_samples = cfg.test_pass_samples;
      rec.test_pass = static_cast<double>(pass) / cfg.test_pass_samples;
    }

    NdResult r = nd_compile_run(base, w, oi, rng);
    rec.phase = r.session.st.phase;
    rec.verdict = r.verdict;
    out.rounds.push_back(rec);
    out.stopped_at = i;
    if (i == 1 && r.session.p_star) out.ledger.p_initial = r.session.p_star->value;

    const bool aborted = r.session.b < 0;
    if (aborted || (rec.phase == Phase::test && !r.verdict)) {
      out.test_abort = true;
      out.final_state = r.final_state;
      break;
    }
    if (rec.phase == Phase::check) {
      ++out.n_check;
      out.n_check_pass += r.verdict ? 1 : 0;
    }
    w = r.final_state;
    p_star = r.p_star2;
    out.ledger.p_chain.push_back(r.p_star2->value);
    out.ledger.repair_ok.push_back(!r.repair_failed);
    out.ledger.oracle_calls.push_back(r.repair.oracle_calls);
  }
  if (!out.test_abort) out.final_state = w;
  out.ledger.p_final = out.ledger.p_chain.empty() ? out.ledger.p_initial : out.ledger.p_chain.back();
  out.threshold = threshold_count(cfg.c, cfg.s, out.n_check);
  out.accept = !out.test_abort && out.n_check_pass >= out.threshold;
  return out;
}

}  // namespace

SeqRepResult seqrep_run(const SeqRepConfig& cfg, const ToyBase& base, const StateVector& witness, Rng& rng) {
  return seqrep_prefix(cfg, base, witness, cfg.n, rng);
}

bool seqrep_recount(const SeqRepResult& r, double c, double s) {
  int checks = 0, passes = 0;
  for (const auto& x : r.rounds) {
    if (x.phase == Phase::test && !x.verdict) return false;
    if (x.phase == Phase::check) {
      ++checks;
      passes += x.verdict ? 1 : 0;
    }
  }
  if (r.test_abort) return false;
  // Integer form of passes >= (c+s)/2 * checks, computed without rounding helpers.
  return static_cast<double>(passes) >= (c + s) / 2.0 * checks - 1e-9;
}

SeqExtraction seqrep_extract(const SeqRepConfig& cfg, const ToyBase& base, const StateVector& witness, Rng& rng) {
  SeqExtraction out;
  out.j = std::uniform_int_distribution<int>(1, cfg.n)(rng);
  StateVector w = witness;
  if (out.j > 1) {
    const SeqRepResult pre = seqrep_prefix(cfg, base, witness, out.j - 1, rng);
    if (pre.test_abort) return out;
    w = pre.final_state;
  }
  if (cfg.abort_after > 0 && out.j >= cfg.abort_after) return out;
  NdOptions o = cfg.nd;
  o.malformed_nonce = cfg.sabotage && cfg.sabotage(out.j);
  out.quality = brute_force_acceptance(base.qma, w, "W");
  const ExtractResult e = transcript_extract(base, w, o, rng);
  out.success = e.ok && e.base_verdict;
  if (out.success) out.witness = w;
  return out;
}

// ---------------------------------------------------------------- bounds

double azuma_bound(double t, const std::vector<double>& c) {
  if (t <= 0.0) return 1.0;
  double s2 = 0.0;
  for (double ck : c) {
    if (!(ck > 0.0)) throw std::invalid_argument("azuma_bound: differences must be positive");
    s2 += ck * ck;
  }
  if (s2 == 0.0) throw std::invalid_argument("azuma_bound: empty difference list");
  return std::exp(-2.0 * t * t / s2);
}

double seqrep_hoeffding_bound(int n, double c, double s) {
  const double t = n * (c - s) / 2.0;
  return 1.0 - std::exp(-2.0 * t * t / n);
}

double seqrep_check_count_bound(int n, double c, double s) {
  // E over |B| ~ Bin(N, 1/2) of exp(-2 |B| ((c-s)/2)^2), in closed form.
  const double g = (c - s) / 2.0;
  return 1.0 - std::pow(0.5 * (1.0 + std::exp(-2.0 * g * g)), n);
}

GoodTranscriptReport good_transcript_diagnostic(const SeqRepResult& r, int d, int lambda, int min_samples) {
  if (lambda < 1 || d < 0) throw std::invalid_argument("good_transcript_diagnostic: lambda >= 1, d >= 0");
  GoodTranscriptReport out;
  out.threshold = 1.0 - 1.0 / std::pow(static_cast<double>(lambda), d);
  out.allowed = std::pow(static_cast<double>(lambda), d + 1);
  out.accepted = r.accept;
  for (std::size_t i = 0; i < r.rounds.size(); ++i) {
    const auto& x = r.rounds[i];
    if (x.test_samples < min_samples) throw std::invalid_argument("good_transcript_diagnostic: insufficient samples");
    if (x.test_pass < out.threshold) out.flagged.push_back(static_cast<int>(i) + 1);
  }
  out.good = out.accepted && static_cast<double>(out.flagged.size()) <= out.allowed;
  return out;
}

}  // namespace wpv
