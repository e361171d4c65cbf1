#include "wpv/cvqc_base.hpp"

#include <cmath>
#include <stdexcept>

namespace wpv {

std::string to_string(Phase p) { return p == Phase::test ? "test" : "check"; }

VerifierSecret TestCheckVerifier::sample(Rng& rng, std::optional<Phase> forced) const {
  VerifierSecret st;
  st.phase = forced ? *forced : (uniform01(rng) < 0.5 ? Phase::test : Phase::check);
  st.queries = (st.phase == Phase::test ? test : check).sample_queries(rng);
  return st;
}

bool TestCheckVerifier::verdict(const VerifierSecret& st, const std::vector<int>& answers) const {
  if (static_cast<int>(answers.size()) != rounds()) return false;
  return (st.phase == Phase::test ? test : check).verdict(st.queries, answers);
}

// ---------------------------------------------------------------- toy base

namespace {

CMat pauli_x() {
  CMat x = CMat::Zero(2, 2);
  x(0, 1) = x(1, 0) = 1.0;
  return x;
}

CMat hadamard() {
  CMat h(2, 2);
  h << 1.0, 1.0, 1.0, -1.0;
  return h / std::sqrt(2.0);
}

CMat eye(Eigen::Index n) { return CMat::Identity(n, n); }

CMat x_pow(int q) { return q ? pauli_x() : eye(2); }

// frag ^= bit(s) on (S, frag, tag), bit picked by `which` (0: high, 1: low, 2: parity).
CMat share_into_frag(int which) {
  CMat m = CMat::Zero(16, 16);
  for (int s = 0; s < 4; ++s) {
    const int s0 = (s >> 1) & 1, s1 = s & 1;
    const int flip = which == 0 ? s0 : which == 1 ? s1 : (s0 ^ s1);
    const CMat ps = projector_onto(CVec::Unit(4, s));
    m += kron(ps, kron(x_pow(flip), eye(2)));
  }
  return m;
}

}  // namespace

std::vector<std::string> ToyBase::answer_regs() const {
  std::vector<std::string> out;
  for (int i = 1; i <= rounds; ++i) {
    out.push_back(frag_reg(i));
    out.push_back(tag_reg(i));
  }
  return out;
}

std::vector<std::string> ToyBase::internal_regs() const {
  if (rounds == 3) return {"anc", "S"};
  return {"anc"};
}

std::vector<std::string> ToyBase::round_targets(int round) const {
  if (round < 1 || round > rounds) throw std::out_of_range("toy base: round out of range");
  if (round == 1) {
    std::vector<std::string> t{"W", "anc"};
    if (rounds == 3) t.push_back("S");
    t.push_back(frag_reg(1));
    t.push_back(tag_reg(1));
    return t;
  }
  return {"S", frag_reg(round), tag_reg(round)};
}

const CMat& ToyBase::round_unitary(int round, int query) const {
  if (query != 0 && query != 1) throw std::invalid_argument("toy base: queries are nonce bits");
  if (round < 1 || round > rounds) throw std::out_of_range("toy base: round out of range");
  const auto i = static_cast<std::size_t>(2 * (round - 1) + query);
  if (i < unitary_cache.size()) return unitary_cache[i];
  thread_local CMat scratch;
  scratch = build_round_unitary(round, query);
  return scratch;
}

CMat ToyBase::build_round_unitary(int round, int query) const {
  if (query != 0 && query != 1) throw std::invalid_argument("toy base: queries are nonce bits");
  const QuantumAlgorithm& alg = qma.algorithm();
  const Eigen::Index dd = static_cast<Eigen::Index>(alg.input_dim) * alg.ancilla_dim();
  const CMat tag = kron(eye(2), x_pow(query));
  if (rounds == 1) {
    // Run the dilation, copy the accept predicate into frag, bind the nonce.
    const CMat pi = alg.accept;
    const CMat copy = kron(pi, kron(pauli_x(), eye(2))) + kron(eye(dd) - pi, eye(4));
    return kron(eye(dd), tag) * copy * kron(alg.dilation, eye(4));
  }
  if (round == 1) {
    // frag_1 = accept ^ s0 ^ s1 with S in |++>; later rounds reveal s0 and s1.
    const CMat pi = alg.accept;
    const CMat copy = kron(pi, kron(eye(4), kron(pauli_x(), eye(2)))) + kron(eye(dd) - pi, eye(16));
    const CMat shares = kron(eye(dd), share_into_frag(2));
    const CMat prep = kron(eye(dd), kron(kron(hadamard(), hadamard()), eye(4)));
    return kron(eye(dd * 4), tag) * shares * copy * prep * kron(alg.dilation, eye(16));
  }
  return kron(eye(4), tag) * share_into_frag(round == 2 ? 0 : 1);
}

StateVector ToyBase::initial_state(const StateVector& witness) const {
  if (!witness.layout.has("W")) throw std::invalid_argument("toy base: witness register W missing");
  if (witness.layout.dim("W") != qma.witness_dim()) throw std::invalid_argument("toy base: witness dimension mismatch");
  std::vector<Register> extra{{"anc", qma.ancilla_dim()}};
  if (rounds == 3) extra.push_back({"S", 4});
  for (const auto& r : answer_regs()) extra.push_back({r, 2});
  check_dim(witness.layout.size() * qma.ancilla_dim() * (rounds == 3 ? 4 : 1) * (std::size_t{1} << (2 * rounds)),
            "toy base");
  return append_zero(witness, extra);
}

int ToyBase::answer_at(const Layout& l, std::size_t x, int round) const {
  return l.digit(x, frag_reg(round)) * 2 + l.digit(x, tag_reg(round));
}

std::vector<char> ToyBase::verdict_mask(const Layout& l, const VerifierSecret& st, int b) const {
  std::vector<char> mask(l.size());
  std::vector<int> a(static_cast<std::size_t>(rounds));
  for (std::size_t x = 0; x < l.size(); ++x) {
    for (int i = 1; i <= rounds; ++i) a[static_cast<std::size_t>(i - 1)] = answer_at(l, x, i);
    mask[x] = static_cast<char>(static_cast<int>(verifier.verdict(st, a)) == b);
  }
  return mask;
}

ToyBase make_toy_base_cvqc(const QmaVerifier& v, int rounds, double zeta) {
  if (rounds != 1 && rounds != 3) throw std::invalid_argument("toy base: rounds must be 1 or 3");
  ToyBase base;
  base.qma = v;
  base.rounds = rounds;
  auto nonces = [rounds](Rng& rng) {
    std::vector<int> q(static_cast<std::size_t>(rounds));
    for (int& b : q) b = uniform01(rng) < 0.5 ? 0 : 1;
    return q;
  };
  auto tags_ok = [](const std::vector<int>& q, const std::vector<int>& a) {
    for (std::size_t i = 0; i < q.size(); ++i)
      if (a[i] < 0 || a[i] > 3 || (a[i] & 1) != q[i]) return false;
    return true;
  };
  base.verifier.test = {rounds, nonces, tags_ok};
  base.verifier.check = {rounds, nonces, [tags_ok](const std::vector<int>& q, const std::vector<int>& a) {
                           if (!tags_ok(q, a)) return false;
                           int x = 0;
                           for (int ai : a) x ^= ai >> 1;
                           return x == 1;
                         }};
  base.verifier.c = v.a();
  base.verifier.s = v.b();
  base.verifier.zeta = zeta;
  for (int r = 1; r <= rounds; ++r)
    for (int q = 0; q < 2; ++q) base.unitary_cache.push_back(base.build_round_unitary(r, q));
  return base;
}

// ---------------------------------------------------------------- provers

void HonestProver::start(const ToyBase& base, const StateVector& witness) {
  base_ = &base;
  state_ = base.initial_state(witness);
}

std::optional<int> HonestProver::respond(int round, int query, Rng& rng) {
  if (!base_) throw std::logic_error("HonestProver: start() not called");
  apply_op(state_, base_->round_unitary(round, query), base_->round_targets(round));
  Measurement f = measure_basis(state_, ToyBase::frag_reg(round), rng);
  Measurement t = measure_basis(f.post, ToyBase::tag_reg(round), rng);
  state_ = std::move(t.post);
  return f.outcome * 2 + t.outcome;
}

std::optional<int> MalformedNonceProver::respond(int round, int query, Rng& rng) {
  const auto a = HonestProver::respond(round, query, rng);
  if (!a) return a;
  return *a ^ 1;
}

// ---------------------------------------------------------------- driver

BaseRun run_base_cvqc(const ToyBase& base, BaseProver& prover, const StateVector& witness, Rng& rng,
                      std::optional<Phase> forced) {
  BaseRun out;
  out.st = base.verifier.sample(rng, forced);
  prover.start(base, witness);
  for (int i = 1; i <= base.rounds; ++i) {
    const int q = out.st.queries[static_cast<std::size_t>(i - 1)];
    const std::optional<int> a = prover.respond(i, q, rng);
    nlohmann::json line{{"round", i}, {"query", q}, {"phase", to_string(out.st.phase)}};
    if (!a || *a < 0 || *a > 3) {
      line["answer_or_commitment"] = nullptr;
      out.transcript.push_back(line);
      out.violation = true;
      break;
    }
    line["answer_or_commitment"] = *a;
    out.transcript.push_back(line);
    out.answers.push_back(*a);
  }
  out.verdict = !out.violation && base.verifier.verdict(out.st, out.answers);
  out.leftover = prover.leftover();
  return out;
}

TestCheckRates estimate_test_check_rates(const ToyBase& base, const ProverFactory& prover, const StateVector& witness,
                                         int trials, Rng& rng) {
  if (trials < 1) throw std::invalid_argument("estimate_test_check_rates: trials must be >= 1");
  TestCheckRates r;
  r.trials = trials;
  auto rate = [&](Phase ph, double& p, double& se) {
    int ok = 0;
    for (int t = 0; t < trials; ++t) {
      auto pv = prover();
      ok += run_base_cvqc(base, *pv, witness, rng, ph).verdict ? 1 : 0;
    }
    p = static_cast<double>(ok) / trials;
    se = std::sqrt(p * (1.0 - p) / trials);
  };
  rate(Phase::test, r.p_test, r.se_test);
  rate(Phase::check, r.p_check, r.se_check);
  return r;
}

}  // namespace wpv
