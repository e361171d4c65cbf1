// Non-adaptive CVQC with a test/check verifier split, and the synthetic toy
// base protocol the compilers run on. The toy base is a stand-in: it has the
// right interface and completeness behaviour but no soundness against
// dishonest quantum provers.
#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wpv/qma.hpp"

namespace wpv {

enum class Phase { test, check };
std::string to_string(Phase p);

// st: which verifier was picked plus the queries V1 sampled.
struct VerifierSecret {
  Phase phase = Phase::test;
  std::vector<int> queries;
};

struct NonAdaptiveVerifier {
  int rounds = 1;
  std::function<std::vector<int>(Rng&)> sample_queries;                              // V1
  std::function<bool(const std::vector<int>& queries, const std::vector<int>& a)> verdict;  // V2
};

struct TestCheckVerifier {
  NonAdaptiveVerifier test;   // perfect completeness
  NonAdaptiveVerifier check;  // completeness c
  double c = 2.0 / 3.0;
  double s = 1.0 / 3.0;
  double zeta = 0.99;
  int d = 1;
  double delta = 0.5;

  int rounds() const { return test.rounds; }
  // Picks V_T or V_C with probability 1/2 each (unless forced), then runs V1.
  VerifierSecret sample(Rng& rng, std::optional<Phase> forced = std::nullopt) const;
  bool verdict(const VerifierSecret& st, const std::vector<int>& answers) const;
};

// Answers are two bits, frag * 2 + tag. Answer slot i lives on qubit registers
// "A<i>f" and "A<i>t" (1-based). The prover's internal registers are "anc"
// (the QMA ancilla) and, for three rounds, "S" (two share qubits).
struct ToyBase {
  QmaVerifier qma;
  int rounds = 1;
  TestCheckVerifier verifier;

  static std::string frag_reg(int round) { return "A" + std::to_string(round) + "f"; }
  static std::string tag_reg(int round) { return "A" + std::to_string(round) + "t"; }
  std::vector<std::string> answer_regs() const;
  std::vector<std::string> internal_regs() const;
  // Registers touched by P_i(q): (A_i, P) with the witness first.
  std::vector<std::string> round_targets(int round) const;
  // Cached by make_toy_base_cvqc; built on demand otherwise.
  const CMat& round_unitary(int round, int query) const;
  CMat build_round_unitary(int round, int query) const;
  std::vector<CMat> unitary_cache;  // index 2 * (round - 1) + query

  // |psi_empty> = |w> |0...>: appends internal and answer registers to `witness`.
  StateVector initial_state(const StateVector& witness) const;
  // Answer encoded at basis index x of layout l.
  int answer_at(const Layout& l, std::size_t x, int round) const;
  // Diagonal mask over a layout: 1 where V2(st, answers in the basis state) = b.
  std::vector<char> verdict_mask(const Layout& l, const VerifierSecret& st, int b) const;
};

ToyBase make_toy_base_cvqc(const QmaVerifier& v, int rounds = 1, double zeta = 0.99);

class BaseProver {
 public:
  virtual ~BaseProver() = default;
  virtual void start(const ToyBase& base, const StateVector& witness) = 0;
  // nullopt aborts the session.
  virtual std::optional<int> respond(int round, int query, Rng& rng) = 0;
  virtual StateVector leftover() const = 0;
};

class HonestProver : public BaseProver {
 public:
  void start(const ToyBase& base, const StateVector& witness) override;
  std::optional<int> respond(int round, int query, Rng& rng) override;
  StateVector leftover() const override { return state_; }

 protected:
  const ToyBase* base_ = nullptr;
  StateVector state_;
};

// Never answers.
class AbortProver : public BaseProver {
 public:
  void start(const ToyBase&, const StateVector& witness) override { w_ = witness; }
  std::optional<int> respond(int, int, Rng&) override { return std::nullopt; }
  StateVector leftover() const override { return w_; }

 private:
  StateVector w_;
};

// Honest, but returns the wrong nonce tag.
class MalformedNonceProver : public HonestProver {
 public:
  std::optional<int> respond(int round, int query, Rng& rng) override;
};

// Classical answers from a script; keeps the witness untouched.
class ScriptedProver : public BaseProver {
 public:
  using Script = std::function<std::optional<int>(int round, int query, Rng& rng)>;
  explicit ScriptedProver(Script s) : script_(std::move(s)) {}
  void start(const ToyBase&, const StateVector& witness) override { w_ = witness; }
  std::optional<int> respond(int round, int query, Rng& rng) override { return script_(round, query, rng); }
  StateVector leftover() const override { return w_; }

 private:
  Script script_;
  StateVector w_;
};

using ProverFactory = std::function<std::unique_ptr<BaseProver>()>;

struct BaseRun {
  bool verdict = false;
  bool violation = false;  // abort or out-of-range answer
  VerifierSecret st;
  std::vector<int> answers;
  nlohmann::json transcript = nlohmann::json::array();  // {round, query, answer_or_commitment, phase}
  StateVector leftover;
};

// V1 runs (phase and all queries drawn) before the prover acts.
BaseRun run_base_cvqc(const ToyBase& base, BaseProver& prover, const StateVector& witness, Rng& rng,
                      std::optional<Phase> forced = std::nullopt);

struct TestCheckRates {
  double p_test = 0.0, se_test = 0.0;
  double p_check = 0.0, se_check = 0.0;
  int trials = 0;  // per phase
};
TestCheckRates estimate_test_check_rates(const ToyBase& base, const ProverFactory& prover, const StateVector& witness,
                                         int trials, Rng& rng);

}  // namespace wpv
