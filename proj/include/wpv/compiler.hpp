// The non-destructive CVQC compiler: answers are committed with a
// recovery-mode trapdoor function, the prover measures the base verdict
// itself, proves it in the state-preserving NP argument, and afterwards
// recovers (or repairs) its witness with the trapdoor. Also the injective-mode
// transcript extractor and threshold sequential repetition.
#pragma once

#include <array>
#include <functional>
#include <optional>
#include <vector>

#include <json.hpp>

#include "wpv/cvqc_base.hpp"
#include "wpv/estimate_repair.hpp"
#include "wpv/tcf.hpp"

namespace wpv {

enum class NdMode { high_completeness, general };
std::string to_string(NdMode m);

struct NdOptions {
  NdMode mode = NdMode::high_completeness;
  TcfInstantiation inst = TcfInstantiation::ideal;
  LweParams lattice = LweParams::quantum_micro();
  TcfMode key_mode = TcfMode::recovery;  // injective only for extraction runs
  double epsilon = 0.05;
  int lambda = 20;  // delta = 2^-lambda
  long t_max = 0;   // repair budget; 0 means ceil(1/sqrt(delta))
  std::optional<Phase> forced_phase;
  std::optional<Estimate> p_star;  // skip the opening ValEst and use this estimate
  bool run_spa = true;
  bool malformed_nonce = false;  // prover flips every tag (sabotage hook)
  bool abort = false;            // prover stops after committing round 1
};

// One committed answer bit. `index` is the image index (ideal and register
// model); `vec` holds lattice images computed classically.
struct SlotImage {
  std::size_t index = 0;
  ZVec vec;
};

struct RelationSpaTranscript {
  std::vector<std::size_t> commitments;
  std::vector<int> opened;  // bit positions
  std::vector<int> values;  // opened masked values
  std::vector<std::size_t> randomness;
  bool accept = false;
};

struct NdSession {
  VerifierSecret st;
  TcfKeypair keypair;                         // pp and td
  std::vector<std::array<SlotImage, 2>> y;    // per round: frag, tag
  int b = -1;                                 // prover's verdict bit (-1: aborted)
  bool spa_accept = false;
  bool verdict = false;
  bool td_sent = false;
  bool malformed_nonce = false;  // prover hook in force (recovery undoes the same unitaries)
  std::optional<Estimate> p_star;
  RelationSpaTranscript spa;
  nlohmann::json transcript = nlohmann::json::array();
  // Joint (witness, environment, P, A) state with the randomness registers
  // traced out; deferred recovery factors are kept separately.
  DensityMatrix state;
  struct Pending {
    std::string reg;
    CMat h_pre, h_post;  // normalized Gram factors before / after recovery
  };
  std::vector<Pending> pending;
};

struct NdResult {
  bool verdict = false;
  NdSession session;
  DensityMatrix leftover;      // on the witness layout (W plus untouched extras)
  double leftover_distance = 0.0;
  // General mode only.
  StateVector final_state;     // W plus extras, sampled pure component
  std::optional<Estimate> p_star2;
  RepairResult repair;
  bool repair_failed = false;
};

using RoundObserver = std::function<void(int round, const NdSession&)>;

NdResult nd_compile_run(const ToyBase& base, const StateVector& witness, const NdOptions& opts, Rng& rng,
                        const RoundObserver& observer = {});

// Recovery variants on a finished session (td is the session's keypair).
// High completeness: undo every commitment, then apply P_i^dagger in reverse.
DensityMatrix witness_recovery_high_c(const ToyBase& base, NdSession& session);
struct GeneralRecovery {
  StateVector state;  // full prover state after the final estimate
  Estimate p_star2;
  RepairResult repair;
};
GeneralRecovery witness_recovery_general(const ToyBase& base, NdSession& session, const Estimate& p_star,
                                         double epsilon, int lambda, Rng& rng, long t_max = 0);

// Schur factor f(digit, digit') on register `reg` of rho (no renormalization).
void schur_register(DensityMatrix& rho, const std::string& reg, const CMat& f);
// A pure state from rho: exact when rho is pure, otherwise an eigencomponent
// sampled with its weight.
StateVector sample_pure(const DensityMatrix& rho, Rng& rng);

// Direct-relation state-preserving argument over the answer qubits: every bit
// is committed masked by a fresh uniform pad, a random subset is opened and
// checked against its commitment, the rest are recovered.
bool relation_spa(DensityMatrix& rho, const std::vector<std::string>& bits, Rng& rng, RelationSpaTranscript& t);

// ---- extraction (injective keys)

struct ExtractResult {
  bool ok = false;             // every image decoded
  std::vector<int> answers;
  bool base_verdict = false;   // V2 on the extracted answers
  bool protocol_verdict = false;
  VerifierSecret st;
};
using ImageTamper = std::function<void(NdSession&, Rng&)>;
ExtractResult transcript_extract(const ToyBase& base, const StateVector& witness, const NdOptions& opts, Rng& rng,
                                 const ImageTamper& tamper = {});

// ---- sequential repetition

struct SeqRepConfig {
  int n = 1;
  double c = 0.8;
  double s = 0.4;
  double epsilon = 0.001;
  int lambda = 10;
  int d = 1;
  NdOptions nd;                           // mode forced to general
  std::function<bool(int rep)> sabotage;  // malformed nonces in these repetitions
  int abort_after = -1;                   // prover quits from this repetition on (1-based)
  int test_pass_samples = 0;              // per-repetition conditional test estimates
};

int threshold_count(double c, double s, int n_check);

struct RepairabilityLedger {
  std::vector<double> p_chain;    // estimate carried out of each repetition
  std::vector<bool> repair_ok;
  std::vector<long> oracle_calls;
  double p_initial = 0.0;
  double p_final = 0.0;
  double epsilon = 0.0;
  double grid_width = 0.0;
  nlohmann::json to_json() const;
};

struct SeqRepRound {
  Phase phase = Phase::test;
  bool verdict = false;
  double quality_before = 0.0;  // <w_{i-1}|V|w_{i-1}>, exact
  double test_pass = -1.0;      // conditional test-pass estimate (if sampled)
  int test_samples = 0;
};

struct SeqRepResult {
  bool accept = false;
  bool test_abort = false;
  int stopped_at = 0;  // repetitions actually run
  int n_check = 0;
  int n_check_pass = 0;
  int threshold = 0;
  std::vector<SeqRepRound> rounds;
  StateVector final_state;  // witness layout
  RepairabilityLedger ledger;
  nlohmann::json to_json() const;
};

SeqRepResult seqrep_run(const SeqRepConfig& cfg, const ToyBase& base, const StateVector& witness, Rng& rng);
// Independent recount of the threshold verdict from the per-round records.
bool seqrep_recount(const SeqRepResult& r, double c, double s);

struct SeqExtraction {
  int j = 0;                   // chosen repetition (1-based)
  bool success = false;
  std::optional<StateVector> witness;
  double quality = 0.0;        // <w_{j-1}|V|w_{j-1}>, recorded whether or not extraction succeeds
};
// Picks j uniformly, runs the honest protocol to repetition j, extracts that
// repetition's transcript and reads out the prover's witness register.
SeqExtraction seqrep_extract(const SeqRepConfig& cfg, const ToyBase& base, const StateVector& witness, Rng& rng);

// ---- tail bounds and diagnostics

// exp(-2 t^2 / sum c_k^2); 1 for t <= 0.
double azuma_bound(double t, const std::vector<double>& c);
// Completeness bound 1 - exp(-2 (N (c - s)/2)^2 / N).
double seqrep_hoeffding_bound(int n, double c, double s);
// The same bound conditioned on |B| ~ Binomial(N, 1/2) check repetitions.
double seqrep_check_count_bound(int n, double c, double s);

struct GoodTranscriptReport {
  double threshold = 0.0;  // 1 - 1/lambda^d
  std::vector<int> flagged;
  double allowed = 0.0;    // lambda^{d+1}
  bool accepted = false;
  bool good = false;
};
GoodTranscriptReport good_transcript_diagnostic(const SeqRepResult& r, int d, int lambda, int min_samples = 100);

}  // namespace wpv
