// State-preserving argument for graph 3-coloring: commit every vertex's
// permuted color with a recovery-mode trapdoor function, open one edge, and
// undo everything else with the trapdoor.
#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "wpv/tcf.hpp"

namespace wpv {

struct Graph {
  int vertices = 0;
  std::vector<std::pair<int, int>> edges;

  void validate() const;
  static Graph parse(std::istream& is);  // "u v" per line, 0-indexed, '#' comments
  std::string to_edge_list() const;

  static Graph complete(int n);
  static Graph path(int n);
};

// Colors live in {0,1,2}; 3 marks an invalid color (adversarial probes only).
bool valid_coloring(const Graph& g, const std::vector<int>& c);
std::vector<std::vector<int>> valid_colorings(const Graph& g);

// S_3 in a fixed order; index 0 is the identity.
const std::vector<std::array<int, 3>>& s3();
// The unique pi with pi(wi) = ci and pi(wj) = cj, or -1.
int unique_permutation(int wi, int wj, int ci, int cj);

// Witness state over registers W0..W{V-1} (dim 3 each), uniform or weighted.
StateVector coloring_superposition(const Graph& g, const std::vector<std::vector<int>>& colorings,
                                   const std::vector<cplx>& amplitudes = {});
std::vector<std::string> witness_registers(const Graph& g);

struct SpaTranscript {
  std::vector<std::array<std::size_t, 2>> y;  // per vertex, one image per color bit
  int edge = -1;
  int i = -1, j = -1;
  int ci = -1, cj = -1;
  std::array<std::size_t, 2> ri{}, rj{};
  bool accept = false;
  bool td_revealed = false;
  nlohmann::json to_json() const;
};

struct SpaResult {
  bool accept = false;
  DensityMatrix leftover;  // witness registers plus any untouched extras
  SpaTranscript transcript;
};

// Per-vertex commitment channels for a two-bit color keypair (cached Gram data).
class SpaKeys {
 public:
  explicit SpaKeys(TcfKeypair kp);
  const TcfKeypair& keypair() const { return kp_; }
  const BitChannel& channel(int bit) const { return ch_[static_cast<std::size_t>(bit)]; }
  // Samples an opening randomness for bit value b consistent with image y.
  std::size_t sample_opening(int bit, int b, std::size_t y, Rng& rng) const;

 private:
  TcfKeypair kp_;
  std::vector<BitChannel> ch_;
  CVec amp_;
};

// One session on `state` (registers named by witness_registers(g), plus extras).
// `forced_edge` pins the challenge (exhaustive completeness checks).
SpaResult spa_run(const Graph& g, const DensityMatrix& state, const SpaKeys& keys, Rng& rng,
                  std::optional<int> forced_edge = std::nullopt);

// Stepwise session for interleaving tests; P register is named "P_<tag>".
class SpaSession {
 public:
  SpaSession(const Graph& g, const SpaKeys& keys, std::string tag);
  void begin(DensityMatrix& rho);
  void commit(DensityMatrix& rho, Rng& rng);
  void challenge(Rng& rng, std::optional<int> forced_edge = std::nullopt);
  void open(DensityMatrix& rho, Rng& rng);
  void finish(DensityMatrix& rho);
  const SpaTranscript& transcript() const { return t_; }

 private:
  const Graph& g_;
  const SpaKeys& keys_;
  std::string preg_;
  SpaTranscript t_;
  std::vector<double> weight_;  // diagonal weights conditioned on the images so far
};

// Sessions on the same witness register; parallel keeps going after a reject.
struct RepeatResult {
  bool accept = false;
  DensityMatrix leftover;
  std::vector<SpaTranscript> transcripts;
};
using KeyFactory = std::function<SpaKeys(Rng&)>;
RepeatResult spa_parallel_repeat(const Graph& g, const DensityMatrix& state, int n, const KeyFactory& keys, Rng& rng);
RepeatResult spa_sequential_repeat(const Graph& g, const DensityMatrix& state, int k, const KeyFactory& keys, Rng& rng);

// Distance bound for the leftover: (|V| - 2) slots, two color bits each.
double spa_leftover_bound(const Graph& g, const TcfKeypair& kp);

// ---- soundness and extraction (injective mode, classical provers)

struct ColorCommitment {
  std::array<std::size_t, 2> ideal_y{};
  std::array<ZVec, 2> lattice_y;
};
using CommitStrategy = std::function<std::vector<ColorCommitment>(const Graph&, const TcfKeypair&, Rng&)>;

// Commits the given colors honestly (fresh randomness per bit).
std::vector<ColorCommitment> commit_colors(const TcfKeypair& kp, const std::vector<int>& colors, Rng& rng);
// Color bound to a commitment under an injective key, or -1 if any bit is out of image.
int extract_color(const TcfKeypair& kp, const ColorCommitment& c);

int bad_edges(const Graph& g, const std::vector<int>& colors);
// Minimum bad-edge count over every assignment in {0..3}^V.
int min_bad_edges(const Graph& g);
std::vector<int> best_adversarial_coloring(const Graph& g);

struct SoundnessReport {
  double rate = 0.0;          // Monte-Carlo acceptance
  double std_error = 0.0;
  double exact_rate = 0.0;    // mean over challenge edges, averaged over trials
  double bound = 0.0;         // 1 - min_bad/|E|
  int trials = 0;
};
SoundnessReport spa_soundness_probe(const Graph& g, const CommitStrategy& prover, int trials, Rng& rng,
                                    TcfInstantiation inst = TcfInstantiation::ideal);
// n independent sessions per trial, accepting iff all accept.
SoundnessReport spa_soundness_repeat(const Graph& g, const CommitStrategy& prover, int n, int trials, Rng& rng);

CommitStrategy fixed_coloring_strategy(std::vector<int> colors);
// Honest prover: random permutation of the witness coloring.
CommitStrategy honest_strategy(std::vector<int> coloring);

std::optional<std::vector<int>> spa_extract(const CommitStrategy& prover, const Graph& g, Rng& rng,
                                            TcfInstantiation inst = TcfInstantiation::ideal);

}  // namespace wpv
