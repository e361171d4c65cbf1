// Dual-mode trapdoor functions with state recovery: an ideal family for exact
// protocol simulation and the lattice family built on gadget trapdoors.
#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "wpv/qsim.hpp"

namespace wpv {

using ZMat = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;
using ZVec = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;

enum class TcfMode { recovery, injective };
enum class TcfInstantiation { ideal, lattice };

std::string to_string(TcfMode m);
std::string to_string(TcfInstantiation i);

// Centered representative in (-q/2, q/2].
std::int64_t centered(std::int64_t v, std::int64_t q);
std::int64_t mod_q(std::int64_t v, std::int64_t q);

struct LweParams {
  int n = 1;
  int m = 9;
  std::int64_t q = 257;
  int b = 1;
  int b_prime = 8;
  int recovery_lambda_mult = 2;  // B/B' = 1/(2^{mult*lambda'} 2 pi m)
  double c = 1.8;                // gadget-inversion constant

  int k() const;                    // ceil(log2 q)
  double invert_bound() const;      // q / (C sqrt(n log2 q))
  double b_prime_bound() const;     // q / (2C sqrt(n m log2 q))
  double recovery_lambda() const;   // lambda' solved from the configured B/B'
  double sigma() const { return b_prime / 3.0; }
  std::vector<std::string> violations() const;

  static LweParams classical_fixture();           // q=257, n=1, m=9, B'=8, B=1
  static LweParams quantum_micro(int b = 1);      // q=13, n=1, m=1, B'=2
};

// H^2 = 1 - exp(-2 pi m B/B'); trace-distance bound sqrt(1 - (1-H^2)^2).
double hellinger_sq(const LweParams& p);
double recovery_bound(const LweParams& p);

struct GadgetTrapdoor {
  ZMat a;      // m x n
  ZMat a_bar;  // (m - nk) x n
  ZMat g;      // nk x n
  ZMat r;      // (m - nk) x nk, binary
  ZMat t;      // [[I, -R], [0, I]]
  ZMat t_inv;  // [[I,  R], [0, I]]
};

ZMat gadget_matrix(int n, std::int64_t q);
GadgetTrapdoor trapgen_mp(const LweParams& params, Rng& rng);

struct Inversion {
  bool ok = false;
  ZVec s;
  ZVec e;  // centered
};

// Recovers (s, e) from y = A s + e; fails when the decoded error exceeds `bound` (l2).
Inversion invert_mp(const GadgetTrapdoor& td, const LweParams& p, const ZVec& y, double bound);
Inversion invert_mp(const GadgetTrapdoor& td, const LweParams& p, const ZVec& y);

struct LatticeKey {
  LweParams params;
  ZMat a;
  ZVec u;
  bool has_gadget = false;
  GadgetTrapdoor gadget;
  // Recovery secret u = A s + e (kept in td).
  ZVec s;
  ZVec e;
};

struct IdealKey {
  int kappa = 1;  // randomness bits per domain bit
  // Recovery tables g_i(b), one pair per domain bit.
  std::vector<std::array<std::uint32_t, 2>> g;
};

struct TcfKeypair {
  TcfMode mode = TcfMode::recovery;
  TcfInstantiation inst = TcfInstantiation::ideal;
  int domain_bits = 1;
  IdealKey ideal;
  LatticeKey lattice;
};

TcfKeypair setup_ideal(int domain_bits, TcfMode mode, Rng& rng, int kappa = 1);
TcfKeypair setup_lattice(const LweParams& params, TcfMode mode, Rng& rng, int domain_bits = 1);
// Explicit micro key: A, recovery secret (s, e); u = A s + e. No gadget trapdoor.
TcfKeypair lattice_micro_key(const LweParams& params, const ZMat& a, const ZVec& s, const ZVec& e,
                             int domain_bits = 1);

// Classical evaluation of one domain bit.
struct LatticeRandom {
  ZVec x;   // Z_q^n
  ZVec ep;  // centered, |.| <= B'
};
ZVec eval_lattice(const TcfKeypair& kp, int b, const LatticeRandom& r);
// x uniform, e' from the truncated Gaussian chi_{B'}.
LatticeRandom sample_lattice_random(const LweParams& p, Rng& rng);
std::uint32_t eval_ideal(const TcfKeypair& kp, int bit, int b, std::uint32_t r);

struct ExtResult {
  bool in_image = false;
  int b = 0;
};
ExtResult ext_lattice(const TcfKeypair& kp, const ZVec& y);
ExtResult ext_ideal(const TcfKeypair& kp, std::uint32_t y);

// Register-level model of one domain bit. Randomness and images are indexed
// integers; for the lattice family r = (x, e') with e' stored mod q.
std::size_t rand_dim(const TcfKeypair& kp);
std::size_t image_dim(const TcfKeypair& kp);
CVec rand_amplitudes(const TcfKeypair& kp);
StateVector rand_superposition(const TcfKeypair& kp, const std::string& reg = "R");
// Image index, or -1 when r lies outside the randomness support.
long eval_index(const TcfKeypair& kp, int bit, int b, std::size_t r);
// Preimage randomness index of y under input b (recovery mode), -1 if none.
long recover_preimage(const TcfKeypair& kp, int bit, int b, std::size_t y);
// Index map r -> r - preimage_b(y) (a permutation of the randomness register).
std::size_t recover_shift(const TcfKeypair& kp, int bit, int b, std::size_t y, std::size_t r);

// Appends the randomness register, evaluates bit `data_reg` (dim 2) coherently,
// measures the image and returns it; the randomness register stays attached.
std::size_t exp_measure(const TcfKeypair& kp, int bit, StateVector& s, const std::string& data_reg,
                        const std::string& rand_reg, Rng& rng);
// Recover: subtract the b-conditioned preimage from the randomness register.
void recover(const TcfKeypair& kp, int bit, StateVector& s, const std::string& data_reg,
             const std::string& rand_reg, std::size_t y);

// Gram description of one bit's eval-measure(-recover) map, per image value:
// rho_{bb'} -> G[y](b,b') rho_{bb'} after tracing the randomness.
struct BitChannel {
  std::vector<std::array<double, 2>> likelihood;  // p(y | b)
  std::vector<CMat> g_pre;                        // before recovery
  std::vector<CMat> g_post;                       // after recovery
  CMat g_post_total() const;
  CMat g_pre_total() const;
};
BitChannel bit_channel(const TcfKeypair& kp, int bit);

// Exact y-averaged recover(exp(rho)) on the data qubits `bits` (one domain bit each).
DensityMatrix recover_exp_channel(const TcfKeypair& kp, const DensityMatrix& rho,
                                  const std::vector<std::string>& bits);

// Max trace distance between (Recover o U o Exp) and U over maximally-entangled
// probes on (A, B) with a reference copy. `ux[x]` acts on A (dim da) for B = x.
double channel_test(const TcfKeypair& kp, const std::vector<CMat>& ux, bool measure_a);

// Exhaustive preimages of one-bit images (enumeration budget 2^24).
struct Preimage {
  int b = 0;
  std::size_t r = 0;
};
std::vector<Preimage> exhaustive_preimage_oracle(const TcfKeypair& kp, int bit, std::size_t y);

// Lattice offsets: min over d != 0 of ||A d||_inf and min over d of ||u - A d||_inf
// (centered). Injective correctness holds when both exceed 2B'.
struct InjectivityMargins {
  std::int64_t lattice_min = 0;
  std::int64_t offset_min = 0;
};
InjectivityMargins injectivity_margins(const TcfKeypair& kp);

void write_keypair(std::ostream& os, const TcfKeypair& kp);
TcfKeypair read_keypair(std::istream& is);

}  // namespace wpv
