// Jordan decomposition of projector pairs, the alternating-measurement value
// estimator, state repair, and repairability classification.
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "wpv/qma.hpp"

namespace wpv {

struct JordanBlock {
  double p = 0.0;
  CVec b_vec;          // in range(Pi_B)
  CVec a_vec;          // normalized Pi_A b_vec; empty when p == 0
  bool one_dim = false;
};

struct JordanDecomposition {
  std::vector<JordanBlock> blocks;  // ascending p
};

JordanDecomposition jordan_decompose(const CMat& pi_a, const CMat& pi_b);

// Alternation count: each estimate lands within eps/2 of its block value except
// with probability delta/2 (Hoeffding on 2t Bernoulli repeats at radius eps/4).
long valest_t(double epsilon, double delta);

struct Estimate {
  double value = 0.0;  // k/t - 1/2, on the grid {k/t - 1/2 : k = 0..2t}
  double epsilon = 0.0;
  double delta = 0.0;
  long t = 0;
  long k = 0;
  long grid_size = 0;  // 2t + 1
};

double grid_value(long k, long t);

struct ValEstResult {
  Estimate p;
  StateVector post;
  bool completed = true;       // reset phase returned to |0,+>
  long completion_steps = 0;
};

// Acts on register `reg` of `state`; every other register is an untouched environment.
ValEstResult val_est(const QmaVerifier& v, const StateVector& state, double epsilon, double delta, Rng& rng,
                     const std::string& reg = "W");
// Mixed input: an eigencomponent of rho is sampled and estimated (same outcome law).
ValEstResult val_est(const QmaVerifier& v, const DensityMatrix& rho, double epsilon, double delta, Rng& rng,
                     const std::string& reg = "W");
// Literal simulation with explicit ancilla register R and three-level register T.
ValEstResult val_est_dense(const QmaVerifier& v, const StateVector& state, double epsilon, double delta, Rng& rng,
                           const std::string& reg = "W");

// Probability that val_est on `rho` (witness only) outputs a value >= threshold.
double valest_tail_prob(const QmaVerifier& v, const CMat& rho, double threshold, long t);

using Estimator = std::function<ValEstResult(const StateVector&, Rng&)>;
// Binary projective measurement applied in place; returns the outcome.
using BinaryMeasurement = std::function<int(StateVector&, Rng&)>;

struct RepairResult {
  StateVector state;
  bool ok = false;           // false when t_max was exhausted
  long oracle_calls = 0;     // estimator + projective calls
  std::vector<double> estimates;
  std::vector<int> pi_outcomes;
};

long default_t_max(double delta);

// Alternates the estimator and pi, stopping once an estimate lies within
// `radius` of p.
RepairResult repair(const Estimator& m, const BinaryMeasurement& pi, const StateVector& damaged, double p,
                    double radius, long t_max, Rng& rng);

struct RepairableVerdict {
  double fraction_below = 0.0;
  double std_error = 0.0;
  double threshold = 0.0;
  bool verdict = false;
  int trials = 0;
};

// Estimates Pr[p' < p - eps] for p' = val_est(state, eps, 2^-lambda).
RepairableVerdict classify_repairable(const StateVector& state, const QmaVerifier& v, double p, double epsilon,
                                      int lambda, int trials, Rng& rng, const std::string& reg = "W");

struct PurityReport {
  double q_good = 0.0;
  double q_bad = 0.0;
  double sqrt_gamma = 0.0;
  double acceptance = 0.0;  // Pr[estimate >= p*]
  bool precondition = false;
  bool ok = false;
  std::vector<double> eigen_acceptance;
};

// rho lives on the witness register only.
PurityReport repaired_purity_diagnostic(const CMat& rho, const QmaVerifier& v, double p_star, double epsilon,
                                        double delta, double gamma);

}  // namespace wpv
