// Alternating binary projective measurements {Pi_A, Pi_B}, started from a state
// inside range(Pi_B). Two kernels with identical outcome law:
//  - dense: literal step-by-step simulation on the full register space
//    (serial reference, cost grows with the step count);
//  - collapsed: works in the Jordan basis. Within a 2-D block every consecutive
//    pair of outcomes repeats independently with probability p_j, and the
//    amplitude of an outcome string depends on the block only through
//    p_j^{k/2}(1-p_j)^{(n-k)/2}. Sampling the repeat count k from the block
//    mixture and reweighting the blocks gives the exact joint law of
//    (k, post-state) in O(blocks) work independent of n.
#pragma once

#include "wpv/qsim.hpp"

namespace wpv {

struct AlternatingOutcome {
  long repeats = 0;          // consecutive equal pairs among (1, L_1..L_n)
  bool returned = true;      // final Pi_B outcome was 1
  long completion_steps = 0; // measurements spent after the main phase
  // Block coefficients after the run: row j multiplies the block-j vector
  // (B-side "1" vector if returned, B-side "0" vector otherwise). Unnormalized.
  CMat coeffs;
};

// `p` holds the Jordan values of the range(Pi_B) eigenbasis, `coeffs` the input
// state's rows in that basis (one row per block, columns over an environment).
// `steps` must be even so the main phase ends on a Pi_B measurement.
AlternatingOutcome alternate_collapsed(const RVec& p, const CMat& coeffs, long steps, long completion, Rng& rng);

struct DenseAlternatingOutcome {
  long repeats = 0;
  bool returned = true;
  long completion_steps = 0;
  std::vector<int> outcomes;  // L_1..L_n then completion outcomes
  StateVector post;
};

DenseAlternatingOutcome alternate_dense(const StateVector& start, const CMat& pi_a,
                                        const std::vector<std::string>& targets_a, const CMat& pi_b,
                                        const std::vector<std::string>& targets_b, long steps, long completion,
                                        Rng& rng);

// State sum_j |block_j> (x) coeffs.row(j), where block vectors live on
// (reg, anc...) with reg most significant; the ancillas are appended to `layout`.
StateVector assemble_blocks(const CMat& block_vectors, const CMat& coeffs, const Layout& layout,
                            const std::string& reg, const std::vector<Register>& anc);

}  // namespace wpv
