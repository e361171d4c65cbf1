// QMA verifiers, their acceptance-operator spectra, witness fixtures and
// Marriott-Watrous amplification.
#pragma once

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "wpv/qsim.hpp"

namespace wpv {

struct EigenPair {
  double value = 0.0;
  CVec vector;
};

// Sorted by descending eigenvalue.
struct EigenSpectrum {
  std::vector<EigenPair> pairs;
};

class QmaVerifier {
 public:
  static constexpr double default_gap_floor = 1e-3;

  QmaVerifier() = default;
  QmaVerifier(std::string instance, QuantumAlgorithm alg, double a = 2.0 / 3.0, double b = 1.0 / 3.0,
              double gap_floor = default_gap_floor);

  const std::string& instance() const { return instance_; }
  const QuantumAlgorithm& algorithm() const { return alg_; }
  double a() const { return a_; }
  double b() const { return b_; }
  int witness_dim() const { return alg_.input_dim; }
  int ancilla_dim() const { return alg_.ancilla_dim(); }

  // Acceptance operator and its eigendecomposition (ascending, cached).
  const CMat& operator_v() const { return v_; }
  const Eigh& eigen() const { return eig_; }
  // U^dagger Pi_accept U on witness (x) ancilla.
  const CMat& dilated_accept() const { return g_; }

 private:
  std::string instance_;
  QuantumAlgorithm alg_;
  double a_ = 2.0 / 3.0, b_ = 1.0 / 3.0;
  CMat v_, g_;
  Eigh eig_;
};

EigenSpectrum eigen_spectrum(const QmaVerifier& v);

enum class WitnessMode { eigenstate, superposition };
StateVector make_witness(const EigenSpectrum& spectrum, double target_p, WitnessMode mode = WitnessMode::eigenstate,
                         const std::string& reg = "W");

// <psi|V|psi> for a state whose register `reg` is the witness (others are traced out).
double brute_force_acceptance(const QmaVerifier& v, const StateVector& s, const std::string& reg = "W");

// Fixture families.
// Witness dim = spectrum size; one ancilla qubit rotated by R_y(theta_j) on |j>.
QmaVerifier diagonal_verifier(const std::vector<double>& spectrum, const std::string& label = "diag");
// Identity dilation, accept = P (x) I, no ancilla: V = P.
QmaVerifier projector_verifier(const CMat& p, const std::string& label = "proj");
// Haar dilation on n witness qubits plus one ancilla qubit, accepting ancilla = 1.
QmaVerifier random_verifier(int witness_qubits, Rng& rng, const std::string& label = "haar");

struct MwResult {
  bool accept = false;
  long iterations = 0;
  double repeat_fraction = 0.0;
  bool returned = true;
  StateVector post;
};

long mw_iterations(int lambda, double a, double b);

// Amplifies on the witness register `reg` of `state`; other registers are left alone.
MwResult mw_amplify(const QmaVerifier& v, int lambda, const StateVector& state, Rng& rng,
                    const std::string& reg = "W");
// Literal register-level simulation of the same procedure (reference).
MwResult mw_amplify_dense(const QmaVerifier& v, int lambda, const StateVector& state, Rng& rng,
                          const std::string& reg = "W");

nlohmann::json verifier_to_json(const QmaVerifier& v);
QmaVerifier verifier_from_json(const nlohmann::json& j);

// Rows indexed by the witness basis, columns by all other registers (in layout order).
CMat split_witness(const StateVector& s, const std::string& reg);
StateVector join_witness(const CMat& m, const Layout& layout, const std::string& reg);

}  // namespace wpv
