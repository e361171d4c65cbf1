// Dense state-vector / density-matrix simulation over named registers.
#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace wpv {

using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using Rng = std::mt19937_64;

namespace tol {
inline constexpr double construction = 1e-9;
inline constexpr double assertion = 1e-6;
}  // namespace tol

// Hilbert-space cap shared by every module; adjustable from the CLI.
std::size_t max_dim();
void set_max_dim(std::size_t d);
void check_dim(std::size_t d, const char* what);

Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0);
double uniform01(Rng& rng);
// Index drawn with probability proportional to weights (need not be normalized).
std::size_t sample_discrete(const std::vector<double>& weights, Rng& rng);

struct Register {
  std::string name;
  int dim = 1;
};

// Ordered registers; the first register is the most significant digit.
class Layout {
 public:
  Layout() = default;
  explicit Layout(std::vector<Register> regs);

  std::size_t size() const { return size_; }
  const std::vector<Register>& regs() const { return regs_; }
  int index_of(const std::string& name) const;
  bool has(const std::string& name) const;
  int dim(const std::string& name) const { return regs_[index_of(name)].dim; }
  std::size_t stride(int i) const { return strides_[i]; }
  int digit(std::size_t basis, int reg) const {
    return static_cast<int>((basis / strides_[reg]) % regs_[reg].dim);
  }
  int digit(std::size_t basis, const std::string& name) const { return digit(basis, index_of(name)); }
  std::size_t dims_of(const std::vector<std::string>& names) const;

  Layout appended(const std::vector<Register>& extra) const;
  Layout without(const std::vector<std::string>& names) const;
  Layout only(const std::vector<std::string>& names) const;
  std::vector<std::string> names() const;

  bool operator==(const Layout& o) const;

 private:
  std::vector<Register> regs_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 1;
};

// Offsets of every multi-index over `targets` (row-major in the given order).
std::vector<std::size_t> sub_offsets(const Layout& l, const std::vector<std::string>& targets);
// Offsets of every multi-index over the complement of `targets`.
std::vector<std::size_t> rest_offsets(const Layout& l, const std::vector<std::string>& targets);

struct StateVector {
  Layout layout;
  CVec amp;

  StateVector() = default;
  StateVector(Layout l, CVec a);
  static StateVector basis(const Layout& l, std::size_t index);
  static StateVector zero(const Layout& l) { return basis(l, 0); }

  double norm() const { return amp.norm(); }
  void normalize();
  void check_normalized(double eps = tol::construction) const;
};

struct DensityMatrix {
  Layout layout;
  CMat rho;

  DensityMatrix() = default;
  DensityMatrix(Layout l, CMat r);
  static DensityMatrix from_pure(const StateVector& s);
  void check_valid(double eps = tol::construction) const;
};

StateVector tensor(const StateVector& a, const StateVector& b);
// Appends registers initialised to |0>.
StateVector append_zero(const StateVector& s, const std::vector<Register>& extra);

// op is applied to `targets`, identity elsewhere. No unitarity check.
void apply_op(StateVector& s, const CMat& op, const std::vector<std::string>& targets);
// Single-threaded reference for the OpenMP path above.
void apply_op_serial(StateVector& s, const CMat& op, const std::vector<std::string>& targets);
// rho -> op rho op^dagger on targets.
void apply_op(DensityMatrix& d, const CMat& op, const std::vector<std::string>& targets);
StateVector apply_unitary(const StateVector& s, const CMat& u, const std::vector<std::string>& targets);

// Permutes the basis of the whole space: new index = perm[old index].
void apply_permutation(StateVector& s, const std::vector<std::size_t>& perm);

struct Measurement {
  int outcome = 0;
  double prob = 0.0;
  StateVector post;
};

// Projectors act on `targets` (empty targets means the whole space).
Measurement measure_projective(const StateVector& s, const std::vector<CMat>& projectors,
                               const std::vector<std::string>& targets, Rng& rng);
Measurement measure_projective(const StateVector& s, const std::vector<CMat>& projectors, Rng& rng);
Measurement measure_basis(const StateVector& s, const std::string& reg, Rng& rng);
// Norm-squared of P|psi> with P on targets.
double projector_prob(const StateVector& s, const CMat& p, const std::vector<std::string>& targets);
// Projects register `reg` onto basis value v and renormalizes; returns the probability.
double project_basis(StateVector& s, const std::string& reg, int value);

DensityMatrix partial_trace(const StateVector& s, const std::vector<std::string>& keep);
DensityMatrix partial_trace(const DensityMatrix& d, const std::vector<std::string>& keep);
// Measures `drop` in the computational basis and removes those registers.
StateVector discard_unravel(const StateVector& s, const std::vector<std::string>& drop, Rng& rng);
// Removes registers that must be in basis value 0; throws if they carry weight elsewhere.
StateVector discard_zero(const StateVector& s, const std::vector<std::string>& drop, double eps = 1e-9);
// Reorders registers to the given name order.
StateVector reorder(const StateVector& s, const std::vector<std::string>& order);

struct QuantumAlgorithm {
  CMat dilation;   // unitary over input (x) ancilla, input most significant
  CMat accept;     // projector over the same space
  int input_dim = 1;
  std::vector<int> ancilla_dims;

  int ancilla_dim() const;
  void validate() const;
};

CMat acceptance_operator(const QuantumAlgorithm& alg);

struct Eigh {
  RVec values;   // ascending
  CMat vectors;  // columns, first nonzero component real-positive
};
Eigh eigh(const CMat& h);
void fix_phase(Eigen::Ref<CVec> v);

double trace_distance(const CMat& a, const CMat& b);
double trace_distance(const DensityMatrix& a, const DensityMatrix& b);
double trace_distance(const StateVector& a, const StateVector& b);

struct GoodBadSplit {
  double q_good = 0.0;
  CMat rho_good;
  double q_bad = 0.0;
  CMat rho_bad;
  std::vector<double> eigen_acceptance;  // per eigenvector of rho (nonzero weight)
};

// `accept` is the POVM element of the binary measurement on rho's space.
GoodBadSplit good_bad_decomposition(const DensityMatrix& rho, const CMat& accept, double gamma);

CMat haar_unitary(int d, Rng& rng);
StateVector random_state(const Layout& l, Rng& rng);
CMat kron(const CMat& a, const CMat& b);
CMat outer(const CVec& a, const CVec& b);
CMat projector_onto(const CVec& v);
bool is_unitary(const CMat& u, double eps = tol::construction);
bool is_projector(const CMat& p, double eps = tol::construction);

}  // namespace wpv
