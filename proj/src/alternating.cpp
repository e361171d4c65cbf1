#include "wpv/alternating.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace wpv {

namespace {

double log_or_neg_inf(double x) { return x > 0.0 ? std::log(x) : -std::numeric_limits<double>::infinity(); }

// k*log(p) + (n-k)*log(1-p) with 0*log(0) = 0.
double log_path_weight(double p, long k, long n) {
  double out = 0.0;
  if (k > 0) out += static_cast<double>(k) * log_or_neg_inf(p);
  if (n - k > 0) out += static_cast<double>(n - k) * log_or_neg_inf(1.0 - p);
  return out;
}

}  // namespace

AlternatingOutcome alternate_collapsed(const RVec& p, const CMat& coeffs, long steps, long completion, Rng& rng) {
  if (steps < 0 || steps % 2 != 0) throw std::invalid_argument("alternate_collapsed: steps must be even");
  if (p.size() != coeffs.rows()) throw std::invalid_argument("alternate_collapsed: block count mismatch");
  const Eigen::Index nb = p.size();

  std::vector<double> w(static_cast<std::size_t>(nb));
  for (Eigen::Index j = 0; j < nb; ++j) w[j] = coeffs.row(j).squaredNorm();
  const std::size_t j0 = sample_discrete(w, rng);
  const double pj = std::clamp(p(static_cast<Eigen::Index>(j0)), 0.0, 1.0);
  std::binomial_distribution<long> bin(steps, pj);
  const long k = steps > 0 ? bin(rng) : 0;

  AlternatingOutcome out;
  out.repeats = k;
  out.coeffs = coeffs;
  std::vector<double> la(static_cast<std::size_t>(nb));
  double top = -std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < nb; ++j) {
    la[j] = w[j] > 0.0 ? 0.5 * log_path_weight(std::clamp(p(j), 0.0, 1.0), k, steps)
                       : -std::numeric_limits<double>::infinity();
    top = std::max(top, la[j]);
  }
  for (Eigen::Index j = 0; j < nb; ++j) out.coeffs.row(j) *= std::isfinite(la[j]) ? std::exp(la[j] - top) : 0.0;
  out.coeffs /= out.coeffs.norm();

  // Each non-repeat flips the current bit; the main phase ends on Pi_B.
  out.returned = ((steps - k) % 2 == 0);
  if (out.returned) return out;

  // Completion: the state sits on the B-side "0" vectors.
  bool on_a1 = false;
  for (long s = 1; s <= completion; ++s) {
    const bool measure_a = (s % 2 == 1);
    std::vector<double> go1(static_cast<std::size_t>(nb)), go0(static_cast<std::size_t>(nb));
    for (Eigen::Index j = 0; j < nb; ++j) {
      const double pp = std::clamp(p(j), 0.0, 1.0);
      if (measure_a) {
        go1[j] = std::sqrt(1.0 - pp);  // <A1|B0>
        go0[j] = -std::sqrt(pp);       // <A0|B0>
      } else if (on_a1) {
        go1[j] = std::sqrt(pp);        // <B1|A1>
        go0[j] = std::sqrt(1.0 - pp);  // <B0|A1>
      } else {
        go1[j] = std::sqrt(1.0 - pp);  // <B1|A0>
        go0[j] = -std::sqrt(pp);       // <B0|A0>
      }
    }
    double p1 = 0.0, total = 0.0;
    for (Eigen::Index j = 0; j < nb; ++j) {
      const double m = out.coeffs.row(j).squaredNorm();
      p1 += go1[j] * go1[j] * m;
      total += m;
    }
    const bool one = uniform01(rng) * total < p1;
    for (Eigen::Index j = 0; j < nb; ++j) out.coeffs.row(j) *= one ? go1[j] : go0[j];
    out.coeffs /= out.coeffs.norm();
    if (measure_a) {
      on_a1 = one;
    } else if (one) {
      out.returned = true;
      out.completion_steps = s;
      return out;
    }
  }
  out.completion_steps = completion;
  return out;
}

DenseAlternatingOutcome alternate_dense(const StateVector& start, const CMat& pi_a,
                                        const std::vector<std::string>& targets_a, const CMat& pi_b,
                                        const std::vector<std::string>& targets_b, long steps, long completion,
                                        Rng& rng) {
  if (steps < 0 || steps % 2 != 0) throw std::invalid_argument("alternate_dense: steps must be even");
  if (projector_prob(start, pi_b, targets_b) < 1.0 - tol::assertion)
    throw std::invalid_argument("alternate_dense: start state not in range(Pi_B)");
  const std::vector<CMat> ma{pi_a, CMat::Identity(pi_a.rows(), pi_a.cols()) - pi_a};
  const std::vector<CMat> mb{pi_b, CMat::Identity(pi_b.rows(), pi_b.cols()) - pi_b};

  DenseAlternatingOutcome out;
  StateVector s = start;
  int prev = 1;
  auto step = [&](long idx) {
    const bool measure_a = (idx % 2 == 1);
    Measurement m = measure_a ? measure_projective(s, ma, targets_a, rng) : measure_projective(s, mb, targets_b, rng);
    s = std::move(m.post);
    const int bit = (m.outcome == 0) ? 1 : 0;
    out.outcomes.push_back(bit);
    return bit;
  };
  for (long i = 1; i <= steps; ++i) {
    const int bit = step(i);
    if (bit == prev) ++out.repeats;
    prev = bit;
  }
  out.returned = (prev == 1);
  if (!out.returned) {
    for (long i = 1; i <= completion; ++i) {
      const int bit = step(i);
      if (i % 2 == 0 && bit == 1) {
        out.returned = true;
        out.completion_steps = i;
        break;
      }
    }
    if (!out.returned) out.completion_steps = completion;
  }
  out.post = std::move(s);
  return out;
}

StateVector assemble_blocks(const CMat& block_vectors, const CMat& coeffs, const Layout& layout,
                            const std::string& reg, const std::vector<Register>& anc) {
  Layout full = layout.appended(anc);
  check_dim(full.size(), "assemble_blocks");
  std::vector<std::string> targets{reg};
  for (const auto& r : anc) targets.push_back(r.name);
  const auto sub = sub_offsets(full, targets);
  const auto rest = rest_offsets(full, targets);
  const CMat m = block_vectors * coeffs;
  CVec a(static_cast<Eigen::Index>(full.size()));
  for (std::size_t c = 0; c < rest.size(); ++c)
    for (std::size_t r = 0; r < sub.size(); ++r) a(static_cast<Eigen::Index>(sub[r] + rest[c])) = m(r, c);
  StateVector s(full, a);
  s.normalize();
  return s;
}

}  // namespace wpv
