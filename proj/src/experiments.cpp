// The experiment registry. Every trial function records raw outcomes plus the
// parameters it used; every summarize function decides pass/fail from those
// records alone.
#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <unordered_map>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "wpv/harness.hpp"

namespace wpv {

namespace {

using nlohmann::json;

double binom_se(double f, std::size_t n) { return n ? std::sqrt(f * (1.0 - f) / static_cast<double>(n)) : 0.0; }

std::vector<double> column(const std::vector<Record>& rs, const char* key) {
  std::vector<double> v;
  for (const auto& r : rs) v.push_back(r.at(key).get<double>());
  return v;
}

StatsSummary start(const char* id, const std::vector<Record>& rs) {
  StatsSummary s;
  s.experiment = id;
  s.trials = static_cast<int>(rs.size());
  return s;
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

TcfInstantiation inst_of(const std::string& tcf) {
  return tcf == "ideal" ? TcfInstantiation::ideal : TcfInstantiation::lattice;
}

LweParams lattice_of(const std::string& tcf) {
  return tcf == "lattice-classical" ? LweParams::classical_fixture() : LweParams::quantum_micro();
}

CMat random_projector(int d, int rank, Rng& rng) {
  const CMat u = haar_unitary(d, rng);
  return u.leftCols(rank) * u.leftCols(rank).adjoint();
}

// ---------------------------------------------------------------- 1

Experiment valest_expectation() {
  Experiment e;
  e.id = "valest-expectation";
  e.criterion = 1;
  e.description = "mean ValEst output equals the brute-force acceptance on random states";
  e.defaults = [](ExperimentConfig& c) {
    c.trials = 10;
    c.shots = 10000;
    c.epsilon = 0.1;
    c.delta = 0.01;
  };
  e.prepare = [](const ExperimentConfig& cfg) -> TrialFn {
    return [cfg](int i, Rng& rng) {
      const int q = 1 + i % 3;
      const QmaVerifier v = random_verifier(q, rng);
      const StateVector st = random_state(Layout({{"W", 1 << q}}), rng);
      std::map<long, long> hist;
      long t = 0;
      for (int k = 0; k < cfg.shots; ++k) {
        const ValEstResult r = val_est(v, st, cfg.epsilon, cfg.delta, rng);
        ++hist[r.p.k];
        t = r.p.t;
      }
      json h = json::array();
      for (const auto& [k, n] : hist) h.push_back({k, n});
      return json{{"qubits", q}, {"brute_force", brute_force_acceptance(v, st)}, {"t", t},
                  {"shots", cfg.shots}, {"epsilon", cfg.epsilon}, {"delta", cfg.delta}, {"hist", h}};
    };
  };
  e.summarize = [](const std::vector<Record>& rs) {
    StatsSummary s = start("valest-expectation", rs);
    std::vector<double> zs, errs;
    for (const auto& r : rs) {
      const double t = r.at("t").get<double>();
      double n = 0, sum = 0, sq = 0;
      for (const auto& kv : r.at("hist")) {
        const double x = kv.at(0).get<double>() / t - 0.5, c = kv.at(1).get<double>();
        n += c;
        sum += c * x;
        sq += c * x * x;
      }
      const double mean = sum / n;
      const double var = n > 1 ? (sq - n * mean * mean) / (n - 1) : 0.0;
      const double se = std::sqrt(std::max(var, 0.0) / n);
      const double err = std::abs(mean - r.at("brute_force").get<double>());
      errs.push_back(err);
      zs.push_back(se > 0 ? err / se : (err < 1e-12 ? 0.0 : INFINITY));
    }
    s.metrics.push_back(summarize_metric("abs_error", errs));
    s.metrics.push_back(summarize_metric("z", zs));
    const double zmax = zs.empty() ? INFINITY : *std::max_element(zs.begin(), zs.end());
    s.criteria.push_back({1, "valest mean within 3 SE of brute force", zmax <= 3.0, zmax, 3.0,
                          std::to_string(rs.size()) + " states"});
    return s;
  };
  return e;
}

// ---------------------------------------------------------------- 2

Experiment valest_projectivity() {
  Experiment e;
  e.id = "valest-projectivity";
  e.criterion = 2;
  e.description = "two consecutive ValEst runs agree within max(eps) except w.p. max(delta)";
  e.defaults = [](ExperimentConfig& c) {
    c.trials = 1000;
    c.fixture.verifier = "haar-2q";
  };
  e.prepare = [](const ExperimentConfig& cfg) -> TrialFn {
    const QmaVerifier v = fixture_verifier(cfg.fixture.verifier);
    return [v](int, Rng& rng) {
      const std::array<std::array<double, 4>, 3> cases{{{0.1, 0.01, 0.1, 0.01},
                                                        {0.05, 0.05, 0.05, 0.05},
                                                        {0.1, 0.01, 0.05, 0.05}}};
      const StateVector st = random_state(Layout({{"W", v.witness_dim()}}), rng);
      json pairs = json::array();
      for (const auto& c : cases) {
        const ValEstResult a = val_est(v, st, c[0], c[1], rng);
        const ValEstResult b = val_est(v, a.post, c[2], c[3], rng);
        pairs.push_back({{"eps1", c[0]}, {"delta1", c[1]}, {"eps2", c[2]}, {"delta2", c[3]}, {"p1", a.p.value},
                         {"p2", b.p.value}});
      }
      return json{{"pairs", pairs}};
    };
  };
  e.summarize = [](const std::vector<Record>& rs) {
    StatsSummary s = start("valest-projectivity", rs);
    if (rs.empty()) return s;
    const std::size_t nc = rs.front().at("pairs").size();
    for (std::size_t c = 0; c < nc; ++c) {
      std::size_t bad = 0;
      double eps = 0, delta = 0;
      std::vector<double> diffs;
      for (const auto& r : rs) {
        const auto& p = r.at("pairs").at(c);
        eps = std::max(p.at("eps1").get<double>(), p.at("eps2").get<double>());
        delta = std::max(p.at("delta1").get<double>(), p.at("delta2").get<double>());
        const double d = std::abs(p.at("p1").get<double>() - p.at("p2").get<double>());
        diffs.push_back(d);
        if (d > eps + 1e-12) ++bad;
      }
      const double f = static_cast<double>(bad) / rs.size();
      const double bound = delta + 3.0 * binom_se(f, rs.size());
      const auto& p0 = rs.front().at("pairs").at(c);
      const std::string tag = "(" + fmt(p0.at("eps1")) + "," + fmt(p0.at("delta1")) + ")->(" + fmt(p0.at("eps2")) +
                              "," + fmt(p0.at("delta2")) + ")";
      s.metrics.push_back(summarize_metric("abs_diff " + tag, diffs));
      s.criteria.push_back({2, "almost-projective " + tag, f <= bound, f, bound, "fraction beyond max eps"});
    }
    return s;
  };
  return e;
}

// ---------------------------------------------------------------- 3

Experiment eigen_concentration() {
  Experiment e;
  e.id = "eigen-concentration";
  e.criterion = 3;
  e.description = "ValEst on eigenstates lands within eps of the eigenvalue except w.p. delta";
  e.defaults = [](ExperimentConfig& c) {
    c.trials = 1000;
    c.epsilon = 0.1;
    c.delta = 0.02;
    c.fixture.verifier = "diag-grid";
  };
  e.prepare = [](const ExperimentConfig& cfg) -> TrialFn {
    const QmaVerifier v = fixture_verifier(cfg.fixture.verifier);
    std::vector<std::pair<double, StateVector>> eig;
    for (const auto& p : eigen_spectrum(v).pairs)
      eig.emplace_back(p.value, StateVector(Layout({{"W", v.witness_dim()}}), p.vector));
    return [v, eig, cfg](int, Rng& rng) {
      json ps = json::array(), est = json::array();
      for (const auto& [p, st] : eig) {
        ps.push_back(p);
        est.push_back(val_est(v, st, cfg.epsilon, cfg.delta, rng).p.value);
      }
      return json{{"p_star", ps}, {"p", est}, {"epsilon", cfg.epsilon}, {"delta", cfg.delta}};
    };
  };
  e.summarize = [](const std::vector<Record>& rs) {
    StatsSummary s = start("eigen-concentration", rs);
    if (rs.empty()) return s;
    const double eps = rs.front().at("epsilon"), delta = rs.front().at("delta");
    for (std::size_t j = 0; j < rs.front().at("p_star").size(); ++j) {
      const double ps = rs.front().at("p_star").at(j);
      std::size_t bad = 0;
      std::vector<double> dev;
      for (const auto& r : rs) {
        const double d = std::abs(r.at("p").at(j).get<double>() - ps);
        dev.push_back(d);
        if (d > eps + 1e-12) ++bad;
      }
      const double f = static_cast<double>(bad) / rs.size();
      const double bound = delta + 3.0 * binom_se(f, rs.size());
      s.metrics.push_back(summarize_metric("abs_dev p*=" + fmt(ps), dev));
      s.criteria.push_back({3, "concentration p*=" + fmt(ps), f <= bound, f, bound, "fraction beyond eps"});
    }
    return s;
  };
  return e;
}

// ---------------------------------------------------------------- 4

Experiment jordan_oracle() {
  Experiment e;
  e.id = "jordan-oracle";
  e.criterion = 4;
  e.description = "Jordan block values against a general eigensolver of Pi_B Pi_A Pi_B";
  e.defaults = [](ExperimentConfig& c) { c.trials = 50; };
  e.prepare = [](const ExperimentConfig&) -> TrialFn {
    return [](int, Rng& rng) {
      const int d = std::uniform_int_distribution<int>(2, 32)(rng);
      const int ra = std::uniform_int_distribution<int>(1, d)(rng);
      const int rb = std::uniform_int_distribution<int>(1, d)(rng);
      const CMat pa = random_projector(d, ra, rng), pb = random_projector(d, rb, rng);
      const JordanDecomposition jd = jordan_decompose(pa, pb);
      std::vector<double> blocks;
      for (const auto& b : jd.blocks) blocks.push_back(b.p);
      // Independent path: the non-Hermitian solver on the full product.
      Eigen::ComplexEigenSolver<CMat> ces(pb * pa * pb);
      std::vector<double> ev;
      for (Eigen::Index i = 0; i < ces.eigenvalues().size(); ++i) ev.push_back(ces.eigenvalues()(i).real());
      std::sort(ev.rbegin(), ev.rend());
      ev.resize(static_cast<std::size_t>(rb));
      return json{{"dim", d}, {"rank_a", ra}, {"rank_b", rb}, {"blocks", blocks}, {"oracle", ev}};
    };
  };
  e.summarize = [](const std::vector<Record>& rs) {
    StatsSummary s = start("jordan-oracle", rs);
    double worst = 0.0;
    int count_mismatch = 0;
    std::vector<double> errs;
    for (const auto& r : rs) {
      auto b = r.at("blocks").get<std::vector<double>>();
      const auto o = r.at("oracle").get<std::vector<double>>();
      std::sort(b.rbegin(), b.rend());
      if (b.size() != o.size()) {
        ++count_mismatch;
        continue;
      }
      double m = 0.0;
      for (std::size_t i = 0; i < b.size(); ++i) m = std::max(m, std::abs(b[i] - o[i]));
      errs.push_back(m);
      worst = std::max(worst, m);
    }
    s.metrics.push_back(summarize_metric("max_abs_error", errs));
    s.criteria.push_back({4, "block values match eigensolver", count_mismatch == 0 && worst <= 1e-8, worst, 1e-8,
                          std::to_string(count_mismatch) + " block-count mismatches"});
    return s;
  };
  return e;
}

// ---------------------------------------------------------------- 5

Experiment repair_bound() {
  Experiment e;
  e.id = "repair-bound";
  e.criterion = 5;
  e.description = "repair after a rank-1 projective disturbance restores the estimate";
  e.defaults = [](ExperimentConfig& c) {
    c.trials = 1000;
    c.epsilon = 0.1;
    c.delta = 0.001;
    c.fixture.verifier = "diag-0.8";
    c.fixture.witness_p = 0.8;
  };
  e.prepare = [](const ExperimentConfig& cfg) -> TrialFn {
    const QmaVerifier v = fixture_verifier(cfg.fixture.verifier);
    const StateVector w = make_witness(eigen_spectrum(v), cfg.fixture.witness_p);
    CVec plus = CVec::Constant(v.witness_dim(), 1.0 / std::sqrt(static_cast<double>(v.witness_dim())));
    const CMat p = projector_onto(plus);
    const CMat q = CMat::Identity(p.rows(), p.cols()) - p;
    return [v, w, p, q, cfg](int, Rng& rng) {
      const Estimator m = [&](const StateVector& s, Rng& r) { return val_est(v, s, cfg.epsilon, cfg.delta, r); };
      const BinaryMeasurement pi = [&](StateVector& s, Rng& r) {
        Measurement o = measure_projective(s, {q, p}, {"W"}, r);
        s = std::move(o.post);
        return o.outcome;
      };
      const ValEstResult pre = m(w, rng);
      StateVector damaged = pre.post;
      const int y = pi(damaged, rng);
      const RepairResult rep =
          repair(m, pi, damaged, pre.p.value, cfg.epsilon, default_t_max(cfg.delta), rng);
      const ValEstResult post = m(rep.state, rng);
      return json{{"p_pre", pre.p.value}, {"p_post", post.p.value}, {"damage_outcome", y},
                  {"oracle_calls", rep.oracle_calls}, {"ok", rep.ok}, {"epsilon", cfg.epsilon},
                  {"delta", cfg.delta}};
    };
  };
  e.summarize = [](const std::vector<Record>& rs) {
    StatsSummary s = start("repair-bound", rs);
    if (rs.empty()) return s;
    const double eps = rs.front().at("epsilon"), delta = rs.front().at("delta");
    std::size_t good = 0;
    std::vector<double> dev;
    for (const auto& r : rs) {
      const double d = std::abs(r.at("p_post").get<double>() - r.at("p_pre").get<double>());
      dev.push_back(d);
      if (d <= 2.0 * eps + 1e-12) ++good;
    }
    const double f = static_cast<double>(good) / rs.size();
    const double sd = std::sqrt(delta);
    const double bound = 1.0 - (2.0 * (delta + sd) + 4.0 * sd) - 3.0 * binom_se(f, rs.size());
    const MetricSummary calls = summarize_metric("oracle_calls", column(rs, "oracle_calls"));
    s.metrics.push_back(summarize_metric("abs_dev", dev));
    s.metrics.push_back(calls);
    s.criteria.push_back({5, "re-estimate within 2eps", f >= bound, f, bound, "N = 2"});
    s.criteria.push_back({5, "mean oracle calls", calls.mean <= 7.0, calls.mean, 7.0, "N + 5"});
    return s;
  };
  return e;
}

// ---------------------------------------------------------------- 6

std::string image_key(const ZVec& y) {
  std::string k;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const auto v = static_cast<std::uint32_t>(y(i));
    k.append(reinterpret_cast<const char*>(&v), sizeof v);
  }
  return k;
}

Experiment tcf_injective() {
  Experiment e;
  e.id = "tcf-injective";
  e.criterion = 6;
  e.description = "injective-mode ext(eval(x, r)) = x by enumeration, plus image collisions";
  e.defaults = [](ExperimentConfig& c) {
    c.trials = 1;
    c.shots = 200;
    c.fixture.tcf = "lattice-classical";
  };
  e.prepare = [](const ExperimentConfig& cfg) -> TrialFn {
    return [cfg](int, Rng& rng) {
      const TcfKeypair kp = fixture_keypair(cfg.fixture.tcf, TcfMode::injective, rng);
      long evals = 0, failures = 0, collisions = 0;
      if (kp.inst == TcfInstantiation::ideal) {
        std::unordered_map<std::uint32_t, int> seen;
        for (int b = 0; b < 2; ++b)
          for (std::size_t r = 0; r < rand_dim(kp); ++r) {
            const std::uint32_t y = eval_ideal(kp, 0, b, static_cast<std::uint32_t>(r));
            const ExtResult x = ext_ideal(kp, y);
            ++evals;
            failures += (!x.in_image || x.b != b) ? 1 : 0;
            auto [it, fresh] = seen.emplace(y, b);
            collisions += (!fresh && it->second != b) ? 1 : 0;
          }
        return json{{"tcf", cfg.fixture.tcf}, {"evals", evals}, {"failures", failures}, {"collisions", collisions},
                    {"margin_ok", true}, {"lattice_min", 0}, {"offset_min", 0}, {"b_prime", 0}};
      }
      const LweParams& p = kp.lattice.params;
      // Every x in Z_q^n and both inputs; errors: the 2^m corners, the 2m axis
      // points and 0 of the support box, plus samples from the error law.
      std::vector<ZVec> errs;
      for (long c = 0; c < (1L << p.m); ++c) {
        ZVec ep(p.m);
        for (int i = 0; i < p.m; ++i) ep(i) = ((c >> i) & 1) ? p.b_prime : -p.b_prime;
        errs.push_back(ep);
      }
      const std::size_t corners = errs.size();
      errs.push_back(ZVec::Zero(p.m));
      for (int i = 0; i < p.m; ++i)
        for (int sg : {-1, 1}) {
          ZVec ep = ZVec::Zero(p.m);
          ep(i) = sg * p.b_prime;
          errs.push_back(ep);
        }
      long nx = 1;
      for (int i = 0; i < p.n; ++i) nx *= p.q;
      std::unordered_map<std::string, long> images;
      LatticeRandom lr{ZVec(p.n), ZVec(p.m)};
      auto check = [&](int b, long xi, bool corner) {
        const ZVec y = eval_lattice(kp, b, lr);
        const ExtResult x = ext_lattice(kp, y);
        ++evals;
        failures += (!x.in_image || x.b != b) ? 1 : 0;
        if (corner) {
          const long id = b * nx + xi;
          auto [it, fresh] = images.emplace(image_key(y), id);
          collisions += (!fresh && it->second != id) ? 1 : 0;
        }
      };
      for (int b = 0; b < 2; ++b)
        for (long xi = 0; xi < nx; ++xi) {
          long t = xi;
          for (int i = 0; i < p.n; ++i, t /= p.q) lr.x(i) = t % p.q;
          for (std::size_t ei = 0; ei < errs.size(); ++ei) {
            lr.ep = errs[ei];
            check(b, xi, ei < corners);
          }
          for (int k = 0; k < cfg.shots; ++k) {
            lr.ep = sample_lattice_random(p, rng).ep;
            check(b, xi, false);
          }
        }
      const InjectivityMargins mg = injectivity_margins(kp);
      const bool margin_ok = mg.lattice_min > 2 * p.b_prime && mg.offset_min > 2 * p.b_prime;
      return json{{"tcf", cfg.fixture.tcf}, {"evals", evals}, {"failures", failures}, {"collisions", collisions},
                  {"margin_ok", margin_ok}, {"lattice_min", mg.lattice_min}, {"offset_min", mg.offset_min},
                  {"b_prime", p.b_prime}};
    };
  };
  e.summarize = [](const std::vector<Record>& rs) {
    StatsSummary s = start("tcf-injective", rs);
    long failures = 0, collisions = 0, evals = 0;
    bool margins = true;
    for (const auto& r : rs) {
      evals += r.at("evals").get<long>();
      failures += r.at("failures").get<long>();
      collisions += r.at("collisions").get<long>();
      const long bp = r.at("b_prime").get<long>();
      if (bp > 0) margins = margins && r.at("lattice_min").get<long>() > 2 * bp && r.at("offset_min").get<long>() > 2 * bp;
    }
    s.metrics.push_back(summarize_metric("failures", column(rs, "failures")));
    s.criteria.push_back({6, "ext o eval = identity", failures == 0 && evals > 0, static_cast<double>(failures), 0.0,
                          std::to_string(evals) + " evaluations"});
    s.criteria.push_back({6, "no image collisions", collisions == 0 && margins, static_cast<double>(collisions), 0.0,
                          margins ? "margins exceed 2B'" : "margin check failed"});
    return s;
  };
  return e;
}

// ---------------------------------------------------------------- 7

Experiment tcf_recovery() {
  Experiment e;
  e.id = "tcf-recovery";
  e.criterion = 7;
  e.description = "recover o exp output distance against the Hellinger bound";
  e.defaults = [](ExperimentConfig& c) {
    c.trials = 20;
    c.fixture.tcf = "lattice-micro";
  };
  e.prepare = [](const ExperimentConfig& cfg) -> TrialFn {
    return [cfg](int, Rng& rng) {
      const StateVector in = random_state(Layout({{"D", 2}, {"REF", 2}}), rng);
      const DensityMatrix rho = DensityMatrix::from_pure(in);
      const TcfKeypair lat = fixture_keypair(cfg.fixture.tcf, TcfMode::recovery, rng);
      const TcfKeypair ide = setup_ideal(1, TcfMode::recovery, rng);
      const double d_lat = trace_distance(recover_exp_channel(lat, rho, {"D"}), rho);
      const double d_ide = trace_distance(recover_exp_channel(ide, rho, {"D"}), rho);
      // Literal register run for the ideal key: exact for every image.
      StateVector s = in;
      const std::size_t y = exp_measure(ide, 0, s, "D", "R", rng);
      recover(ide, 0, s, "D", "R", y);
      const double d_lit = trace_distance(partial_trace(s, {"D", "REF"}), rho);
      const double bound = lat.inst == TcfInstantiation::lattice ? recovery_bound(lat.lattice.params) : 1e-9;
      return json{{"dist_lattice", d_lat}, {"bound", bound}, {"dist_ideal", d_ide}, {"dist_ideal_literal", d_lit}};
    };
  };
  e.summarize = [](const std::vector<Record>& rs) {
    StatsSummary s = start("tcf-recovery", rs);
    const MetricSummary lat = summarize_metric("dist_lattice", column(rs, "dist_lattice"));
    const MetricSummary ide = summarize_metric("dist_ideal", column(rs, "dist_ideal"));
    const MetricSummary lit = summarize_metric("dist_ideal_literal", column(rs, "dist_ideal_literal"));
    double bound = INFINITY;
    for (const auto& r : rs) bound = std::min(bound, r.at("bound").get<double>());
    s.metrics = {lat, ide, lit};
    s.criteria.push_back({7, "lattice distance within recomputed bound", !rs.empty() && lat.max <= bound, lat.max,
                          bound, "Hellinger formula"});
    const double im = std::max(ide.max, lit.max);
    s.criteria.push_back({7, "ideal distance", !rs.empty() && im <= 1e-9, im, 1e-9, "channel and literal"});
    return s;
  };
  return e;
}

// ---------------------------------------------------------------- 8

Experiment spa_completeness() {
  Experiment e;
  e.id = "spa-completeness";
  e.criterion = 8;
  e.description = "SPA accepts colorable witnesses on every challenge edge and preserves them";
  e.defaults = [](ExperimentConfig& c) {
    c.trials = 5;
    c.fixture.tcf = "lattice-micro";
  };
  e.prepare = [](const ExperimentConfig& cfg) -> TrialFn {
    return [cfg](int, Rng& rng) {
      json runs = json::array(), lattice = json::array();
      for (const char* name : {"k3", "path4"}) {
        const Graph g = fixture_graph(name);
        const auto cols = valid_colorings(g);
        std::normal_distribution<double> nd;
        std::vector<cplx> amps;
        for (std::size_t i = 0; i < cols.size(); ++i) amps.emplace_back(nd(rng), nd(rng));
        const DensityMatrix rho = DensityMatrix::from_pure(coloring_superposition(g, cols, amps));
        const SpaKeys ideal(setup_ideal(2, TcfMode::recovery, rng));
        for (int edge = 0; edge < static_cast<int>(g.edges.size()); ++edge) {
          const SpaResult r = spa_run(g, rho, ideal, rng, edge);
          runs.push_back({{"graph", name}, {"edge", edge}, {"accept", r.accept},
                          {"dist", trace_distance(r.leftover, rho)}});
        }
        const TcfKeypair kp = fixture_keypair(cfg.fixture.tcf, TcfMode::recovery, rng, 2);
        const SpaResult r = spa_run(g, rho, SpaKeys(kp), rng);
        lattice.push_back({{"graph", name}, {"accept", r.accept}, {"dist", trace_distance(r.leftover, rho)},
                           {"bound", spa_leftover_bound(g, kp)}});
      }
      return json{{"runs", runs}, {"lattice", lattice}};
    };
  };
  e.summarize = [](const std::vector<Record>& rs) {
    StatsSummary s = start("spa-completeness", rs);
    std::size_t n = 0, acc = 0, ln = 0, lacc = 0, lwithin = 0;
    std::vector<double> dist, ldist;
    for (const auto& r : rs) {
      for (const auto& x : r.at("runs")) {
        ++n;
        acc += x.at("accept").get<bool>() ? 1 : 0;
        dist.push_back(x.at("dist"));
      }
      for (const auto& x : r.at("lattice")) {
        ++ln;
        lacc += x.at("accept").get<bool>() ? 1 : 0;
        ldist.push_back(x.at("dist"));
        lwithin += x.at("dist").get<double>() <= x.at("bound").get<double>() ? 1 : 0;
      }
    }
    const MetricSummary d = summarize_metric("leftover_dist_ideal", dist);
    s.metrics = {d, summarize_metric("leftover_dist_lattice", ldist)};
    s.criteria.push_back({8, "accept on every challenge edge", n > 0 && acc == n, n ? double(acc) / n : 0.0, 1.0,
                          std::to_string(n) + " sessions"});
    s.criteria.push_back({8, "ideal leftover distance", n > 0 && d.max <= 1e-6, d.max, 1e-6, "K3 and path4"});
    s.criteria.push_back({8, "lattice-micro run within bound", ln > 0 && lwithin == ln && lacc == ln,
                          ln ? double(lwithin) / ln : 0.0, 1.0, "recomputed per graph"});
    return s;
  };
  return e;
}

// ---------------------------------------------------------------- 9

Experiment spa_soundness() {
  Experiment e;
  e.id = "spa-soundness";
  e.criterion = 9;
  e.description = "K4 acceptance per challenge-edge enumeration and under repetition";
  e.defaults = [](ExperimentConfig& c) {
    c.trials = 1000;
    c.n = 5;
    c.fixture.graph = "k4";
  };
  e.prepare = [](const ExperimentConfig& cfg) -> TrialFn {
    const Graph g = fixture_graph(cfg.fixture.graph);
    const std::vector<int> best = best_adversarial_coloring(g);
    const double bound = 1.0 - static_cast<double>(min_bad_edges(g)) / static_cast<double>(g.edges.size());
    return [g, best, bound, cfg](int i, Rng& rng) {
      // Colorings in {0..3}^V are walked in index order across trials.
      long total = 1;
      for (int v = 0; v < g.vertices; ++v) total *= 4;
      std::vector<int> col(static_cast<std::size_t>(g.vertices));
      long idx = i % total;
      for (auto& c : col) {
        c = static_cast<int>(idx % 4);
        idx /= 4;
      }
      const SoundnessReport one = spa_soundness_probe(g, fixed_coloring_strategy(col), 1, rng);
      const SoundnessReport rep = spa_soundness_repeat(g, fixed_coloring_strategy(best), cfg.n, 1, rng);
      return json{{"coloring_index", i % total}, {"colorings", total}, {"exact_rate", one.exact_rate},
                  {"bound", bound}, {"repeat_n", cfg.n}, {"repeat_accept", rep.rate}};
    };
  };
  e.summarize = [](const std::vector<Record>& rs) {
    StatsSummary s = start("spa-soundness", rs);
    if (rs.empty()) return s;
    const double bound = rs.front().at("bound");
    const long total = rs.front().at("colorings");
    std::set<long> seen;
    double worst = 0.0;
    for (const auto& r : rs) {
      seen.insert(r.at("coloring_index").get<long>());
      worst = std::max(worst, r.at("exact_rate").get<double>());
    }
    const bool covered = static_cast<long>(seen.size()) == total;
    s.criteria.push_back({9, "single-session acceptance <= 1 - 1/|E|", covered && worst <= bound + 1e-12, worst, bound,
                          std::to_string(seen.size()) + "/" + std::to_string(total) + " colorings enumerated"});
    const MetricSummary acc = summarize_metric("repeat_accept", column(rs, "repeat_accept"));
    const int n = rs.front().at("repeat_n");
    const double f = acc.mean;
    const double rb = std::pow(bound, n) + 3.0 * binom_se(f, rs.size());
    s.metrics = {summarize_metric("exact_rate", column(rs, "exact_rate")), acc};
    s.criteria.push_back({9, "repetition acceptance", f <= rb, f, rb, std::to_string(n) + "-fold"});
    return s;
  };
  return e;
}

// ---------------------------------------------------------------- 10

NdOptions nd_options(const ExperimentConfig& cfg, NdMode mode) {
  NdOptions o;
  o.mode = mode;
  o.inst = inst_of(cfg.fixture.tcf);
  o.lattice = lattice_of(cfg.fixture.tcf);
  o.epsilon = cfg.epsilon;
  o.lambda = cfg.lambda;
  return o;
}

Experiment nd_high_c() {
  Experiment e;
  e.id = "nd-high-c";
  e.criterion = 10;
  e.description = "high-completeness compiler leaves the witness within 1e-3";
  e.defaults = [](ExperimentConfig& c) {
    c.trials = 200;
    c.fixture.verifier = "diag-high";
    c.fixture.witness_p = 1.0 - 1e-4;
  };
  e.prepare = [](const ExperimentConfig& cfg) -> TrialFn {
    const QmaVerifier v = fixture_verifier(cfg.fixture.verifier);
    const ToyBase base = make_toy_base_cvqc(v, 1, cfg.zeta);
    return [v, base, cfg](int i, Rng& rng) {
      FixtureSpec f = cfg.fixture;
      if (i % 2 == 1) f.witness = "bell-ref";
      const StateVector w = fixture_witness(v, f, rng);
      const NdResult r = nd_compile_run(base, w, nd_options(cfg, NdMode::high_completeness), rng);
      return json{{"witness", f.witness}, {"verdict", r.verdict}, {"dist", r.leftover_distance},
                  {"quality", brute_force_acceptance(v, w)}};
    };
  };
  e.summarize = [](const std::vector<Record>& rs) {
    StatsSummary s = start("nd-high-c", rs);
    std::size_t good = 0, ref = 0;
    for (const auto& r : rs) {
      good += r.at("dist").get<double>() <= 1e-3 ? 1 : 0;
      ref += r.at("witness").get<std::string>() == "bell-ref" ? 1 : 0;
    }
    const double f = rs.empty() ? 0.0 : static_cast<double>(good) / rs.size();
    s.metrics = {summarize_metric("leftover_dist", column(rs, "dist")),
                 summarize_metric("verdict", [&] {
                   std::vector<double> v;
                   for (const auto& r : rs) v.push_back(r.at("verdict").get<bool>() ? 1.0 : 0.0);
                   return v;
                 }())};
    s.criteria.push_back({10, "leftover within 1e-3", f >= 0.99 && ref > 0, f, 0.99,
                          std::to_string(ref) + " entangled-reference trials"});
    return s;
  };
  return e;
}

// ---------------------------------------------------------------- 11

Experiment nd_general() {
  Experiment e;
  e.id = "nd-general";
  e.criterion = 11;
  e.description = "general compiler keeps the witness repairable at (p - 4 eps, eps)";
  e.defaults = [](ExperimentConfig& c) {
    c.trials = 200;
    c.shots = 64;
    c.epsilon = 0.05;
    c.lambda = 20;
    c.fixture.verifier = "diag-0.75";
    c.fixture.witness_p = 0.75;
  };
  e.prepare = [](const ExperimentConfig& cfg) -> TrialFn {
    const QmaVerifier v = fixture_verifier(cfg.fixture.verifier);
    const ToyBase base = make_toy_base_cvqc(v, 1, cfg.zeta);
    return [v, base, cfg](int, Rng& rng) {
      const StateVector w = fixture_witness(v, cfg.fixture, rng);
      const NdResult r = nd_compile_run(base, w, nd_options(cfg, NdMode::general), rng);
      const double p = cfg.fixture.witness_p - 4.0 * cfg.epsilon;
      const RepairableVerdict cr = classify_repairable(r.final_state, v, p, cfg.epsilon, cfg.lambda, cfg.shots, rng);
      return json{{"verdict", r.verdict},
                  {"repair_failed", r.repair_failed},
                  {"oracle_calls", r.repair.oracle_calls},
                  {"p_star2", r.p_star2 ? r.p_star2->value : -1.0},
                  {"final_quality", brute_force_acceptance(v, r.final_state)},
                  {"below", static_cast<long>(std::lround(cr.fraction_below * cr.trials))},
                  {"shots", cr.trials},
                  {"lambda", cfg.lambda},
                  {"repairable", cr.verdict}};
    };
  };
  e.summarize = [](const std::vector<Record>& rs) {
    StatsSummary s = start("nd-general", rs);
    std::size_t ok = 0, disagree = 0;
    for (const auto& r : rs) {
      const double k = r.at("shots"), f = r.at("below").get<double>() / k;
      const double thr = std::sqrt(std::ldexp(1.0, 1 - r.at("lambda").get<int>()));
      const bool v = f <= thr + 3.0 * binom_se(f, static_cast<std::size_t>(k));
      ok += v ? 1 : 0;
      disagree += v != r.at("repairable").get<bool>() ? 1 : 0;
    }
    const double f = rs.empty() ? 0.0 : static_cast<double>(ok) / rs.size();
    s.metrics = {summarize_metric("final_quality", column(rs, "final_quality")),
                 summarize_metric("oracle_calls", column(rs, "oracle_calls")),
                 summarize_metric("p_star2", column(rs, "p_star2"))};
    s.criteria.push_back({11, "repairable at (p - 4eps, eps)", f >= 0.99 && disagree == 0, f, 0.99,
                          std::to_string(disagree) + " recount disagreements"});
    return s;
  };
  return e;
}

// ---------------------------------------------------------------- 12

SeqRepConfig seq_config(const ExperimentConfig& cfg) {
  SeqRepConfig s;
  s.n = cfg.n;
  s.c = cfg.c;
  s.s = cfg.s;
  s.epsilon = cfg.epsilon;
  s.lambda = cfg.lambda;
  s.d = cfg.d;
  s.nd = nd_options(cfg, NdMode::general);
  return s;
}

void seqrep_defaults(ExperimentConfig& c) {
  c.trials = 200;
  c.n = 60;
  c.c = 0.8;
  c.s = 0.4;
  c.epsilon = 0.001;
  c.lambda = 10;
  c.fixture.verifier = "diag-0.9";
  c.fixture.witness_p = 0.9;
}

TrialFn seqrep_trial(const ExperimentConfig& cfg) {
  const QmaVerifier v = fixture_verifier(cfg.fixture.verifier);
  const ToyBase base = make_toy_base_cvqc(v, 1, cfg.zeta);
  return [v, base, cfg](int, Rng& rng) {
    const StateVector w = fixture_witness(v, cfg.fixture, rng);
    const SeqRepResult r = seqrep_run(seq_config(cfg), base, w, rng);
    json j = r.to_json();
    j["horizon"] = cfg.n;
    j["c"] = cfg.c;
    j["s"] = cfg.s;
    j["p"] = brute_force_acceptance(v, w);
    j["final_quality"] = brute_force_acceptance(v, r.final_state);
    return j;
  };
}

Experiment seqrep_experiment() {
  Experiment e;
  e.id = "seqrep";
  e.criterion = 12;
  e.description = "threshold sequential repetition completeness and quality ledger";
  e.defaults = seqrep_defaults;
  e.prepare = seqrep_trial;
  e.summarize = [](const std::vector<Record>& rs) {
    StatsSummary s = start("seqrep", rs);
    if (rs.empty()) return s;
    std::size_t acc = 0, mism = 0, qual = 0;
    std::vector<double> pf;
    const int n = rs.front().at("horizon");
    const double c = rs.front().at("c"), sd = rs.front().at("s");
    for (const auto& r : rs) {
      int checks = 0, passes = 0;
      bool rejected = false;
      for (std::size_t i = 0; i < r.at("phases").size(); ++i) {
        const bool check = r.at("phases").at(i).get<std::string>() == "check";
        const bool v = r.at("verdicts").at(i).get<int>() == 1;
        if (!check && !v) rejected = true;
        checks += check ? 1 : 0;
        passes += check && v ? 1 : 0;
      }
      const long need = static_cast<long>(std::ceil((c + sd) / 2.0 * checks - 1e-9));
      const bool a = !rejected && passes >= need;
      acc += a ? 1 : 0;
      mism += a != r.at("accept").get<bool>() ? 1 : 0;
      const auto& l = r.at("ledger");
      const double floor = r.at("p").get<double>() - n * l.at("epsilon").get<double>() - l.at("grid_width").get<double>();
      pf.push_back(l.at("p_final"));
      qual += l.at("p_final").get<double>() >= floor ? 1 : 0;
    }
    const double f = static_cast<double>(acc) / rs.size();
    const double bound = seqrep_hoeffding_bound(n, c, sd) - 3.0 * binom_se(f, rs.size());
    const double fq = static_cast<double>(qual) / rs.size();
    s.metrics = {summarize_metric("p_final", pf), summarize_metric("final_quality", column(rs, "final_quality"))};
    s.criteria.push_back({12, "accept rate vs Hoeffding bound", f >= bound && mism == 0, f, bound,
                          std::to_string(mism) + " recount mismatches"});
    s.criteria.push_back({12, "ledger quality >= p - N eps - grid", fq >= 0.99, fq, 0.99, "N = " + std::to_string(n)});
    return s;
  };
  return e;
}

// ---------------------------------------------------------------- 13

Experiment extraction() {
  Experiment e;
  e.id = "extraction";
  e.criterion = 13;
  e.description = "extracted-transcript verdicts and sequential-repetition extraction";
  e.defaults = [](ExperimentConfig& c) {
    seqrep_defaults(c);
    c.n = 20;
  };
  e.prepare = [](const ExperimentConfig& cfg) -> TrialFn {
    const QmaVerifier v = fixture_verifier(cfg.fixture.verifier);
    const ToyBase base = make_toy_base_cvqc(v, 1, cfg.zeta);
    return [v, base, cfg](int i, Rng& rng) {
      const StateVector w = fixture_witness(v, cfg.fixture, rng);
      NdOptions o;
      const std::string tcf = i % 2 ? "lattice-classical" : "ideal";
      o.inst = inst_of(tcf);
      o.lattice = lattice_of(tcf);
      const ExtractResult x = transcript_extract(base, w, o, rng);
      const SeqExtraction se = seqrep_extract(seq_config(cfg), base, w, rng);
      return json{{"tcf", tcf},         {"ok", x.ok},           {"base_verdict", x.base_verdict},
                  {"protocol_verdict", x.protocol_verdict},     {"j", se.j},
                  {"success", se.success}, {"quality", se.quality}};
    };
  };
  e.summarize = [](const std::vector<Record>& rs) {
    StatsSummary s = start("extraction", rs);
    std::size_t in_image = 0, agree = 0;
    std::vector<double> diff, prod;
    for (const auto& r : rs) {
      if (r.at("ok").get<bool>()) {
        ++in_image;
        agree += r.at("base_verdict").get<bool>() == r.at("protocol_verdict").get<bool>() ? 1 : 0;
      }
      const double q = r.at("quality");
      const double x = r.at("success").get<bool>() ? q : 0.0;
      prod.push_back(x);
      diff.push_back(x - q * (1.0 + q) / 2.0);
    }
    const MetricSummary d = summarize_metric("success_x_quality - oracle", diff);
    s.metrics = {summarize_metric("success_x_quality", prod), d};
    s.criteria.push_back({13, "extracted verdict = protocol verdict", in_image > 0 && agree == in_image,
                          in_image ? double(agree) / in_image : 0.0, 1.0,
                          std::to_string(in_image) + " in-image trials"});
    s.criteria.push_back({13, "seqrep_extract success x quality vs oracle", std::abs(d.mean) <= 3.0 * d.std_error + 1e-12,
                          std::abs(d.mean), 3.0 * d.std_error, "paired per-round oracle q(1+q)/2"});
    return s;
  };
  return e;
}

// ---------------------------------------------------------------- 14

using Big = boost::multiprecision::cpp_bin_float_50;

Experiment azuma_tail() {
  Experiment e;
  e.id = "azuma-tail";
  e.criterion = 14;
  e.description = "Azuma arithmetic against high precision and martingale deviations of seqrep";
  e.defaults = seqrep_defaults;
  e.prepare = [](const ExperimentConfig& cfg) -> TrialFn {
    const TrialFn run = seqrep_trial(cfg);
    return [run](int i, Rng& rng) {
      std::uniform_real_distribution<double> uc(0.1, 2.0);
      const int k = std::uniform_int_distribution<int>(1, 60)(rng);
      std::vector<double> c(static_cast<std::size_t>(k));
      double s2 = 0.0;
      for (double& x : c) {
        x = uc(rng);
        s2 += x * x;
      }
      // Keep the exponent above -700 so the reference is a normal double.
      const double t = std::uniform_real_distribution<double>(0.01, std::min(10.0, std::sqrt(350.0 * s2)))(rng);
      json j = run(i, rng);
      j["azuma"] = {{"t", t}, {"c", c}, {"value", azuma_bound(t, c)}};
      return j;
    };
  };
  e.summarize = [](const std::vector<Record>& rs) {
    StatsSummary s = start("azuma-tail", rs);
    double worst = 0.0;
    for (const auto& r : rs) {
      const auto& a = r.at("azuma");
      Big sum = 0, t = a.at("t").get<double>();
      for (const auto& x : a.at("c")) {
        const Big cx = x.get<double>();
        sum += cx * cx;
      }
      const Big ref = boost::multiprecision::exp(-2 * t * t / sum);
      const Big rel = boost::multiprecision::abs((Big(a.at("value").get<double>()) - ref) / ref);
      worst = std::max(worst, rel.convert_to<double>());
    }
    s.criteria.push_back({14, "azuma_bound relative error", !rs.empty() && worst <= 1e-12, worst, 1e-12,
                          "50-digit reference"});
    const MartingaleReport m = martingale_diagnostics(rs);
    s.metrics = {summarize_metric("martingale_deviation", m.deviations)};
    s.criteria.push_back({14, "martingale bound violations", m.trials > 0 && m.violations == 0,
                          static_cast<double>(m.violations), 0.0,
                          "alpha = 1e-6, max |dev|/radius = " + fmt(m.max_ratio)});
    return s;
  };
  return e;
}

}  // namespace

const std::vector<Experiment>& experiments() {
  static const std::vector<Experiment> list = {
      valest_expectation(), valest_projectivity(), eigen_concentration(), jordan_oracle(), repair_bound(),
      tcf_injective(),      tcf_recovery(),        spa_completeness(),    spa_soundness(), nd_high_c(),
      nd_general(),         seqrep_experiment(),   extraction(),          azuma_tail()};
  return list;
}

}  // namespace wpv
