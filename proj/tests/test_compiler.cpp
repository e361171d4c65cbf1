#include <doctest.h>

#include <cmath>

#include "wpv/compiler.hpp"

using namespace wpv;

namespace {

StateVector eigen_witness(const QmaVerifier& v, double p) { return make_witness(eigen_spectrum(v), p); }

// Witness entangled with a reference qubit: (|v1>|0> + |v2>|1>)/sqrt2.
StateVector bell_witness(const QmaVerifier& v) {
  const EigenSpectrum sp = eigen_spectrum(v);
  const int d = v.witness_dim();
  CVec a = CVec::Zero(2 * d);
  for (int w = 0; w < d; ++w) {
    a(2 * w) = sp.pairs[0].vector(w) / std::sqrt(2.0);
    a(2 * w + 1) = sp.pairs[1].vector(w) / std::sqrt(2.0);
  }
  return StateVector(Layout({{"W", d}, {"REF", 2}}), a);
}

void dephase(DensityMatrix& d, const std::vector<std::string>& regs) {
  for (const auto& r : regs) {
    const int ri = d.layout.index_of(r);
    for (Eigen::Index a = 0; a < d.rho.rows(); ++a)
      for (Eigen::Index b = 0; b < d.rho.cols(); ++b)
        if (d.layout.digit(static_cast<std::size_t>(a), ri) != d.layout.digit(static_cast<std::size_t>(b), ri)) d.rho(a, b) = 0.0;
  }
}

}  // namespace

TEST_CASE("high completeness: accept and leftover close to the witness") {
  Rng rng = make_rng(91);
  const QmaVerifier v = diagonal_verifier({1.0 - 1e-6, 1.0 - 1e-6});
  const ToyBase base = make_toy_base_cvqc(v);
  NdOptions o;
  int acc = 0;
  const int trials = 200;
  for (int i = 0; i < trials; ++i) {
    const NdResult r = nd_compile_run(base, eigen_witness(v, 1.0 - 1e-6), o, rng);
    acc += r.verdict;
    CHECK(r.leftover_distance <= 1e-3);
    CHECK(r.session.td_sent);
  }
  CHECK(acc >= trials - 1);

  for (int i = 0; i < 50; ++i) {
    const StateVector w = bell_witness(v);
    const NdResult r = nd_compile_run(base, w, o, rng);
    CHECK(r.leftover.layout.has("REF"));
    CHECK(trace_distance(r.leftover, DensityMatrix::from_pure(w)) <= 1e-3);
  }
}

TEST_CASE("high completeness: exact recovery for a perfect witness") {
  Rng rng = make_rng(92);
  const QmaVerifier v = diagonal_verifier({1.0, 0.3});
  for (int rounds : {1, 3}) {
    const ToyBase base = make_toy_base_cvqc(v, rounds);
    for (int i = 0; i < (rounds == 1 ? 20 : 2); ++i) {
      const NdResult r = nd_compile_run(base, eigen_witness(v, 1.0), NdOptions{}, rng);
      CHECK(r.verdict);
      CHECK(r.leftover_distance < 1e-9);
    }
  }
}

TEST_CASE("high completeness: lattice micro keys stay within the recovery bound") {
  Rng rng = make_rng(93);
  const QmaVerifier v = diagonal_verifier({1.0, 0.3});
  const ToyBase base = make_toy_base_cvqc(v);
  NdOptions o;
  o.inst = TcfInstantiation::lattice;
  const double bound = 2 * base.rounds * recovery_bound(o.lattice);
  for (int i = 0; i < 10; ++i) {
    const NdResult r = nd_compile_run(base, eigen_witness(v, 1.0), o, rng);
    CHECK(r.verdict);
    CHECK(r.leftover_distance <= bound + 1e-9);
  }
}

TEST_CASE("completeness is preserved on the check branch") {
  Rng rng = make_rng(94);
  const QmaVerifier v = diagonal_verifier({0.8, 0.3});
  const ToyBase base = make_toy_base_cvqc(v);
  NdOptions o;
  o.forced_phase = Phase::check;
  const int trials = 1000;
  int acc = 0;
  for (int i = 0; i < trials; ++i) acc += nd_compile_run(base, eigen_witness(v, 0.8), o, rng).verdict;
  CHECK(acc / double(trials) >= 0.8 - 0.02 - 3 * std::sqrt(0.16 / trials));
}

TEST_CASE("general mode: accept rate and repaired quality") {
  Rng rng = make_rng(95);
  const QmaVerifier v = diagonal_verifier({0.8, 0.3});
  const ToyBase base = make_toy_base_cvqc(v);
  NdOptions o;
  o.mode = NdMode::general;
  o.epsilon = 0.05;
  o.lambda = 20;
  o.forced_phase = Phase::check;
  const int trials = 300;
  int acc = 0, good = 0, b0 = 0, b0_good = 0;
  for (int i = 0; i < trials; ++i) {
    const NdResult r = nd_compile_run(base, eigen_witness(v, 0.8), o, rng);
    REQUIRE(r.p_star2.has_value());
    acc += r.verdict;
    const bool ok = r.p_star2->value >= 0.8 - 4 * o.epsilon;
    good += ok;
    if (r.session.b == 0) {
      ++b0;
      b0_good += ok;
      CHECK(r.session.td_sent);
      CHECK(r.session.spa.commitments.empty());
    }
  }
  const double se = std::sqrt(0.16 / trials);
  CHECK(std::abs(acc / double(trials) - 0.8) <= 3 * se);
  CHECK(good >= 0.99 * trials);
  REQUIRE(b0 > 0);
  CHECK(b0_good >= 0.95 * b0);
}

TEST_CASE("general mode: undamaged path keeps the estimate") {
  Rng rng = make_rng(96);
  const QmaVerifier v = diagonal_verifier({1.0, 0.3});
  const ToyBase base = make_toy_base_cvqc(v);
  NdOptions o;
  o.mode = NdMode::general;
  o.epsilon = 0.05;
  o.lambda = 20;
  for (int i = 0; i < 50; ++i) {
    const NdResult r = nd_compile_run(base, eigen_witness(v, 1.0), o, rng);
    CHECK(std::abs(r.p_star2->value - r.session.p_star->value) <= 2 * o.epsilon);
  }
}

TEST_CASE("general mode: superposition witness repairs to the collapsed branch") {
  Rng rng = make_rng(97);
  const QmaVerifier v = diagonal_verifier({0.9, 0.1});
  const ToyBase base = make_toy_base_cvqc(v);
  NdOptions o;
  o.mode = NdMode::general;
  o.epsilon = 0.05;
  o.lambda = 20;
  const StateVector w = make_witness(eigen_spectrum(v), 0.5, WitnessMode::superposition);
  int near = 0;
  const int trials = 100;
  for (int i = 0; i < trials; ++i) {
    const NdResult r = nd_compile_run(base, w, o, rng);
    const double p1 = r.session.p_star->value, p2 = r.p_star2->value;
    near += std::abs(p2 - p1) <= 2 * o.epsilon;
    CHECK((std::abs(p1 - 0.9) <= 0.1 || std::abs(p1 - 0.1) <= 0.1));
  }
  CHECK(near >= 0.95 * trials);
}

TEST_CASE("round states match a direct reconstruction") {
  Rng rng = make_rng(98);
  const QmaVerifier v = diagonal_verifier({0.8, 0.3});
  const StateVector w = make_witness(eigen_spectrum(v), 0.55, WitnessMode::superposition);
  for (int rounds : {1, 3}) {
    const ToyBase base = make_toy_base_cvqc(v, rounds);
    int checked = 0;
    const RoundObserver obs = [&](int i, const NdSession& s) {
      // Direct: P_i .. P_1 on the initial state.
      StateVector direct = base.initial_state(w);
      for (int k = 1; k <= i; ++k) apply_op(direct, base.round_unitary(k, s.st.queries[k - 1]), base.round_targets(k));
      DensityMatrix want = DensityMatrix::from_pure(direct);
      // Ideal images are uniform, so the measured y carry no diagonal weight and
      // the deferred Gram factors dephase each committed bit.
      std::vector<std::string> committed;
      for (int k = 1; k <= i; ++k) {
        committed.push_back(ToyBase::frag_reg(k));
        committed.push_back(ToyBase::tag_reg(k));
      }
      dephase(want, committed);
      DensityMatrix got = s.state;
      for (const auto& p : s.pending) schur_register(got, p.reg, p.h_pre);
      CHECK(s.y.size() == static_cast<std::size_t>(i));
      CHECK((got.rho - want.rho).norm() < 1e-9);
      ++checked;
    };
    nd_compile_run(base, w, NdOptions{}, rng, obs);
    CHECK(checked == rounds);
  }
}

TEST_CASE("sabotage and abort hooks") {
  Rng rng = make_rng(99);
  const QmaVerifier v = diagonal_verifier({1.0, 0.3});
  const ToyBase base = make_toy_base_cvqc(v);
  NdOptions bad;
  bad.malformed_nonce = true;
  bad.forced_phase = Phase::test;
  for (int i = 0; i < 20; ++i) {
    const NdResult r = nd_compile_run(base, eigen_witness(v, 1.0), bad, rng);
    CHECK_FALSE(r.verdict);
    CHECK(r.leftover_distance < 1e-9);
  }
  NdOptions quit;
  quit.abort = true;
  const NdResult q = nd_compile_run(base, eigen_witness(v, 1.0), quit, rng);
  CHECK_FALSE(q.verdict);
  CHECK(q.session.b == -1);
}

TEST_CASE("relation SPA accepts and keeps the state") {
  Rng rng = make_rng(100);
  const Layout l({{"a", 2}, {"b", 2}});
  const DensityMatrix rho(l, 0.5 * projector_onto(CVec::Unit(4, 1)) + 0.5 * projector_onto(CVec::Unit(4, 2)));
  for (int i = 0; i < 20; ++i) {
    DensityMatrix d = rho;
    RelationSpaTranscript t;
    CHECK(relation_spa(d, {"a", "b"}, rng, t));
    CHECK(t.commitments.size() == 2);
    CHECK((d.rho - rho.rho).norm() < 1e-9);
  }
}

TEST_CASE("transcript extraction") {
  Rng rng = make_rng(101);
  const QmaVerifier perfect = diagonal_verifier({1.0, 0.3});
  for (int rounds : {1, 3}) {
    const ToyBase base = make_toy_base_cvqc(perfect, rounds);
    for (auto inst : {TcfInstantiation::ideal, TcfInstantiation::lattice}) {
      NdOptions o;
      o.inst = inst;
      o.lattice = LweParams::classical_fixture();
      for (int i = 0; i < (rounds == 1 ? 20 : 2); ++i) {
        const ExtractResult e = transcript_extract(base, eigen_witness(perfect, 1.0), o, rng);
        CHECK(e.ok);
        CHECK(e.base_verdict);
        CHECK(e.base_verdict == e.protocol_verdict);
      }
    }
  }

  const QmaVerifier v = diagonal_verifier({0.7, 0.2});
  const ToyBase base = make_toy_base_cvqc(v);
  NdOptions o;
  o.forced_phase = Phase::check;
  const int trials = 1000;
  int acc = 0, mismatch = 0;
  for (int i = 0; i < trials; ++i) {
    const ExtractResult e = transcript_extract(base, eigen_witness(v, 0.7), o, rng);
    REQUIRE(e.ok);
    acc += e.base_verdict;
    mismatch += e.base_verdict != e.protocol_verdict;
  }
  CHECK(mismatch == 0);
  CHECK(std::abs(acc / double(trials) - 0.7) <= 3 * std::sqrt(0.21 / trials));

  // An image outside the range is reported as failure, never as a transcript.
  const ImageTamper tamper = [](NdSession& s, Rng&) { s.y[0][0].index = 1u << 20; };
  const ExtractResult f = transcript_extract(base, eigen_witness(v, 0.7), o, rng, tamper);
  CHECK_FALSE(f.ok);
  CHECK(f.answers.empty());
}

TEST_CASE("threshold count and recount") {
  CHECK(threshold_count(0.8, 0.4, 10) == 6);
  CHECK(threshold_count(0.8, 0.4, 0) == 0);
  CHECK(threshold_count(0.75, 0.25, 3) == 2);

  Rng rng = make_rng(102);
  const QmaVerifier v = diagonal_verifier({0.9, 0.1});
  const ToyBase base = make_toy_base_cvqc(v);
  SeqRepConfig cfg;
  cfg.n = 12;
  cfg.epsilon = 0.01;
  for (int i = 0; i < 20; ++i) {
    const SeqRepResult r = seqrep_run(cfg, base, eigen_witness(v, 0.9), rng);
    CHECK(r.accept == seqrep_recount(r, cfg.c, cfg.s));
    CHECK(r.stopped_at == cfg.n);
    CHECK(static_cast<int>(r.ledger.p_chain.size()) == cfg.n);
    const auto j = r.to_json();
    CHECK(j.at("verdicts").size() == static_cast<std::size_t>(cfg.n));
    CHECK(j.at("ledger").at("p_chain").size() == static_cast<std::size_t>(cfg.n));
  }
}

TEST_CASE("seqrep: sabotage and abort stop the run") {
  Rng rng = make_rng(103);
  const QmaVerifier v = diagonal_verifier({1.0, 0.3});
  const ToyBase base = make_toy_base_cvqc(v);
  SeqRepConfig cfg;
  cfg.n = 40;
  cfg.sabotage = [](int rep) { return rep >= 1; };
  const SeqRepResult s = seqrep_run(cfg, base, eigen_witness(v, 1.0), rng);
  CHECK(s.test_abort);
  CHECK_FALSE(s.accept);
  CHECK(s.rounds.back().phase == Phase::test);

  SeqRepConfig q;
  q.n = 5;
  q.abort_after = 2;
  const SeqRepResult a = seqrep_run(q, base, eigen_witness(v, 1.0), rng);
  CHECK(a.test_abort);
  CHECK(a.stopped_at == 2);
  CHECK_FALSE(seqrep_recount(a, q.c, q.s));
}

TEST_CASE("seqrep: one repetition behaves like one compiled run") {
  const QmaVerifier v = diagonal_verifier({0.9, 0.1});
  const ToyBase base = make_toy_base_cvqc(v);
  SeqRepConfig cfg;
  cfg.n = 1;
  const int trials = 400;
  int acc = 0, check_pass = 0, checks = 0;
  Rng rng = make_rng(104);
  for (int i = 0; i < trials; ++i) {
    const SeqRepResult r = seqrep_run(cfg, base, eigen_witness(v, 0.9), rng);
    acc += r.accept;
    if (r.n_check == 1) {
      ++checks;
      check_pass += r.n_check_pass;
      // One check round needs ceil(0.6) = 1 pass.
      CHECK(r.accept == (r.n_check_pass == 1));
    } else {
      CHECK(r.accept);
    }
  }
  CHECK(std::abs(check_pass / double(checks) - 0.9) <= 3 * std::sqrt(0.09 / checks));
}

TEST_CASE("seqrep extraction") {
  Rng rng = make_rng(105);
  const QmaVerifier v = diagonal_verifier({1.0, 0.3});
  const ToyBase base = make_toy_base_cvqc(v);
  SeqRepConfig cfg;
  cfg.n = 4;
  for (int i = 0; i < 10; ++i) {
    const SeqExtraction e = seqrep_extract(cfg, base, eigen_witness(v, 1.0), rng);
    REQUIRE(e.success);
    CHECK(brute_force_acceptance(v, *e.witness) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(e.quality == doctest::Approx(1.0).epsilon(1e-9));
  }
  SeqRepConfig q = cfg;
  q.abort_after = 2;
  for (int i = 0; i < 20; ++i) {
    const SeqExtraction e = seqrep_extract(q, base, eigen_witness(v, 1.0), rng);
    if (e.j > 1) {
      CHECK_FALSE(e.success);
      CHECK_FALSE(e.witness.has_value());
    }
  }
}

TEST_CASE("azuma and Hoeffding bounds") {
  CHECK(azuma_bound(30, std::vector<double>(100, 1.0)) == doctest::Approx(std::exp(-18.0)));
  CHECK(azuma_bound(30, std::vector<double>(100, 1.0)) == doctest::Approx(1.523e-8).epsilon(1e-3));
  CHECK(azuma_bound(0, {1.0}) == 1.0);
  CHECK_THROWS_AS(azuma_bound(1.0, {}), std::invalid_argument);
  CHECK_THROWS_AS(azuma_bound(1.0, {0.0}), std::invalid_argument);
  // Unit differences over n_C check rounds at deviation gamma n_C give exp(-2 gamma^2 n_C);
  // gamma = lambda / sqrt(n_C) turns this into exp(-2 lambda^2).
  const int nc = 50;
  const double lambda = 1.5, gamma = lambda / std::sqrt(double(nc));
  const std::vector<double> c(nc, 1.0);
  CHECK(azuma_bound(gamma * nc, c) == doctest::Approx(std::exp(-2 * gamma * gamma * nc)));
  CHECK(azuma_bound(gamma * nc, c) == doctest::Approx(std::exp(-2 * lambda * lambda)));

  CHECK(seqrep_hoeffding_bound(60, 0.8, 0.4) == doctest::Approx(1 - std::exp(-2 * 144.0 / 60)));
  CHECK(seqrep_check_count_bound(60, 0.8, 0.4) < 1.0);
}

TEST_CASE("good transcript diagnostic") {
  Rng rng = make_rng(106);
  const QmaVerifier v = diagonal_verifier({1.0, 0.3});
  const ToyBase base = make_toy_base_cvqc(v);
  SeqRepConfig cfg;
  cfg.n = 4;
  cfg.test_pass_samples = 100;
  const SeqRepResult r = seqrep_run(cfg, base, eigen_witness(v, 1.0), rng);
  const GoodTranscriptReport g = good_transcript_diagnostic(r, 1, 10);
  CHECK(g.good);
  CHECK(g.flagged.empty());
  CHECK(g.threshold == doctest::Approx(0.9));
  CHECK(g.allowed == doctest::Approx(100.0));

  SeqRepConfig sab = cfg;
  sab.sabotage = [](int rep) { return rep == 3; };
  // Force the sampled phases past round 3 by retrying until the run reaches it.
  for (int attempt = 0; attempt < 50; ++attempt) {
    const SeqRepResult s = seqrep_run(sab, base, eigen_witness(v, 1.0), rng);
    if (s.stopped_at < 3) continue;
    const GoodTranscriptReport gs = good_transcript_diagnostic(s, 1, 10);
    REQUIRE(!gs.flagged.empty());
    CHECK(gs.flagged.front() == 3);
    break;
  }

  SeqRepConfig few = cfg;
  few.test_pass_samples = 10;
  CHECK_THROWS_AS(good_transcript_diagnostic(seqrep_run(few, base, eigen_witness(v, 1.0), rng), 1, 10),
                  std::invalid_argument);
}

TEST_CASE("sample_pure is exact on pure states") {
  Rng rng = make_rng(107);
  const StateVector s = random_state(Layout({{"W", 3}}), rng);
  const StateVector p = sample_pure(DensityMatrix::from_pure(s), rng);
  CHECK(std::abs(std::abs(p.amp.dot(s.amp)) - 1.0) < 1e-9);
}
