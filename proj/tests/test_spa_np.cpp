#include <doctest.h>

#include <cmath>
#include <sstream>

#include "wpv/spa_np.hpp"

using namespace wpv;

namespace {

KeyFactory ideal_keys() {
  return [](Rng& r) { return SpaKeys(setup_ideal(2, TcfMode::recovery, r)); };
}

DensityMatrix uniform_witness(const Graph& g) {
  return DensityMatrix::from_pure(coloring_superposition(g, valid_colorings(g)));
}

}  // namespace

TEST_CASE("graph validation and edge-list format") {
  const Graph k3 = Graph::complete(3);
  CHECK(k3.edges.size() == 3);
  std::istringstream in(k3.to_edge_list());
  const Graph back = Graph::parse(in);
  CHECK(back.vertices == 3);
  CHECK(back.edges == k3.edges);

  std::istringstream commented("# triangle\n0 1\n1 2\n\n2 0\n");
  CHECK(Graph::parse(commented).edges.size() == 3);

  Graph loop;
  loop.vertices = 2;
  loop.edges = {{1, 1}};
  CHECK_THROWS_AS(loop.validate(), std::invalid_argument);
  Graph range;
  range.vertices = 2;
  range.edges = {{0, 2}};
  CHECK_THROWS_AS(range.validate(), std::invalid_argument);
  Graph none;
  none.vertices = 2;
  CHECK_THROWS_AS(none.validate(), std::invalid_argument);
}

TEST_CASE("valid colorings by enumeration") {
  CHECK(valid_colorings(Graph::complete(3)).size() == 6);
  CHECK(valid_colorings(Graph::path(3)).size() == 12);
  CHECK(valid_colorings(Graph::complete(4)).empty());
  CHECK(min_bad_edges(Graph::complete(4)) == 1);
  CHECK(bad_edges(Graph::complete(3), {0, 0, 3}) == 3);
}

TEST_CASE("unique permutation bijection") {
  for (int wi = 0; wi < 3; ++wi)
    for (int wj = 0; wj < 3; ++wj)
      for (int ci = 0; ci < 3; ++ci)
        for (int cj = 0; cj < 3; ++cj) {
          int count = 0;
          for (const auto& p : s3()) count += p[wi] == ci && p[wj] == cj;
          const bool proper = wi != wj && ci != cj;
          if (proper) {
            CHECK(count == 1);
            const int u = unique_permutation(wi, wj, ci, cj);
            REQUIRE(u >= 0);
            CHECK(s3()[u][wi] == ci);
            CHECK(s3()[u][wj] == cj);
          } else if (wi != wj || ci != cj) {
            CHECK(count == 0);
          }
        }
  CHECK(s3()[0] == std::array<int, 3>{0, 1, 2});
}

TEST_CASE("completeness with the ideal TCF on every challenge edge") {
  Rng rng = make_rng(61);
  const Graph k3 = Graph::complete(3);
  const DensityMatrix single = DensityMatrix::from_pure(coloring_superposition(k3, {{0, 1, 2}}));
  const DensityMatrix k3u = uniform_witness(k3);
  const Graph p3 = Graph::path(3);
  const DensityMatrix p3u = uniform_witness(p3);
  const SpaKeys keys(setup_ideal(2, TcfMode::recovery, rng));
  for (int e = 0; e < 3; ++e) {
    const SpaResult a = spa_run(k3, single, keys, rng, e);
    CHECK(a.accept);
    CHECK(trace_distance(a.leftover, single) < 1e-9);
    CHECK(a.transcript.td_revealed);
    const SpaResult b = spa_run(k3, k3u, keys, rng, e);
    CHECK(b.accept);
    CHECK(trace_distance(b.leftover, k3u) <= 1e-6);
  }
  for (int e = 0; e < 2; ++e) {
    const SpaResult c = spa_run(p3, p3u, keys, rng, e);
    CHECK(c.accept);
    CHECK(trace_distance(c.leftover, p3u) <= 1e-6);
    CHECK(c.transcript.ci != c.transcript.cj);
  }
  CHECK_THROWS_AS(spa_run(k3, single, keys, rng, 7), std::invalid_argument);
}

TEST_CASE("completeness preserves entanglement with an outside register") {
  Rng rng = make_rng(62);
  const Graph k3 = Graph::complete(3);
  const auto cols = valid_colorings(k3);
  const StateVector w = coloring_superposition(k3, {cols[0], cols[1]});
  // (|c0>|0> + |c1>|1>)/sqrt2 with a reference qubit.
  const Layout l = w.layout.appended({{"REF", 2}});
  CVec a = CVec::Zero(static_cast<Eigen::Index>(l.size()));
  for (std::size_t x = 0; x < w.layout.size(); ++x) {
    const cplx v = w.amp(static_cast<Eigen::Index>(x));
    if (std::abs(v) == 0.0) continue;
    int c0 = 0;
    for (int k = 0; k < 3; ++k) c0 += w.layout.digit(x, k) == cols[1][static_cast<std::size_t>(k)];
    a(static_cast<Eigen::Index>(2 * x + (c0 == 3 ? 1 : 0))) = v;
  }
  const DensityMatrix rho = DensityMatrix::from_pure(StateVector(l, a));
  const SpaResult r = spa_run(k3, rho, SpaKeys(setup_ideal(2, TcfMode::recovery, rng)), rng);
  CHECK(r.accept);
  CHECK(trace_distance(r.leftover, rho) <= 1e-6);
}

TEST_CASE("lattice micro keys: leftover within the recomputed bound") {
  Rng rng = make_rng(63);
  const Graph k3 = Graph::complete(3);
  const DensityMatrix rho = uniform_witness(k3);
  const TcfKeypair kp = setup_lattice(LweParams::quantum_micro(), TcfMode::recovery, rng, 2);
  const SpaKeys keys(kp);
  for (int i = 0; i < 3; ++i) {
    const SpaResult r = spa_run(k3, rho, keys, rng);
    CHECK(r.accept);
    CHECK(trace_distance(r.leftover, rho) <= spa_leftover_bound(k3, kp) + 1e-9);
  }
}

TEST_CASE("soundness probe examples") {
  Rng rng = make_rng(64);
  const Graph k4 = Graph::complete(4);
  const SoundnessReport best = spa_soundness_probe(k4, fixed_coloring_strategy(best_adversarial_coloring(k4)), 200, rng);
  CHECK(best.bound == doctest::Approx(5.0 / 6.0));
  CHECK(best.exact_rate <= 5.0 / 6.0 + 1e-12);
  CHECK(best.rate <= 5.0 / 6.0 + 3 * best.std_error + 1e-12);

  Graph edge;
  edge.vertices = 2;
  edge.edges = {{0, 1}};
  const SoundnessReport mono = spa_soundness_probe(edge, fixed_coloring_strategy({1, 1}), 50, rng);
  CHECK(mono.exact_rate == 0.0);
  CHECK(mono.rate == 0.0);

  // Vertex 0 committed to the invalid color 3: all three of its edges fail.
  const SoundnessReport inv = spa_soundness_probe(k4, fixed_coloring_strategy({3, 0, 1, 2}), 50, rng);
  CHECK(inv.exact_rate <= 1.0 - 3.0 / 6.0 + 1e-12);

  // Every assignment in {0..3}^4 stays at or below the bound.
  for (int idx = 0; idx < 256; ++idx) {
    std::vector<int> c(4);
    for (int v = 0, t = idx; v < 4; ++v, t /= 4) c[static_cast<std::size_t>(v)] = t % 4;
    CHECK(spa_soundness_probe(k4, fixed_coloring_strategy(c), 1, rng).exact_rate <= 5.0 / 6.0 + 1e-12);
  }
}

TEST_CASE("lattice injective soundness probe") {
  Rng rng = make_rng(65);
  const Graph k4 = Graph::complete(4);
  const SoundnessReport r = spa_soundness_probe(k4, fixed_coloring_strategy({0, 1, 2, 0}), 20, rng, TcfInstantiation::lattice);
  CHECK(r.exact_rate <= 5.0 / 6.0 + 1e-12);
}

TEST_CASE("repeated soundness decays") {
  Rng rng = make_rng(66);
  const Graph k4 = Graph::complete(4);
  const int trials = 2000;
  const SoundnessReport r = spa_soundness_repeat(k4, fixed_coloring_strategy(best_adversarial_coloring(k4)), 5, trials, rng);
  CHECK(r.rate <= std::pow(5.0 / 6.0, 5) + 3 * r.std_error);
}

TEST_CASE("extraction") {
  Rng rng = make_rng(67);
  const Graph k3 = Graph::complete(3);
  for (auto inst : {TcfInstantiation::ideal, TcfInstantiation::lattice}) {
    const auto c = spa_extract(honest_strategy({0, 1, 2}), k3, rng, inst);
    REQUIRE(c.has_value());
    CHECK(valid_coloring(k3, *c));
  }
  const Graph p4 = Graph::path(4);
  const auto pc = spa_extract(honest_strategy({0, 1, 0, 1}), p4, rng);
  REQUIRE(pc.has_value());
  CHECK(bad_edges(p4, *pc) == 0);

  const Graph k4 = Graph::complete(4);
  CHECK_FALSE(spa_extract(fixed_coloring_strategy(best_adversarial_coloring(k4)), k4, rng).has_value());
}

TEST_CASE("commitments bind colors under injective keys") {
  Rng rng = make_rng(68);
  const TcfKeypair kp = setup_ideal(2, TcfMode::injective, rng);
  const std::vector<int> cols{0, 1, 2, 3};
  const auto com = commit_colors(kp, cols, rng);
  for (std::size_t i = 0; i < 3; ++i) CHECK(extract_color(kp, com[i]) == cols[i]);
  CHECK(extract_color(kp, com[3]) == 3);
}

TEST_CASE("parallel and sequential repetition") {
  Rng rng = make_rng(69);
  const Graph k3 = Graph::complete(3);
  const DensityMatrix rho = uniform_witness(k3);

  Rng a = make_rng(70), b = make_rng(70);
  const RepeatResult one = spa_parallel_repeat(k3, rho, 1, ideal_keys(), a);
  const SpaResult direct = spa_run(k3, rho, ideal_keys()(b), b);
  CHECK(one.accept == direct.accept);
  CHECK(one.transcripts[0].edge == direct.transcript.edge);
  CHECK((one.leftover.rho - direct.leftover.rho).norm() < 1e-12);

  const RepeatResult three = spa_parallel_repeat(k3, rho, 3, ideal_keys(), rng);
  CHECK(three.accept);
  CHECK(three.transcripts.size() == 3);
  CHECK(trace_distance(three.leftover, rho) <= 3e-6);

  const RepeatResult five = spa_sequential_repeat(k3, rho, 5, ideal_keys(), rng);
  CHECK(five.accept);
  CHECK(trace_distance(five.leftover, rho) <= 5e-6);
  CHECK_THROWS_AS(spa_sequential_repeat(k3, rho, 0, ideal_keys(), rng), std::invalid_argument);
}

TEST_CASE("sessions commute") {
  const Graph k3 = Graph::complete(3);
  const DensityMatrix rho = uniform_witness(k3);
  Rng kr = make_rng(71);
  const SpaKeys ka(setup_ideal(2, TcfMode::recovery, kr)), kb(setup_ideal(2, TcfMode::recovery, kr));
  auto run = [&](bool a_first) {
    DensityMatrix s = rho;
    Rng ra = make_rng(72), rb = make_rng(73);
    SpaSession sa(k3, ka, "a"), sb(k3, kb, "b");
    std::vector<SpaTranscript> t(2);
    for (int pass = 0; pass < 2; ++pass) {
      const bool do_a = (pass == 0) == a_first;
      SpaSession& ss = do_a ? sa : sb;
      Rng& rr = do_a ? ra : rb;
      ss.begin(s);
      ss.commit(s, rr);
      ss.challenge(rr);
      ss.open(s, rr);
      ss.finish(s);
      t[do_a ? 0 : 1] = ss.transcript();
    }
    return std::make_pair(s, t);
  };
  const auto [ab, tab] = run(true);
  const auto [ba, tba] = run(false);
  CHECK((ab.rho - ba.rho).norm() < 1e-9);
  for (int i = 0; i < 2; ++i) {
    CHECK(tab[i].edge == tba[i].edge);
    CHECK(tab[i].y == tba[i].y);
    CHECK(tab[i].accept);
  }
}

TEST_CASE("transcript JSON carries only classical messages") {
  Rng rng = make_rng(74);
  const Graph k3 = Graph::complete(3);
  const SpaResult r = spa_run(k3, uniform_witness(k3), SpaKeys(setup_ideal(2, TcfMode::recovery, rng)), rng);
  const auto j = r.transcript.to_json();
  CHECK(j.contains("y"));
  CHECK(j.contains("edge"));
  CHECK(j.at("verdict") == "Accept");
}
