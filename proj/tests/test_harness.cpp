#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "wpv/harness.hpp"

using namespace wpv;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("wpv_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig small(const std::string& id, int trials) {
  ExperimentConfig c = default_config(id);
  c.trials = trials;
  return c;
}

// Synthetic per-round log: check with probability 1/2, check verdict 1 with
// probability q, test verdict always 1.
nlohmann::json synthetic_log(int n, double q, Rng& rng, bool biased = false) {
  nlohmann::json ph = nlohmann::json::array(), vd = nlohmann::json::array(), qu = nlohmann::json::array();
  for (int i = 0; i < n; ++i) {
    const bool check = biased || uniform01(rng) < 0.5;
    ph.push_back(check ? "check" : "test");
    vd.push_back(biased ? 1 : (!check || uniform01(rng) < q) ? 1 : 0);
    qu.push_back(q);
  }
  return {{"phases", ph}, {"verdicts", vd}, {"quality_before", qu}};
}

}  // namespace

TEST_CASE("every experiment is registered once with a criterion") {
  std::set<int> crit;
  for (const auto& e : experiments()) {
    CHECK(e.criterion >= 1);
    CHECK(e.criterion <= 14);
    CHECK(crit.insert(e.criterion).second);
    CHECK_NOTHROW(validate(default_config(e.id)));
  }
  CHECK(crit.size() == 14);
  CHECK_THROWS_AS(find_experiment("nope"), ConfigError);
}

TEST_CASE("config errors") {
  ExperimentConfig c = small("jordan-oracle", 0);
  CHECK_THROWS_AS(validate(c), ConfigError);
  CHECK_THROWS_AS(run_experiment(c), ConfigError);

  CHECK_THROWS_AS(config_from_json({{"experiment", "jordan-oracle"}, {"bogus", 1}}), ConfigError);
  CHECK_THROWS_AS(config_from_json({{"experiment", "jordan-oracle"}, {"params", {{"eps", 0.1}}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json({{"experiment", "jordan-oracle"}, {"trials", "many"}}), ConfigError);
  CHECK_THROWS_AS(config_from_json({{"trials", 3}}), ConfigError);
  CHECK_THROWS_AS(config_from_json({{"experiment", "unknown"}}), ConfigError);

  ExperimentConfig f = default_config("nd-general");
  f.fixture.verifier = "diag-nope";
  CHECK_THROWS_AS(validate(f), ConfigError);
  ExperimentConfig g = default_config("seqrep");
  g.s = g.c;
  CHECK_THROWS_AS(validate(g), ConfigError);
}

TEST_CASE("YAML and JSON configuration files") {
  const std::string yaml =
      "experiment: seqrep\n"
      "seed: 7\n"
      "trials: 3\n"
      "params:\n"
      "  epsilon: 0.002\n"
      "  n: 10\n"
      "fixture:\n"
      "  verifier: diag-0.9\n"
      "output:\n"
      "  dir: somewhere\n";
  const ExperimentConfig c = config_from_json(yaml_text_to_json(yaml));
  CHECK(c.experiment == "seqrep");
  CHECK(c.seed == 7);
  CHECK(c.trials == 3);
  CHECK(c.epsilon == doctest::Approx(0.002));
  CHECK(c.n == 10);
  CHECK(c.fixture.verifier == "diag-0.9");
  CHECK(c.out_dir == "somewhere");

  const fs::path dir = scratch("cfg");
  std::ofstream(dir / "a.yaml") << yaml;
  CHECK(load_config((dir / "a.yaml").string()).n == 10);
  std::ofstream(dir / "b.json") << c.to_json().dump();
  const ExperimentConfig back = load_config((dir / "b.json").string());
  CHECK(back.to_json() == c.to_json());
  std::ofstream(dir / "bad.yaml") << "experiment: [unclosed\n";
  CHECK_THROWS_AS(load_config((dir / "bad.yaml").string()), ConfigError);
  CHECK_THROWS_AS(load_config((dir / "missing.yaml").string()), ConfigError);
}

TEST_CASE("parallel and serial dispatch return identical records") {
  const TrialFn fn = [](int i, Rng& rng) {
    return Record{{"i", i}, {"u", uniform01(rng)}, {"v", static_cast<std::uint64_t>(rng())}};
  };
  const auto a = run_trials_parallel(64, 5, fn);
  const auto b = run_trials_serial(64, 5, fn);
  CHECK(a == b);
  for (int i = 0; i < 64; ++i) CHECK(a[static_cast<std::size_t>(i)].at("i") == i);

  ExperimentConfig c = small("valest-projectivity", 40);
  c.parallel = true;
  const auto p = run_experiment(c).records;
  c.parallel = false;
  CHECK(run_experiment(c).records == p);
}

TEST_CASE("replay from the same config is byte-identical") {
  const fs::path d1 = scratch("replay1"), d2 = scratch("replay2");
  ExperimentConfig c = small("jordan-oracle", 10);
  c.seed = 99;
  c.out_dir = d1.string();
  const ExperimentRun r1 = run_experiment(c);
  c.out_dir = d2.string();
  const ExperimentRun r2 = run_experiment(c);
  CHECK(fs::exists(r1.log_path));
  CHECK(slurp(r1.log_path) == slurp(r2.log_path));
  CHECK(slurp(r1.csv_path) == slurp(r2.csv_path));
  c.seed = 100;
  c.out_dir = d2.string();
  CHECK(slurp(run_experiment(c).log_path) != slurp(r1.log_path));
}

TEST_CASE("records are tagged and the recount matches") {
  const ExperimentRun r = run_experiment(small("eigen-concentration", 100));
  for (std::size_t i = 0; i < r.records.size(); ++i) {
    CHECK(r.records[i].at("experiment") == "eigen-concentration");
    CHECK(r.records[i].at("trial") == static_cast<int>(i));
  }
  std::stringstream ss;
  write_jsonl(ss, r.records);
  const auto back = read_jsonl(ss);
  CHECK(back == r.records);
  const auto re = report(back);
  REQUIRE(re.size() == 1);
  CHECK(re[0].to_json() == r.summary.to_json());

  std::stringstream bad("{\"experiment\": \"x\"}\nnot json\n");
  CHECK_THROWS_AS(read_jsonl(bad), ConfigError);
  CHECK_THROWS_AS(report({Record{{"trial", 1}}}), ConfigError);
}

TEST_CASE("statistics summary") {
  const MetricSummary m = summarize_metric("x", {1, 2, 3, 4});
  CHECK(m.mean == doctest::Approx(2.5));
  CHECK(m.min == 1);
  CHECK(m.max == 4);
  CHECK(m.count == 4);
  CHECK(m.std_error == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0));
  StatsSummary s;
  CHECK_FALSE(s.pass());
  s.criteria.push_back({1, "a", true, 0, 0, ""});
  CHECK(s.pass());
  s.criteria.push_back({1, "b", false, 0, 0, ""});
  CHECK_FALSE(s.pass());
}

TEST_CASE("CSV quoting follows RFC 4180") {
  CHECK(csv_field("plain") == "plain");
  CHECK(csv_field("a,b") == "\"a,b\"");
  CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(csv_field("two\nlines") == "\"two\nlines\"");

  StatsSummary s;
  s.experiment = "x";
  s.metrics.push_back(summarize_metric("m", {1.0}));
  s.criteria.push_back({3, "name, with comma", true, 0.5, 1.0, "detail \"q\""});
  std::stringstream ss;
  write_csv_summary(ss, {s});
  const std::string out = ss.str();
  CHECK(out.rfind("experiment,kind,name,mean,std_error,min,max,count,criterion,pass,value,bound,detail\r\n", 0) == 0);
  CHECK(out.find("\"name, with comma\"") != std::string::npos);
  CHECK(out.find("\"detail \"\"q\"\"\"") != std::string::npos);
  std::size_t lf = 0, crlf = 0;
  for (std::size_t i = 0; i < out.size(); ++i)
    if (out[i] == '\n') {
      ++lf;
      crlf += i > 0 && out[i - 1] == '\r';
    }
  CHECK(lf == 3);
  CHECK(crlf == lf);
}

TEST_CASE("oracles") {
  CHECK(run_oracle("brute-force", {"proj-1", "0", "1"}, 1).at("acceptance").get<double>() == doctest::Approx(1.0));
  CHECK(run_oracle("brute-force", {"proj-1", "1", "1"}, 1).at("acceptance").get<double>() == doctest::Approx(0.5));
  CHECK(run_oracle("azuma", {"30", "1", "1"}, 1).at("bound").get<double>() == doctest::Approx(std::exp(-900.0)));
  CHECK(run_oracle("valest-t", {"0.1", "0.01"}, 1).at("t").get<long>() == valest_t(0.1, 0.01));
  CHECK(run_oracle("threshold", {"10", "0.8", "0.4"}, 1).at("threshold") == 6);
  CHECK(run_oracle("preimage", {"ideal", "recovery", "0"}, 1).at("preimages").size() == 2);
  const auto sp = run_oracle("spectrum", {"diag-0.75"}, 1).at("eigenvalues");
  CHECK(sp.at(0).get<double>() == doctest::Approx(0.75));
  CHECK_THROWS_AS(run_oracle("nope", {}, 1), ConfigError);
  CHECK_THROWS_AS(run_oracle("brute-force", {"proj-1", "x", "1"}, 1), ConfigError);
  CHECK_THROWS_AS(run_oracle("brute-force", {"proj-1", "1"}, 1), ConfigError);
  CHECK_THROWS_AS(run_oracle("valest-t", {"0", "0.1"}, 1), ConfigError);
  CHECK(oracle_names().size() == 7);
}

TEST_CASE("fixtures") {
  for (const auto& f : fixture_list()) CHECK(has_fixture(f.kind, f.name));
  CHECK_FALSE(has_fixture("graph", "k9"));
  CHECK(fixture_graph("k4").edges.size() == 6);
  const QmaVerifier v = fixture_verifier("diag-0.75");
  CHECK(eigen_spectrum(v).pairs[0].value == doctest::Approx(0.75));
  Rng rng = make_rng(3);
  FixtureSpec spec;
  spec.witness = "bell-ref";
  const StateVector w = fixture_witness(v, spec, rng);
  CHECK(w.layout.has("REF"));
  CHECK(std::abs(w.norm() - 1.0) < 1e-9);
  spec.witness = "eigenstate";
  CHECK(brute_force_acceptance(v, fixture_witness(v, spec, rng)) == doctest::Approx(0.75));
  CHECK(fixture_keypair("lattice-micro", TcfMode::recovery, rng).lattice.params.q == 13);
  CHECK_THROWS_AS(fixture_verifier("nope"), ConfigError);
}

TEST_CASE("dimension budget is a config error") {
  ExperimentConfig c = small("spa-completeness", 1);
  c.max_dim = 16;
  const std::size_t before = max_dim();
  CHECK_THROWS_AS(run_experiment(c), ConfigError);
  CHECK(max_dim() == before);
}

TEST_CASE("martingale diagnostics") {
  Rng rng = make_rng(8);
  std::vector<nlohmann::json> honest;
  for (int i = 0; i < 100; ++i) honest.push_back(synthetic_log(200, 0.8, rng));
  const MartingaleReport ok = martingale_diagnostics(honest);
  CHECK(ok.trials == 100);
  CHECK(ok.violations == 0);
  CHECK(ok.max_ratio < 1.0);

  // Always accepted check rounds at claimed quality 0.2: drift 0.9 per round.
  const MartingaleReport bad = martingale_diagnostics({synthetic_log(400, 0.2, rng, true)});
  CHECK(bad.violations == 1);
  CHECK(bad.max_ratio > 1.0);

  CHECK_THROWS_AS(martingale_diagnostics({nlohmann::json{{"phases", {"test"}}}}), std::invalid_argument);
  nlohmann::json mism = synthetic_log(5, 0.5, rng);
  mism["verdicts"].push_back(1);
  CHECK_THROWS_AS(martingale_diagnostics({mism}), std::invalid_argument);
  nlohmann::json range = synthetic_log(5, 0.5, rng);
  range["quality_before"][0] = 1.5;
  CHECK_THROWS_AS(martingale_diagnostics({range}), std::invalid_argument);
  CHECK_THROWS_AS(martingale_diagnostics(honest, 0.0), std::invalid_argument);
}
