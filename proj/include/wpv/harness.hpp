// Experiment runner: configuration, the fixture registry, seeded trial
// dispatch, statistics with pass/fail recounts, JSON-lines and CSV output,
// and the brute-force oracles the Monte-Carlo checks are compared against.
#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "wpv/compiler.hpp"
#include "wpv/spa_np.hpp"

namespace wpv {

using Record = nlohmann::json;

// Bad or inconsistent configuration (CLI exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FixtureSpec {
  std::string verifier = "diag-0.75";
  std::string witness = "eigenstate";  // eigenstate | superposition | bell-ref | random
  double witness_p = 0.75;
  std::string graph = "k3";
  std::string tcf = "ideal";  // ideal | lattice-classical | lattice-micro
};

struct ExperimentConfig {
  std::string experiment;
  std::uint64_t seed = 1;
  int trials = 1;
  int shots = 1;  // inner repetitions per trial, where the experiment has them
  double epsilon = 0.1;
  double delta = 0.01;
  int lambda = 10;
  int n = 1;
  double c = 0.8;
  double s = 0.4;
  int d = 1;
  double zeta = 0.99;
  FixtureSpec fixture;
  std::string out_dir;
  std::size_t max_dim = std::size_t{1} << 22;
  bool parallel = true;

  nlohmann::json to_json() const;
};

// Starts from the experiment's defaults and applies every key in `j`; unknown
// keys, unknown experiments and wrong types raise ConfigError.
ExperimentConfig config_from_json(const nlohmann::json& j);
// YAML (or JSON, by extension) file.
ExperimentConfig load_config(const std::string& path);
nlohmann::json yaml_text_to_json(const std::string& text);
void validate(const ExperimentConfig& cfg);

// ---- fixtures

struct FixtureInfo {
  std::string kind;  // verifier | graph | tcf | witness
  std::string name;
  std::string description;
};
const std::vector<FixtureInfo>& fixture_list();
bool has_fixture(const std::string& kind, const std::string& name);
QmaVerifier fixture_verifier(const std::string& name);
Graph fixture_graph(const std::string& name);
// Witness on register "W" (plus "REF" for bell-ref).
StateVector fixture_witness(const QmaVerifier& v, const FixtureSpec& f, Rng& rng);
TcfKeypair fixture_keypair(const std::string& tcf, TcfMode mode, Rng& rng, int domain_bits = 1);

// ---- trial dispatch

using TrialFn = std::function<Record(int trial, Rng& rng)>;
// Trial i uses make_rng(seed, i); the output order is the trial order, so the
// parallel and serial paths return identical records.
std::vector<Record> run_trials_parallel(int trials, std::uint64_t seed, const TrialFn& fn);
std::vector<Record> run_trials_serial(int trials, std::uint64_t seed, const TrialFn& fn);

// ---- statistics

struct MetricSummary {
  std::string name;
  double mean = 0.0;
  double std_error = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::size_t count = 0;
};
MetricSummary summarize_metric(const std::string& name, const std::vector<double>& values);

struct CriterionResult {
  int criterion = 0;
  std::string name;
  bool pass = false;
  double value = 0.0;
  double bound = 0.0;
  std::string detail;
};

struct StatsSummary {
  std::string experiment;
  int trials = 0;
  std::vector<MetricSummary> metrics;
  std::vector<CriterionResult> criteria;

  bool pass() const;
  nlohmann::json to_json() const;
};

// ---- experiments

struct Experiment {
  std::string id;
  int criterion = 0;
  std::string description;
  std::function<void(ExperimentConfig&)> defaults;
  std::function<TrialFn(const ExperimentConfig&)> prepare;
  // Recount from raw records only.
  std::function<StatsSummary(const std::vector<Record>&)> summarize;
};
const std::vector<Experiment>& experiments();
const Experiment& find_experiment(const std::string& id);
ExperimentConfig default_config(const std::string& id);

struct ExperimentRun {
  StatsSummary summary;
  std::vector<Record> records;
  std::string log_path;
  std::string csv_path;
};
// Deterministic given the config; writes <out_dir>/<id>.jsonl and
// <out_dir>/<id>_summary.csv when out_dir is set.
ExperimentRun run_experiment(const ExperimentConfig& cfg);

// ---- output

void write_jsonl(std::ostream& os, const std::vector<Record>& records);
std::vector<Record> read_jsonl(std::istream& is);
std::string csv_field(const std::string& s);
void write_csv_summary(std::ostream& os, const std::vector<StatsSummary>& summaries);
// Groups a trial log by experiment id and recomputes each summary.
std::vector<StatsSummary> report(const std::vector<Record>& records);

// ---- oracles

struct MartingaleReport {
  int trials = 0;
  int violations = 0;
  double alpha = 0.0;
  std::vector<double> deviations;  // sum X_i - sum E[X_i | past], per trial
  std::vector<double> radii;       // deviation allowed at level alpha, per trial
  double max_ratio = 0.0;          // max |deviation| / radius
  nlohmann::json to_json() const;
};
// X_i = [check phase and accepted], E[X_i | past] = quality_before / 2.
// A trial violates when |deviation| exceeds the two-sided Azuma radius at alpha.
MartingaleReport martingale_diagnostics(const std::vector<nlohmann::json>& seqrep_logs, double alpha = 1e-6);

// `oracle <name> <args>` entry point; returns a JSON answer or throws ConfigError.
nlohmann::json run_oracle(const std::string& name, const std::vector<std::string>& args, std::uint64_t seed);
std::vector<std::string> oracle_names();

}  // namespace wpv
