// Experiment runner CLI. Exit codes: 0 all criteria pass, 1 a criterion
// failed, 2 configuration or usage error.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "wpv/harness.hpp"

namespace {

void print_summary(const wpv::StatsSummary& s) {
  for (const auto& c : s.criteria)
    std::printf("%s  [%d] %s: %s  value=%.6g bound=%.6g  %s\n", c.pass ? "PASS" : "FAIL", c.criterion,
                s.experiment.c_str(), c.name.c_str(), c.value, c.bound, c.detail.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"experiment runner"};
  app.require_subcommand(1);
  app.fallthrough();

  std::uint64_t seed = 0;
  int trials = 0;
  std::string out_dir;
  std::size_t max_dim = 0;
  auto* o_seed = app.add_option("--seed", seed, "base seed");
  auto* o_trials = app.add_option("--trials", trials, "trial count");
  app.add_option("--out-dir", out_dir, "output directory");
  auto* o_max = app.add_option("--max-dim", max_dim, "state dimension cap");
  bool serial = false;
  app.add_flag("--serial", serial, "run trials on one thread");

  std::string config;
  auto* run = app.add_subcommand("run", "run an experiment (config file or experiment id)");
  run->add_option("config", config)->required();

  auto* list = app.add_subcommand("list-fixtures", "list fixtures and experiments");

  std::string oracle;
  std::vector<std::string> oracle_args;
  auto* orc = app.add_subcommand("oracle", "brute-force oracles");
  orc->add_option("name", oracle)->required();
  orc->add_option("args", oracle_args);

  std::string log;
  auto* rep = app.add_subcommand("report", "recompute summaries from a trial log");
  rep->add_option("log", log)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*list) {
      for (const auto& f : wpv::fixture_list())
        std::printf("%-9s %-18s %s\n", f.kind.c_str(), f.name.c_str(), f.description.c_str());
      for (const auto& e : wpv::experiments())
        std::printf("%-9s %-18s [%d] %s\n", "experiment", e.id.c_str(), e.criterion, e.description.c_str());
      std::printf("%-9s", "oracles");
      for (const auto& n : wpv::oracle_names()) std::printf(" %s", n.c_str());
      std::printf("\n");
      return 0;
    }
    if (*orc) {
      std::cout << wpv::run_oracle(oracle, oracle_args, seed).dump() << '\n';
      return 0;
    }
    if (*run) {
      wpv::ExperimentConfig cfg = std::filesystem::exists(config) ? wpv::load_config(config)
                                                                  : wpv::default_config(config);
      if (*o_seed) cfg.seed = seed;
      if (*o_trials) cfg.trials = trials;
      if (*o_max) cfg.max_dim = max_dim;
      if (!out_dir.empty()) cfg.out_dir = out_dir;
      if (cfg.out_dir.empty()) cfg.out_dir = "out";
      if (serial) cfg.parallel = false;
      const wpv::ExperimentRun r = wpv::run_experiment(cfg);
      print_summary(r.summary);
      std::printf("log %s\nsummary %s\n", r.log_path.c_str(), r.csv_path.c_str());
      return r.summary.pass() ? 0 : 1;
    }
    if (*rep) {
      std::ifstream in(log, std::ios::binary);
      if (!in) throw wpv::ConfigError("report: cannot open " + log);
      const auto summaries = wpv::report(wpv::read_jsonl(in));
      if (summaries.empty()) throw wpv::ConfigError("report: empty log");
      bool ok = true;
      for (const auto& s : summaries) {
        print_summary(s);
        ok = ok && s.pass();
      }
      if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        std::ofstream csv(std::filesystem::path(out_dir) / "report_summary.csv", std::ios::binary);
        wpv::write_csv_summary(csv, summaries);
      }
      return ok ? 0 : 1;
    }
  } catch (const wpv::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
