// Runs every experiment with its default configuration, re-reads the trial
// log, recounts the summary from the raw records and prints one PASS/FAIL
// line per acceptance criterion.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

#include "wpv/harness.hpp"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
  const fs::path out = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "wpv_acceptance";
  fs::create_directories(out);

  std::map<int, std::pair<bool, std::string>> verdicts;
  for (const auto& e : wpv::experiments()) {
    bool ok = true;
    std::string why;
    try {
      wpv::ExperimentConfig cfg = wpv::default_config(e.id);
      cfg.out_dir = out.string();
      const wpv::ExperimentRun run = wpv::run_experiment(cfg);
      std::ifstream in(run.log_path);
      const auto re = wpv::report(wpv::read_jsonl(in));
      if (re.size() != 1 || re[0].to_json() != run.summary.to_json()) {
        ok = false;
        why = "recount from log differs from run summary";
      }
      for (const auto& c : run.summary.criteria) {
        std::printf("  [%d] %s: %s value=%.6g bound=%.6g %s\n", c.criterion, e.id.c_str(), c.name.c_str(), c.value,
                    c.bound, c.pass ? "" : "(fail)");
        if (!c.pass) {
          ok = false;
          why += (why.empty() ? "" : "; ") + c.name;
        }
      }
      if (run.summary.criteria.empty()) {
        ok = false;
        why = "no criteria evaluated";
      }
    } catch (const std::exception& ex) {
      ok = false;
      why = ex.what();
    }
    verdicts[e.criterion] = {ok, e.id + (why.empty() ? "" : ": " + why)};
  }

  int failed = 0;
  for (int k = 1; k <= 14; ++k) {
    const auto it = verdicts.find(k);
    const bool ok = it != verdicts.end() && it->second.first;
    failed += !ok;
    std::printf("%s criterion %d %s\n", ok ? "PASS" : "FAIL", k,
                it == verdicts.end() ? "(no experiment)" : it->second.second.c_str());
  }
  return failed == 0 ? 0 : 1;
}
