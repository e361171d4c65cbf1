#include "wpv/harness.hpp"

#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace wpv {

// ---------------------------------------------------------------- config

nlohmann::json ExperimentConfig::to_json() const {
  return {{"experiment", experiment},
          {"seed", seed},
          {"trials", trials},
          {"shots", shots},
          {"parallel", parallel},
          {"max_dim", max_dim},
          {"params",
           {{"epsilon", epsilon}, {"delta", delta}, {"lambda", lambda}, {"n", n}, {"c", c}, {"s", s}, {"d", d},
            {"zeta", zeta}}},
          {"fixture",
           {{"verifier", fixture.verifier},
            {"witness", fixture.witness},
            {"witness_p", fixture.witness_p},
            {"graph", fixture.graph},
            {"tcf", fixture.tcf}}},
          {"output", {{"dir", out_dir}}}};
}

namespace {

template <class T>
void take(const nlohmann::json& obj, const char* key, T& dst, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    dst = obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config: " + where + key + " has the wrong type");
  }
}

void reject_unknown(const nlohmann::json& obj, std::initializer_list<const char*> keys, const std::string& where) {
  if (!obj.is_object()) throw ConfigError("config: " + (where.empty() ? std::string("top level") : where) + " must be a mapping");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : keys) known = known || it.key() == k;
    if (!known) throw ConfigError("config: unknown key " + where + it.key());
  }
}

nlohmann::json yaml_to_json(const YAML::Node& n) {
  switch (n.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined:
      return nullptr;
    case YAML::NodeType::Sequence: {
      nlohmann::json a = nlohmann::json::array();
      for (const auto& x : n) a.push_back(yaml_to_json(x));
      return a;
    }
    case YAML::NodeType::Map: {
      nlohmann::json o = nlohmann::json::object();
      for (const auto& kv : n) o[kv.first.as<std::string>()] = yaml_to_json(kv.second);
      return o;
    }
    case YAML::NodeType::Scalar:
      break;
  }
  const std::string s = n.Scalar();
  if (n.Tag() == "!") return s;  // quoted
  long long i = 0;
  double x = 0.0;
  bool b = false;
  if (YAML::convert<long long>::decode(n, i)) return i;
  if (YAML::convert<double>::decode(n, x)) return x;
  if (YAML::convert<bool>::decode(n, b)) return b;
  return s;
}

}  // namespace

nlohmann::json yaml_text_to_json(const std::string& text) {
  try {
    return yaml_to_json(YAML::Load(text));
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config: YAML parse error: ") + e.what());
  }
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  reject_unknown(j, {"experiment", "seed", "trials", "shots", "parallel", "max_dim", "params", "fixture", "output"}, "");
  if (!j.contains("experiment") || !j.at("experiment").is_string()) throw ConfigError("config: experiment id missing");
  ExperimentConfig cfg = default_config(j.at("experiment").get<std::string>());
  take(j, "seed", cfg.seed, "");
  take(j, "trials", cfg.trials, "");
  take(j, "shots", cfg.shots, "");
  take(j, "parallel", cfg.parallel, "");
  take(j, "max_dim", cfg.max_dim, "");
  if (j.contains("params")) {
    const auto& p = j.at("params");
    reject_unknown(p, {"epsilon", "delta", "lambda", "n", "c", "s", "d", "zeta"}, "params.");
    take(p, "epsilon", cfg.epsilon, "params.");
    take(p, "delta", cfg.delta, "params.");
    take(p, "lambda", cfg.lambda, "params.");
    take(p, "n", cfg.n, "params.");
    take(p, "c", cfg.c, "params.");
    take(p, "s", cfg.s, "params.");
    take(p, "d", cfg.d, "params.");
    take(p, "zeta", cfg.zeta, "params.");
  }
  if (j.contains("fixture")) {
    const auto& f = j.at("fixture");
    reject_unknown(f, {"verifier", "witness", "witness_p", "graph", "tcf"}, "fixture.");
    take(f, "verifier", cfg.fixture.verifier, "fixture.");
    take(f, "witness", cfg.fixture.witness, "fixture.");
    take(f, "witness_p", cfg.fixture.witness_p, "fixture.");
    take(f, "graph", cfg.fixture.graph, "fixture.");
    take(f, "tcf", cfg.fixture.tcf, "fixture.");
  }
  if (j.contains("output")) {
    const auto& o = j.at("output");
    reject_unknown(o, {"dir"}, "output.");
    take(o, "dir", cfg.out_dir, "output.");
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  nlohmann::json j;
  if (std::filesystem::path(path).extension() == ".json") {
    try {
      j = nlohmann::json::parse(ss.str());
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError(std::string("config: JSON parse error: ") + e.what());
    }
  } else {
    j = yaml_text_to_json(ss.str());
  }
  return config_from_json(j);
}

void validate(const ExperimentConfig& cfg) {
  find_experiment(cfg.experiment);
  auto need = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError("config: " + msg);
  };
  need(cfg.trials >= 1, "trials must be >= 1");
  need(cfg.shots >= 1, "shots must be >= 1");
  need(cfg.epsilon > 0.0 && cfg.epsilon <= 1.0, "epsilon must lie in (0, 1]");
  need(cfg.delta > 0.0 && cfg.delta <= 1.0, "delta must lie in (0, 1]");
  need(cfg.lambda >= 1 && cfg.lambda <= 60, "lambda must lie in [1, 60]");
  need(cfg.n >= 1, "n must be >= 1");
  need(cfg.s >= 0.0 && cfg.s < cfg.c && cfg.c <= 1.0, "need 0 <= s < c <= 1");
  need(cfg.d >= 0, "d must be >= 0");
  need(cfg.zeta > 0.0 && cfg.zeta <= 1.0, "zeta must lie in (0, 1]");
  need(cfg.max_dim >= 2, "max_dim must be >= 2");
  need(has_fixture("verifier", cfg.fixture.verifier), "unknown verifier fixture " + cfg.fixture.verifier);
  need(has_fixture("witness", cfg.fixture.witness), "unknown witness kind " + cfg.fixture.witness);
  need(has_fixture("graph", cfg.fixture.graph), "unknown graph fixture " + cfg.fixture.graph);
  need(has_fixture("tcf", cfg.fixture.tcf), "unknown tcf fixture " + cfg.fixture.tcf);
}

// ---------------------------------------------------------------- fixtures

const std::vector<FixtureInfo>& fixture_list() {
  static const std::vector<FixtureInfo> list = {
      {"verifier", "diag-0.75", "diagonal spectrum {0.75, 0.1}"},
      {"verifier", "diag-0.8", "diagonal spectrum {0.8, 0.3}"},
      {"verifier", "diag-0.9", "diagonal spectrum {0.9, 0.1}, a = 0.8, b = 0.4"},
      {"verifier", "diag-high", "diagonal spectrum {1-1e-4, 1-1e-4}"},
      {"verifier", "diag-grid", "diagonal spectrum {1, 0.75, 0.25, 0}"},
      {"verifier", "proj-1", "projector |1><1| on one qubit"},
      {"verifier", "haar-1q", "Haar dilation, 1 witness qubit"},
      {"verifier", "haar-2q", "Haar dilation, 2 witness qubits"},
      {"verifier", "haar-3q", "Haar dilation, 3 witness qubits"},
      {"witness", "eigenstate", "eigenvector at witness_p"},
      {"witness", "superposition", "two bracketing eigenvectors with mean witness_p"},
      {"witness", "bell-ref", "top two eigenvectors entangled with a REF qubit"},
      {"witness", "random", "Haar-random witness"},
      {"graph", "k3", "triangle"},
      {"graph", "k4", "complete graph on 4 vertices (not 3-colorable)"},
      {"graph", "path4", "path on 4 vertices"},
      {"tcf", "ideal", "ideal dual-mode family"},
      {"tcf", "lattice-classical", "lattice family q=257 n=1 m=9"},
      {"tcf", "lattice-micro", "lattice family q=13 n=1 m=1"},
  };
  return list;
}

bool has_fixture(const std::string& kind, const std::string& name) {
  for (const auto& f : fixture_list())
    if (f.kind == kind && f.name == name) return true;
  return false;
}

QmaVerifier fixture_verifier(const std::string& name) {
  if (name == "diag-0.75") return diagonal_verifier({0.75, 0.1}, name);
  if (name == "diag-0.8") return diagonal_verifier({0.8, 0.3}, name);
  if (name == "diag-0.9") return QmaVerifier(name, diagonal_verifier({0.9, 0.1}).algorithm(), 0.8, 0.4);
  if (name == "diag-high") return diagonal_verifier({1.0 - 1e-4, 1.0 - 1e-4}, name);
  if (name == "diag-grid") return diagonal_verifier({1.0, 0.75, 0.25, 0.0}, name);
  if (name == "proj-1") {
    CMat p = CMat::Zero(2, 2);
    p(1, 1) = 1.0;
    return projector_verifier(p, name);
  }
  for (int q = 1; q <= 3; ++q)
    if (name == "haar-" + std::to_string(q) + "q") {
      Rng rng = make_rng(0x5eed, static_cast<std::uint64_t>(q));
      return random_verifier(q, rng, name);
    }
  throw ConfigError("fixture: unknown verifier " + name);
}

Graph fixture_graph(const std::string& name) {
  if (name == "k3") return Graph::complete(3);
  if (name == "k4") return Graph::complete(4);
  if (name == "path4") return Graph::path(4);
  throw ConfigError("fixture: unknown graph " + name);
}

StateVector fixture_witness(const QmaVerifier& v, const FixtureSpec& f, Rng& rng) {
  const EigenSpectrum spec = eigen_spectrum(v);
  if (f.witness == "eigenstate") return make_witness(spec, f.witness_p);
  if (f.witness == "superposition") return make_witness(spec, f.witness_p, WitnessMode::superposition);
  if (f.witness == "random") return random_state(Layout({{"W", v.witness_dim()}}), rng);
  if (f.witness == "bell-ref") {
    if (spec.pairs.size() < 2) throw ConfigError("fixture: bell-ref needs two eigenvectors");
    CVec e0 = CVec::Zero(2), e1 = CVec::Zero(2);
    e0(0) = 1.0;
    e1(1) = 1.0;
    const CMat a = kron(spec.pairs[0].vector, e0) + kron(spec.pairs[1].vector, e1);
    return StateVector(Layout({{"W", v.witness_dim()}, {"REF", 2}}), CVec(a.col(0) / std::sqrt(2.0)));
  }
  throw ConfigError("fixture: unknown witness kind " + f.witness);
}

TcfKeypair fixture_keypair(const std::string& tcf, TcfMode mode, Rng& rng, int domain_bits) {
  if (tcf == "ideal") return setup_ideal(domain_bits, mode, rng);
  if (tcf == "lattice-classical") return setup_lattice(LweParams::classical_fixture(), mode, rng, domain_bits);
  if (tcf == "lattice-micro") return setup_lattice(LweParams::quantum_micro(), mode, rng, domain_bits);
  throw ConfigError("fixture: unknown tcf " + tcf);
}

// ---------------------------------------------------------------- dispatch

std::vector<Record> run_trials_parallel(int trials, std::uint64_t seed, const TrialFn& fn) {
  std::vector<Record> out(static_cast<std::size_t>(trials));
  std::exception_ptr err;
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < trials; ++i) {
    try {
      Rng rng = make_rng(seed, static_cast<std::uint64_t>(i));
      out[static_cast<std::size_t>(i)] = fn(i, rng);
    } catch (...) {
#pragma omp critical(wpv_trial_error)
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
  return out;
}

std::vector<Record> run_trials_serial(int trials, std::uint64_t seed, const TrialFn& fn) {
  std::vector<Record> out;
  out.reserve(static_cast<std::size_t>(trials));
  for (int i = 0; i < trials; ++i) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(i));
    out.push_back(fn(i, rng));
  }
  return out;
}

// ---------------------------------------------------------------- statistics

MetricSummary summarize_metric(const std::string& name, const std::vector<double>& values) {
  MetricSummary m;
  m.name = name;
  m.count = values.size();
  if (values.empty()) return m;
  double sum = 0.0;
  m.min = m.max = values.front();
  for (double x : values) {
    sum += x;
    m.min = std::min(m.min, x);
    m.max = std::max(m.max, x);
  }
  m.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double x : values) ss += (x - m.mean) * (x - m.mean);
    m.std_error = std::sqrt(ss / static_cast<double>(values.size() - 1) / static_cast<double>(values.size()));
  }
  return m;
}

bool StatsSummary::pass() const {
  if (criteria.empty()) return false;
  for (const auto& c : criteria)
    if (!c.pass) return false;
  return true;
}

nlohmann::json StatsSummary::to_json() const {
  nlohmann::json ms = nlohmann::json::array(), cs = nlohmann::json::array();
  for (const auto& m : metrics)
    ms.push_back({{"name", m.name}, {"mean", m.mean}, {"std_error", m.std_error}, {"min", m.min}, {"max", m.max},
                  {"count", m.count}});
  for (const auto& c : criteria)
    cs.push_back({{"criterion", c.criterion}, {"name", c.name}, {"pass", c.pass}, {"value", c.value},
                  {"bound", c.bound}, {"detail", c.detail}});
  return {{"experiment", experiment}, {"trials", trials}, {"metrics", ms}, {"criteria", cs}, {"pass", pass()}};
}

// ---------------------------------------------------------------- running

const Experiment& find_experiment(const std::string& id) {
  for (const auto& e : experiments())
    if (e.id == id) return e;
  throw ConfigError("config: unknown experiment " + id);
}

ExperimentConfig default_config(const std::string& id) {
  const Experiment& e = find_experiment(id);
  ExperimentConfig cfg;
  cfg.experiment = id;
  if (e.defaults) e.defaults(cfg);
  return cfg;
}

namespace {

struct MaxDimScope {
  std::size_t saved;
  explicit MaxDimScope(std::size_t d) : saved(max_dim()) { set_max_dim(d); }
  ~MaxDimScope() { set_max_dim(saved); }
};

}  // namespace

ExperimentRun run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  const Experiment& e = find_experiment(cfg.experiment);
  MaxDimScope scope(cfg.max_dim);
  ExperimentRun run;
  TrialFn trial;
  try {
    trial = e.prepare(cfg);
    const TrialFn tagged = [&](int i, Rng& rng) {
      Record r = trial(i, rng);
      r["experiment"] = cfg.experiment;
      r["trial"] = i;
      r["seed"] = cfg.seed;
      return r;
    };
    run.records = cfg.parallel ? run_trials_parallel(cfg.trials, cfg.seed, tagged)
                               : run_trials_serial(cfg.trials, cfg.seed, tagged);
  } catch (const std::length_error& ex) {
    throw ConfigError(std::string("budget exceeded: ") + ex.what());
  }
  run.summary = e.summarize(run.records);
  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    run.log_path = (std::filesystem::path(cfg.out_dir) / (cfg.experiment + ".jsonl")).string();
    run.csv_path = (std::filesystem::path(cfg.out_dir) / (cfg.experiment + "_summary.csv")).string();
    std::ofstream log(run.log_path, std::ios::binary);
    write_jsonl(log, run.records);
    std::ofstream csv(run.csv_path, std::ios::binary);
    write_csv_summary(csv, {run.summary});
    if (!log || !csv) throw std::runtime_error("run_experiment: cannot write to " + cfg.out_dir);
  }
  return run;
}

// ---------------------------------------------------------------- output

void write_jsonl(std::ostream& os, const std::vector<Record>& records) {
  for (const auto& r : records) os << r.dump() << '\n';
}

std::vector<Record> read_jsonl(std::istream& is) {
  std::vector<Record> out;
  std::string line;
  int n = 0;
  while (std::getline(is, line)) {
    ++n;
    if (line.empty() || line == "\r") continue;
    try {
      out.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::parse_error&) {
      throw ConfigError("log: line " + std::to_string(n) + " is not JSON");
    }
  }
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"') q += '"';
    q += ch;
  }
  return q + "\"";
}

namespace {

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

}  // namespace

void write_csv_summary(std::ostream& os, const std::vector<StatsSummary>& summaries) {
  const char* eol = "\r\n";
  os << "experiment,kind,name,mean,std_error,min,max,count,criterion,pass,value,bound,detail" << eol;
  for (const auto& s : summaries) {
    for (const auto& m : s.metrics)
      os << csv_field(s.experiment) << ",metric," << csv_field(m.name) << ',' << num(m.mean) << ','
         << num(m.std_error) << ',' << num(m.min) << ',' << num(m.max) << ',' << m.count << ",,,,," << eol;
    for (const auto& c : s.criteria)
      os << csv_field(s.experiment) << ",criterion," << csv_field(c.name) << ",,,,,," << c.criterion << ','
         << (c.pass ? "PASS" : "FAIL") << ',' << num(c.value) << ',' << num(c.bound) << ',' << csv_field(c.detail)
         << eol;
  }
}

std::vector<StatsSummary> report(const std::vector<Record>& records) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<Record>> groups;
  for (const auto& r : records) {
    if (!r.is_object() || !r.contains("experiment") || !r.at("experiment").is_string())
      throw ConfigError("log: record without an experiment id");
    const std::string id = r.at("experiment").get<std::string>();
    if (!groups.count(id)) order.push_back(id);
    groups[id].push_back(r);
  }
  std::vector<StatsSummary> out;
  for (const auto& id : order) {
    try {
      out.push_back(find_experiment(id).summarize(groups[id]));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("log: malformed " + id + " record: " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------- oracles

nlohmann::json MartingaleReport::to_json() const {
  return {{"trials", trials}, {"violations", violations}, {"alpha", alpha}, {"max_ratio", max_ratio},
          {"deviations", deviations}, {"radii", radii}};
}

MartingaleReport martingale_diagnostics(const std::vector<nlohmann::json>& logs, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("martingale_diagnostics: alpha in (0, 1)");
  MartingaleReport out;
  out.alpha = alpha;
  for (const auto& log : logs) {
    if (!log.contains("phases") || !log.contains("verdicts") || !log.contains("quality_before"))
      throw std::invalid_argument("martingale_diagnostics: log lacks per-round records");
    const auto& ph = log.at("phases");
    const auto& vd = log.at("verdicts");
    const auto& q = log.at("quality_before");
    if (ph.size() != vd.size() || ph.size() != q.size() || ph.empty())
      throw std::invalid_argument("martingale_diagnostics: per-round arrays disagree");
    double dev = 0.0;
    for (std::size_t i = 0; i < ph.size(); ++i) {
      const double qi = q.at(i).get<double>();
      if (!(qi >= -1e-9 && qi <= 1.0 + 1e-9)) throw std::invalid_argument("martingale_diagnostics: quality out of range");
      const bool x = ph.at(i).get<std::string>() == "check" && vd.at(i).get<int>() == 1;
      dev += (x ? 1.0 : 0.0) - 0.5 * qi;
    }
    // Increments lie in [-1, 1]: c_k = 1.
    const std::vector<double> c(ph.size(), 1.0);
    const double radius = std::sqrt(static_cast<double>(ph.size()) * std::log(2.0 / alpha) / 2.0);
    const double tail = 2.0 * azuma_bound(std::abs(dev), c);
    ++out.trials;
    out.deviations.push_back(dev);
    out.radii.push_back(radius);
    out.max_ratio = std::max(out.max_ratio, std::abs(dev) / radius);
    if (tail < alpha) ++out.violations;
  }
  return out;
}

std::vector<std::string> oracle_names() {
  return {"brute-force", "preimage", "azuma", "hoeffding", "valest-t", "threshold", "spectrum"};
}

namespace {

double parse_num(const std::string& s) {
  try {
    std::size_t used = 0;
    const double x = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("oracle: not a number: " + s);
  }
}

void need_args(const std::vector<std::string>& args, std::size_t lo, const char* usage) {
  if (args.size() < lo) throw ConfigError(std::string("oracle usage: ") + usage);
}

}  // namespace

nlohmann::json run_oracle(const std::string& name, const std::vector<std::string>& args, std::uint64_t seed) {
  if (name == "brute-force") {
    need_args(args, 2, "brute-force <verifier> <amplitude>...");
    const QmaVerifier v = fixture_verifier(args[0]);
    if (static_cast<int>(args.size()) - 1 != v.witness_dim())
      throw ConfigError("oracle: expected " + std::to_string(v.witness_dim()) + " amplitudes");
    CVec a(v.witness_dim());
    for (int i = 0; i < v.witness_dim(); ++i) a(i) = parse_num(args[static_cast<std::size_t>(i) + 1]);
    if (a.norm() == 0.0) throw ConfigError("oracle: zero state");
    StateVector s(Layout({{"W", v.witness_dim()}}), a / a.norm());
    return {{"oracle", name}, {"verifier", args[0]}, {"acceptance", brute_force_acceptance(v, s)}};
  }
  if (name == "preimage") {
    need_args(args, 3, "preimage <tcf> <recovery|injective> <y> [bit]");
    const TcfMode mode = args[1] == "injective" ? TcfMode::injective : TcfMode::recovery;
    if (args[1] != "injective" && args[1] != "recovery") throw ConfigError("oracle: mode is recovery or injective");
    Rng rng = make_rng(seed);
    const TcfKeypair kp = fixture_keypair(args[0], mode, rng);
    const auto y = static_cast<std::size_t>(parse_num(args[2]));
    const int bit = args.size() > 3 ? static_cast<int>(parse_num(args[3])) : 0;
    nlohmann::json list = nlohmann::json::array();
    for (const auto& p : exhaustive_preimage_oracle(kp, bit, y)) list.push_back({{"x", p.b}, {"r", p.r}});
    return {{"oracle", name}, {"tcf", args[0]}, {"mode", args[1]}, {"y", y}, {"seed", seed}, {"preimages", list}};
  }
  if (name == "azuma") {
    need_args(args, 2, "azuma <t> <c_1> [c_2 ...]");
    std::vector<double> c;
    for (std::size_t i = 1; i < args.size(); ++i) c.push_back(parse_num(args[i]));
    return {{"oracle", name}, {"t", parse_num(args[0])}, {"c", c}, {"bound", azuma_bound(parse_num(args[0]), c)}};
  }
  if (name == "hoeffding") {
    need_args(args, 3, "hoeffding <N> <c> <s>");
    const int n = static_cast<int>(parse_num(args[0]));
    const double c = parse_num(args[1]), s = parse_num(args[2]);
    return {{"oracle", name}, {"N", n}, {"c", c}, {"s", s}, {"bound", seqrep_hoeffding_bound(n, c, s)},
            {"check_count_bound", seqrep_check_count_bound(n, c, s)}};
  }
  if (name == "valest-t") {
    need_args(args, 2, "valest-t <epsilon> <delta>");
    try {
      const long t = valest_t(parse_num(args[0]), parse_num(args[1]));
      return {{"oracle", name}, {"t", t}, {"grid_size", 2 * t + 1}, {"grid_width", 1.0 / static_cast<double>(t)}};
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("oracle: ") + e.what());
    }
  }
  if (name == "threshold") {
    need_args(args, 3, "threshold <checks> <c> <s>");
    const int n = static_cast<int>(parse_num(args[0]));
    return {{"oracle", name}, {"threshold", threshold_count(parse_num(args[1]), parse_num(args[2]), n)}};
  }
  if (name == "spectrum") {
    need_args(args, 1, "spectrum <verifier>");
    std::vector<double> ev;
    for (const auto& p : eigen_spectrum(fixture_verifier(args[0])).pairs) ev.push_back(p.value);
    return {{"oracle", name}, {"verifier", args[0]}, {"eigenvalues", ev}};
  }
  throw ConfigError("oracle: unknown oracle " + name);
}

}  // namespace wpv
