#include "brar/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "brar/errors.hpp"

namespace brar {

using nlohmann::json;

namespace {

const std::map<std::string, std::vector<std::string>> kAllowedKeys = {
    {"",
     {"design", "true_p", "replications", "seed", "threads", "oc", "calibrate", "bench",
      "figure"}},
    {"design",
     {"k", "n", "priors", "burn_in", "block_size", "analysis_schedule", "superiority_threshold",
      "inferiority_threshold", "drop", "tuning", "randomization", "test"}},
    {"design.drop", {"p_low", "confidence"}},
    {"design.tuning", {"rule", "m"}},
    {"design.randomization", {"rule", "method", "draws", "accuracy"}},
    {"design.test", {"method", "draws", "accuracy"}},
    {"oc", {"mode", "state_cap", "delta"}},
    {"calibrate", {"kind", "alpha", "p"}},
    {"bench",
     {"study", "ks", "n", "burn_in", "block_size", "methods", "repetitions", "draws",
      "accuracy"}},
    {"figure", {"study", "n", "resolution", "draws"}},
};

[[noreturn]] void fail(const std::string& msg) { throw ConfigError("config: " + msg); }

void check_keys(const json& j, const std::string& path) {
  if (!j.is_object()) fail("'" + (path.empty() ? std::string("<root>") : path) + "' must be an object");
  const auto it = kAllowedKeys.find(path);
  const auto& allowed = it->second;
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      fail("unknown key '" + key + "' in '" + (path.empty() ? std::string("<root>") : path) + "'");
  }
}

template <typename T>
T get_as(const json& j, const std::string& where) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    fail("'" + where + "' has the wrong type");
  }
}

template <typename T>
void read(const json& j, const std::string& path, const char* key, T& out) {
  if (!j.contains(key)) return;
  out = get_as<T>(j.at(key), path.empty() ? key : path + "." + key);
}

PpsMethod parse_method(const json& j, const std::string& path) {
  check_keys(j, path);
  std::string name = "exact";
  long long draws = 10000;
  double accuracy = 1e-7;
  read(j, path, "method", name);
  read(j, path, "draws", draws);
  read(j, path, "accuracy", accuracy);
  if (draws < 1) fail("'" + path + ".draws' must be >= 1");
  if (!(accuracy > 0.0)) fail("'" + path + ".accuracy' must be positive");
  if (name == "exact") return PpsMethod::exact();
  if (name == "ga" || name == "gaussian") return PpsMethod::gaussian(accuracy);
  if (name == "rs" || name == "repeated_sampling") return PpsMethod::repeated_sampling(draws);
  if (name == "ni" || name == "numeric_integration") return PpsMethod::numeric_integration(accuracy);
  fail("'" + path + ".method' must be one of exact, ga, rs, ni");
}

TrialDesign parse_design(const json& j) {
  check_keys(j, "design");
  TrialDesign d;
  if (!j.contains("k") || !j.contains("n")) fail("'design' needs both 'k' and 'n'");
  d.k = get_as<int>(j.at("k"), "design.k");
  d.n = get_as<int>(j.at("n"), "design.n");
  read(j, "design", "priors", d.priors);
  read(j, "design", "burn_in", d.burn_in);
  read(j, "design", "block_size", d.block_size);
  read(j, "design", "analysis_schedule", d.analysis_schedule);
  read(j, "design", "superiority_threshold", d.superiority_threshold);
  if (j.contains("inferiority_threshold"))
    d.inferiority_threshold =
        get_as<double>(j.at("inferiority_threshold"), "design.inferiority_threshold");
  if (j.contains("drop")) {
    check_keys(j.at("drop"), "design.drop");
    DropRule rule;
    read(j.at("drop"), "design.drop", "p_low", rule.p_low);
    read(j.at("drop"), "design.drop", "confidence", rule.confidence);
    d.drop_rule = rule;
  }
  if (j.contains("tuning")) {
    const json& t = j.at("tuning");
    check_keys(t, "design.tuning");
    std::string rule = "none";
    read(t, "design.tuning", "rule", rule);
    read(t, "design.tuning", "m", d.tuning.m);
    if (rule == "none")
      d.tuning.kind = TuningRule::Kind::none;
    else if (rule == "variance_scaling")
      d.tuning.kind = TuningRule::Kind::variance_scaling;
    else
      fail("'design.tuning.rule' must be none or variance_scaling");
  }
  if (j.contains("randomization")) {
    const json& r = j.at("randomization");
    if (!r.is_object()) fail("'design.randomization' must be an object");
    std::string rule = "pps";
    if (r.contains("rule")) rule = get_as<std::string>(r.at("rule"), "design.randomization.rule");
    if (rule == "posterior_draw") {
      check_keys(r, "design.randomization");
      d.rand_method.kind = RandMethod::Kind::posterior_draw;
    } else if (rule == "pps") {
      json rr = r;
      rr.erase("rule");
      d.rand_method.kind = RandMethod::Kind::pps;
      d.rand_method.pps = parse_method(rr, "design.randomization");
    } else {
      fail("'design.randomization.rule' must be pps or posterior_draw");
    }
  }
  if (j.contains("test")) d.test_method = parse_method(j.at("test"), "design.test");
  try {
    validate_design(d);
  } catch (const DomainError& e) {
    fail(e.what());
  }
  return d;
}

std::vector<std::vector<double>> parse_scenarios(const json& j, int k) {
  if (!j.is_array() || j.empty()) fail("'true_p' must be a non-empty array");
  std::vector<std::vector<double>> out;
  if (j.front().is_array()) {
    for (const auto& row : j) out.push_back(get_as<std::vector<double>>(row, "true_p"));
  } else {
    out.push_back(get_as<std::vector<double>>(j, "true_p"));
  }
  for (const auto& row : out) {
    if (k > 0 && static_cast<int>(row.size()) != k)
      fail("each 'true_p' scenario needs one rate per arm");
    for (double p : row)
      if (!(p >= 0.0 && p <= 1.0)) fail("'true_p' rates must lie in [0,1]");
  }
  return out;
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(std::string("not valid JSON: ") + e.what());
  }
  check_keys(j, "");
  RunConfig cfg;
  if (j.contains("design")) {
    cfg.design = parse_design(j.at("design"));
    cfg.has_design = true;
  }
  if (j.contains("true_p"))
    cfg.scenarios = parse_scenarios(j.at("true_p"), cfg.has_design ? cfg.design.k : 0);
  read(j, "", "replications", cfg.replications);
  read(j, "", "seed", cfg.seed);
  read(j, "", "threads", cfg.threads);
  if (cfg.replications < 0) fail("'replications' must be >= 0");
  if (cfg.threads < 0) fail("'threads' must be >= 0");
  if (j.contains("oc")) {
    const json& o = j.at("oc");
    check_keys(o, "oc");
    read(o, "oc", "mode", cfg.oc.mode);
    read(o, "oc", "state_cap", cfg.oc.state_cap);
    read(o, "oc", "delta", cfg.oc.delta);
    if (cfg.oc.mode != "exact" && cfg.oc.mode != "simulate" && cfg.oc.mode != "auto")
      fail("'oc.mode' must be exact, simulate or auto");
    if (!(cfg.oc.state_cap > 0.0)) fail("'oc.state_cap' must be positive");
    if (!(cfg.oc.delta > 0.0 && cfg.oc.delta < 1.0)) fail("'oc.delta' must lie in (0,1)");
  }
  if (j.contains("calibrate")) {
    const json& c = j.at("calibrate");
    check_keys(c, "calibrate");
    read(c, "calibrate", "kind", cfg.calibrate.kind);
    read(c, "calibrate", "alpha", cfg.calibrate.alpha);
    read(c, "calibrate", "p", cfg.calibrate.p);
    if (cfg.calibrate.kind != "pp" && cfg.calibrate.kind != "ux")
      fail("'calibrate.kind' must be pp or ux");
    if (!(cfg.calibrate.alpha >= 0.0 && cfg.calibrate.alpha <= 1.0))
      fail("'calibrate.alpha' must lie in [0,1]");
    if (!(cfg.calibrate.p >= 0.0 && cfg.calibrate.p <= 1.0))
      fail("'calibrate.p' must lie in [0,1]");
  }
  if (j.contains("bench")) {
    const json& b = j.at("bench");
    check_keys(b, "bench");
    read(b, "bench", "study", cfg.bench.study);
    read(b, "bench", "ks", cfg.bench.ks);
    read(b, "bench", "n", cfg.bench.n);
    read(b, "bench", "burn_in", cfg.bench.burn_in);
    read(b, "bench", "block_size", cfg.bench.block_size);
    read(b, "bench", "methods", cfg.bench.methods);
    read(b, "bench", "repetitions", cfg.bench.repetitions);
    read(b, "bench", "draws", cfg.bench.draws);
    read(b, "bench", "accuracy", cfg.bench.accuracy);
    if (cfg.bench.study != "single" && cfg.bench.study != "trial")
      fail("'bench.study' must be single or trial");
    if (cfg.bench.ks.empty()) fail("'bench.ks' must be non-empty");
    for (int k : cfg.bench.ks)
      if (k < 2 || k > 20) fail("'bench.ks' entries must lie in [2,20]");
    if (cfg.bench.n < 1) fail("'bench.n' must be >= 1");
    if (cfg.bench.burn_in < 0) fail("'bench.burn_in' must be >= 0");
    if (cfg.bench.block_size < 1) fail("'bench.block_size' must be >= 1");
    if (cfg.bench.methods.empty()) fail("'bench.methods' must be non-empty");
    for (const auto& m : cfg.bench.methods)
      if (m != "exact" && m != "ga" && m != "rs" && m != "ni")
        fail("'bench.methods' entries must be exact, ga, rs or ni");
    if (cfg.bench.repetitions < 1) fail("'bench.repetitions' must be >= 1");
    if (cfg.bench.draws < 1) fail("'bench.draws' must be >= 1");
    if (!(cfg.bench.accuracy > 0.0)) fail("'bench.accuracy' must be positive");
  }
  if (j.contains("figure")) {
    const json& f = j.at("figure");
    check_keys(f, "figure");
    read(f, "figure", "study", cfg.figure.study);
    read(f, "figure", "n", cfg.figure.n);
    read(f, "figure", "resolution", cfg.figure.resolution);
    read(f, "figure", "draws", cfg.figure.draws);
    if (cfg.figure.study != "fig1" && cfg.figure.study != "fig2" && cfg.figure.study != "fig3")
      fail("'figure.study' must be fig1, fig2 or fig3");
    if (cfg.figure.n < 1) fail("'figure.n' must be >= 1");
    if (cfg.figure.resolution < 1) fail("'figure.resolution' must be >= 1");
    if (cfg.figure.draws < 1) fail("'figure.draws' must be >= 1");
  }
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

const std::map<std::string, std::vector<std::string>>& config_allowed_keys() {
  return kAllowedKeys;
}

}  // namespace brar
