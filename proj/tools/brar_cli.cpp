#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "brar/approx.hpp"
#include "brar/config.hpp"
#include "brar/errors.hpp"
#include "brar/exact.hpp"
#include "brar/oc.hpp"
#include "brar/parallel.hpp"
#include "brar/runtime_model.hpp"
#include "brar/trial.hpp"

namespace {

using namespace brar;
using ojson = nlohmann::ordered_json;

volatile double g_bench_sink = 0.0;

struct GlobalOpts {
  std::string config_path;
  std::optional<uint64_t> seed;
  std::optional<int> threads;
  std::string out_path;
  std::string format = "csv";
};

std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string csv_cell(const ojson& v) {
  if (v.is_null()) return "";
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_unsigned()) return std::to_string(v.get<uint64_t>());
  if (v.is_number_integer()) return std::to_string(v.get<int64_t>());
  if (v.is_number_float()) return fmt_double(v.get<double>());
  std::string s = v.is_string() ? v.get<std::string>() : v.dump();
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void write_csv_row(std::ostream& os, const std::vector<ojson>& cells) {
  for (size_t i = 0; i < cells.size(); ++i) {
    if (i) os << ',';
    os << csv_cell(cells[i]);
  }
  os << '\n';
}

// Row-oriented result table.  CSV output carries the schema id in a leading
// comment and summary values in trailing comments; JSON output nests them.
struct Table {
  std::string schema;
  std::vector<std::string> cols;
  std::vector<std::vector<ojson>> rows;
  std::vector<std::pair<std::string, ojson>> notes;
};

void write_csv(std::ostream& os, const Table& t) {
  os << "# schema: " << t.schema << '\n';
  for (size_t i = 0; i < t.cols.size(); ++i) {
    if (i) os << ',';
    os << t.cols[i];
  }
  os << '\n';
  for (const auto& r : t.rows) write_csv_row(os, r);
  for (const auto& [key, v] : t.notes) os << "# " << key << ": " << csv_cell(v) << '\n';
}

void write_json(std::ostream& os, const Table& t) {
  ojson doc;
  doc["schema"] = t.schema;
  ojson rows = ojson::array();
  for (const auto& r : t.rows) {
    ojson o = ojson::object();
    for (size_t i = 0; i < r.size(); ++i) o[t.cols[i]] = r[i];
    rows.push_back(std::move(o));
  }
  doc["rows"] = std::move(rows);
  if (!t.notes.empty()) {
    ojson s = ojson::object();
    for (const auto& [key, v] : t.notes) s[key] = v;
    doc["summary"] = std::move(s);
  }
  os << doc.dump(2) << '\n';
}

std::ostream* open_sink(const std::string& path, std::ofstream& file) {
  if (path.empty()) return &std::cout;
  file.open(path, std::ios::binary);
  if (!file) throw ConfigError("cannot open output file: " + path);
  return &file;
}

void emit_table(const GlobalOpts& g, const Table& t) {
  std::ofstream file;
  std::ostream* os = open_sink(g.out_path, file);
  if (g.format == "json")
    write_json(*os, t);
  else
    write_csv(*os, t);
  os->flush();
  if (!*os) throw std::runtime_error("write failed: " + (g.out_path.empty() ? "<stdout>" : g.out_path));
}

const char* sink_name(const GlobalOpts& g) { return g.out_path.empty() ? "<stdout>" : g.out_path.c_str(); }

double now_s() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

RunConfig load_config(const GlobalOpts& g, bool required) {
  if (g.config_path.empty()) {
    if (required) throw ConfigError("config: this command needs --config");
    return {};
  }
  return parse_config_file(g.config_path);
}

uint64_t resolve_seed(const GlobalOpts& g, const RunConfig& cfg) {
  return g.seed ? *g.seed : cfg.seed;
}

int resolve_threads(const GlobalOpts& g, const RunConfig& cfg) {
  int t = g.threads ? *g.threads : cfg.threads;
  if (t < 0) throw ConfigError("config: threads must be >= 0");
  return t == 0 ? hardware_threads() : t;
}

const TrialDesign& need_design(const RunConfig& cfg) {
  if (!cfg.has_design) throw ConfigError("config: this command needs a 'design' section");
  return cfg.design;
}

int lowest_argmax(std::span<const double> v) {
  int a = 0;
  for (size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[a]) a = static_cast<int>(i);
  return a;
}

std::vector<std::string> split_line(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<int> parse_int_list(const std::string& text, const char* flag) {
  std::vector<int> out;
  for (const std::string& tok : split_line(text, ',')) {
    try {
      size_t pos = 0;
      int v = std::stoi(tok, &pos);
      if (pos != tok.size()) throw std::invalid_argument(tok);
      out.push_back(v);
    } catch (const std::exception&) {
      throw CLI::ValidationError(std::string(flag) + ": expected comma-separated integers, got '" + tok + "'");
    }
  }
  return out;
}

// ---------------------------------------------------------------- pps

struct PpsArgs {
  std::string state;
  int arm = -1;
  std::string method = "exact";
  long long draws = 10000;
  double accuracy = 1e-7;
};

void cmd_pps(const GlobalOpts& g, const PpsArgs& a) {
  std::vector<int> x = parse_int_list(a.state, "--state");
  if (x.size() < 4 || x.size() % 2 != 0)
    throw CLI::ValidationError("--state: needs an even number (>= 4) of beta parameters");
  for (int v : x)
    if (v < 1) throw CLI::ValidationError("--state: all beta parameters must be >= 1");
  int k = static_cast<int>(x.size()) / 2;
  if (a.arm >= k) throw CLI::ValidationError("--arm: out of range for the given state");
  if (a.draws < 1) throw CLI::ValidationError("--draws: must be >= 1");
  if (!(a.accuracy > 0.0)) throw CLI::ValidationError("--accuracy: must be positive");
  TrialState s(k, x);
  validate_state(s);

  int total = 0;
  for (int v : x) total += v;
  auto cache = std::make_shared<LogBetaCache>(total + 4);
  uint64_t seed = g.seed ? *g.seed : 0;
  int threads = g.threads && *g.threads > 0 ? *g.threads : hardware_threads();

  std::vector<double> vals(k, 0.0);
  std::vector<ojson> errs(k, ojson());
  double t0 = now_s();
  if (a.method == "exact") {
    SubsetTable table = SubsetTable::at_state(s, cache);
    vals = table.singletons();
    for (int j = 0; j < k; ++j) errs[j] = 0.0;
  } else if (a.method == "ga") {
    if (a.arm >= 0)
      vals[a.arm] = pps_gaussian(s, a.arm, {a.accuracy, seed, 1 << 20});
    else
      vals = pps_gaussian_all(s, {a.accuracy, seed, 1 << 20});
  } else if (a.method == "rs") {
    vals = rs_probs(s, a.draws, seed, threads);
    double bound = rs_error_bound(a.draws);
    for (int j = 0; j < k; ++j) errs[j] = bound;
  } else {
    for (int j = 0; j < k; ++j) {
      if (a.arm >= 0 && j != a.arm) continue;
      NiResult r = pps_numeric_integration_full(s, j, a.accuracy, cache.get());
      vals[j] = r.value;
      errs[j] = r.error;
    }
  }
  double seconds = now_s() - t0;

  Table t;
  t.schema = "brar.pps.v1";
  t.cols = {"arm", "method", "value", "error_bound"};
  for (int j = 0; j < k; ++j) {
    if (a.arm >= 0 && j != a.arm) continue;
    t.rows.push_back({j, a.method, vals[j], errs[j]});
  }
  t.notes.emplace_back("seconds", seconds);
  if (a.method == "rs") t.notes.emplace_back("draws", a.draws);
  if (a.method == "ga" || a.method == "ni") t.notes.emplace_back("accuracy", a.accuracy);
  emit_table(g, t);
  std::fprintf(stderr, "pps: k=%d method=%s seconds=%.3g -> %s\n", k, a.method.c_str(), seconds,
               sink_name(g));
}

// ---------------------------------------------------------------- simulate

void cmd_simulate(const GlobalOpts& g) {
  RunConfig cfg = load_config(g, true);
  const TrialDesign& d = need_design(cfg);
  if (cfg.scenarios.size() != 1)
    throw ConfigError("config: simulate needs exactly one true_p scenario");
  const std::vector<double>& p = cfg.scenarios[0];
  long long reps = cfg.replications;
  if (reps < 0) throw ConfigError("config: replications must be >= 0");
  uint64_t seed = resolve_seed(g, cfg);
  int threads = resolve_threads(g, cfg);
  auto cache = make_design_cache(d);
  int k = d.k;
  int sup = lowest_argmax(p);

  Table t;
  t.schema = "brar.simulate.v1";
  t.cols = {"replication", "seed", "stop_patient", "claim", "best_arm", "worst_arm", "dropped"};
  for (int j = 0; j < k; ++j) {
    t.cols.push_back("n" + std::to_string(j));
    t.cols.push_back("s" + std::to_string(j));
  }
  for (int j = 0; j < k; ++j) t.cols.push_back("t" + std::to_string(j));

  bool streaming = g.format != "json";
  std::ofstream file;
  std::ostream* os = open_sink(g.out_path, file);
  if (streaming) {
    *os << "# schema: " << t.schema << '\n';
    for (size_t i = 0; i < t.cols.size(); ++i) {
      if (i) *os << ',';
      *os << t.cols[i];
    }
    *os << '\n';
  }

  TrialState prior = d.prior_state();
  double rej = 0.0, fut = 0.0;
  std::vector<double> bestc(k, 0.0), worstc(k, 0.0);
  std::vector<double> pasa;
  pasa.reserve(static_cast<size_t>(reps));

  const long long batch = 8192;
  std::vector<TrialHistoryRecord> recs;
  double t0 = now_s();
  for (long long start = 0; start < reps; start += batch) {
    long long m = std::min(batch, reps - start);
    recs.assign(static_cast<size_t>(m), {});
    parallel_for(m, threads, [&](long long i) {
      recs[static_cast<size_t>(i)] = simulate_trial(d, p, replication_seed(seed, start + i), cache);
    });
    for (long long i = 0; i < m; ++i) {
      const TrialHistoryRecord& r = recs[static_cast<size_t>(i)];
      if (r.claim == ClaimKind::best || r.claim == ClaimKind::both) bestc[r.claimed_best] += 1.0;
      if (r.claim == ClaimKind::worst || r.claim == ClaimKind::both) worstc[r.claimed_worst] += 1.0;
      if (r.claim == ClaimKind::best || r.claim == ClaimKind::worst || r.claim == ClaimKind::both)
        rej += 1.0;
      if (r.claim == ClaimKind::futility) fut += 1.0;
      double credit = 0.0;
      if (r.stop_patient < d.n && !r.analyses.empty() &&
          r.analyses.back().outcome.t_best[sup] > d.superiority_threshold)
        credit = d.n - r.stop_patient;
      pasa.push_back(r.arm_counts[sup] + credit);

      std::vector<ojson> cells;
      cells.reserve(t.cols.size());
      cells.push_back(start + i);
      cells.push_back(r.seed);
      cells.push_back(r.stop_patient);
      cells.push_back(claim_name(r.claim));
      cells.push_back(r.claimed_best);
      cells.push_back(r.claimed_worst);
      cells.push_back(r.dropped);
      for (int j = 0; j < k; ++j) {
        cells.push_back(r.arm_counts[j]);
        cells.push_back(r.final_state.a(j) - prior.a(j));
      }
      const std::vector<double>& tb = r.analyses.back().outcome.t_best;
      for (int j = 0; j < k; ++j) cells.push_back(tb[j]);
      if (streaming)
        write_csv_row(*os, cells);
      else
        t.rows.push_back(std::move(cells));
    }
  }
  double seconds = now_s() - t0;

  if (reps > 0) {
    double kk = static_cast<double>(reps);
    double epasa = 0.0;
    for (double v : pasa) epasa += v;
    epasa /= kk;
    double vpasa = 0.0, m4 = 0.0;
    for (double v : pasa) {
      double c2 = (v - epasa) * (v - epasa);
      vpasa += c2;
      m4 += c2 * c2;
    }
    vpasa = reps > 1 ? vpasa / (kk - 1.0) : 0.0;
    m4 /= kk;
    double vpasa_se =
        reps > 1 ? std::sqrt(std::max(0.0, m4 - (kk - 3.0) / (kk - 1.0) * vpasa * vpasa) / kk) : 0.0;
    t.notes.emplace_back("replications", reps);
    t.notes.emplace_back("superior_arm", sup);
    t.notes.emplace_back("reject_any", rej / kk);
    for (int j = 0; j < k; ++j)
      t.notes.emplace_back("best_claim_" + std::to_string(j), bestc[j] / kk);
    for (int j = 0; j < k; ++j)
      t.notes.emplace_back("worst_claim_" + std::to_string(j), worstc[j] / kk);
    t.notes.emplace_back("futility", fut / kk);
    t.notes.emplace_back("epasa", epasa);
    t.notes.emplace_back("vpasa", vpasa);
    t.notes.emplace_back("epasa_se", std::sqrt(vpasa / kk));
    t.notes.emplace_back("vpasa_se", vpasa_se);
    t.notes.emplace_back("binary_radius", ks_confidence_radius(reps, 0.5, cfg.oc.delta));
    t.notes.emplace_back("seconds", seconds);
  }

  if (streaming) {
    for (const auto& [key, v] : t.notes) *os << "# " << key << ": " << csv_cell(v) << '\n';
    os->flush();
    if (!*os) throw std::runtime_error("write failed: " + (g.out_path.empty() ? "<stdout>" : g.out_path));
  } else {
    if (g.format == "json")
      write_json(*os, t);
    os->flush();
    if (!*os) throw std::runtime_error("write failed: " + (g.out_path.empty() ? "<stdout>" : g.out_path));
  }
  std::fprintf(stderr, "simulate: %lld replications, reject_any=%.4f, seconds=%.3g -> %s\n",
               reps, reps > 0 ? rej / static_cast<double>(reps) : 0.0, seconds, sink_name(g));
}

// ---------------------------------------------------------------- calibrate

void cmd_calibrate(const GlobalOpts& g) {
  RunConfig cfg = load_config(g, true);
  const TrialDesign& d = need_design(cfg);
  int threads = resolve_threads(g, cfg);
  OcOptions opts{cfg.oc.state_cap, cfg.oc.delta};
  const CalibrateConfig& c = cfg.calibrate;

  double t0 = now_s();
  CalibrationResult res = c.kind == "ux" ? calibrate_ux(d, c.alpha, opts, threads)
                                         : calibrate_pp(d, c.p, c.alpha, opts, threads);
  double seconds = now_s() - t0;

  Table t;
  t.schema = "brar.calibrate.v1";
  t.cols = {"kind", "alpha", "p", "c", "type_i", "passes"};
  t.rows.push_back({c.kind, c.alpha, c.kind == "ux" ? res.p_argmax : c.p, res.c, res.type_i,
                    res.passes});
  t.notes.emplace_back("seconds", seconds);
  emit_table(g, t);
  std::fprintf(stderr, "calibrate(%s): c=%.10g type_i=%.6g alpha=%g passes=%d seconds=%.3g -> %s\n",
               c.kind.c_str(), res.c, res.type_i, c.alpha, res.passes, seconds, sink_name(g));
}

// ---------------------------------------------------------------- oc

void cmd_oc(const GlobalOpts& g) {
  RunConfig cfg = load_config(g, true);
  const TrialDesign& d = need_design(cfg);
  if (cfg.scenarios.empty()) throw ConfigError("config: oc needs at least one true_p scenario");
  if (cfg.replications < 1 && cfg.oc.mode != "exact")
    throw ConfigError("config: replications must be >= 1 for simulated operating characteristics");
  uint64_t seed = resolve_seed(g, cfg);
  int threads = resolve_threads(g, cfg);
  OcOptions opts{cfg.oc.state_cap, cfg.oc.delta};
  int k = d.k;

  Table t;
  t.schema = "brar.oc.v1";
  t.cols = {"scenario", "mode"};
  for (int j = 0; j < k; ++j) t.cols.push_back("p" + std::to_string(j));
  t.cols.push_back("reject_any");
  for (int j = 0; j < k; ++j) t.cols.push_back("best" + std::to_string(j));
  for (int j = 0; j < k; ++j) t.cols.push_back("worst" + std::to_string(j));
  for (const char* c : {"futility", "epasa", "vpasa", "superior_arm", "power", "replications",
                        "binary_radius", "epasa_se", "vpasa_se"})
    t.cols.push_back(c);

  double t0 = now_s();
  for (size_t i = 0; i < cfg.scenarios.size(); ++i) {
    const std::vector<double>& p = cfg.scenarios[i];
    uint64_t master = i == 0 ? seed : splitmix64(seed ^ (0xD1B54A32D192ED03ULL * static_cast<uint64_t>(i)));
    OCReport rep;
    if (cfg.oc.mode == "exact") {
      rep = exact_ocs(d, p, opts, threads);
    } else if (cfg.oc.mode == "simulate") {
      rep = simulate_ocs(d, p, cfg.replications, master, threads, opts);
    } else {
      try {
        rep = exact_ocs(d, p, opts, threads);
      } catch (const FeasibilityError& e) {
        std::fprintf(stderr, "oc: scenario %zu falls back to simulation (%s)\n", i, e.what());
        rep = simulate_ocs(d, p, cfg.replications, master, threads, opts);
      } catch (const ConfigError& e) {
        std::fprintf(stderr, "oc: scenario %zu falls back to simulation (%s)\n", i, e.what());
        rep = simulate_ocs(d, p, cfg.replications, master, threads, opts);
      }
    }

    std::vector<ojson> cells;
    cells.push_back(static_cast<long long>(i));
    cells.push_back(rep.exact ? "exact" : "simulate");
    for (double pj : p) cells.push_back(pj);
    cells.push_back(rep.reject_any);
    for (int j = 0; j < k; ++j) cells.push_back(rep.best_claim[j]);
    for (int j = 0; j < k; ++j) cells.push_back(rep.worst_claim[j]);
    cells.push_back(rep.futility);
    cells.push_back(rep.epasa);
    cells.push_back(rep.vpasa);
    cells.push_back(rep.superior_arm);
    cells.push_back(rep.power ? ojson(*rep.power) : ojson());
    cells.push_back(rep.exact ? ojson() : ojson(rep.replications));
    cells.push_back(rep.exact ? ojson() : ojson(rep.binary_radius));
    cells.push_back(rep.exact ? ojson() : ojson(rep.epasa_se));
    cells.push_back(rep.exact ? ojson() : ojson(rep.vpasa_se));
    t.rows.push_back(std::move(cells));
  }
  double seconds = now_s() - t0;
  t.notes.emplace_back("seconds", seconds);
  emit_table(g, t);
  std::fprintf(stderr, "oc: %zu scenario(s), mode=%s, seconds=%.3g -> %s\n", cfg.scenarios.size(),
               cfg.oc.mode.c_str(), seconds, sink_name(g));
}

// ---------------------------------------------------------------- bench

TrialState balanced_state(int k, int n) {
  std::vector<int> x(2 * k, 1);
  std::vector<int> cnt(k, 0);
  for (int i = 0; i < n; ++i) {
    int arm = i % k;
    x[2 * arm + cnt[arm] % 2] += 1;
    cnt[arm] += 1;
  }
  return TrialState(k, x);
}

// Worst-case texture workloads: balanced arm totals with near-equal success
// and failure counts maximize the term counts of the closed-form pieces.
std::function<void()> bench_workload(const std::string& study, const std::string& method, int k,
                                     const BenchConfig& b, uint64_t seed, LogBetaCachePtr cache) {
  if (study == "trial") {
    return [method, k, b, seed, cache] {
      int burnend = k * b.burn_in;
      double acc = 0.0;
      if (method == "exact") {
        SubsetTable table = subset_table_uniform(k, cache);
        std::vector<int> cnt(k, 0);
        for (int p = 1; p <= b.n; ++p) {
          if (p > burnend && (p - burnend - 1) % b.block_size == 0)
            for (int j = 0; j < k; ++j) acc += table.singleton(j);
          int arm = (p - 1) % k;
          table.apply_increment({arm, cnt[arm] % 2});
          cnt[arm] += 1;
        }
      } else {
        TrialState s = TrialState::uniform_priors(k);
        std::vector<int> cnt(k, 0);
        for (int p = 1; p <= b.n; ++p) {
          if (p > burnend && (p - burnend - 1) % b.block_size == 0) {
            if (method == "ga") {
              acc += pps_gaussian_all(s, {b.accuracy, seed, 1 << 20})[0];
            } else if (method == "rs") {
              acc += rs_probs(s, b.draws, seed, 1)[0];
            } else {
              for (int j = 0; j < k; ++j)
                acc += pps_numeric_integration(s, j, b.accuracy, cache.get());
            }
          }
          int arm = (p - 1) % k;
          s.x[2 * arm + cnt[arm] % 2] += 1;
          cnt[arm] += 1;
        }
      }
      g_bench_sink = acc;
    };
  }
  TrialState s = balanced_state(k, b.n);
  return [method, k, b, seed, cache, s] {
    double acc = 0.0;
    if (method == "exact") {
      SubsetTable table = SubsetTable::at_state(s, cache);
      for (int j = 0; j < k; ++j) acc += table.singleton(j);
    } else if (method == "ga") {
      acc += pps_gaussian_all(s, {b.accuracy, seed, 1 << 20})[0];
    } else if (method == "rs") {
      acc += rs_probs(s, b.draws, seed, 1)[0];
    } else {
      for (int j = 0; j < k; ++j) acc += pps_numeric_integration(s, j, b.accuracy, cache.get());
    }
    g_bench_sink = acc;
  };
}

void cmd_bench(const GlobalOpts& g) {
  RunConfig cfg = load_config(g, false);
  const BenchConfig& b = cfg.bench;
  uint64_t seed = resolve_seed(g, cfg);

  Table t;
  t.schema = "brar.bench.v1";
  t.cols = {"study", "method", "k", "n", "burn_in", "block_size", "param", "repetitions",
            "median_seconds", "max_seconds"};

  double t0 = now_s();
  for (int k : b.ks) {
    auto cache = std::make_shared<LogBetaCache>(2 * k + b.n + 8);
    for (const std::string& method : b.methods) {
      auto work = bench_workload(b.study, method, k, b, seed, cache);
      auto time_once = [&](int inner) {
        auto c0 = std::chrono::steady_clock::now();
        for (int i = 0; i < inner; ++i) work();
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - c0).count() / inner;
      };
      double warm = time_once(1);
      int inner = static_cast<int>(std::clamp(std::ceil(0.02 / std::max(warm, 1e-9)), 1.0, 20000.0));
      std::vector<double> samples(static_cast<size_t>(b.repetitions));
      for (int r = 0; r < b.repetitions; ++r) samples[static_cast<size_t>(r)] = time_once(inner);
      std::sort(samples.begin(), samples.end());
      double med = samples.size() % 2 ? samples[samples.size() / 2]
                                      : 0.5 * (samples[samples.size() / 2 - 1] + samples[samples.size() / 2]);
      double mx = samples.back();
      double param = method == "rs" ? static_cast<double>(b.draws)
                                    : (method == "ga" || method == "ni") ? b.accuracy : 0.0;
      t.rows.push_back({b.study, method, k, b.n, b.burn_in, b.block_size, param, b.repetitions,
                        med, mx});
      std::fprintf(stderr, "bench: study=%s method=%s k=%d median=%.3gs\n", b.study.c_str(),
                   method.c_str(), k, med);
    }
  }
  double seconds = now_s() - t0;
  t.notes.emplace_back("seconds", seconds);
  emit_table(g, t);
  std::fprintf(stderr, "bench: %zu cells, seconds=%.3g -> %s\n", t.rows.size(), seconds,
               sink_name(g));
}

// ---------------------------------------------------------------- fit-runtime

std::vector<BenchRow> read_bench_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open bench csv: " + path);
  std::map<std::string, size_t> idx;
  std::vector<BenchRow> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells = split_line(line, ',');
    if (idx.empty()) {
      for (size_t i = 0; i < cells.size(); ++i) idx[cells[i]] = i;
      for (const char* col : {"study", "method", "k", "n", "burn_in", "block_size", "param",
                              "repetitions", "median_seconds", "max_seconds"})
        if (!idx.count(col))
          throw ConfigError("bench csv: missing column '" + std::string(col) + "' in " + path);
      continue;
    }
    auto cell = [&](const char* col) -> const std::string& {
      size_t i = idx.at(col);
      if (i >= cells.size())
        throw ConfigError("bench csv: short row at line " + std::to_string(lineno));
      return cells[i];
    };
    try {
      BenchRow r;
      r.study = cell("study");
      r.method = cell("method");
      r.k = std::stoi(cell("k"));
      r.n = std::stoi(cell("n"));
      r.burn_in = std::stoi(cell("burn_in"));
      r.block_size = std::stoi(cell("block_size"));
      r.param = std::stod(cell("param"));
      r.repetitions = std::stoi(cell("repetitions"));
      r.median_seconds = std::stod(cell("median_seconds"));
      r.max_seconds = std::stod(cell("max_seconds"));
      rows.push_back(std::move(r));
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError("bench csv: bad value at line " + std::to_string(lineno) + " in " + path);
    }
  }
  if (rows.empty()) throw ConfigError("bench csv: no data rows in " + path);
  return rows;
}

void cmd_fit_runtime(const GlobalOpts& g, const std::string& input) {
  std::vector<BenchRow> rows = read_bench_csv(input);
  RuntimeModel m = fit_runtime_model(rows, input);

  Table t;
  t.schema = "brar.runtime_model.v1";
  t.cols = {"quantity", "method", "k", "value"};
  for (const auto& [k, v] : m.f_exact) t.rows.push_back({"per_patient_seconds", "exact", k, v});
  for (const auto& [k, v] : m.f_ga) t.rows.push_back({"per_update_seconds", "ga", k, v});
  if (m.c_rs > 0.0) t.rows.push_back({"per_draw_seconds", "rs", ojson(), m.c_rs});
  t.rows.push_back({"log_slope", "exact", ojson(), m.exact_log_slope});
  t.rows.push_back({"log_intercept", "exact", ojson(), m.exact_log_intercept});
  t.rows.push_back({"log_r2", "exact", ojson(), m.exact_log_r2});
  t.notes.emplace_back("provenance", m.provenance);
  emit_table(g, t);
  std::fprintf(stderr, "fit-runtime: %zu bench rows, exact slope=%.4f r2=%.4f -> %s\n", rows.size(),
               m.exact_log_slope, m.exact_log_r2, sink_name(g));
}

// ---------------------------------------------------------------- recommend

struct RecommendArgs {
  int k = -1;
  int frequent = -1;
  int longer = -1;
  std::string priority;
};

void cmd_recommend(const GlobalOpts& g, const RecommendArgs& a) {
  RunConfig cfg = load_config(g, false);
  int k = a.k;
  int freq = a.frequent;
  int longer = a.longer;
  if (cfg.has_design) {
    const TrialDesign& d = cfg.design;
    if (k < 0) k = d.k;
    if (freq < 0) freq = card_frequent_analyses(d.block_size) ? 1 : 0;
    if (longer < 0) longer = card_longer_burn_in(d.k, d.burn_in, d.n) ? 1 : 0;
  }
  if (k < 0 || freq < 0 || longer < 0)
    throw CLI::ValidationError(
        "recommend: supply --config with a design, or all of --k, --frequent, --longer-burn-in");

  std::vector<std::pair<std::string, Priority>> prios;
  if (a.priority.empty() || a.priority == "accuracy") prios.emplace_back("accuracy", Priority::accuracy);
  if (a.priority.empty() || a.priority == "mixed") prios.emplace_back("mixed", Priority::mixed);
  if (a.priority.empty() || a.priority == "computation")
    prios.emplace_back("computation", Priority::computation);

  Table t;
  t.schema = "brar.recommend.v1";
  t.cols = {"k", "frequent_analyses", "longer_burn_in", "priority", "method"};
  for (const auto& [name, pr] : prios)
    t.rows.push_back({k, freq != 0, longer != 0, name, recommend_method(k, freq != 0, longer != 0, pr)});
  emit_table(g, t);
  std::fprintf(stderr, "recommend: k=%d frequent=%d longer_burn_in=%d -> %s\n", k, freq, longer,
               sink_name(g));
}

// ---------------------------------------------------------------- figure-data

std::vector<int> int_grid(int lo, int hi, int points) {
  std::vector<int> out;
  if (points <= 1 || hi <= lo) {
    out.push_back(hi);
    return out;
  }
  for (int i = 0; i < points; ++i) {
    double v = lo + static_cast<double>(hi - lo) * i / (points - 1);
    int r = static_cast<int>(std::llround(v));
    if (out.empty() || out.back() != r) out.push_back(r);
  }
  return out;
}

void figure_fig1(const GlobalOpts& g, const RunConfig& cfg) {
  const FigureConfig& fc = cfg.figure;
  auto cache = std::make_shared<LogBetaCache>(2 * fc.n + 8);
  std::vector<int> grid = int_grid(1, fc.n, fc.resolution);

  Table t;
  t.schema = "brar.fig1.v1";
  t.cols = {"n1", "n2", "states", "ga_max_abs_error", "ga_mean_abs_error", "rs_mean_abs_error"};
  double t0 = now_s();
  for (int n1 : grid) {
    for (int n2 : grid) {
      double gmax = 0.0, gsum = 0.0, rsum = 0.0;
      long long cnt = 0;
      for (int s1 = 0; s1 <= n1; ++s1) {
        for (int s2 = 0; s2 <= n2; ++s2) {
          TrialState s(2, {1 + s1, 1 + n1 - s1, 1 + s2, 1 + n2 - s2});
          double ex = pps_two_arm(s.x[2], s.x[3], s.x[0], s.x[1], cache.get());
          double ga = pps_gaussian(s, 0, {});
          double err = std::fabs(ga - ex);
          gmax = std::max(gmax, err);
          gsum += err;
          if (ex > 0.0 && ex < 1.0) rsum += rs_mean_abs_error(ex, fc.draws);
          ++cnt;
        }
      }
      t.rows.push_back({n1, n2, cnt, gmax, gsum / cnt, rsum / cnt});
    }
    std::fprintf(stderr, "figure-data: fig1 row n1=%d done\n", n1);
  }
  t.notes.emplace_back("draws", fc.draws);
  t.notes.emplace_back("seconds", now_s() - t0);
  emit_table(g, t);
}

void figure_fig2(const GlobalOpts& g, const RunConfig& cfg, int threads) {
  const TrialDesign& d = need_design(cfg);
  if (d.k != 2) throw ConfigError("config: figure study fig2 needs a two-arm design");
  const FigureConfig& fc = cfg.figure;
  OcOptions opts{cfg.oc.state_cap, cfg.oc.delta};
  std::vector<double> pg;
  for (int i = 0; i < fc.resolution; ++i) pg.push_back((i + 1) / (fc.resolution + 1.0));

  Table t;
  t.schema = "brar.fig2.v1";
  t.cols = {"p0", "p1", "reject_any", "best0", "best1", "futility", "epasa", "vpasa", "power"};
  double t0 = now_s();
  for (double p0 : pg) {
    for (double p1 : pg) {
      OCReport r = exact_ocs(d, std::vector<double>{p0, p1}, opts, threads);
      t.rows.push_back({p0, p1, r.reject_any, r.best_claim[0], r.best_claim[1], r.futility,
                        r.epasa, r.vpasa, r.power ? ojson(*r.power) : ojson()});
    }
    std::fprintf(stderr, "figure-data: fig2 row p0=%.3f done\n", p0);
  }
  t.notes.emplace_back("seconds", now_s() - t0);
  emit_table(g, t);
}

void figure_fig3(const GlobalOpts& g, const RunConfig& cfg, int threads) {
  const TrialDesign& d = need_design(cfg);
  if (d.k != 2) throw ConfigError("config: figure study fig3 needs a two-arm design");
  const FigureConfig& fc = cfg.figure;
  OcOptions opts{cfg.oc.state_cap, cfg.oc.delta};
  TrialDesign d_exact = d;
  d_exact.rand_method = RandMethod::exact();
  TrialDesign d_ga = d;
  d_ga.rand_method = RandMethod::from_pps(PpsMethod::gaussian());
  std::vector<double> pg;
  for (int i = 0; i < fc.resolution; ++i) pg.push_back((i + 1) / (fc.resolution + 1.0));

  Table t;
  t.schema = "brar.fig3.v1";
  t.cols = {"p0", "p1", "reject_exact_rand", "reject_ga_rand", "difference"};
  double t0 = now_s();
  for (double p0 : pg) {
    for (double p1 : pg) {
      std::vector<double> p{p0, p1};
      OCReport ra = exact_ocs(d_exact, p, opts, threads);
      OCReport rb = exact_ocs(d_ga, p, opts, threads);
      t.rows.push_back({p0, p1, ra.reject_any, rb.reject_any, rb.reject_any - ra.reject_any});
    }
    std::fprintf(stderr, "figure-data: fig3 row p0=%.3f done\n", p0);
  }
  t.notes.emplace_back("seconds", now_s() - t0);
  emit_table(g, t);
}

void cmd_figure(const GlobalOpts& g) {
  RunConfig cfg = load_config(g, true);
  int threads = resolve_threads(g, cfg);
  if (cfg.figure.study == "fig1")
    figure_fig1(g, cfg);
  else if (cfg.figure.study == "fig2")
    figure_fig2(g, cfg, threads);
  else
    figure_fig3(g, cfg, threads);
  std::fprintf(stderr, "figure-data: %s -> %s\n", cfg.figure.study.c_str(), sink_name(g));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"posterior superiority probabilities and operating characteristics for "
               "response-adaptive trials"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--config", g.config_path, "JSON configuration file");
  app.add_option("--seed", g.seed, "master seed (overrides the config)");
  app.add_option("--threads", g.threads, "worker threads, 0 = all cores (overrides the config)");
  app.add_option("--out", g.out_path, "output path (default stdout)");
  app.add_option("--format", g.format, "output format (csv or json)")
      ->check(CLI::IsMember({"csv", "json"}));

  PpsArgs pps_args;
  CLI::App* pps = app.add_subcommand("pps", "superiority probabilities for one posterior state");
  pps->fallthrough();
  pps->add_option("--state", pps_args.state,
                  "comma-separated beta parameters a0,b0,a1,b1,... (2 per arm)")
      ->required();
  pps->add_option("--arm", pps_args.arm, "restrict output to one focal arm");
  pps->add_option("--method", pps_args.method, "exact, ga, rs or ni")
      ->check(CLI::IsMember({"exact", "ga", "rs", "ni"}));
  pps->add_option("--draws", pps_args.draws, "posterior draws for rs");
  pps->add_option("--accuracy", pps_args.accuracy, "accuracy target for ga and ni");
  pps->callback([&] { cmd_pps(g, pps_args); });

  CLI::App* sim = app.add_subcommand("simulate", "replicate trials under one response scenario");
  sim->fallthrough();
  sim->callback([&] { cmd_simulate(g); });

  CLI::App* cal = app.add_subcommand("calibrate", "threshold calibration to a type-I target");
  cal->fallthrough();
  cal->callback([&] { cmd_calibrate(g); });

  CLI::App* oc = app.add_subcommand("oc", "operating characteristics per scenario");
  oc->fallthrough();
  oc->callback([&] { cmd_oc(g); });

  CLI::App* bench = app.add_subcommand("bench", "timing studies for the runtime model");
  bench->fallthrough();
  bench->callback([&] { cmd_bench(g); });

  std::string fit_input;
  CLI::App* fit = app.add_subcommand("fit-runtime", "fit per-method runtime laws from a bench csv");
  fit->fallthrough();
  fit->add_option("input", fit_input, "bench csv file")->required();
  fit->callback([&] { cmd_fit_runtime(g, fit_input); });

  RecommendArgs rec_args;
  CLI::App* rec = app.add_subcommand("recommend", "method guidance from design cards");
  rec->fallthrough();
  rec->add_option("--k", rec_args.k, "number of arms");
  rec->add_option("--frequent", rec_args.frequent, "1 when analyses are frequent, else 0")
      ->check(CLI::Range(0, 1));
  rec->add_option("--longer-burn-in", rec_args.longer, "1 when the burn-in is longer, else 0")
      ->check(CLI::Range(0, 1));
  rec->add_option("--priority", rec_args.priority, "accuracy, mixed or computation")
      ->check(CLI::IsMember({"accuracy", "mixed", "computation"}));
  rec->callback([&] { cmd_recommend(g, rec_args); });

  CLI::App* fig = app.add_subcommand("figure-data", "grid data behind the accuracy and oc figures");
  fig->fallthrough();
  fig->callback([&] { cmd_figure(g); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const DomainError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const FeasibilityError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
