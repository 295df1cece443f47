#include "brar/oc.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <unordered_map>
#include <utility>

#include "brar/approx.hpp"
#include "brar/errors.hpp"
#include "brar/parallel.hpp"
#include "brar/rng.hpp"

namespace brar {

namespace {

using u128 = unsigned __int128;

struct Key {
  u128 v = 0;
  bool operator==(const Key& o) const { return v == o.v; }
  bool operator<(const Key& o) const { return v < o.v; }
};

struct KeyHash {
  size_t operator()(const Key& k) const {
    return static_cast<size_t>(
        splitmix64(static_cast<uint64_t>(k.v) ^ splitmix64(static_cast<uint64_t>(k.v >> 64))));
  }
};

// Statistics attached to a count state.  Everything here depends only on the
// posterior counts, so entries are shared across thresholds, true response
// rates, and dropped-arm masks.
struct StateStats {
  std::vector<double> alloc_raw;
  std::vector<double> t_best;
  std::vector<double> t_worst;
  std::vector<double> post_mean;
  std::vector<double> drop_q;
  bool has_alloc = false;
  bool has_tests = false;
  bool has_worst = false;
};

bool claim_rejects(ClaimKind c) {
  return c == ClaimKind::best || c == ClaimKind::worst || c == ClaimKind::both;
}

int lowest_argmax(std::span<const double> v) {
  int idx = 0;
  for (size_t j = 1; j < v.size(); ++j)
    if (v[j] > v[idx]) idx = static_cast<int>(j);
  return idx;
}

double compositions(int l, int m) {
  // C(l + m - 1, m - 1)
  double r = 1.0;
  for (int i = 1; i < m; ++i) r *= static_cast<double>(l + i) / i;
  return r;
}

void check_probs(std::span<const double> p, int k) {
  if (static_cast<int>(p.size()) != k)
    throw DomainError("operating characteristics: true_p must have k entries");
  for (double v : p)
    if (!(v >= 0.0 && v <= 1.0))
      throw DomainError("operating characteristics: response rates must lie in [0,1]");
}

class ForwardEngine {
 public:
  ForwardEngine(const TrialDesign& d, std::span<const double> true_p, const OcOptions& opts,
                int threads)
      : d_(d), opts_(opts), threads_(std::max(1, threads)) {
    validate_design(d_);
    check_probs(true_p, d_.k);
    if (d_.rand_method.kind != RandMethod::Kind::pps ||
        (d_.rand_method.pps.kind != PpsMethod::Kind::exact &&
         d_.rand_method.pps.kind != PpsMethod::Kind::gaussian))
      throw ConfigError(
          "exact operating characteristics need a deterministic allocation rule "
          "(exact or gaussian probabilities)");
    if (d_.test_method.kind == PpsMethod::Kind::repeated_sampling)
      throw ConfigError("exact operating characteristics need a deterministic test statistic");
    burn_end_ = d_.k * d_.burn_in;
    sched_ = derived_schedule(d_);
    for (int t : sched_)
      if (t < d_.n && (t - burn_end_) % d_.block_size != 0)
        throw ConfigError(
            "exact operating characteristics need analyses on allocation-block boundaries");
    bits_ = std::max(1, static_cast<int>(std::bit_width(static_cast<unsigned>(d_.n))));
    if (2 * d_.k * bits_ + d_.k > 128) {
      throw FeasibilityError("trial state does not fit the packed key; use simulation mode");
    }
    cache_ = make_design_cache(d_);
    prior_ = d_.prior_state();
    set_true_p(true_p);
  }

  void set_true_p(std::span<const double> p) {
    check_probs(p, d_.k);
    p_.assign(p.begin(), p.end());
    superior_ = lowest_argmax(p_);
  }

  const std::vector<int>& schedule() const { return sched_; }
  int superior_arm() const { return superior_; }
  const std::vector<double>& true_p() const { return p_; }
  const TrialDesign& design() const { return d_; }

  struct Pass {
    std::vector<TerminalRecord> stopped;
    double processed = 0.0;
  };

  // One full propagation with the given thresholds.  When sink is non-null it
  // receives (decision statistic, mass) for every state at every analysis the
  // mass reaches.
  Pass run(double c_sup, double c_inf, std::vector<std::pair<double, double>>* sink) {
    Pass out;
    Layer layer = initial_layer();
    int patient = burn_end_;
    size_t si = 0;
    for (;;) {
      bump_processed(out, static_cast<double>(layer.size()));
      if (si < sched_.size() && sched_[si] == patient) {
        ++si;
        analyze(layer, patient, c_sup, c_inf, sink, out);
      }
      if (patient >= d_.n || layer.empty()) break;
      const int step = std::min(d_.block_size, d_.n - patient);
      bump_processed(out, static_cast<double>(layer.size()) * compositions(step, 2 * d_.k));
      layer = advance(layer, step);
      patient += step;
    }
    for (const auto& [key, mass] : layer) {
      TerminalRecord rec;
      rec.counts.resize(2 * d_.k);
      unpack(key, rec.counts, rec.dropped);
      rec.mass = mass;
      rec.stop_patient = d_.n;
      rec.pasa = rec.counts[2 * superior_] + rec.counts[2 * superior_ + 1];
      out.stopped.push_back(std::move(rec));
    }
    return out;
  }

 private:
  using Layer = std::vector<std::pair<Key, double>>;

  Key pack(std::span<const int> counts, uint32_t dropped) const {
    u128 v = 0;
    for (int i = 0; i < 2 * d_.k; ++i) v = v << bits_ | static_cast<unsigned>(counts[i]);
    v = v << d_.k | (dropped & ((uint32_t(1) << d_.k) - 1));
    return {v};
  }

  void unpack(Key key, std::span<int> counts, uint32_t& dropped) const {
    u128 v = key.v;
    dropped = static_cast<uint32_t>(v & ((uint32_t(1) << d_.k) - 1));
    v >>= d_.k;
    const u128 mask = (u128(1) << bits_) - 1;
    for (int i = 2 * d_.k - 1; i >= 0; --i) {
      counts[i] = static_cast<int>(v & mask);
      v >>= bits_;
    }
  }

  TrialState state_from(std::span<const int> counts) const {
    TrialState s = prior_;
    for (int i = 0; i < 2 * d_.k; ++i) s.x[i] += counts[i];
    return s;
  }

  void bump_processed(Pass& out, double amount) {
    out.processed += amount;
    if (out.processed > opts_.state_cap) {
      char msg[160];
      std::snprintf(msg, sizeof msg,
                    "exact propagation needs about %.3g weighted states (cap %.3g); "
                    "use simulation mode",
                    out.processed, opts_.state_cap);
      throw FeasibilityError(msg);
    }
  }

  Layer initial_layer() {
    std::unordered_map<Key, double, KeyHash> acc;
    std::vector<int> counts(2 * d_.k, 0);
    if (d_.burn_in == 0) {
      acc[pack(counts, 0)] = 1.0;
    } else {
      // Round-robin burn-in gives each arm exactly burn_in patients, so the
      // state after it is a product of independent binomials.
      std::vector<std::vector<double>> pmf(d_.k);
      for (int j = 0; j < d_.k; ++j) {
        pmf[j].assign(d_.burn_in + 1, 0.0);
        if (p_[j] >= 1.0) {
          pmf[j][d_.burn_in] = 1.0;
        } else if (p_[j] <= 0.0) {
          pmf[j][0] = 1.0;
        } else {
          double term = std::pow(1.0 - p_[j], d_.burn_in);
          for (int s = 0; s <= d_.burn_in; ++s) {
            pmf[j][s] = term;
            term *= p_[j] * (d_.burn_in - s) / ((s + 1.0) * (1.0 - p_[j]));
          }
        }
      }
      std::vector<int> succ(d_.k, 0);
      std::function<void(int, double)> rec = [&](int arm, double w) {
        if (w == 0.0) return;
        if (arm == d_.k) {
          for (int j = 0; j < d_.k; ++j) {
            counts[2 * j] = succ[j];
            counts[2 * j + 1] = d_.burn_in - succ[j];
          }
          acc[pack(counts, 0)] += w;
          return;
        }
        for (int s = 0; s <= d_.burn_in; ++s) {
          succ[arm] = s;
          rec(arm + 1, w * pmf[arm][s]);
        }
      };
      rec(0, 1.0);
    }
    return sorted(acc);
  }

  static Layer sorted(std::unordered_map<Key, double, KeyHash>& acc) {
    Layer layer(acc.begin(), acc.end());
    std::sort(layer.begin(), layer.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    return layer;
  }

  // Fill the memoized per-count statistics every state in the layer needs.
  void ensure_parts(const Layer& layer, bool need_alloc, bool need_tests, bool need_worst) {
    std::vector<std::pair<StateStats*, Key>> todo;
    Key last{~u128(0)};
    for (const auto& [key, mass] : layer) {
      (void)mass;
      const Key ck{key.v >> d_.k};
      if (ck == last) continue;
      last = ck;
      auto& slot = memo_[ck];
      if (!slot) slot = std::make_unique<StateStats>();
      StateStats* st = slot.get();
      if ((need_alloc && !st->has_alloc) || (need_tests && !st->has_tests) ||
          (need_worst && !st->has_worst))
        todo.emplace_back(st, ck);
    }
    parallel_for(todo.size(), threads_, [&](size_t i) {
      StateStats* st = todo[i].first;
      std::vector<int> counts(2 * d_.k);
      uint32_t dummy = 0;
      unpack(Key{todo[i].second.v << d_.k}, counts, dummy);
      const TrialState s = state_from(counts);
      if (need_alloc && !st->has_alloc) {
        st->alloc_raw = pps_vector(s, d_.rand_method.pps, nullptr, cache_, nullptr);
        st->has_alloc = true;
      }
      if (need_tests && !st->has_tests) {
        st->t_best = pps_vector(s, d_.test_method, nullptr, cache_, nullptr);
        st->post_mean.resize(d_.k);
        for (int j = 0; j < d_.k; ++j)
          st->post_mean[j] = static_cast<double>(s.a(j)) / (s.a(j) + s.b(j));
        if (d_.drop_rule) {
          st->drop_q.resize(d_.k);
          for (int j = 0; j < d_.k; ++j)
            st->drop_q[j] = reg_inc_beta(d_.drop_rule->p_low, s.a(j), s.b(j));
        }
        st->has_tests = true;
      }
      if (need_worst && !st->has_worst) {
        st->t_worst = inferiority_vector(s, d_.test_method, cache_, nullptr);
        st->has_worst = true;
      }
    });
  }

  void analyze(Layer& layer, int patient, double c_sup, double c_inf,
               std::vector<std::pair<double, double>>* sink, Pass& out) {
    const bool is_final = patient == d_.n;
    const bool worst_needed = is_final && d_.inferiority_threshold.has_value();
    ensure_parts(layer, false, true, worst_needed);
    std::unordered_map<Key, double, KeyHash> keep;
    std::vector<int> counts(2 * d_.k);
    for (const auto& [key, mass] : layer) {
      uint32_t dropped = 0;
      unpack(key, counts, dropped);
      const StateStats& st = *memo_.at(Key{key.v >> d_.k});
      const ClaimDecision dec =
          decide_claims(st.t_best, worst_needed ? std::span<const double>(st.t_worst)
                                                : std::span<const double>(),
                        st.post_mean, st.drop_q, d_, c_sup, c_inf, dropped, is_final);
      if (sink) sink->emplace_back(dec.frontier, mass);
      if (dec.claim != ClaimKind::none) {
        TerminalRecord rec;
        rec.counts.assign(counts.begin(), counts.end());
        rec.dropped = dropped | dec.new_drops;
        rec.mass = mass;
        rec.stop_patient = patient;
        rec.claim = dec.claim;
        rec.best_arm = dec.best_arm;
        rec.worst_arm = dec.worst_arm;
        rec.pasa = counts[2 * superior_] + counts[2 * superior_ + 1];
        if (st.t_best[superior_] > c_sup) rec.pasa += d_.n - patient;
        out.stopped.push_back(std::move(rec));
      } else {
        keep[pack(counts, dropped | dec.new_drops)] += mass;
      }
    }
    layer = sorted(keep);
  }

  Layer advance(const Layer& layer, int step) {
    ensure_parts(layer, true, false, false);
    const int m = 2 * d_.k;
    std::unordered_map<Key, double, KeyHash> next;
    next.reserve(layer.size() * 4);
    std::vector<int> counts(m), gain(m), arm_counts(d_.k), total(m);
    std::vector<double> q(m);
    for (const auto& [key, mass] : layer) {
      uint32_t dropped = 0;
      unpack(key, counts, dropped);
      const StateStats& st = *memo_.at(Key{key.v >> d_.k});
      const TrialState s = state_from(counts);
      for (int j = 0; j < d_.k; ++j) arm_counts[j] = counts[2 * j] + counts[2 * j + 1];
      const std::vector<double> pi = allocation_from_raw(st.alloc_raw, s, arm_counts, dropped, d_);
      for (int j = 0; j < d_.k; ++j) {
        q[2 * j] = pi[j] * p_[j];
        q[2 * j + 1] = pi[j] * (1.0 - p_[j]);
      }
      std::function<void(int, int, double)> rec = [&](int slot, int rem, double w) {
        if (w == 0.0) return;
        if (slot == m - 1) {
          if (q[slot] == 0.0 && rem > 0) return;
          gain[slot] = rem;
          const double ww = w * std::pow(q[slot], rem);
          if (ww == 0.0) return;
          for (int i = 0; i < m; ++i) total[i] = counts[i] + gain[i];
          next[pack(total, dropped)] += ww;
          return;
        }
        if (q[slot] == 0.0) {
          gain[slot] = 0;
          rec(slot + 1, rem, w);
          return;
        }
        double term = 1.0;
        for (int c = 0; c <= rem; ++c) {
          gain[slot] = c;
          rec(slot + 1, rem - c, w * term);
          term *= q[slot] * (rem - c) / (c + 1.0);
        }
      };
      rec(0, step, mass);
    }
    return sorted(next);
  }

  const TrialDesign& d_;
  OcOptions opts_;
  int threads_;
  std::vector<double> p_;
  int superior_ = 0;
  int burn_end_ = 0;
  int bits_ = 0;
  std::vector<int> sched_;
  TrialState prior_;
  LogBetaCachePtr cache_;
  std::unordered_map<Key, std::unique_ptr<StateStats>, KeyHash> memo_;
};

double total_mass(const std::vector<TerminalRecord>& recs) {
  double s = 0.0;
  for (const auto& r : recs) s += r.mass;
  return s;
}

double reject_mass(const std::vector<TerminalRecord>& recs) {
  double s = 0.0;
  for (const auto& r : recs)
    if (claim_rejects(r.claim)) s += r.mass;
  return s;
}

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

void attach_power(OCReport& rep, const TrialDesign& d) {
  int amax = 0, amin = 0, nmax = 0, nmin = 0;
  for (int j = 0; j < rep.k; ++j) {
    if (rep.true_p[j] > rep.true_p[amax]) amax = j;
    if (rep.true_p[j] < rep.true_p[amin]) amin = j;
  }
  for (int j = 0; j < rep.k; ++j) {
    nmax += rep.true_p[j] == rep.true_p[amax];
    nmin += rep.true_p[j] == rep.true_p[amin];
  }
  if (nmax == 1)
    rep.power = rep.best_claim[amax];
  else if (d.inferiority_threshold && nmin == 1)
    rep.power = rep.worst_claim[amin];
}

OCReport aggregate_exact(const ForwardEngine& e, const ForwardEngine::Pass& pass) {
  const TrialDesign& d = e.design();
  OCReport rep;
  rep.exact = true;
  rep.k = d.k;
  rep.true_p = e.true_p();
  rep.best_claim.assign(d.k, 0.0);
  rep.worst_claim.assign(d.k, 0.0);
  rep.superior_arm = e.superior_arm();
  double epasa = 0.0, epasa2 = 0.0;
  for (const auto& r : pass.stopped) {
    if (claim_rejects(r.claim)) rep.reject_any += r.mass;
    if ((r.claim == ClaimKind::best || r.claim == ClaimKind::both) && r.best_arm >= 0)
      rep.best_claim[r.best_arm] += r.mass;
    if ((r.claim == ClaimKind::worst || r.claim == ClaimKind::both) && r.worst_arm >= 0)
      rep.worst_claim[r.worst_arm] += r.mass;
    if (r.claim == ClaimKind::futility) rep.futility += r.mass;
    epasa += r.mass * r.pasa;
    epasa2 += r.mass * r.pasa * static_cast<double>(r.pasa);
  }
  rep.reject_any = clamp01(rep.reject_any);
  rep.futility = clamp01(rep.futility);
  for (int j = 0; j < d.k; ++j) {
    rep.best_claim[j] = clamp01(rep.best_claim[j]);
    rep.worst_claim[j] = clamp01(rep.worst_claim[j]);
  }
  rep.epasa = epasa;
  rep.vpasa = std::max(0.0, epasa2 - epasa * epasa);
  attach_power(rep, d);
  return rep;
}

void check_conservation(const std::vector<TerminalRecord>& recs) {
  if (std::fabs(total_mass(recs) - 1.0) > 1e-10)
    throw ConsistencyError("forward propagation lost probability mass");
}

CalibrationResult calibrate_with(ForwardEngine& e, double p, double alpha,
                                 std::vector<double>& candidates) {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw DomainError("calibration: alpha must lie in [0,1]");
  CalibrationResult res;
  res.alpha = alpha;
  res.p_argmax = p;
  if (e.schedule().size() <= 1) {
    // A single analysis decides everything, so one pass gives the rejection
    // mass at every threshold at once.
    std::vector<std::pair<double, double>> mm;
    e.run(2.0, 2.0, &mm);
    ++res.passes;
    std::sort(mm.begin(), mm.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    double rejected = 0.0;
    size_t i = 0;
    double c = 0.0;
    while (i < mm.size()) {
      size_t j = i;
      double g = 0.0;
      while (j < mm.size() && mm[j].first == mm[i].first) g += mm[j++].second;
      if (rejected + g > alpha) {
        c = mm[i].first;
        break;
      }
      rejected += g;
      i = j;
    }
    res.c = c;
    res.type_i = rejected;
    return res;
  }
  if (candidates.empty()) {
    std::vector<std::pair<double, double>> mm;
    e.run(2.0, 2.0, &mm);
    ++res.passes;
    candidates.reserve(mm.size() + 1);
    candidates.push_back(0.0);
    for (const auto& [v, mass] : mm) {
      (void)mass;
      candidates.push_back(v);
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  }
  auto mass_at = [&](double c) {
    const auto pass = e.run(c, c, nullptr);
    ++res.passes;
    return reject_mass(pass.stopped);
  };
  size_t lo = 0, hi = candidates.size() - 1;
  double hi_mass = std::numeric_limits<double>::quiet_NaN();
  while (lo < hi) {
    const size_t mid = lo + (hi - lo) / 2;
    const double m = mass_at(candidates[mid]);
    if (m <= alpha) {
      hi = mid;
      hi_mass = m;
    } else {
      lo = mid + 1;
    }
  }
  if (std::isnan(hi_mass)) hi_mass = mass_at(candidates[hi]);
  res.c = candidates[hi];
  res.type_i = hi_mass;
  return res;
}

}  // namespace

StateDistribution forward_distribution(const TrialDesign& d, std::span<const double> true_p,
                                       const OcOptions& opts, int threads) {
  ForwardEngine e(d, true_p, opts, threads);
  auto pass = e.run(d.superiority_threshold, d.inferiority_threshold.value_or(1.0), nullptr);
  check_conservation(pass.stopped);
  StateDistribution out;
  out.patient = d.n;
  out.stopped = std::move(pass.stopped);
  out.processed_states = pass.processed;
  return out;
}

OCReport exact_ocs(const TrialDesign& d, std::span<const double> true_p, const OcOptions& opts,
                   int threads) {
  ForwardEngine e(d, true_p, opts, threads);
  const auto pass = e.run(d.superiority_threshold, d.inferiority_threshold.value_or(1.0), nullptr);
  check_conservation(pass.stopped);
  return aggregate_exact(e, pass);
}

CalibrationResult calibrate_pp(const TrialDesign& d, double p, double alpha, const OcOptions& opts,
                               int threads) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("calibrate_pp: p must lie in [0,1]");
  const std::vector<double> null_p(d.k, p);
  ForwardEngine e(d, null_p, opts, threads);
  std::vector<double> candidates;
  return calibrate_with(e, p, alpha, candidates);
}

CalibrationResult calibrate_ux(const TrialDesign& d, double alpha, const OcOptions& opts,
                               int threads) {
  ForwardEngine e(d, std::vector<double>(d.k, 0.5), opts, threads);
  std::vector<double> candidates;
  CalibrationResult best;
  bool have = false;
  int passes = 0;
  auto eval = [&](double p) {
    e.set_true_p(std::vector<double>(d.k, p));
    CalibrationResult r = calibrate_with(e, p, alpha, candidates);
    passes += r.passes;
    if (!have || r.c > best.c) {
      best = r;
      have = true;
    }
  };
  for (int i = 1; i <= 99; ++i) eval(i / 100.0);
  const double p0 = best.p_argmax;
  for (int j = -9; j <= 9; ++j) {
    if (j == 0) continue;
    const double p = p0 + j / 1000.0;
    if (p > 0.0 && p < 1.0) eval(p);
  }
  best.passes = passes;
  return best;
}

uint64_t replication_seed(uint64_t master_seed, long long replication) {
  return splitmix64(master_seed ^
                    (0x9E3779B97F4A7C15ULL * (static_cast<uint64_t>(replication) + 1)));
}

OCReport simulate_ocs(const TrialDesign& d, std::span<const double> true_p,
                      long long replications, uint64_t master_seed, int threads,
                      const OcOptions& opts) {
  validate_design(d);
  check_probs(true_p, d.k);
  if (replications < 1) throw DomainError("simulate_ocs: replications must be >= 1");
  const LogBetaCachePtr cache = make_design_cache(d);
  const int superior = lowest_argmax(true_p);

  struct RepOut {
    ClaimKind claim;
    int16_t best;
    int16_t worst;
    int32_t pasa;
  };
  std::vector<RepOut> reps(static_cast<size_t>(replications));
  const std::vector<double> p(true_p.begin(), true_p.end());
  parallel_for(reps.size(), threads, [&](size_t r) {
    const TrialHistoryRecord rec =
        simulate_trial(d, p, replication_seed(master_seed, static_cast<long long>(r)), cache);
    int pasa = rec.arm_counts[superior];
    if (rec.stop_patient < d.n && !rec.analyses.empty()) {
      const AnalysisRecord& last = rec.analyses.back();
      if (last.patient == rec.stop_patient &&
          last.outcome.t_best[superior] > d.superiority_threshold)
        pasa += d.n - rec.stop_patient;
    }
    reps[r] = {rec.claim, static_cast<int16_t>(rec.claimed_best),
               static_cast<int16_t>(rec.claimed_worst), pasa};
  });

  OCReport rep;
  rep.exact = false;
  rep.k = d.k;
  rep.true_p = p;
  rep.best_claim.assign(d.k, 0.0);
  rep.worst_claim.assign(d.k, 0.0);
  rep.superior_arm = superior;
  rep.replications = replications;
  const double kn = static_cast<double>(replications);
  double sum = 0.0;
  for (const RepOut& r : reps) {
    if (claim_rejects(r.claim)) rep.reject_any += 1.0;
    if ((r.claim == ClaimKind::best || r.claim == ClaimKind::both) && r.best >= 0)
      rep.best_claim[r.best] += 1.0;
    if ((r.claim == ClaimKind::worst || r.claim == ClaimKind::both) && r.worst >= 0)
      rep.worst_claim[r.worst] += 1.0;
    if (r.claim == ClaimKind::futility) rep.futility += 1.0;
    sum += r.pasa;
  }
  rep.reject_any /= kn;
  rep.futility /= kn;
  for (int j = 0; j < d.k; ++j) {
    rep.best_claim[j] /= kn;
    rep.worst_claim[j] /= kn;
  }
  const double mean = sum / kn;
  double m2 = 0.0, m4 = 0.0;
  for (const RepOut& r : reps) {
    const double dev = r.pasa - mean;
    m2 += dev * dev;
    m4 += dev * dev * dev * dev;
  }
  rep.epasa = mean;
  if (replications >= 2) {
    const double s2 = m2 / (kn - 1.0);
    rep.vpasa = s2;
    rep.epasa_se = std::sqrt(s2 / kn);
    m2 /= kn;
    m4 /= kn;
    const double var_s2 = (m4 - (kn - 3.0) / (kn - 1.0) * m2 * m2) / kn;
    rep.vpasa_se = std::sqrt(std::max(0.0, var_s2));
  }
  rep.binary_radius = ks_confidence_radius(replications, 0.5, opts.delta);
  attach_power(rep, d);
  return rep;
}

}  // namespace brar
