#include "brar/trial.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>

#include "brar/errors.hpp"

namespace brar {

TrialState TrialDesign::prior_state() const {
  TrialState s;
  s.k = k;
  s.x = priors.empty() ? std::vector<int>(static_cast<size_t>(2) * k, 1) : priors;
  validate_state(s);
  return s;
}

const char* claim_name(ClaimKind c) {
  switch (c) {
    case ClaimKind::none: return "none";
    case ClaimKind::best: return "best";
    case ClaimKind::worst: return "worst";
    case ClaimKind::both: return "both";
    case ClaimKind::futility: return "futility";
  }
  return "none";
}

std::vector<int> derived_schedule(const TrialDesign& d) {
  if (!d.analysis_schedule.empty()) {
    std::vector<int> v = d.analysis_schedule;
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
  }
  std::vector<int> v;
  const int start = d.k * d.burn_in;
  for (int p = start + d.block_size; p < d.n; p += d.block_size) v.push_back(p);
  if (d.n > 0) v.push_back(d.n);
  return v;
}

namespace {

void validate_method(const PpsMethod& m, const char* what) {
  if (m.rs_draws < 1) throw DomainError(std::string(what) + ": rs_draws must be >= 1");
  if (!(m.ni_accuracy > 0.0)) throw DomainError(std::string(what) + ": ni_accuracy must be positive");
  if (!(m.mvn_accuracy > 0.0))
    throw DomainError(std::string(what) + ": mvn_accuracy must be positive");
}

}  // namespace

void validate_design(const TrialDesign& d) {
  if (d.k < 2 || d.k > 20) throw DomainError("TrialDesign: k must lie in [2,20]");
  if (d.n < 0) throw DomainError("TrialDesign: n must be >= 0");
  if (!d.priors.empty()) {
    if (static_cast<int>(d.priors.size()) != 2 * d.k)
      throw DomainError("TrialDesign: priors must have 2k entries");
    for (int v : d.priors)
      if (v < 1) throw DomainError("TrialDesign: priors must be positive integers");
  }
  if (d.burn_in < 0) throw DomainError("TrialDesign: burn_in must be >= 0");
  if (d.k * d.burn_in > d.n) throw DomainError("TrialDesign: burn-in exceeds trial size");
  if (d.block_size < 1) throw DomainError("TrialDesign: block_size must be >= 1");
  if (!(d.superiority_threshold >= 0.0 && d.superiority_threshold <= 1.0))
    throw DomainError("TrialDesign: superiority_threshold must lie in [0,1]");
  if (d.inferiority_threshold &&
      !(*d.inferiority_threshold >= 0.0 && *d.inferiority_threshold <= 1.0))
    throw DomainError("TrialDesign: inferiority_threshold must lie in [0,1]");
  if (d.drop_rule) {
    if (!(d.drop_rule->p_low > 0.0 && d.drop_rule->p_low < 1.0))
      throw DomainError("TrialDesign: drop-rule p_low must lie in (0,1)");
    if (!(d.drop_rule->confidence > 0.0 && d.drop_rule->confidence <= 1.0))
      throw DomainError("TrialDesign: drop-rule confidence must lie in (0,1]");
  }
  if (d.tuning.kind == TuningRule::Kind::variance_scaling) {
    if (!(d.tuning.m >= 1.0)) throw DomainError("TrialDesign: tuning exponent must be >= 1");
    if (d.rand_method.kind == RandMethod::Kind::posterior_draw)
      throw DomainError("TrialDesign: posterior-draw allocation has no probability vector to tune");
  }
  validate_method(d.rand_method.pps, "rand_method");
  validate_method(d.test_method, "test_method");
  for (int p : d.analysis_schedule) {
    if (p < 1 || p > d.n) throw DomainError("TrialDesign: analysis points must lie in [1,n]");
    if (p < d.k * d.burn_in)
      throw DomainError("TrialDesign: analyses during burn-in are not supported");
  }
}

std::vector<double> sbrar_probs(const TrialState& s, const PpsMethod& m, uint32_t dropped_mask,
                                const SubsetTable* table, LogBetaCachePtr cache,
                                const uint64_t* rs_seed) {
  std::vector<double> v = pps_vector(s, m, table, std::move(cache), rs_seed);
  for (int j = 0; j < s.k; ++j)
    if (dropped_mask >> j & 1) v[j] = 0.0;
  double sum = std::accumulate(v.begin(), v.end(), 0.0);
  if (sum <= 0.0) {
    const int live = s.k - std::popcount(dropped_mask & ((uint32_t(1) << s.k) - 1));
    for (int j = 0; j < s.k; ++j) v[j] = (dropped_mask >> j & 1) ? 0.0 : 1.0 / live;
    return v;
  }
  if (dropped_mask != 0 || std::fabs(sum - 1.0) > 1e-12)
    for (double& x : v) x /= sum;
  return v;
}

std::vector<double> tuned_probs(std::span<const double> raw, const TrialState& s,
                                std::span<const int> arm_counts, double m) {
  if (static_cast<int>(raw.size()) != s.k || static_cast<int>(arm_counts.size()) != s.k)
    throw DomainError("tuned_probs: size mismatch");
  if (!(m >= 1.0)) throw DomainError("tuned_probs: exponent must be >= 1");
  const GaussianMoments mom = beta_moments(s);
  std::vector<double> t(s.k, 0.0);
  double sum = 0.0;
  for (int j = 0; j < s.k; ++j) {
    if (raw[j] > 0.0) {
      t[j] = std::pow(raw[j] * mom.var[j] / (arm_counts[j] + 1.0), 1.0 / m);
      sum += t[j];
    }
  }
  if (sum <= 0.0) return std::vector<double>(raw.begin(), raw.end());
  for (double& x : t) x /= sum;
  return t;
}

std::vector<double> allocation_from_raw(std::span<const double> raw, const TrialState& s,
                                        std::span<const int> arm_counts, uint32_t dropped,
                                        const TrialDesign& d) {
  std::vector<double> v(raw.begin(), raw.end());
  for (int j = 0; j < s.k; ++j)
    if (dropped >> j & 1) v[j] = 0.0;
  double sum = std::accumulate(v.begin(), v.end(), 0.0);
  if (sum <= 0.0) {
    const int live = s.k - std::popcount(dropped & ((uint32_t(1) << s.k) - 1));
    for (int j = 0; j < s.k; ++j) v[j] = (dropped >> j & 1) ? 0.0 : 1.0 / live;
  } else {
    for (double& x : v) x /= sum;
  }
  if (d.tuning.kind == TuningRule::Kind::variance_scaling)
    v = tuned_probs(v, s, arm_counts, d.tuning.m);
  return v;
}

int posterior_draw_allocation(const TrialState& s, uint32_t dropped_mask, PhiloxStream& rng) {
  validate_state(s);
  int best = -1;
  double best_v = -1.0;
  for (int j = 0; j < s.k; ++j) {
    if (dropped_mask >> j & 1) continue;
    const double v = rng.next_beta(s.a(j), s.b(j));
    if (v > best_v) {
      best_v = v;
      best = j;
    }
  }
  if (best < 0) throw DomainError("posterior_draw_allocation: all arms dropped");
  return best;
}

ClaimDecision decide_claims(std::span<const double> t_best, std::span<const double> t_worst,
                            std::span<const double> post_mean, std::span<const double> drop_q,
                            const TrialDesign& d, double c_sup, double c_inf, uint32_t dropped,
                            bool is_final) {
  ClaimDecision out;
  const uint32_t all = (uint32_t(1) << d.k) - 1;
  auto live = [&](int j) { return !(dropped >> j & 1); };
  if (!is_final || !d.inferiority_threshold) {
    int jm = -1;
    double tm = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < d.k; ++j)
      if (live(j) && t_best[j] > tm) {
        tm = t_best[j];
        jm = j;
      }
    out.frontier = jm >= 0 ? tm : 0.0;
    if (jm >= 0 && tm > c_sup) {
      out.claim = ClaimKind::best;
      out.best_arm = jm;
      return out;
    }
    if (!is_final && d.drop_rule && !drop_q.empty()) {
      for (int j = 0; j < d.k; ++j)
        if (live(j) && drop_q[j] >= d.drop_rule->confidence) out.new_drops |= uint32_t(1) << j;
      if (((dropped | out.new_drops) & all) == all) out.claim = ClaimKind::futility;
    }
    return out;
  }
  int best = -1, worst = -1;
  for (int j = 0; j < d.k; ++j) {
    if (!live(j)) continue;
    if (best < 0 || post_mean[j] > post_mean[best]) best = j;
    if (worst < 0 || post_mean[j] < post_mean[worst]) worst = j;
  }
  const bool sup = best >= 0 && t_best[best] > c_sup;
  out.frontier = best >= 0 ? t_best[best] : 0.0;
  bool inf = false;
  if (best >= 0 && worst >= 0 && best != worst) {
    if (t_worst.empty())
      throw DomainError("decide_claims: composite final test requires is-worst statistics");
    inf = t_worst[worst] > c_inf;
    out.frontier = std::max(out.frontier, t_worst[worst]);
  }
  if (sup && inf) {
    out.claim = ClaimKind::both;
    out.best_arm = best;
    out.worst_arm = worst;
  } else if (sup) {
    out.claim = ClaimKind::best;
    out.best_arm = best;
  } else if (inf) {
    out.claim = ClaimKind::worst;
    out.worst_arm = worst;
  }
  return out;
}

uint64_t stat_stream_seed(uint64_t trial_seed, int patient, int salt) {
  return splitmix64(trial_seed ^
                    (0x9E3779B97F4A7C15ULL * (static_cast<uint64_t>(patient) * 4 + salt + 1)));
}

LogBetaCachePtr make_design_cache(const TrialDesign& d) {
  const TrialState pri = d.prior_state();
  int maxp = 1;
  long long sum = 0;
  for (int v : pri.x) {
    maxp = std::max(maxp, v);
    sum += v;
  }
  const long long need =
      std::max<long long>({64, sum + d.n + 2, 2LL * (d.n + maxp)});
  return std::make_shared<LogBetaCache>(static_cast<int>(need));
}

TestOutcome evaluate_tests(const TrialState& s, const TrialDesign& d, uint32_t dropped,
                           bool is_final, const SubsetTable* table, LogBetaCachePtr cache,
                           uint64_t stat_seed) {
  TestOutcome out;
  const uint64_t seed_best = splitmix64(stat_seed ^ 1);
  out.t_best = pps_vector(s, d.test_method, table, cache, &seed_best);
  std::vector<double> post_mean(s.k), drop_q;
  for (int j = 0; j < s.k; ++j)
    post_mean[j] = static_cast<double>(s.a(j)) / (s.a(j) + s.b(j));
  if (!is_final && d.drop_rule) {
    drop_q.resize(s.k);
    for (int j = 0; j < s.k; ++j)
      drop_q[j] = reg_inc_beta(d.drop_rule->p_low, s.a(j), s.b(j));
  }
  if (is_final && d.inferiority_threshold) {
    int best = -1, worst = -1;
    for (int j = 0; j < s.k; ++j) {
      if (dropped >> j & 1) continue;
      if (best < 0 || post_mean[j] > post_mean[best]) best = j;
      if (worst < 0 || post_mean[j] < post_mean[worst]) worst = j;
    }
    if (best >= 0 && worst >= 0 && best != worst) {
      const uint64_t seed_worst = splitmix64(stat_seed ^ 2);
      out.t_worst = inferiority_vector(s, d.test_method, cache, &seed_worst);
    }
  }
  const ClaimDecision dec =
      decide_claims(out.t_best, out.t_worst, post_mean, drop_q, d, d.superiority_threshold,
                    d.inferiority_threshold.value_or(1.0), dropped, is_final);
  out.claim = dec.claim;
  out.best_arm = dec.best_arm;
  out.worst_arm = dec.worst_arm;
  out.new_drops = dec.new_drops;
  return out;
}

namespace {

int sample_arm(std::span<const double> pi, double u) {
  double cum = 0.0;
  int last_pos = -1;
  for (size_t j = 0; j < pi.size(); ++j) {
    if (pi[j] <= 0.0) continue;
    cum += pi[j];
    last_pos = static_cast<int>(j);
    if (u < cum) return last_pos;
  }
  return last_pos;  // u landed in rounding slack past the last positive arm
}

}  // namespace

TrialHistoryRecord simulate_trial(const TrialDesign& d, std::span<const double> true_p,
                                  uint64_t seed, LogBetaCachePtr cache) {
  validate_design(d);
  if (static_cast<int>(true_p.size()) != d.k)
    throw DomainError("simulate_trial: true_p must have k entries");
  for (double p : true_p)
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("simulate_trial: response rates must lie in [0,1]");
  if (!cache) cache = make_design_cache(d);

  const std::vector<int> sched = derived_schedule(d);
  const bool need_table = d.rand_method.kind == RandMethod::Kind::pps &&
                              d.rand_method.pps.kind == PpsMethod::Kind::exact ||
                          d.test_method.kind == PpsMethod::Kind::exact;

  TrialHistoryRecord rec;
  rec.seed = seed;
  rec.arm.reserve(d.n);
  rec.outcome.reserve(d.n);
  rec.alloc_probs.reserve(static_cast<size_t>(d.n) * d.k);
  rec.arm_counts.assign(d.k, 0);

  TrialState state = d.prior_state();
  std::optional<SubsetTable> table;
  if (need_table) table.emplace(SubsetTable::at_state(state, cache));

  PhiloxStream rng(seed, 0);
  std::vector<double> pi(d.k, 1.0 / d.k);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  uint32_t dropped = 0;
  size_t sched_idx = 0;
  const int burn_end = d.k * d.burn_in;
  bool stopped = false;

  for (int i = 1; i <= d.n && !stopped; ++i) {
    int arm;
    if (i <= burn_end) {
      arm = (i - 1) % d.k;
      for (int j = 0; j < d.k; ++j) rec.alloc_probs.push_back(1.0 / d.k);
    } else if (d.rand_method.kind == RandMethod::Kind::posterior_draw) {
      arm = posterior_draw_allocation(state, dropped, rng);
      for (int j = 0; j < d.k; ++j) rec.alloc_probs.push_back(nan);
    } else {
      if ((i - burn_end - 1) % d.block_size == 0) {
        const uint64_t rs_seed = stat_stream_seed(seed, i, 2);
        const std::vector<double> raw =
            pps_vector(state, d.rand_method.pps, table ? &*table : nullptr, cache, &rs_seed);
        pi = allocation_from_raw(raw, state, rec.arm_counts, dropped, d);
      }
      arm = sample_arm(pi, rng.next_double());
      rec.alloc_probs.insert(rec.alloc_probs.end(), pi.begin(), pi.end());
    }
    const bool success = rng.next_double() < true_p[arm];
    rec.arm.push_back(static_cast<uint8_t>(arm));
    rec.outcome.push_back(success ? 1 : 0);
    ++rec.arm_counts[arm];
    const int slot = success ? 0 : 1;
    state.x[2 * arm + slot] += 1;
    if (table) table->apply_increment({arm, slot});

    if (sched_idx < sched.size() && sched[sched_idx] == i) {
      ++sched_idx;
      const bool is_final = i == d.n;
      TestOutcome t = evaluate_tests(state, d, dropped, is_final, table ? &*table : nullptr, cache,
                                     stat_stream_seed(seed, i, 0));
      dropped |= t.new_drops;
      if (t.new_drops && !is_final) {
        for (int j = 0; j < d.k; ++j)
          if (dropped >> j & 1) pi[j] = 0.0;
        const double sum = std::accumulate(pi.begin(), pi.end(), 0.0);
        if (sum > 0.0)
          for (double& x : pi) x /= sum;
      }
      rec.analyses.push_back({i, std::move(t), dropped});
      const AnalysisRecord& ar = rec.analyses.back();
      if (ar.outcome.claim != ClaimKind::none) {
        rec.claim = ar.outcome.claim;
        rec.claimed_best = ar.outcome.best_arm;
        rec.claimed_worst = ar.outcome.worst_arm;
        rec.stop_patient = i;
        stopped = true;
      }
    }
  }
  if (!stopped) rec.stop_patient = static_cast<int>(rec.arm.size());
  rec.dropped = dropped;
  rec.final_state = state;
  return rec;
}

std::vector<AnalysisRecord> replay_statistics(const TrialDesign& d, const TrialHistoryRecord& rec,
                                              LogBetaCachePtr cache) {
  validate_design(d);
  if (!cache) cache = make_design_cache(d);
  const std::vector<int> sched = derived_schedule(d);
  const bool need_table = d.test_method.kind == PpsMethod::Kind::exact;
  TrialState state = d.prior_state();
  std::optional<SubsetTable> table;
  if (need_table) table.emplace(SubsetTable::at_state(state, cache));
  std::vector<AnalysisRecord> out;
  uint32_t dropped = 0;
  size_t sched_idx = 0;
  for (size_t i = 0; i < rec.arm.size(); ++i) {
    const int arm = rec.arm[i];
    const int slot = rec.outcome[i] ? 0 : 1;
    if (arm < 0 || arm >= d.k) throw DomainError("replay_statistics: arm out of range");
    state.x[2 * arm + slot] += 1;
    if (table) table->apply_increment({arm, slot});
    const int patient = static_cast<int>(i) + 1;
    if (sched_idx < sched.size() && sched[sched_idx] == patient) {
      ++sched_idx;
      const bool is_final = patient == d.n;
      TestOutcome t = evaluate_tests(state, d, dropped, is_final, table ? &*table : nullptr, cache,
                                     stat_stream_seed(rec.seed, patient, 0));
      dropped |= t.new_drops;
      out.push_back({patient, std::move(t), dropped});
      if (out.back().outcome.claim != ClaimKind::none) break;
    }
  }
  return out;
}

}  // namespace brar
