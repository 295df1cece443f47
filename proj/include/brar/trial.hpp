#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "brar/approx.hpp"
#include "brar/rng.hpp"

namespace brar {

struct RandMethod {
  enum class Kind { pps, posterior_draw };
  Kind kind = Kind::pps;
  PpsMethod pps;  // ignored for posterior_draw

  static RandMethod exact() { return {}; }
  static RandMethod posterior_draw() { return {Kind::posterior_draw, {}}; }
  static RandMethod from_pps(PpsMethod m) { return {Kind::pps, m}; }
};

struct TuningRule {
  enum class Kind { none, variance_scaling };
  Kind kind = Kind::none;
  double m = 2.0;

  static TuningRule none_rule() { return {}; }
  static TuningRule variance_scaling(double m) { return {Kind::variance_scaling, m}; }
};

struct DropRule {
  double p_low = 0.25;
  double confidence = 0.95;
};

struct TrialDesign {
  int k = 2;
  int n = 0;
  std::vector<int> priors;             // 2k entries; empty means all ones
  int burn_in = 0;                     // patients per arm, round-robin
  int block_size = 1;
  std::vector<int> analysis_schedule;  // empty: block boundaries after burn-in, plus n
  double superiority_threshold = 0.975;
  std::optional<double> inferiority_threshold;
  std::optional<DropRule> drop_rule;
  TuningRule tuning;
  RandMethod rand_method;
  PpsMethod test_method;

  TrialState prior_state() const;
};

std::vector<int> derived_schedule(const TrialDesign& d);
void validate_design(const TrialDesign& d);

enum class ClaimKind : uint8_t { none, best, worst, both, futility };
const char* claim_name(ClaimKind c);

struct TestOutcome {
  std::vector<double> t_best;
  std::vector<double> t_worst;  // filled only when inferiority was evaluated
  ClaimKind claim = ClaimKind::none;
  int best_arm = -1;
  int worst_arm = -1;
  uint32_t new_drops = 0;
};

struct AnalysisRecord {
  int patient = 0;
  TestOutcome outcome;
  uint32_t dropped_after = 0;
};

struct TrialHistoryRecord {
  uint64_t seed = 0;
  std::vector<uint8_t> arm;          // per patient
  std::vector<uint8_t> outcome;      // 1 = success
  std::vector<double> alloc_probs;   // k entries per patient, flattened
  std::vector<AnalysisRecord> analyses;
  int stop_patient = 0;
  ClaimKind claim = ClaimKind::none;
  int claimed_best = -1;
  int claimed_worst = -1;
  uint32_t dropped = 0;
  TrialState final_state;
  std::vector<int> arm_counts;       // patients per arm at stop
};

// Allocation probabilities proportional to superiority probabilities;
// dropped arms get probability zero with renormalization.
std::vector<double> sbrar_probs(const TrialState& s, const PpsMethod& m, uint32_t dropped_mask = 0,
                                const SubsetTable* table = nullptr, LogBetaCachePtr cache = nullptr,
                                const uint64_t* rs_seed = nullptr);

// Variance scaling: t_j proportional to (pi_j * Var_j / (N_j + 1))^(1/m).
std::vector<double> tuned_probs(std::span<const double> raw, const TrialState& s,
                                std::span<const int> arm_counts, double m);

// One draw from each non-dropped arm's posterior; returns the argmax arm.
int posterior_draw_allocation(const TrialState& s, uint32_t dropped_mask, PhiloxStream& rng);

struct ClaimDecision {
  ClaimKind claim = ClaimKind::none;
  int best_arm = -1;
  int worst_arm = -1;
  uint32_t new_drops = 0;
  // Decision statistic the thresholds were compared against; with a common
  // threshold c the state claims superiority or inferiority iff frontier > c.
  double frontier = 0.0;
};

// Pure claim/drop rule given precomputed statistics.  t_worst may be empty
// unless the final composite test actually consults it; drop_q may be empty
// when no drop rule is configured.  c_sup/c_inf allow calibration to probe
// thresholds other than the design's.
ClaimDecision decide_claims(std::span<const double> t_best, std::span<const double> t_worst,
                            std::span<const double> post_mean, std::span<const double> drop_q,
                            const TrialDesign& d, double c_sup, double c_inf, uint32_t dropped,
                            bool is_final);

// Allocation vector from raw superiority probabilities: zero dropped arms,
// renormalize, then apply the design's tuning rule.
std::vector<double> allocation_from_raw(std::span<const double> raw, const TrialState& s,
                                        std::span<const int> arm_counts, uint32_t dropped,
                                        const TrialDesign& d);

// Test statistics and the resulting claim/drop decisions for one analysis.
TestOutcome evaluate_tests(const TrialState& s, const TrialDesign& d, uint32_t dropped,
                           bool is_final, const SubsetTable* table, LogBetaCachePtr cache,
                           uint64_t stat_seed);

TrialHistoryRecord simulate_trial(const TrialDesign& d, std::span<const double> true_p,
                                  uint64_t seed, LogBetaCachePtr cache = nullptr);

// Recomputes all analysis records from the recorded assignments/outcomes.
std::vector<AnalysisRecord> replay_statistics(const TrialDesign& d, const TrialHistoryRecord& rec,
                                              LogBetaCachePtr cache = nullptr);

// Per-analysis RS statistic substream id for a given replication seed.
uint64_t stat_stream_seed(uint64_t trial_seed, int patient, int salt);

LogBetaCachePtr make_design_cache(const TrialDesign& d);

}  // namespace brar
