#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "brar/trial.hpp"

namespace brar {

struct OcOptions {
  double state_cap = 5e7;  // cumulative weighted states before exact mode refuses
  double delta = 0.05;     // confidence level parameter for simulated-mode radii
};

struct WeightedState {
  std::vector<int> counts;  // successes, failures per arm (2k, priors excluded)
  uint32_t dropped = 0;
  double mass = 0.0;
};

struct TerminalRecord {
  std::vector<int> counts;
  uint32_t dropped = 0;
  double mass = 0.0;
  int stop_patient = 0;
  ClaimKind claim = ClaimKind::none;
  int best_arm = -1;
  int worst_arm = -1;
  // Patients credited to the true superior arm: those enrolled on it, plus the
  // unenrolled remainder when the stopping analysis put that arm's superiority
  // statistic over the threshold.
  int pasa = 0;
};

// Full distribution at trial end: terminal mass plus (for diagnostics) the
// layer the propagation stopped at.
struct StateDistribution {
  int patient = 0;
  std::vector<WeightedState> continuing;  // nonempty only if propagation was cut short
  std::vector<TerminalRecord> stopped;
  double processed_states = 0.0;
};

struct OCReport {
  bool exact = true;
  int k = 0;
  std::vector<double> true_p;
  double reject_any = 0.0;
  std::vector<double> best_claim;   // per arm: P(trial claims arm is best)
  std::vector<double> worst_claim;  // per arm: P(trial claims arm is worst)
  double futility = 0.0;
  double epasa = 0.0;
  double vpasa = 0.0;
  int superior_arm = 0;  // lowest-index argmax of true_p
  std::optional<double> power;  // defined when the scenario has a unique best or worst arm
  // simulated mode only
  long long replications = 0;
  double binary_radius = 0.0;  // Kearns-Saul radius at q = 1/2
  double epasa_se = 0.0;
  double vpasa_se = 0.0;
};

// Exact distribution of trial outcomes via layer-by-layer propagation.
// Requires deterministic randomization and test backends (exact or gaussian).
StateDistribution forward_distribution(const TrialDesign& d, std::span<const double> true_p,
                                       const OcOptions& opts = {}, int threads = 1);

OCReport exact_ocs(const TrialDesign& d, std::span<const double> true_p,
                   const OcOptions& opts = {}, int threads = 1);

struct CalibrationResult {
  double c = 1.0;
  double type_i = 0.0;   // achieved type-I error at c
  double alpha = 0.0;
  double p_argmax = 0.0; // UX: least favorable null response rate
  int passes = 0;        // forward passes performed
};

// Smallest threshold with type-I error <= alpha under Bernoulli(p) responses
// on all arms.  Applies to both superiority and (when configured)
// inferiority thresholds.
CalibrationResult calibrate_pp(const TrialDesign& d, double p, double alpha,
                               const OcOptions& opts = {}, int threads = 1);
// Worst case of calibrate_pp over a response-rate grid (step 0.01, refined to
// 0.001 around the argmax).
CalibrationResult calibrate_ux(const TrialDesign& d, double alpha, const OcOptions& opts = {},
                               int threads = 1);

OCReport simulate_ocs(const TrialDesign& d, std::span<const double> true_p,
                      long long replications, uint64_t master_seed, int threads = 1,
                      const OcOptions& opts = {});

uint64_t replication_seed(uint64_t master_seed, long long replication);

}  // namespace brar
