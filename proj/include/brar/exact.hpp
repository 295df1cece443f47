#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "brar/special.hpp"

namespace brar {

// Joint posterior for k arms with Beta(x[2j], x[2j+1]) marginals: entry 2j
// holds prior a_j plus observed successes, entry 2j+1 prior b_j plus
// failures.  All entries are positive integers.
struct TrialState {
  int k = 0;
  std::vector<int> x;

  TrialState() = default;
  TrialState(int k_, std::vector<int> x_);
  static TrialState uniform_priors(int k);

  int a(int arm) const { return x[2 * arm]; }
  int b(int arm) const { return x[2 * arm + 1]; }
  // Slot-swapped copy: Beta(b_j, a_j) per arm, used for is-worst statistics.
  TrialState swapped() const;
};

void validate_state(const TrialState& s);

// One observation: slot 0 increments x[2*arm], slot 1 increments x[2*arm+1].
struct Increment {
  int arm = 0;
  int slot = 0;
};

// P(focal > opponent) for focal ~ Beta(x2, x3) and opponent ~ Beta(x0, x1),
// evaluated with the closed-form sum over whichever of the four equivalent
// representations has min(x0, x1, x2, x3) terms.
double pps_two_arm(int x0, int x1, int x2, int x3, const LogBetaCache* cache = nullptr);

// Table of P(x; S) over all nonempty arm subsets S, advanced one observation
// at a time.  After every 64 increments the singleton-sum invariant is
// checked; drift beyond 1e-6 triggers a rebuild from scratch.
class SubsetTable {
public:
  SubsetTable(int k, LogBetaCachePtr cache = nullptr);
  static SubsetTable at_state(const TrialState& s, LogBetaCachePtr cache = nullptr);

  void apply_increment(Increment inc);

  int k() const { return k_; }
  const TrialState& state() const { return state_; }
  double prob(uint32_t mask) const;
  double singleton(int arm) const { return probs_[uint32_t(1) << arm]; }
  std::vector<double> singletons() const;
  double singleton_sum() const;

  uint64_t rebuild_count() const { return rebuilds_; }
  double max_drift_seen() const { return max_drift_; }
  void rebuild();

private:
  void init_uniform();
  void advance_to(const TrialState& target);
  void increment_core(int arm, int slot);
  double lb(int a, int b) const;

  int k_ = 0;
  uint32_t full_ = 0;
  TrialState state_;
  LogBetaCachePtr cache_;
  std::vector<double> probs_;
  std::vector<int> sum_a_, sum_b_;
  std::vector<uint32_t> order_;  // masks with 1 <= popcount < k, size ascending
  int since_check_ = 0;
  double max_drift_ = 0.0;
  uint64_t rebuilds_ = 0;
};

SubsetTable subset_table_uniform(int k, LogBetaCachePtr cache = nullptr);

// Emits the k singleton probabilities at the start state and after every
// increment: emit(step, values) with step 0..path.size().
void run_path(const TrialState& start, std::span<const Increment> path,
              const std::function<void(int, std::span<const double>)>& emit,
              LogBetaCachePtr cache = nullptr);
std::vector<std::vector<double>> run_path(const TrialState& start, std::span<const Increment> path,
                                          LogBetaCachePtr cache = nullptr);

// P(arm has the largest mean response).
double pps_single(const TrialState& s, int arm, LogBetaCachePtr cache = nullptr);
std::vector<double> pps_all(const TrialState& s, LogBetaCachePtr cache = nullptr);

// P(arm has the smallest mean response): superiority on the swapped state.
double inferiority_pps(const TrialState& s, int arm, LogBetaCachePtr cache = nullptr);
std::vector<double> inferiority_all(const TrialState& s, LogBetaCachePtr cache = nullptr);

}  // namespace brar
