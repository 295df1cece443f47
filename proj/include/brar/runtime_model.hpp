#pragma once

#include <map>
#include <string>
#include <vector>

namespace brar {

struct BenchRow {
  std::string study;   // "single" or "trial"
  std::string method;  // exact | ga | rs | ni
  int k = 2;
  int n = 0;
  int burn_in = 0;
  int block_size = 1;
  double param = 0.0;  // draws (rs) or accuracy (ni)
  int repetitions = 0;
  double median_seconds = 0.0;
  double max_seconds = 0.0;
};

// Per-method runtime laws fitted from trial benchmarks:
//   exact: n * f_exact(k)        (cost per patient)
//   ga:    updates * f_ga(k)     (cost per allocation/test update)
//   rs:    updates * draws * c_rs
struct RuntimeModel {
  std::map<int, double> f_exact;
  std::map<int, double> f_ga;
  double c_rs = 0.0;
  double exact_log_slope = 0.0;      // affine fit of ln f_exact(k) against k
  double exact_log_intercept = 0.0;
  double exact_log_r2 = 0.0;
  std::string provenance;
};

RuntimeModel fit_runtime_model(const std::vector<BenchRow>& rows, const std::string& provenance);

int updates_per_trial(int n, int k, int burn_in, int block_size);

// Predicted seconds for one trial; draws is used by the rs law only.
double predict_seconds(const RuntimeModel& m, const std::string& method, int k, int n, int burn_in,
                       int block_size, long long draws);

enum class Priority { accuracy, mixed, computation };

// Method guidance by arm-count band, analysis frequency, burn-in length and
// stated priority.  Returns "Exact", "GA", "RS", "Exact/GA" or "Exact/RS".
std::string recommend_method(int k, bool frequent_analyses, bool longer_burn_in,
                             Priority priority);

// Design-card mapping: analyses are frequent when block_size <= 5; burn-in is
// shorter when k * burn_in <= n / 8.
bool card_frequent_analyses(int block_size);
bool card_longer_burn_in(int k, int burn_in, int n);

}  // namespace brar
