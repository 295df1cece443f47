#include "brar/runtime_model.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "brar/errors.hpp"

namespace brar {

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

int updates_per_trial(int n, int k, int burn_in, int block_size) {
  if (n < 0 || k < 1 || burn_in < 0 || block_size < 1)
    throw DomainError("updates_per_trial: invalid design parameters");
  const int adaptive = n - k * burn_in;
  if (adaptive <= 0) return 0;
  return (adaptive + block_size - 1) / block_size;
}

RuntimeModel fit_runtime_model(const std::vector<BenchRow>& rows, const std::string& provenance) {
  std::map<int, std::vector<double>> per_patient, per_update;
  std::vector<double> per_draw;
  for (const BenchRow& r : rows) {
    if (r.study != "trial" || r.median_seconds <= 0.0) continue;
    const int updates = updates_per_trial(r.n, r.k, r.burn_in, r.block_size);
    if (r.method == "exact" && r.n > 0) {
      per_patient[r.k].push_back(r.median_seconds / r.n);
    } else if (r.method == "ga" && updates > 0) {
      per_update[r.k].push_back(r.median_seconds / updates);
    } else if (r.method == "rs" && updates > 0 && r.param > 0.0) {
      per_draw.push_back(r.median_seconds / (updates * r.param));
    }
  }
  RuntimeModel m;
  m.provenance = provenance;
  for (auto& [k, v] : per_patient) m.f_exact[k] = median(std::move(v));
  for (auto& [k, v] : per_update) m.f_ga[k] = median(std::move(v));
  if (!per_draw.empty()) m.c_rs = median(std::move(per_draw));
  if (m.f_exact.size() < 2)
    throw DomainError("fit_runtime_model: need exact-method timings at two or more arm counts");

  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double cnt = static_cast<double>(m.f_exact.size());
  for (const auto& [k, f] : m.f_exact) {
    const double x = k, y = std::log(f);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double det = cnt * sxx - sx * sx;
  m.exact_log_slope = (cnt * sxy - sx * sy) / det;
  m.exact_log_intercept = (sy - m.exact_log_slope * sx) / cnt;
  double ss_res = 0.0, ss_tot = 0.0;
  const double ybar = sy / cnt;
  for (const auto& [k, f] : m.f_exact) {
    const double y = std::log(f);
    const double yhat = m.exact_log_intercept + m.exact_log_slope * k;
    ss_res += (y - yhat) * (y - yhat);
    ss_tot += (y - ybar) * (y - ybar);
  }
  m.exact_log_r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return m;
}

double predict_seconds(const RuntimeModel& m, const std::string& method, int k, int n, int burn_in,
                       int block_size, long long draws) {
  const int updates = updates_per_trial(n, k, burn_in, block_size);
  if (method == "exact") {
    auto it = m.f_exact.find(k);
    double f;
    if (it != m.f_exact.end()) {
      f = it->second;
    } else if (m.exact_log_slope != 0.0 || m.exact_log_intercept != 0.0) {
      f = std::exp(m.exact_log_intercept + m.exact_log_slope * k);
    } else {
      throw DomainError("predict_seconds: no exact-method constant for this arm count");
    }
    return n * f;
  }
  if (method == "ga") {
    auto it = m.f_ga.find(k);
    if (it == m.f_ga.end())
      throw DomainError("predict_seconds: no ga constant for this arm count");
    return updates * it->second;
  }
  if (method == "rs") {
    if (m.c_rs <= 0.0) throw DomainError("predict_seconds: no rs constant fitted");
    if (draws < 1) throw DomainError("predict_seconds: rs prediction needs a draw count");
    return static_cast<double>(updates) * static_cast<double>(draws) * m.c_rs;
  }
  throw DomainError("predict_seconds: unknown method '" + method + "'");
}

std::string recommend_method(int k, bool frequent_analyses, bool longer_burn_in,
                             Priority priority) {
  if (k < 2) throw DomainError("recommend_method: k must be >= 2");
  const int band = k <= 7 ? 0 : k <= 12 ? 1 : 2;
  const int col = (frequent_analyses ? 2 : 0) + (longer_burn_in ? 0 : 1);
  if (priority == Priority::accuracy) return "Exact";
  static const char* mix[3][4] = {
      {"GA", "Exact", "Exact", "Exact"},
      {"RS", "Exact", "Exact", "Exact"},
      {"RS", "RS", "RS", "Exact/RS"},
  };
  static const char* comp[3][4] = {
      {"GA", "Exact/GA", "Exact/GA", "Exact"},
      {"RS", "Exact/RS", "Exact/RS", "Exact"},
      {"RS", "RS", "RS", "RS"},
  };
  return priority == Priority::mixed ? mix[band][col] : comp[band][col];
}

bool card_frequent_analyses(int block_size) {
  if (block_size < 1) throw DomainError("card_frequent_analyses: block size must be >= 1");
  return block_size <= 5;
}

bool card_longer_burn_in(int k, int burn_in, int n) {
  if (k < 1 || burn_in < 0 || n < 1) throw DomainError("card_longer_burn_in: invalid design");
  return k * burn_in > n / 8.0;
}

}  // namespace brar
