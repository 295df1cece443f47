#include "brar/approx.hpp"

#include <algorithm>
#include <cmath>

#include "brar/errors.hpp"
#include "brar/parallel.hpp"
#include "brar/quadrature.hpp"
#include "brar/rng.hpp"

namespace brar {

GaussianMoments beta_moments(const TrialState& s) {
  validate_state(s);
  GaussianMoments m;
  m.mean.resize(s.k);
  m.var.resize(s.k);
  for (int j = 0; j < s.k; ++j) {
    const double a = s.a(j), b = s.b(j);
    const double t = a + b;
    m.mean[j] = a / t;
    m.var[j] = a * b / (t * t * (t + 1.0));
  }
  return m;
}

double pps_gaussian(const TrialState& s, int arm, const MvnOptions& opts) {
  validate_state(s);
  if (arm < 0 || arm >= s.k) throw DomainError("pps_gaussian: arm out of range");
  const GaussianMoments m = beta_moments(s);
  const int d = s.k - 1;
  std::vector<double> mean(d);
  std::vector<std::vector<double>> cov(d, std::vector<double>(d, m.var[arm]));
  int idx = 0;
  for (int j = 0; j < s.k; ++j) {
    if (j == arm) continue;
    mean[idx] = m.mean[j] - m.mean[arm];
    cov[idx][idx] = m.var[j] + m.var[arm];
    ++idx;
  }
  return mvn_cdf_at_origin(mean, cov, opts).value;
}

std::vector<double> pps_gaussian_all(const TrialState& s, const MvnOptions& opts) {
  std::vector<double> out(s.k);
  for (int j = 0; j < s.k; ++j) out[j] = pps_gaussian(s, j, opts);
  return out;
}

namespace {

constexpr long long kRsChunk = 4096;

void rs_chunk_counts(const TrialState& s, long long begin, long long end, uint64_t seed,
                     long long* counts) {
  const int k = s.k;
  for (long long t = begin; t < end; ++t) {
    PhiloxStream stream(seed, static_cast<uint64_t>(t));
    int best = 0;
    double best_v = -1.0;
    bool tie = false;
    for (int j = 0; j < k; ++j) {
      const double v = stream.next_beta(s.a(j), s.b(j));
      if (v > best_v) {
        best_v = v;
        best = j;
        tie = false;
      } else if (v == best_v) {
        tie = true;
      }
    }
    if (!tie) ++counts[best];
  }
}

}  // namespace

std::vector<double> rs_probs(const TrialState& s, long long draws, uint64_t seed, int threads) {
  validate_state(s);
  if (draws < 1) throw DomainError("rs_probs: draws must be >= 1");
  const int k = s.k;
  const long long chunks = (draws + kRsChunk - 1) / kRsChunk;
  std::vector<long long> counts(static_cast<size_t>(chunks) * k, 0);
  parallel_for(chunks, threads, [&](long long c) {
    const long long begin = c * kRsChunk;
    const long long end = std::min(draws, begin + kRsChunk);
    rs_chunk_counts(s, begin, end, seed, &counts[static_cast<size_t>(c) * k]);
  });
  std::vector<double> out(k, 0.0);
  for (long long c = 0; c < chunks; ++c)
    for (int j = 0; j < k; ++j) out[j] += static_cast<double>(counts[static_cast<size_t>(c) * k + j]);
  for (int j = 0; j < k; ++j) out[j] /= static_cast<double>(draws);
  return out;
}

double pps_repeated_sampling(const TrialState& s, int arm, long long draws, uint64_t seed) {
  if (arm < 0 || arm >= s.k) throw DomainError("pps_repeated_sampling: arm out of range");
  return rs_probs(s, draws, seed, 1)[arm];
}

NiResult pps_numeric_integration_full(const TrialState& s, int arm, double accuracy,
                                      const LogBetaCache* cache) {
  validate_state(s);
  if (arm < 0 || arm >= s.k) throw DomainError("pps_numeric_integration: arm out of range");
  if (!(accuracy > 0.0)) throw DomainError("pps_numeric_integration: accuracy must be positive");
  const double a = s.a(arm), b = s.b(arm);
  const double ln_b = cache ? (*cache)(s.a(arm), s.b(arm)) : log_beta(a, b);
  auto f = [&](double p) {
    if (p <= 0.0 || p >= 1.0) return 0.0;
    double ld = -ln_b;
    if (a != 1.0) ld += (a - 1.0) * std::log(p);
    if (b != 1.0) ld += (b - 1.0) * std::log1p(-p);
    double w = std::exp(ld);
    if (w == 0.0) return 0.0;
    for (int j = 0; j < s.k && w > 0.0; ++j) {
      if (j == arm) continue;
      w *= reg_inc_beta(p, s.a(j), s.b(j));
    }
    return w;
  };
  const QuadResult q = integrate_adaptive(f, 0.0, 1.0, accuracy, 100000);
  if (!q.converged)
    throw FeasibilityError("pps_numeric_integration: accuracy " + std::to_string(accuracy) +
                           " unreachable within subdivision cap (achieved " +
                           std::to_string(q.error) + "); relax the accuracy target");
  return {std::clamp(q.value, 0.0, 1.0), q.error};
}

double pps_numeric_integration(const TrialState& s, int arm, double accuracy,
                               const LogBetaCache* cache) {
  return pps_numeric_integration_full(s, arm, accuracy, cache).value;
}

double rs_error_bound(long long draws) {
  if (draws < 1) throw DomainError("rs_error_bound: draws must be >= 1");
  const double kd = static_cast<double>(draws);
  const double md = std::floor(kd / 2.0);
  return std::exp(std::lgamma(kd) - std::lgamma(md + 1.0) - std::lgamma(kd - md) -
                  kd * std::log(2.0));
}

double rs_mean_abs_error(double p, long long draws) {
  if (draws < 1) throw DomainError("rs_mean_abs_error: draws must be >= 1");
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("rs_mean_abs_error: p must lie in [0,1]");
  if (p == 0.0 || p == 1.0) return 0.0;
  const double kd = static_cast<double>(draws);
  const double l = std::floor(p * kd) + 1.0;
  const double ln_choose = std::lgamma(kd) - std::lgamma(l) - std::lgamma(kd - l + 1.0);
  return 2.0 * std::exp(ln_choose + l * std::log(p) + (kd - l + 1.0) * std::log1p(-p));
}

double ks_confidence_radius(long long draws, double q, double delta) {
  if (draws < 1) throw DomainError("ks_confidence_radius: draws must be >= 1");
  if (!(q > 0.0 && q < 1.0)) throw DomainError("ks_confidence_radius: q must lie in (0,1)");
  if (!(delta > 0.0)) throw DomainError("ks_confidence_radius: delta must be positive");
  if (delta >= 2.0) return 0.0;
  const double big_l =
      std::fabs(1.0 - 2.0 * q) < 1e-9 ? 2.0 : std::log((1.0 - q) / q) / (1.0 - 2.0 * q);
  return std::sqrt(std::log(2.0 / delta) / (static_cast<double>(draws) * big_l));
}

std::vector<double> pps_vector(const TrialState& s, const PpsMethod& m, const SubsetTable* table,
                               LogBetaCachePtr cache, const uint64_t* rs_seed) {
  switch (m.kind) {
    case PpsMethod::Kind::exact:
      if (table) {
        if (table->k() != s.k) throw DomainError("pps_vector: table arm count mismatch");
        return table->singletons();
      }
      return pps_all(s, std::move(cache));
    case PpsMethod::Kind::gaussian:
      return pps_gaussian_all(s, MvnOptions{m.mvn_accuracy, m.mvn_seed, 1 << 20});
    case PpsMethod::Kind::repeated_sampling:
      return rs_probs(s, m.rs_draws, rs_seed ? *rs_seed : m.rs_seed, 1);
    case PpsMethod::Kind::numeric_integration: {
      std::vector<double> out(s.k);
      for (int j = 0; j < s.k; ++j)
        out[j] = pps_numeric_integration(s, j, m.ni_accuracy, cache.get());
      return out;
    }
  }
  throw DomainError("pps_vector: unknown method");
}

std::vector<double> inferiority_vector(const TrialState& s, const PpsMethod& m,
                                       LogBetaCachePtr cache, const uint64_t* rs_seed) {
  return pps_vector(s.swapped(), m, nullptr, std::move(cache), rs_seed);
}

}  // namespace brar
