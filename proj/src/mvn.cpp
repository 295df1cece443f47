#include "brar/mvn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "brar/errors.hpp"
#include "brar/quadrature.hpp"
#include "brar/rng.hpp"
#include "brar/special.hpp"

namespace brar {

double bivariate_normal_cdf(double h, double k, double rho) {
  if (!(rho >= -1.0 && rho <= 1.0)) throw DomainError("bivariate_normal_cdf: |rho| must be <= 1");
  if (std::isnan(h) || std::isnan(k)) throw DomainError("bivariate_normal_cdf: NaN bound");
  if (rho == 1.0) return std_normal_cdf(std::min(h, k));
  if (rho == -1.0) return std::max(0.0, std_normal_cdf(h) + std_normal_cdf(k) - 1.0);
  const double base = std_normal_cdf(h) * std_normal_cdf(k);
  if (rho == 0.0) return base;
  const double asr = std::asin(rho);
  auto integrand = [h, k](double theta) {
    const double sn = std::sin(theta);
    const double cs2 = std::cos(theta) * std::cos(theta);
    if (cs2 <= 0.0) return 0.0;
    return std::exp(-(h * h + k * k - 2.0 * h * k * sn) / (2.0 * cs2));
  };
  QuadResult q = integrate_adaptive(integrand, 0.0, asr, 5e-15, 4000);
  const double val = base + q.value / (2.0 * M_PI);
  return std::clamp(val, 0.0, 1.0);
}

namespace {

constexpr int kPrimes[] = {2,   3,   5,   7,   11,  13,  17,  19,  23,  29,  31,  37,  41,
                           43,  47,  53,  59,  61,  67,  71,  73,  79,  83,  89,  97,  101,
                           103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167,
                           173, 179, 181, 191, 193, 197, 199, 211, 223, 227, 229};
constexpr int kNumPrimes = static_cast<int>(sizeof(kPrimes) / sizeof(kPrimes[0]));

// Lower-triangular Cholesky with tolerance for semidefinite matrices.
std::vector<double> cholesky_lower(const std::vector<std::vector<double>>& a, int d) {
  std::vector<double> l(static_cast<size_t>(d) * d, 0.0);
  double scale = 0.0;
  for (int i = 0; i < d; ++i) scale = std::max(scale, std::fabs(a[i][i]));
  const double tol = 1e-12 * std::max(scale, 1.0);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = a[i][j];
      for (int p = 0; p < j; ++p) s -= l[i * d + p] * l[j * d + p];
      if (i == j) {
        if (s < -tol) throw DomainError("mvn_cdf_at_origin: covariance is not positive semidefinite");
        l[i * d + i] = s > tol ? std::sqrt(s) : 0.0;
      } else {
        l[i * d + j] = l[j * d + j] > 0.0 ? s / l[j * d + j] : 0.0;
      }
    }
  }
  return l;
}

// Genz sequential-conditioning integrand for one lattice point w in [0,1)^(d-1).
double genz_point(const std::vector<double>& l, const std::vector<double>& b, int d,
                  const double* w, double* y) {
  double prod;
  {
    const double l00 = l[0];
    if (l00 > 0.0)
      prod = std_normal_cdf(b[0] / l00);
    else
      prod = b[0] >= 0.0 ? 1.0 : 0.0;
  }
  double e_prev = prod;
  for (int i = 1; i < d; ++i) {
    const double arg = std::clamp(e_prev * w[i - 1], 1e-300, 1.0 - 1e-16);
    y[i - 1] = std_normal_quantile(arg);
    double t = b[i];
    for (int j = 0; j < i; ++j) t -= l[i * d + j] * y[j];
    const double lii = l[i * d + i];
    double e;
    if (lii > 0.0)
      e = std_normal_cdf(t / lii);
    else
      e = t >= 0.0 ? 1.0 : 0.0;
    prod *= e;
    if (prod <= 0.0) return 0.0;
    e_prev = e;
  }
  return prod;
}

}  // namespace

MvnResult mvn_cdf_at_origin(const std::vector<double>& mean,
                            const std::vector<std::vector<double>>& cov, const MvnOptions& opts) {
  const int d = static_cast<int>(mean.size());
  if (d < 1) throw DomainError("mvn_cdf_at_origin: dimension must be >= 1");
  if (static_cast<int>(cov.size()) != d)
    throw DomainError("mvn_cdf_at_origin: covariance size mismatch");
  for (const auto& row : cov)
    if (static_cast<int>(row.size()) != d)
      throw DomainError("mvn_cdf_at_origin: covariance size mismatch");
  for (int i = 0; i < d; ++i) {
    if (!(cov[i][i] > 0.0)) throw DomainError("mvn_cdf_at_origin: diagonal must be positive");
    for (int j = 0; j < i; ++j)
      if (std::fabs(cov[i][j] - cov[j][i]) > 1e-9 * std::max(1.0, std::fabs(cov[i][j])))
        throw DomainError("mvn_cdf_at_origin: covariance must be symmetric");
  }

  if (d == 1) return {std_normal_cdf(-mean[0] / std::sqrt(cov[0][0])), 1e-15, 0};
  if (d == 2) {
    const double s0 = std::sqrt(cov[0][0]), s1 = std::sqrt(cov[1][1]);
    double rho = cov[0][1] / (s0 * s1);
    rho = std::clamp(rho, -1.0, 1.0);
    return {bivariate_normal_cdf(-mean[0] / s0, -mean[1] / s1, rho), 1e-13, 0};
  }

  if (d - 1 > kNumPrimes) throw DomainError("mvn_cdf_at_origin: dimension too large");

  // Sort variables by b_i / sigma_i ascending; tightest constraints first.
  std::vector<int> perm(d);
  std::iota(perm.begin(), perm.end(), 0);
  std::sort(perm.begin(), perm.end(), [&](int i, int j) {
    return -mean[i] / std::sqrt(cov[i][i]) < -mean[j] / std::sqrt(cov[j][j]);
  });
  std::vector<double> b(d);
  std::vector<std::vector<double>> c(d, std::vector<double>(d));
  for (int i = 0; i < d; ++i) {
    b[i] = -mean[perm[i]];
    for (int j = 0; j < d; ++j) c[i][j] = cov[perm[i]][perm[j]];
  }
  const std::vector<double> l = cholesky_lower(c, d);

  const int shifts = 12;
  std::vector<double> q(d - 1), shift(static_cast<size_t>(shifts) * (d - 1));
  for (int i = 0; i < d - 1; ++i) {
    const double s = std::sqrt(static_cast<double>(kPrimes[i]));
    q[i] = s - std::floor(s);
  }
  PhiloxStream rng(opts.seed, 0x6D766E5348494654ULL);
  for (double& s : shift) s = rng.next_double();

  std::vector<long double> sums(shifts, 0.0L);
  std::vector<double> w(d - 1), y(d - 1);
  long long done = 0;
  long long batch = 256;
  double est = 0.0, err = 0.0;
  while (true) {
    for (long long t = done + 1; t <= done + batch; ++t) {
      for (int m = 0; m < shifts; ++m) {
        const double* sh = &shift[static_cast<size_t>(m) * (d - 1)];
        for (int i = 0; i < d - 1; ++i) {
          double v = t * q[i] + sh[i];
          v -= std::floor(v);
          w[i] = std::fabs(2.0 * v - 1.0);  // baker's transform
        }
        sums[m] += genz_point(l, b, d, w.data(), y.data());
      }
    }
    done += batch;
    long double mean_of_means = 0.0L;
    for (int m = 0; m < shifts; ++m) mean_of_means += sums[m] / done;
    mean_of_means /= shifts;
    long double var = 0.0L;
    for (int m = 0; m < shifts; ++m) {
      const long double dm = sums[m] / done - mean_of_means;
      var += dm * dm;
    }
    var /= (shifts - 1);
    est = static_cast<double>(mean_of_means);
    err = 3.0 * std::sqrt(static_cast<double>(var) / shifts);
    if (err <= opts.accuracy) return {std::clamp(est, 0.0, 1.0), err, done};
    if (done >= opts.max_points) break;
    batch = done;  // double the lattice each round
  }
  char msg[160];
  std::snprintf(msg, sizeof(msg),
                "mvn_cdf_at_origin: accuracy %g unreachable within %lld lattice points "
                "(achieved %g); raise max_points or relax accuracy",
                opts.accuracy, opts.max_points, err);
  throw FeasibilityError(msg);
}

}  // namespace brar
