#pragma once

#include <cstdint>
#include <vector>

namespace brar {

struct MvnOptions {
  double accuracy = 1e-7;          // absolute error target (QMC tier)
  uint64_t seed = 0;               // QMC shift stream
  long long max_points = 1 << 20;  // lattice points per shift before giving up
};

struct MvnResult {
  double value = 0.0;
  double error = 0.0;       // estimated absolute error
  long long points = 0;     // lattice points used (0 for the closed tiers)
};

// P(X <= h, Y <= k) for standard bivariate normal with correlation rho.
// Deterministic quadrature, absolute error < 1e-13.
double bivariate_normal_cdf(double h, double k, double rho);

// P(Z <= 0) for Z ~ N(mean, cov).  d = 1 uses the normal CDF, d = 2 the
// deterministic bivariate rule, d >= 3 randomized QMC (Richtmyer lattice
// with random shifts; bitwise deterministic for a fixed seed).
MvnResult mvn_cdf_at_origin(const std::vector<double>& mean,
                            const std::vector<std::vector<double>>& cov,
                            const MvnOptions& opts = {});

}  // namespace brar
