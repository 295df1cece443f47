#pragma once

#include <cstdint>
#include <vector>

#include "brar/exact.hpp"
#include "brar/mvn.hpp"

namespace brar {

// Posterior-probability-of-superiority backend selector.
struct PpsMethod {
  enum class Kind { exact, gaussian, repeated_sampling, numeric_integration };
  Kind kind = Kind::exact;
  long long rs_draws = 10000;
  uint64_t rs_seed = 0;
  double ni_accuracy = 1e-7;
  double mvn_accuracy = 1e-7;
  uint64_t mvn_seed = 0;

  static PpsMethod exact() { return {}; }
  static PpsMethod gaussian(double accuracy = 1e-7) {
    return {Kind::gaussian, 10000, 0, 1e-7, accuracy, 0};
  }
  static PpsMethod repeated_sampling(long long draws, uint64_t seed = 0) {
    return {Kind::repeated_sampling, draws, seed, 1e-7, 1e-7, 0};
  }
  static PpsMethod numeric_integration(double accuracy = 1e-7) {
    return {Kind::numeric_integration, 10000, 0, accuracy, 1e-7, 0};
  }
};

struct GaussianMoments {
  std::vector<double> mean, var;
};
GaussianMoments beta_moments(const TrialState& s);

// Gaussian approximation: moment-matched normals, focal-vs-rest differences,
// MVN CDF at the origin.
double pps_gaussian(const TrialState& s, int arm, const MvnOptions& opts = {});
std::vector<double> pps_gaussian_all(const TrialState& s, const MvnOptions& opts = {});

// Repeated sampling: fraction of joint posterior draws where each arm is the
// strict maximum.  Draw t uses Philox substream (seed, t), so results are
// identical for any thread count.
std::vector<double> rs_probs(const TrialState& s, long long draws, uint64_t seed, int threads = 1);
double pps_repeated_sampling(const TrialState& s, int arm, long long draws, uint64_t seed);

struct NiResult {
  double value = 0.0;
  double error = 0.0;
};
NiResult pps_numeric_integration_full(const TrialState& s, int arm, double accuracy,
                                      const LogBetaCache* cache = nullptr);
double pps_numeric_integration(const TrialState& s, int arm, double accuracy = 1e-7,
                               const LogBetaCache* cache = nullptr);

// Distribution-free bound on E|RS estimate - P|.
double rs_error_bound(long long draws);
// Exact E|RS estimate - P| when the true probability is p.
double rs_mean_abs_error(double p, long long draws);
// Kearns-Saul concentration radius for a level-(1-delta) interval around a
// Monte-Carlo binary-proportion estimate with true probability q.
double ks_confidence_radius(long long draws, double q, double delta);

// All k superiority probabilities under the selected backend.  An existing
// table may be supplied for the exact backend; rs_seed_override replaces the
// method's stored RS seed when nonzero-flagged.
std::vector<double> pps_vector(const TrialState& s, const PpsMethod& m,
                               const SubsetTable* table = nullptr,
                               LogBetaCachePtr cache = nullptr, const uint64_t* rs_seed = nullptr);
// Same backend dispatch on the swapped state (is-worst probabilities).
std::vector<double> inferiority_vector(const TrialState& s, const PpsMethod& m,
                                       LogBetaCachePtr cache = nullptr,
                                       const uint64_t* rs_seed = nullptr);

}  // namespace brar
