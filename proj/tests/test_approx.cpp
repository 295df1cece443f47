#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "brar/approx.hpp"
#include "brar/exact.hpp"

using namespace brar;

namespace {

TrialState random_state(int k, int max_param, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> d(1, max_param);
  std::vector<int> x(2 * k);
  for (int& v : x) v = d(rng);
  return TrialState(k, std::move(x));
}

// Exact E|X/K - p| for X ~ Binomial(K, p), via the term recurrence.
double brute_binomial_mae(double p, int draws) {
  double q = 1.0 - p;
  double term = std::pow(q, draws);
  double sum = 0.0;
  for (int k = 0; k <= draws; ++k) {
    sum += term * std::abs(static_cast<double>(k) / draws - p);
    term *= static_cast<double>(draws - k) / (k + 1) * (p / q);
  }
  return sum;
}

}  // namespace

TEST_CASE("beta moments match the closed forms") {
  std::mt19937_64 rng(8101);
  for (int t = 0; t < 50; ++t) {
    TrialState s = random_state(3, 40, rng);
    GaussianMoments m = beta_moments(s);
    REQUIRE(m.mean.size() == 3);
    REQUIRE(m.var.size() == 3);
    for (int j = 0; j < 3; ++j) {
      double a = s.a(j), b = s.b(j);
      CHECK(std::abs(m.mean[j] - a / (a + b)) <= 1e-14);
      CHECK(std::abs(m.var[j] - a * b / ((a + b) * (a + b) * (a + b + 1))) <= 1e-16);
    }
  }
}

TEST_CASE("gaussian approximation respects symmetry") {
  TrialState s2(2, {5, 5, 5, 5});
  CHECK(std::abs(pps_gaussian(s2, 0) - 0.5) <= 1e-9);
  CHECK(std::abs(pps_gaussian(s2, 1) - 0.5) <= 1e-9);

  TrialState s3(3, {8, 8, 8, 8, 8, 8});
  MvnOptions opts{1e-6, 17, 1 << 20};
  auto all = pps_gaussian_all(s3, opts);
  REQUIRE(all.size() == 3);
  for (double v : all) CHECK(std::abs(v - 1.0 / 3.0) <= 1e-4);
}

TEST_CASE("gaussian approximation approaches the exact value at large counts") {
  TrialState s(2, {121, 281, 161, 241});
  double ex = pps_all(s)[1];
  double ga = pps_gaussian(s, 1);
  CHECK(std::abs(ga - ex) <= 5e-3);
}

TEST_CASE("repeated sampling is unbiased and thread-count independent") {
  std::mt19937_64 rng(8102);
  TrialState s = random_state(3, 20, rng);
  auto ex = pps_all(s);

  long long draws = 40000;
  auto one = rs_probs(s, draws, 99, 1);
  auto four = rs_probs(s, draws, 99, 4);
  REQUIRE(one.size() == 3);
  REQUIRE(four.size() == 3);
  for (int j = 0; j < 3; ++j) CHECK(one[j] == four[j]);

  double sum = 0.0;
  for (int j = 0; j < 3; ++j) {
    double se = std::sqrt(ex[j] * (1.0 - ex[j]) / draws);
    CHECK(std::abs(one[j] - ex[j]) <= 4.0 * se + 1e-12);
    sum += one[j];
  }
  CHECK(sum <= 1.0 + 1e-12);
  CHECK(pps_repeated_sampling(s, 1, draws, 99) == one[1]);

  auto other_seed = rs_probs(s, draws, 100, 1);
  bool identical = true;
  for (int j = 0; j < 3; ++j) identical = identical && other_seed[j] == one[j];
  CHECK_FALSE(identical);
}

TEST_CASE("numeric integration matches the closed form with an honest error") {
  std::mt19937_64 rng(8103);
  for (int t = 0; t < 20; ++t) {
    TrialState s = random_state(2, 40, rng);
    double ex = pps_two_arm(s.x[0], s.x[1], s.x[2], s.x[3]);
    NiResult ni = pps_numeric_integration_full(s, 1, 1e-10);
    CHECK(std::abs(ni.value - ex) <= 1e-8);
    CHECK(std::abs(ni.value - ex) <= 5.0 * ni.error + 1e-11);
    CHECK(ni.error >= 0.0);
    CHECK(pps_numeric_integration(s, 1, 1e-10) == ni.value);
  }
}

TEST_CASE("numeric integration sums to one across arms") {
  std::mt19937_64 rng(8104);
  TrialState s = random_state(4, 15, rng);
  double sum = 0.0;
  for (int arm = 0; arm < 4; ++arm) sum += pps_numeric_integration(s, arm, 1e-8);
  CHECK(std::abs(sum - 1.0) <= 1e-6);
}

TEST_CASE("repeated sampling error bound has the analytic value") {
  CHECK(std::abs(rs_error_bound(10000) - 0.0039893230696979) <= 0.01 * 0.0039893230696979);
  // The bound caps the exact mean absolute error at every p.
  for (long long draws : {100LL, 1000LL, 10000LL}) {
    double bound = rs_error_bound(draws);
    for (double p : {0.05, 0.2, 0.5, 0.8, 0.95}) {
      CHECK(rs_mean_abs_error(p, draws) <= bound + 1e-12);
    }
  }
  CHECK(rs_error_bound(40000) < rs_error_bound(10000));
}

TEST_CASE("repeated sampling mean absolute error matches brute force") {
  for (int draws : {5, 17, 50, 128, 200}) {
    for (double p : {0.05, 0.3, 0.5, 0.77}) {
      CHECK(std::abs(rs_mean_abs_error(p, draws) - brute_binomial_mae(p, draws)) <= 1e-12);
    }
  }
  CHECK(std::abs(rs_mean_abs_error(0.5, 10000) - 0.00398942) <= 1e-5);
  CHECK(rs_mean_abs_error(0.0, 1000) == 0.0);
  CHECK(rs_mean_abs_error(1.0, 1000) == 0.0);
}

TEST_CASE("confidence radius matches the half-coin closed form") {
  double r = ks_confidence_radius(100000, 0.5, 0.05);
  CHECK(std::abs(r - 0.004294694) <= 0.02 * 0.004294694);
  for (long long draws : {1000LL, 100000LL}) {
    for (double delta : {0.01, 0.05, 0.2}) {
      double expect = std::sqrt(std::log(2.0 / delta) / (2.0 * draws));
      CHECK(std::abs(ks_confidence_radius(draws, 0.5, delta) - expect) <= 1e-12);
    }
  }
  // Skewed coins concentrate faster than fair ones.
  CHECK(ks_confidence_radius(10000, 0.05, 0.05) < ks_confidence_radius(10000, 0.5, 0.05));
  CHECK(ks_confidence_radius(10000, 0.95, 0.05) < ks_confidence_radius(10000, 0.5, 0.05));
}

TEST_CASE("pps_vector dispatches to each backend") {
  std::mt19937_64 rng(8105);
  TrialState s = random_state(3, 18, rng);

  auto ex = pps_vector(s, PpsMethod::exact());
  auto direct = pps_all(s);
  REQUIRE(ex.size() == 3);
  for (int j = 0; j < 3; ++j) CHECK(ex[j] == direct[j]);

  SubsetTable table = SubsetTable::at_state(s);
  auto reused = pps_vector(s, PpsMethod::exact(), &table);
  for (int j = 0; j < 3; ++j) CHECK(reused[j] == table.singleton(j));

  auto ga = pps_vector(s, PpsMethod::gaussian(1e-5));
  auto ga_direct = pps_gaussian_all(s, MvnOptions{1e-5, 0, 1 << 20});
  for (int j = 0; j < 3; ++j) CHECK(ga[j] == ga_direct[j]);

  auto rs = pps_vector(s, PpsMethod::repeated_sampling(5000, 21));
  auto rs_direct = rs_probs(s, 5000, 21, 1);
  for (int j = 0; j < 3; ++j) CHECK(rs[j] == rs_direct[j]);

  uint64_t override_seed = 904;
  auto rs_over = pps_vector(s, PpsMethod::repeated_sampling(5000, 21), nullptr, nullptr, &override_seed);
  auto rs_over_direct = rs_probs(s, 5000, 904, 1);
  for (int j = 0; j < 3; ++j) CHECK(rs_over[j] == rs_over_direct[j]);

  auto ni = pps_vector(s, PpsMethod::numeric_integration(1e-8));
  for (int j = 0; j < 3; ++j) CHECK(std::abs(ni[j] - direct[j]) <= 1e-6);
}

TEST_CASE("inferiority_vector works on the swapped state") {
  std::mt19937_64 rng(8106);
  TrialState s = random_state(3, 18, rng);
  auto inf = inferiority_vector(s, PpsMethod::exact());
  auto sup = pps_all(s.swapped());
  REQUIRE(inf.size() == 3);
  for (int j = 0; j < 3; ++j) CHECK(inf[j] == sup[j]);

  auto inf_rs = inferiority_vector(s, PpsMethod::repeated_sampling(4000, 5));
  auto sup_rs = rs_probs(s.swapped(), 4000, 5, 1);
  for (int j = 0; j < 3; ++j) CHECK(inf_rs[j] == sup_rs[j]);
}
