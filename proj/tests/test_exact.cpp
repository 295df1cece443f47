#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "brar/approx.hpp"
#include "brar/errors.hpp"
#include "brar/exact.hpp"

using namespace brar;

namespace {

TrialState random_state(int k, int max_param, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> d(1, max_param);
  std::vector<int> x(2 * k);
  for (int& v : x) v = d(rng);
  return TrialState(k, std::move(x));
}

std::vector<Increment> random_path(int k, int len, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> arm(0, k - 1);
  std::uniform_int_distribution<int> slot(0, 1);
  std::vector<Increment> p(len);
  for (auto& inc : p) inc = {arm(rng), slot(rng)};
  return p;
}

}  // namespace

TEST_CASE("two arm closed form matches hand-derived values") {
  // P(Beta(2,1) > Beta(1,1)) = E[Beta(2,1)] = 2/3.
  CHECK(std::abs(pps_two_arm(1, 1, 2, 1) - 2.0 / 3.0) <= 1e-12);
  // P(Beta(1,1) > Beta(i,1)) = 1 - i/(i+1) = 1/(i+1).
  for (int i = 1; i <= 10; ++i) {
    CHECK(std::abs(pps_two_arm(i, 1, 1, 1) - 1.0 / (i + 1)) <= 1e-12);
  }
  // P(Beta(j,j) > Beta(i,1)) for small (i,j), integrated by hand.
  CHECK(std::abs(pps_two_arm(1, 1, 2, 2) - 0.5) <= 1e-12);
  CHECK(std::abs(pps_two_arm(2, 1, 2, 2) - 0.3) <= 1e-12);
  CHECK(std::abs(pps_two_arm(2, 1, 3, 3) - 2.0 / 7.0) <= 1e-12);
}

TEST_CASE("two arm complement identity") {
  std::mt19937_64 rng(7101);
  std::uniform_int_distribution<int> d(1, 80);
  for (int t = 0; t < 200; ++t) {
    int x0 = d(rng), x1 = d(rng), x2 = d(rng), x3 = d(rng);
    double fwd = pps_two_arm(x0, x1, x2, x3);
    double rev = pps_two_arm(x2, x3, x0, x1);
    CHECK(fwd >= 0.0);
    CHECK(fwd <= 1.0);
    CHECK(std::abs(fwd + rev - 1.0) <= 1e-11);
  }
}

TEST_CASE("two arm closed form agrees with numeric integration") {
  std::mt19937_64 rng(7102);
  for (int t = 0; t < 30; ++t) {
    TrialState s = random_state(2, 60, rng);
    double ex = pps_two_arm(s.x[0], s.x[1], s.x[2], s.x[3]);
    NiResult ni = pps_numeric_integration_full(s, 1, 1e-10);
    CHECK(std::abs(ex - ni.value) <= 1e-8);
  }
}

TEST_CASE("cache and cacheless two arm paths agree") {
  LogBetaCache cache(256);
  std::mt19937_64 rng(7103);
  std::uniform_int_distribution<int> d(1, 120);
  for (int t = 0; t < 100; ++t) {
    int x0 = d(rng), x1 = d(rng), x2 = d(rng), x3 = d(rng);
    CHECK(std::abs(pps_two_arm(x0, x1, x2, x3, &cache) - pps_two_arm(x0, x1, x2, x3)) <= 1e-13);
  }
}

TEST_CASE("subset table reproduces the uniform-prior success update") {
  SubsetTable t(2);
  CHECK(std::abs(t.singleton(0) - 0.5) <= 1e-12);
  CHECK(std::abs(t.singleton(1) - 0.5) <= 1e-12);
  t.apply_increment({0, 0});
  CHECK(std::abs(t.singleton(0) - 2.0 / 3.0) <= 1e-10);
  CHECK(std::abs(t.singleton(1) - 1.0 / 3.0) <= 1e-10);
  CHECK(std::abs(t.singleton_sum() - 1.0) <= 1e-10);
}

TEST_CASE("subset table singleton sum stays one along random paths") {
  for (int k = 2; k <= 5; ++k) {
    std::mt19937_64 rng(7200 + k);
    SubsetTable t(k);
    auto path = random_path(k, 300, rng);
    for (const auto& inc : path) {
      t.apply_increment(inc);
      CHECK(std::abs(t.singleton_sum() - 1.0) <= 1e-9);
    }
  }
}

TEST_CASE("an observation moves singleton probabilities in the right direction") {
  std::mt19937_64 rng(7201);
  for (int k = 2; k <= 4; ++k) {
    TrialState s = random_state(k, 12, rng);
    for (int arm = 0; arm < k; ++arm) {
      for (int slot = 0; slot <= 1; ++slot) {
        SubsetTable t = SubsetTable::at_state(s);
        std::vector<double> before = t.singletons();
        t.apply_increment({arm, slot});
        std::vector<double> after = t.singletons();
        for (int j = 0; j < k; ++j) {
          double delta = after[j] - before[j];
          bool up = (j == arm) == (slot == 0);
          if (up) {
            CHECK(delta >= -1e-12);
          } else {
            CHECK(delta <= 1e-12);
          }
        }
      }
    }
  }
}

TEST_CASE("subset table matches the two arm closed form") {
  std::mt19937_64 rng(7202);
  for (int t = 0; t < 40; ++t) {
    TrialState s = random_state(2, 50, rng);
    SubsetTable tab = SubsetTable::at_state(s);
    double closed0 = pps_two_arm(s.x[2], s.x[3], s.x[0], s.x[1]);
    CHECK(std::abs(tab.singleton(0) - closed0) <= 1e-10);
    CHECK(std::abs(tab.singleton(1) - (1.0 - closed0)) <= 1e-10);
  }
}

TEST_CASE("subset table matches numeric integration at three arms") {
  std::mt19937_64 rng(7203);
  for (int t = 0; t < 10; ++t) {
    TrialState s = random_state(3, 25, rng);
    SubsetTable tab = SubsetTable::at_state(s);
    for (int arm = 0; arm < 3; ++arm) {
      double ni = pps_numeric_integration(s, arm, 1e-9);
      CHECK(std::abs(tab.singleton(arm) - ni) <= 1e-6);
    }
  }
}

TEST_CASE("incrementing a table lands on the directly built state") {
  std::mt19937_64 rng(7204);
  for (int k = 2; k <= 4; ++k) {
    TrialState s = random_state(k, 20, rng);
    SubsetTable t = SubsetTable::at_state(s);
    std::uniform_int_distribution<int> arm(0, k - 1);
    std::uniform_int_distribution<int> slot(0, 1);
    TrialState target = s;
    for (int i = 0; i < 50; ++i) {
      Increment inc{arm(rng), slot(rng)};
      t.apply_increment(inc);
      target.x[2 * inc.arm + inc.slot] += 1;
    }
    SubsetTable direct = SubsetTable::at_state(target);
    for (int j = 0; j < k; ++j) {
      CHECK(std::abs(t.singleton(j) - direct.singleton(j)) <= 1e-9);
    }
  }
}

TEST_CASE("rebuild leaves the table values in place") {
  std::mt19937_64 rng(7205);
  SubsetTable t(3);
  for (const auto& inc : random_path(3, 120, rng)) t.apply_increment(inc);
  std::vector<double> before = t.singletons();
  uint64_t rebuilds = t.rebuild_count();
  t.rebuild();
  CHECK(t.rebuild_count() == rebuilds + 1);
  std::vector<double> after = t.singletons();
  for (int j = 0; j < 3; ++j) CHECK(std::abs(before[j] - after[j]) <= 1e-10);
  CHECK(t.max_drift_seen() <= 1e-8);
}

TEST_CASE("run_path emits the start state and every increment") {
  std::mt19937_64 rng(7206);
  TrialState s = random_state(3, 8, rng);
  auto path = random_path(3, 25, rng);
  auto rows = run_path(s, path);
  REQUIRE(rows.size() == path.size() + 1);
  SubsetTable start = SubsetTable::at_state(s);
  for (int j = 0; j < 3; ++j) CHECK(std::abs(rows[0][j] - start.singleton(j)) <= 1e-12);
  TrialState end = s;
  for (const auto& inc : path) end.x[2 * inc.arm + inc.slot] += 1;
  SubsetTable fin = SubsetTable::at_state(end);
  for (int j = 0; j < 3; ++j) CHECK(std::abs(rows.back()[j] - fin.singleton(j)) <= 1e-9);

  int calls = 0;
  run_path(s, path, [&](int step, std::span<const double> vals) {
    REQUIRE(vals.size() == 3);
    CHECK(step == calls);
    for (int j = 0; j < 3; ++j) CHECK(vals[j] == rows[calls][j]);
    ++calls;
  });
  CHECK(calls == static_cast<int>(rows.size()));
}

TEST_CASE("pps_single and pps_all agree with the table") {
  std::mt19937_64 rng(7207);
  TrialState s = random_state(4, 15, rng);
  SubsetTable tab = SubsetTable::at_state(s);
  auto all = pps_all(s);
  REQUIRE(all.size() == 4);
  double sum = 0.0;
  for (int arm = 0; arm < 4; ++arm) {
    CHECK(all[arm] == pps_single(s, arm));
    CHECK(std::abs(all[arm] - tab.singleton(arm)) <= 1e-12);
    sum += all[arm];
  }
  CHECK(std::abs(sum - 1.0) <= 1e-9);
}

TEST_CASE("inferiority is superiority on the swapped state") {
  std::mt19937_64 rng(7208);
  for (int k = 2; k <= 4; ++k) {
    TrialState s = random_state(k, 15, rng);
    auto inf = inferiority_all(s);
    auto sup_swapped = pps_all(s.swapped());
    REQUIRE(inf.size() == sup_swapped.size());
    for (int arm = 0; arm < k; ++arm) {
      CHECK(inf[arm] == sup_swapped[arm]);
      CHECK(inf[arm] == inferiority_pps(s, arm));
    }
  }
  // With two arms the worst arm is exactly the non-best arm.
  TrialState s2 = random_state(2, 30, rng);
  auto sup = pps_all(s2);
  auto inf = inferiority_all(s2);
  CHECK(std::abs(inf[0] - (1.0 - sup[0])) <= 1e-10);
  CHECK(std::abs(inf[1] - (1.0 - sup[1])) <= 1e-10);
}

TEST_CASE("state validation rejects malformed inputs") {
  CHECK_THROWS_AS(validate_state(TrialState(1, {1, 1})), DomainError);
  CHECK_THROWS_AS(validate_state(TrialState(2, {1, 1, 1})), DomainError);
  CHECK_THROWS_AS(validate_state(TrialState(2, {1, 0, 1, 1})), DomainError);
  CHECK_THROWS_AS(validate_state(TrialState(2, {1, -3, 1, 1})), DomainError);
  CHECK_NOTHROW(validate_state(TrialState(2, {1, 1, 1, 1})));
}
