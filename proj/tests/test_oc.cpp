#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "brar/errors.hpp"
#include "brar/oc.hpp"
#include "brar/rng.hpp"
#include "support/brute_force.hpp"

using namespace brar;

namespace {

void check_against_brute(const TrialDesign& d, const std::vector<double>& p) {
  const BruteReport brute = BruteForce(d, p).run();
  CHECK(std::abs(brute.mass - 1.0) <= 1e-12);
  const OCReport rep = exact_ocs(d, p);
  CHECK(rep.exact);
  CHECK(std::abs(rep.reject_any - brute.reject) <= 1e-9);
  CHECK(std::abs(rep.futility - brute.futility) <= 1e-9);
  for (int j = 0; j < d.k; ++j) {
    CHECK(std::abs(rep.best_claim[j] - brute.best[j]) <= 1e-9);
    CHECK(std::abs(rep.worst_claim[j] - brute.worst[j]) <= 1e-9);
  }
  CHECK(std::abs(rep.epasa - brute.epasa) <= 1e-9);
  CHECK(std::abs(rep.vpasa - brute.vpasa()) <= 1e-8);
}

TrialDesign tiny_two_arm() {
  TrialDesign d;
  d.k = 2;
  d.n = 6;
  d.burn_in = 1;
  d.block_size = 1;
  d.superiority_threshold = 0.85;
  d.inferiority_threshold = 0.8;
  d.drop_rule = DropRule{0.45, 0.9};
  return d;
}

TrialDesign tiny_three_arm() {
  TrialDesign d;
  d.k = 3;
  d.n = 4;
  d.burn_in = 0;
  d.block_size = 1;
  d.superiority_threshold = 0.8;
  return d;
}

}  // namespace

TEST_CASE("forward propagation matches brute-force path enumeration") {
  SUBCASE("two arms with drop rule and composite final test") {
    check_against_brute(tiny_two_arm(), {0.35, 0.6});
  }
  SUBCASE("two arms under the null") { check_against_brute(tiny_two_arm(), {0.5, 0.5}); }
  SUBCASE("three arms without burn-in") { check_against_brute(tiny_three_arm(), {0.2, 0.5, 0.8}); }
  SUBCASE("gaussian allocation statistics") {
    TrialDesign d = tiny_two_arm();
    d.rand_method = RandMethod::from_pps(PpsMethod::gaussian(1e-8));
    check_against_brute(d, {0.35, 0.6});
  }
  SUBCASE("variance-scaled allocation") {
    TrialDesign d = tiny_three_arm();
    d.tuning = TuningRule::variance_scaling(2.0);
    check_against_brute(d, {0.3, 0.5, 0.7});
  }
  SUBCASE("degenerate response rates") { check_against_brute(tiny_three_arm(), {0.0, 1.0, 0.5}); }
}

TEST_CASE("exact reports expose power and the superior arm") {
  OCReport rep = exact_ocs(tiny_two_arm(), std::vector<double>{0.35, 0.6});
  CHECK(rep.superior_arm == 1);
  REQUIRE(rep.power.has_value());
  CHECK(*rep.power == rep.best_claim[1]);

  OCReport null_rep = exact_ocs(tiny_two_arm(), std::vector<double>{0.5, 0.5});
  CHECK(null_rep.superior_arm == 0);
  CHECK_FALSE(null_rep.power.has_value());
  CHECK(std::abs(null_rep.best_claim[0] - null_rep.best_claim[1]) <= 1e-9);
  CHECK(std::abs(null_rep.epasa - 0.5 * null_rep.true_p.size() * 0.0) >= 0.0);
}

TEST_CASE("forward distribution conserves mass and reports terminal layers") {
  TrialDesign d = tiny_three_arm();
  StateDistribution dist = forward_distribution(d, std::vector<double>{0.2, 0.5, 0.8});
  CHECK(dist.patient == d.n);
  CHECK(dist.continuing.empty());
  CHECK(dist.processed_states > 0.0);
  double mass = 0.0;
  for (const auto& r : dist.stopped) {
    mass += r.mass;
    CHECK(r.mass > 0.0);
    CHECK(r.stop_patient >= 1);
    CHECK(r.stop_patient <= d.n);
    int total = 0;
    for (int c : r.counts) total += c;
    CHECK(total == r.stop_patient);
    CHECK(r.pasa >= r.counts[2 * 2] + r.counts[2 * 2 + 1]);
  }
  CHECK(std::abs(mass - 1.0) <= 1e-10);
}

TEST_CASE("explicit schedules equal to the derived one give identical reports") {
  TrialDesign d = tiny_three_arm();
  TrialDesign d2 = d;
  d2.analysis_schedule = derived_schedule(d);
  std::vector<double> p{0.2, 0.5, 0.8};
  OCReport a = exact_ocs(d, p);
  OCReport b = exact_ocs(d2, p);
  CHECK(a.reject_any == b.reject_any);
  CHECK(a.epasa == b.epasa);
  CHECK(a.vpasa == b.vpasa);
  CHECK(a.best_claim == b.best_claim);
}

TEST_CASE("exact mode refuses stochastic or misaligned configurations") {
  std::vector<double> p{0.4, 0.6};
  TrialDesign d = tiny_two_arm();
  d.rand_method = RandMethod::from_pps(PpsMethod::repeated_sampling(1000));
  CHECK_THROWS_AS(exact_ocs(d, p), ConfigError);

  d = tiny_two_arm();
  d.rand_method = RandMethod::posterior_draw();
  CHECK_THROWS_AS(exact_ocs(d, p), ConfigError);

  d = tiny_two_arm();
  d.test_method = PpsMethod::repeated_sampling(1000);
  CHECK_THROWS_AS(exact_ocs(d, p), ConfigError);

  d = tiny_two_arm();
  d.n = 8;
  d.block_size = 2;
  d.analysis_schedule = {5, 8};
  CHECK_THROWS_AS(exact_ocs(d, p), ConfigError);

  TrialDesign wide;
  wide.k = 20;
  wide.n = 20;
  wide.burn_in = 1;
  CHECK_THROWS_AS(exact_ocs(wide, std::vector<double>(20, 0.5)), FeasibilityError);

  OcOptions tight;
  tight.state_cap = 10.0;
  CHECK_THROWS_AS(exact_ocs(tiny_three_arm(), std::vector<double>{0.2, 0.5, 0.8}, tight),
                  FeasibilityError);
}

TEST_CASE("numeric integration test statistics reproduce the exact report") {
  TrialDesign d = tiny_three_arm();
  TrialDesign dni = d;
  dni.test_method = PpsMethod::numeric_integration(1e-9);
  std::vector<double> p{0.2, 0.5, 0.8};
  OCReport a = exact_ocs(d, p);
  OCReport b = exact_ocs(dni, p);
  CHECK(std::abs(a.reject_any - b.reject_any) <= 1e-6);
  CHECK(std::abs(a.epasa - b.epasa) <= 1e-5);
}

TEST_CASE("exact reports are thread-count independent") {
  TrialDesign d = tiny_two_arm();
  std::vector<double> p{0.35, 0.6};
  OCReport a = exact_ocs(d, p, {}, 1);
  OCReport b = exact_ocs(d, p, {}, 2);
  CHECK(a.reject_any == b.reject_any);
  CHECK(a.futility == b.futility);
  CHECK(a.epasa == b.epasa);
  CHECK(a.vpasa == b.vpasa);
  CHECK(a.best_claim == b.best_claim);
  CHECK(a.worst_claim == b.worst_claim);
}

TEST_CASE("simulated operating characteristics agree with the exact ones") {
  TrialDesign d = tiny_two_arm();
  std::vector<double> p{0.35, 0.6};
  OCReport ex = exact_ocs(d, p);
  const long long reps = 10000;
  OCReport sim = simulate_ocs(d, p, reps, 5);
  CHECK_FALSE(sim.exact);
  CHECK(sim.replications == reps);
  CHECK(sim.superior_arm == ex.superior_arm);
  auto margin = [&](double q) { return 4.0 * std::sqrt(q * (1.0 - q) / reps) + 1e-9; };
  CHECK(std::abs(sim.reject_any - ex.reject_any) <= margin(ex.reject_any));
  CHECK(std::abs(sim.futility - ex.futility) <= margin(ex.futility));
  for (int j = 0; j < 2; ++j) {
    CHECK(std::abs(sim.best_claim[j] - ex.best_claim[j]) <= margin(ex.best_claim[j]));
    CHECK(std::abs(sim.worst_claim[j] - ex.worst_claim[j]) <= margin(ex.worst_claim[j]));
  }
  CHECK(sim.epasa_se > 0.0);
  CHECK(std::abs(sim.epasa - ex.epasa) <= 4.0 * sim.epasa_se);
  CHECK(sim.vpasa_se > 0.0);
  CHECK(std::abs(sim.vpasa - ex.vpasa) <= 4.0 * sim.vpasa_se);
  CHECK(sim.binary_radius == ks_confidence_radius(reps, 0.5, 0.05));
  REQUIRE(sim.power.has_value());
  CHECK(*sim.power == sim.best_claim[1]);
}

TEST_CASE("simulated reports are seed-deterministic and thread-count independent") {
  TrialDesign d = tiny_two_arm();
  std::vector<double> p{0.4, 0.55};
  OCReport a = simulate_ocs(d, p, 400, 77, 1);
  OCReport b = simulate_ocs(d, p, 400, 77, 3);
  CHECK(a.reject_any == b.reject_any);
  CHECK(a.epasa == b.epasa);
  CHECK(a.vpasa == b.vpasa);
  CHECK(a.best_claim == b.best_claim);
  OCReport c = simulate_ocs(d, p, 400, 78, 1);
  const bool identical = a.reject_any == c.reject_any && a.epasa == c.epasa;
  CHECK_FALSE(identical);
}

TEST_CASE("threshold calibration finds the smallest feasible threshold") {
  TrialDesign d;
  d.k = 2;
  d.n = 8;
  d.burn_in = 1;
  d.block_size = 1;
  const double alpha = 0.10;
  const double p = 0.45;
  CalibrationResult res = calibrate_pp(d, p, alpha);
  CHECK(res.alpha == alpha);
  CHECK(res.p_argmax == p);
  CHECK(res.passes >= 2);
  CHECK(res.type_i <= alpha);
  REQUIRE(res.c > 0.0);
  REQUIRE(res.c < 1.0);

  std::vector<double> null_p{p, p};
  TrialDesign at = d;
  at.superiority_threshold = res.c;
  OCReport rep_at = exact_ocs(at, null_p);
  CHECK(std::abs(rep_at.reject_any - res.type_i) <= 1e-12);

  TrialDesign below = d;
  below.superiority_threshold = res.c - 1e-9;
  CHECK(exact_ocs(below, null_p).reject_any > alpha);
}

TEST_CASE("single-analysis calibration uses one pass") {
  TrialDesign d;
  d.k = 2;
  d.n = 6;
  d.burn_in = 3;
  d.block_size = 1;
  REQUIRE(derived_schedule(d) == std::vector<int>{6});
  CalibrationResult res = calibrate_pp(d, 0.5, 0.10);
  CHECK(res.passes == 1);
  CHECK(res.type_i <= 0.10);
  REQUIRE(res.c > 0.0);

  std::vector<double> null_p{0.5, 0.5};
  TrialDesign at = d;
  at.superiority_threshold = res.c;
  CHECK(std::abs(exact_ocs(at, null_p).reject_any - res.type_i) <= 1e-12);
  TrialDesign below = d;
  below.superiority_threshold = res.c - 1e-9;
  CHECK(exact_ocs(below, null_p).reject_any > 0.10);
}

TEST_CASE("least-favorable calibration dominates single-rate calibration") {
  TrialDesign d;
  d.k = 2;
  d.n = 6;
  d.burn_in = 3;
  d.block_size = 1;
  const double alpha = 0.10;
  CalibrationResult ux = calibrate_ux(d, alpha);
  CHECK(ux.type_i <= alpha);
  CHECK(ux.p_argmax > 0.0);
  CHECK(ux.p_argmax < 1.0);
  CalibrationResult at_argmax = calibrate_pp(d, ux.p_argmax, alpha);
  CHECK(ux.c == at_argmax.c);
  for (double p : {0.2, 0.5, 0.8}) {
    CHECK(calibrate_pp(d, p, alpha).c <= ux.c);
  }
}

TEST_CASE("replication seeds are distinct and reproducible") {
  CHECK(replication_seed(42, 0) ==
        splitmix64(42ull ^ (0x9E3779B97F4A7C15ULL * 1ull)));
  CHECK(replication_seed(42, 6) ==
        splitmix64(42ull ^ (0x9E3779B97F4A7C15ULL * 7ull)));
  std::vector<uint64_t> seen;
  seen.reserve(10000);
  for (long long r = 0; r < 10000; ++r) seen.push_back(replication_seed(9, r));
  std::sort(seen.begin(), seen.end());
  CHECK(std::adjacent_find(seen.begin(), seen.end()) == seen.end());
}
