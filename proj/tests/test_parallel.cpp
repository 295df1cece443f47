#include "doctest.h"

#include <atomic>
#include <stdexcept>
#include <vector>

#include "brar/approx.hpp"
#include "brar/oc.hpp"
#include "brar/parallel.hpp"

using namespace brar;

TEST_CASE("hardware_threads reports at least one thread") {
  CHECK(hardware_threads() >= 1);
}

TEST_CASE("parallel_for visits every index exactly once") {
  for (int threads : {1, 0, 4}) {
    std::vector<std::atomic<int>> hits(257);
    for (auto& h : hits) h = 0;
    parallel_for(static_cast<long long>(hits.size()), threads,
                 [&](long long i) { hits[static_cast<size_t>(i)] += 1; });
    for (const auto& h : hits) CHECK(h == 1);
  }
  // Empty and single-element ranges.
  int calls = 0;
  parallel_for(0, 0, [&](long long) { ++calls; });
  CHECK(calls == 0);
  parallel_for(1, 0, [&](long long) { ++calls; });
  CHECK(calls == 1);
}

TEST_CASE("parallel_for rethrows a worker exception") {
  for (int threads : {1, 0}) {
    try {
      parallel_for(64, threads, [&](long long i) {
        if (i == 13) throw std::runtime_error("boom");
      });
      FAIL("expected an exception");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()) == "boom");
    }
  }
}

TEST_CASE("serial and parallel paths produce identical numbers") {
  TrialState s(4, {7, 3, 5, 5, 2, 8, 6, 4});
  auto serial = rs_probs(s, 20000, 31, 1);
  auto parallel = rs_probs(s, 20000, 31, 0);
  CHECK(serial == parallel);

  TrialDesign d;
  d.k = 2;
  d.n = 10;
  d.burn_in = 1;
  d.block_size = 1;
  d.superiority_threshold = 0.9;
  std::vector<double> p{0.35, 0.6};
  OCReport ex1 = exact_ocs(d, p, {}, 1);
  OCReport ex0 = exact_ocs(d, p, {}, 0);
  CHECK(ex1.reject_any == ex0.reject_any);
  CHECK(ex1.epasa == ex0.epasa);
  CHECK(ex1.vpasa == ex0.vpasa);
  CHECK(ex1.best_claim == ex0.best_claim);

  OCReport s1 = simulate_ocs(d, p, 300, 17, 1);
  OCReport s0 = simulate_ocs(d, p, 300, 17, 0);
  CHECK(s1.reject_any == s0.reject_any);
  CHECK(s1.epasa == s0.epasa);
  CHECK(s1.vpasa == s0.vpasa);
  CHECK(s1.best_claim == s0.best_claim);
}
