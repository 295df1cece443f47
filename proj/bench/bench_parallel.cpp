#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "brar/approx.hpp"
#include "brar/exact.hpp"
#include "brar/oc.hpp"
#include "brar/parallel.hpp"
#include "brar/trial.hpp"

// Compares the serial reference path (threads = 1) against the OpenMP path
// (threads = 0, all cores) on the three parallel kernels.  Both paths must
// produce bitwise identical results; any mismatch fails the run.

namespace {

using namespace brar;

template <class Fn>
double time_call(Fn&& fn) {
  auto t0 = std::chrono::steady_clock::now();
  fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

TrialState balanced_state(int k, int n) {
  std::vector<int> x(2 * k, 1);
  std::vector<int> cnt(k, 0);
  for (int i = 0; i < n; ++i) {
    int arm = i % k;
    x[2 * arm + cnt[arm] % 2] += 1;
    cnt[arm] += 1;
  }
  return TrialState(k, x);
}

bool same_vec(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (std::memcmp(&a[i], &b[i], sizeof(double)) != 0) return false;
  return true;
}

bool same_report(const OCReport& a, const OCReport& b) {
  return a.exact == b.exact && a.reject_any == b.reject_any && same_vec(a.best_claim, b.best_claim) &&
         same_vec(a.worst_claim, b.worst_claim) && a.futility == b.futility && a.epasa == b.epasa &&
         a.vpasa == b.vpasa && a.power.has_value() == b.power.has_value() &&
         (!a.power || *a.power == *b.power);
}

int report_row(const char* name, double serial_s, double parallel_s, bool match) {
  std::printf("%-18s %12.4fs %12.4fs %8.2fx   %s\n", name, serial_s, parallel_s,
              parallel_s > 0 ? serial_s / parallel_s : 0.0, match ? "identical" : "MISMATCH");
  return match ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  bool smoke = false;
  for (int i = 1; i < argc; ++i)
    if (std::strcmp(argv[i], "--smoke") == 0) smoke = true;

  std::printf("parallel kernels, %d hardware thread(s)%s\n", hardware_threads(),
              smoke ? " (smoke sizes)" : "");
  std::printf("%-18s %13s %13s %9s\n", "kernel", "serial", "parallel", "speedup");
  int failures = 0;

  {
    TrialState s = balanced_state(4, smoke ? 40 : 400);
    long long draws = smoke ? 20000 : 2000000;
    std::vector<double> serial, parallel;
    double ts = time_call([&] { serial = rs_probs(s, draws, 7u, 1); });
    double tp = time_call([&] { parallel = rs_probs(s, draws, 7u, 0); });
    failures += report_row("rs_probs", ts, tp, same_vec(serial, parallel));
  }

  {
    TrialDesign d;
    d.k = 3;
    d.n = smoke ? 30 : 60;
    d.burn_in = 2;
    d.block_size = 2;
    d.superiority_threshold = 0.95;
    validate_design(d);
    std::vector<double> p{0.3, 0.4, 0.5};
    long long reps = smoke ? 200 : 4000;
    OCReport serial, parallel;
    double ts = time_call([&] { serial = simulate_ocs(d, p, reps, 11u, 1); });
    double tp = time_call([&] { parallel = simulate_ocs(d, p, reps, 11u, 0); });
    bool ok = same_report(serial, parallel) && serial.epasa_se == parallel.epasa_se &&
              serial.vpasa_se == parallel.vpasa_se;
    failures += report_row("simulate_ocs", ts, tp, ok);
  }

  {
    TrialDesign d;
    d.k = 2;
    d.n = smoke ? 24 : 80;
    d.burn_in = 2;
    d.block_size = 2;
    d.superiority_threshold = 0.95;
    validate_design(d);
    std::vector<double> p{0.3, 0.5};
    OCReport serial, parallel;
    double ts = time_call([&] { serial = exact_ocs(d, p, {}, 1); });
    double tp = time_call([&] { parallel = exact_ocs(d, p, {}, 0); });
    failures += report_row("exact_ocs", ts, tp, same_report(serial, parallel));
  }

  if (failures) {
    std::printf("%d kernel(s) disagree between the serial and parallel paths\n", failures);
    return 1;
  }
  std::printf("all kernels agree\n");
  return 0;
}
