#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "brar/trial.hpp"

namespace brar {

struct OcConfig {
  std::string mode = "auto";  // exact | simulate | auto
  double state_cap = 5e7;
  double delta = 0.05;
};

struct CalibrateConfig {
  std::string kind = "pp";  // pp | ux
  double alpha = 0.05;
  double p = 0.5;
};

struct BenchConfig {
  std::string study = "trial";  // single | trial
  std::vector<int> ks = {2, 3, 4, 5, 6, 7, 8};
  int n = 20;
  int burn_in = 0;
  int block_size = 1;
  std::vector<std::string> methods = {"exact", "ga", "rs"};
  int repetitions = 5;
  long long draws = 10000;
  // Tolerance handed to the ga and ni backends.  The ga lattice integration
  // for four or more arms cannot reach much beyond 1e-6 within its point
  // budget, so the default stays in the regime the runtime laws describe.
  double accuracy = 1e-4;
};

struct FigureConfig {
  std::string study = "fig1";
  int n = 100;
  int resolution = 21;
  long long draws = 10000;
};

struct RunConfig {
  bool has_design = false;
  TrialDesign design;
  std::vector<std::vector<double>> scenarios;  // one entry per true_p scenario
  long long replications = 10000;
  uint64_t seed = 0;
  int threads = 0;  // 0 = all hardware threads
  OcConfig oc;
  CalibrateConfig calibrate;
  BenchConfig bench;
  FigureConfig figure;
};

RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::string& path);

// Allowed keys per config object, keyed by dotted path ("" is the root).
// Kept in lockstep with docs/config.schema.json; a test cross-checks them.
const std::map<std::string, std::vector<std::string>>& config_allowed_keys();

}  // namespace brar
