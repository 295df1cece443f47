#include "doctest.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "brar/config.hpp"
#include "brar/errors.hpp"

using namespace brar;

TEST_CASE("an empty object parses to the documented defaults") {
  RunConfig cfg = parse_config_text("{}");
  CHECK_FALSE(cfg.has_design);
  CHECK(cfg.scenarios.empty());
  CHECK(cfg.replications == 10000);
  CHECK(cfg.seed == 0);
  CHECK(cfg.threads == 0);
  CHECK(cfg.oc.mode == "auto");
  CHECK(cfg.oc.state_cap == 5e7);
  CHECK(cfg.oc.delta == 0.05);
  CHECK(cfg.calibrate.kind == "pp");
  CHECK(cfg.calibrate.alpha == 0.05);
  CHECK(cfg.calibrate.p == 0.5);
  CHECK(cfg.bench.study == "trial");
  CHECK(cfg.bench.ks == std::vector<int>{2, 3, 4, 5, 6, 7, 8});
  CHECK(cfg.bench.accuracy == 1e-4);
  CHECK(cfg.figure.study == "fig1");
  CHECK(cfg.figure.resolution == 21);
}

TEST_CASE("a full configuration round-trips every field") {
  const char* text = R"({
    "design": {
      "k": 3, "n": 60, "priors": [2,1,1,1,1,1], "burn_in": 4, "block_size": 2,
      "analysis_schedule": [14, 20, 40, 60],
      "superiority_threshold": 0.97, "inferiority_threshold": 0.92,
      "drop": {"p_low": 0.3, "confidence": 0.9},
      "tuning": {"rule": "variance_scaling", "m": 3.0},
      "randomization": {"rule": "pps", "method": "gaussian", "accuracy": 1e-5},
      "test": {"method": "repeated_sampling", "draws": 20000}
    },
    "true_p": [[0.3, 0.5, 0.7], [0.5, 0.5, 0.5]],
    "replications": 500,
    "seed": 99,
    "threads": 2,
    "oc": {"mode": "simulate", "state_cap": 1e6, "delta": 0.1},
    "calibrate": {"kind": "ux", "alpha": 0.025, "p": 0.4},
    "bench": {"study": "single", "ks": [2, 4], "n": 30, "burn_in": 1, "block_size": 3,
              "methods": ["exact", "ni"], "repetitions": 2, "draws": 500, "accuracy": 1e-6},
    "figure": {"study": "fig2", "n": 40, "resolution": 9, "draws": 2000}
  })";
  RunConfig cfg = parse_config_text(text);
  REQUIRE(cfg.has_design);
  CHECK(cfg.design.k == 3);
  CHECK(cfg.design.n == 60);
  CHECK(cfg.design.priors == std::vector<int>{2, 1, 1, 1, 1, 1});
  CHECK(cfg.design.burn_in == 4);
  CHECK(cfg.design.block_size == 2);
  CHECK(cfg.design.analysis_schedule == std::vector<int>{14, 20, 40, 60});
  CHECK(cfg.design.superiority_threshold == 0.97);
  REQUIRE(cfg.design.inferiority_threshold.has_value());
  CHECK(*cfg.design.inferiority_threshold == 0.92);
  REQUIRE(cfg.design.drop_rule.has_value());
  CHECK(cfg.design.drop_rule->p_low == 0.3);
  CHECK(cfg.design.drop_rule->confidence == 0.9);
  CHECK(cfg.design.tuning.kind == TuningRule::Kind::variance_scaling);
  CHECK(cfg.design.tuning.m == 3.0);
  CHECK(cfg.design.rand_method.kind == RandMethod::Kind::pps);
  CHECK(cfg.design.rand_method.pps.kind == PpsMethod::Kind::gaussian);
  CHECK(cfg.design.rand_method.pps.mvn_accuracy == 1e-5);
  CHECK(cfg.design.test_method.kind == PpsMethod::Kind::repeated_sampling);
  CHECK(cfg.design.test_method.rs_draws == 20000);
  REQUIRE(cfg.scenarios.size() == 2);
  CHECK(cfg.scenarios[0] == std::vector<double>{0.3, 0.5, 0.7});
  CHECK(cfg.scenarios[1] == std::vector<double>{0.5, 0.5, 0.5});
  CHECK(cfg.replications == 500);
  CHECK(cfg.seed == 99);
  CHECK(cfg.threads == 2);
  CHECK(cfg.oc.mode == "simulate");
  CHECK(cfg.oc.state_cap == 1e6);
  CHECK(cfg.oc.delta == 0.1);
  CHECK(cfg.calibrate.kind == "ux");
  CHECK(cfg.calibrate.alpha == 0.025);
  CHECK(cfg.calibrate.p == 0.4);
  CHECK(cfg.bench.study == "single");
  CHECK(cfg.bench.ks == std::vector<int>{2, 4});
  CHECK(cfg.bench.methods == std::vector<std::string>{"exact", "ni"});
  CHECK(cfg.bench.accuracy == 1e-6);
  CHECK(cfg.figure.study == "fig2");
  CHECK(cfg.figure.n == 40);
  CHECK(cfg.figure.resolution == 9);
  CHECK(cfg.figure.draws == 2000);
}

TEST_CASE("method name aliases resolve to the same backend") {
  auto method_of = [](const std::string& name) {
    RunConfig cfg = parse_config_text(
        R"({"design": {"k": 2, "n": 10, "test": {"method": ")" + name + R"("}}})");
    return cfg.design.test_method.kind;
  };
  CHECK(method_of("exact") == PpsMethod::Kind::exact);
  CHECK(method_of("ga") == PpsMethod::Kind::gaussian);
  CHECK(method_of("gaussian") == PpsMethod::Kind::gaussian);
  CHECK(method_of("rs") == PpsMethod::Kind::repeated_sampling);
  CHECK(method_of("repeated_sampling") == PpsMethod::Kind::repeated_sampling);
  CHECK(method_of("ni") == PpsMethod::Kind::numeric_integration);
  CHECK(method_of("numeric_integration") == PpsMethod::Kind::numeric_integration);
  CHECK_THROWS_AS(method_of("bayes"), ConfigError);
}

TEST_CASE("posterior draw randomization needs no method block") {
  RunConfig cfg = parse_config_text(
      R"({"design": {"k": 2, "n": 10, "randomization": {"rule": "posterior_draw"}}})");
  CHECK(cfg.design.rand_method.kind == RandMethod::Kind::posterior_draw);
  CHECK_THROWS_AS(parse_config_text(
                      R"({"design": {"k": 2, "n": 10, "randomization": {"rule": "coin"}}})"),
                  ConfigError);
}

TEST_CASE("a flat response vector becomes a single scenario") {
  RunConfig cfg =
      parse_config_text(R"({"design": {"k": 2, "n": 10}, "true_p": [0.3, 0.6]})");
  REQUIRE(cfg.scenarios.size() == 1);
  CHECK(cfg.scenarios[0] == std::vector<double>{0.3, 0.6});
}

TEST_CASE("unknown keys are rejected at every nesting level") {
  const char* bad[] = {
      R"({"designs": {}})",
      R"({"design": {"k": 2, "n": 10, "arms": 3}})",
      R"({"design": {"k": 2, "n": 10, "drop": {"p_low": 0.3, "level": 0.9}}})",
      R"({"design": {"k": 2, "n": 10, "tuning": {"rule": "none", "exponent": 2}}})",
      R"({"design": {"k": 2, "n": 10, "randomization": {"method": "exact", "seed": 3}}})",
      R"({"design": {"k": 2, "n": 10, "test": {"method": "exact", "seed": 3}}})",
      R"({"oc": {"mode": "auto", "cap": 10}})",
      R"({"calibrate": {"kind": "pp", "target": 0.05}})",
      R"({"bench": {"study": "trial", "arms": [2]}})",
      R"({"figure": {"study": "fig1", "grid": 5}})",
  };
  for (const char* text : bad) CHECK_THROWS_AS(parse_config_text(text), ConfigError);
}

TEST_CASE("malformed documents and values raise config errors") {
  const char* bad[] = {
      "not json",
      "[1, 2]",
      R"({"design": {"n": 10}})",
      R"({"design": {"k": "two", "n": 10}})",
      R"({"design": {"k": 1, "n": 10}})",
      R"({"design": {"k": 2, "n": 10, "priors": [1, 1, 1]}})",
      R"({"design": {"k": 2, "n": 10, "test": {"method": "rs", "draws": 0}}})",
      R"({"design": {"k": 2, "n": 10, "test": {"accuracy": 0}}})",
      R"({"design": {"k": 2, "n": 10}, "true_p": []})",
      R"({"design": {"k": 2, "n": 10}, "true_p": [0.5]})",
      R"({"design": {"k": 2, "n": 10}, "true_p": [0.5, 1.5]})",
      R"({"replications": -1})",
      R"({"threads": -2})",
      R"({"oc": {"mode": "guess"}})",
      R"({"oc": {"state_cap": 0}})",
      R"({"oc": {"delta": 1.0}})",
      R"({"calibrate": {"kind": "xx"}})",
      R"({"calibrate": {"alpha": 1.5}})",
      R"({"calibrate": {"p": -0.1}})",
      R"({"bench": {"study": "both"}})",
      R"({"bench": {"ks": []}})",
      R"({"bench": {"ks": [1]}})",
      R"({"bench": {"n": 0}})",
      R"({"bench": {"methods": ["mc"]}})",
      R"({"bench": {"repetitions": 0}})",
      R"({"bench": {"draws": 0}})",
      R"({"bench": {"accuracy": 0}})",
      R"({"figure": {"study": "fig9"}})",
      R"({"figure": {"resolution": 0}})",
      R"({"figure": {"draws": 0}})",
  };
  for (const char* text : bad) CHECK_THROWS_AS(parse_config_text(text), ConfigError);
}

TEST_CASE("config files load from disk") {
  const std::string path = "test_config_tmp.json";
  {
    std::ofstream out(path);
    out << R"({"design": {"k": 2, "n": 16}, "seed": 4})";
  }
  RunConfig cfg = parse_config_file(path);
  CHECK(cfg.design.n == 16);
  CHECK(cfg.seed == 4);
  std::remove(path.c_str());
  CHECK_THROWS_AS(parse_config_file("does_not_exist.json"), ConfigError);
}

TEST_CASE("allowed keys stay in lockstep with the published schema") {
  std::ifstream in(std::string(BRAR_SOURCE_DIR) + "/docs/config.schema.json");
  REQUIRE(in.good());
  nlohmann::json schema;
  in >> schema;

  for (const auto& [path, allowed] : config_allowed_keys()) {
    nlohmann::json node = schema;
    if (!path.empty()) {
      size_t pos = 0;
      while (pos <= path.size()) {
        const size_t dot = path.find('.', pos);
        const std::string seg = path.substr(pos, dot == std::string::npos ? dot : dot - pos);
        REQUIRE(node.at("properties").contains(seg));
        node = node.at("properties").at(seg);
        if (dot == std::string::npos) break;
        pos = dot + 1;
      }
    }
    CHECK(node.at("additionalProperties") == false);
    std::vector<std::string> schema_keys;
    for (const auto& [key, value] : node.at("properties").items()) {
      (void)value;
      schema_keys.push_back(key);
    }
    std::vector<std::string> code_keys(allowed.begin(), allowed.end());
    std::sort(schema_keys.begin(), schema_keys.end());
    std::sort(code_keys.begin(), code_keys.end());
    INFO("path: ", path.empty() ? "<root>" : path);
    CHECK(schema_keys == code_keys);
  }
}
