#include "scg/error.hpp"
#include "scg/experiment.hpp"

namespace scg {

namespace {

const char* kChain2 = R"({
  "fixture": "CHAIN2",
  "samples": 100000,
  "seed": 1,
  "estimators": [
    {"id": "chain2-empirical"},
    {"id": "chain2-baseline",
     "nodes": [{"node": "a0", "baseline": {"kind": "value", "set": ["s0"]}},
               {"node": "a1", "baseline": {"kind": "value", "set": ["s1"]}}]},
    {"id": "chain2-q-minus-v",
     "nodes": [{"node": "a0", "critic": {"kind": "value", "set": ["s0", "a0"]},
                "baseline": {"kind": "value", "set": ["s0"]}},
               {"node": "a1", "critic": {"kind": "value", "set": ["s1", "a1"]},
                "baseline": {"kind": "value", "set": ["s1"]}}]},
    {"id": "chain2-kstep",
     "nodes": [{"node": "a0", "critic": {"kind": "kstep", "k": 0}},
               {"node": "a1", "critic": {"kind": "kstep", "k": 0}}]},
    {"id": "chain2-td",
     "nodes": [{"node": "a0", "critic": {"kind": "partial", "sampled": ["r0"],
                                         "parts": [{"nodes": ["s1"], "cond": ["s1"]}]},
                "baseline": {"kind": "value", "set": ["s0"]}}]},
    {"id": "chain2-lambda",
     "nodes": [{"node": "a0", "critic": {"kind": "lambda", "lambda": 0.5}},
               {"node": "a1", "critic": {"kind": "lambda", "lambda": 0.5}}]},
    {"id": "chain2-optimal",
     "nodes": [{"node": "a0", "critic": {"kind": "value", "set": ["s0", "a0"]},
                "baseline": {"kind": "optimal", "set": ["s0"]}},
               {"node": "a1", "critic": {"kind": "value", "set": ["s1", "a1"]},
                "baseline": {"kind": "optimal", "set": ["s1"]}}]},
    {"id": "chain2-debiased", "fixture": "CHAIN2-G",
     "nodes": [{"node": "a0", "critic": {"kind": "value", "set": ["s0", "a0"]}, "debias": true},
               {"node": "a1", "critic": {"kind": "value", "set": ["s1", "a1"]}, "debias": true}]}
  ]
})";

const char* kChain2G = R"({
  "fixture": "CHAIN2-G",
  "samples": 100000,
  "seed": 2,
  "estimators": [
    {"id": "chain2g-score"},
    {"id": "chain2g-pathwise", "reparameterize": ["a0", "a1"]},
    {"id": "chain2g-q-minus-v",
     "nodes": [{"node": "a0", "critic": {"kind": "value", "set": ["s0", "a0"]},
                "baseline": {"kind": "value", "set": ["s0"]}},
               {"node": "a1", "critic": {"kind": "value", "set": ["s1", "a1"]},
                "baseline": {"kind": "value", "set": ["s1"]}}]},
    {"id": "chain2g-svg0", "reparameterize": ["a0", "a1"],
     "injections": [{"u": "th", "S": ["a0", "a1"], "sets": [["s0", "a0"], ["s1", "a1"]], "mode": "value-gradient"}]},
    {"id": "chain2g-gradient-critic", "reparameterize": ["a0", "a1"],
     "injections": [{"u": "th", "S": ["a0", "a1"], "sets": [["s0", "a0"], ["s1", "a1"]]}]},
    {"id": "chain2g-debiased-zero",
     "nodes": [{"node": "a0", "critic": {"kind": "value", "set": ["s0", "a0"], "source": "zero"}, "debias": true},
               {"node": "a1", "critic": {"kind": "value", "set": ["s1", "a1"], "source": "zero"}, "debias": true}]},
    {"id": "chain2g-debiased-scaled",
     "nodes": [{"node": "a0", "critic": {"kind": "value", "set": ["s0", "a0"], "scale": 1.5}, "debias": true},
               {"node": "a1", "critic": {"kind": "value", "set": ["s1", "a1"], "scale": 1.5}, "debias": true}]}
  ]
})";

const char* kNoise = R"({
  "fixture": "NOISE",
  "samples": 100000,
  "seed": 3,
  "estimators": [
    {"id": "noise-c-z-zp-b-empty",
     "nodes": [{"node": "z", "critic": {"kind": "value", "set": ["z", "zp"]}, "baseline": {"kind": "value", "set": []}}]},
    {"id": "noise-c-z-b-empty",
     "nodes": [{"node": "z", "critic": {"kind": "value", "set": ["z"]}, "baseline": {"kind": "value", "set": []}}]},
    {"id": "noise-c-z-zp-b-zp",
     "nodes": [{"node": "z", "critic": {"kind": "value", "set": ["z", "zp"]}, "baseline": {"kind": "value", "set": ["zp"]}}]},
    {"id": "noise-c-z-b-zp",
     "nodes": [{"node": "z", "critic": {"kind": "value", "set": ["z"]}, "baseline": {"kind": "value", "set": ["zp"]}}]}
  ]
})";

const char* kNoncong = R"({
  "fixture": "NONCONG",
  "samples": 100000,
  "seed": 4,
  "estimators": [
    {"id": "noncong-b-empty",
     "nodes": [{"node": "z", "critic": {"kind": "value", "set": ["z", "v1"]}, "baseline": {"kind": "value", "set": []}}]},
    {"id": "noncong-b-v1p",
     "nodes": [{"node": "z", "critic": {"kind": "value", "set": ["z", "v1"]}, "baseline": {"kind": "value", "set": ["v1p"]}}]}
  ]
})";

const char* kFactored = R"({
  "fixture": "FACTORED",
  "samples": 100000,
  "seed": 5,
  "estimators": [
    {"id": "factored-empirical"},
    {"id": "factored-action-baseline",
     "nodes": [{"node": "a0", "baseline": {"kind": "value", "set": ["s", "a1"]}},
               {"node": "a1", "baseline": {"kind": "value", "set": ["s", "a0"]}}]},
    {"id": "factored-marginal-critic",
     "nodes": [{"node": "a0", "critic": {"kind": "value", "set": ["s", "a0"]}, "baseline": {"kind": "value", "set": ["s"]}},
               {"node": "a1", "critic": {"kind": "value", "set": ["s", "a1"]}, "baseline": {"kind": "value", "set": ["s"]}}]}
  ]
})";

const char* kChain2BB = R"({
  "fixture": "CHAIN2-BB",
  "samples": 100000,
  "seed": 6,
  "estimators": [
    {"id": "bb-es"},
    {"id": "bb-es-baseline",
     "nodes": [{"node": "k0", "critic": {"kind": "value", "set": ["k0", "k1"]}, "baseline": {"kind": "value", "set": ["k1"]}},
               {"node": "k1", "critic": {"kind": "value", "set": ["k0", "k1"]}, "baseline": {"kind": "value", "set": ["k0"]}}]},
    {"id": "bb-action-param-critic",
     "nodes": [{"node": "k0", "critic": {"kind": "value", "set": ["k0", "k1", "s1", "pi1"]}, "baseline": {"kind": "value", "set": ["k1"]}},
               {"node": "k1", "critic": {"kind": "value", "set": ["k0", "k1", "s1", "pi1"]}, "baseline": {"kind": "value", "set": ["k0"]}},
               {"node": "a1", "critic": {"kind": "value", "set": ["s1", "pi1", "a1"]}, "baseline": {"kind": "value", "set": ["s1", "pi1"]}}]}
  ]
})";

const char* kTree4 = R"({
  "fixture": "TREE4",
  "samples": 100000,
  "seed": 7,
  "estimators": [
    {"id": "tree4-valid-critic",
     "nodes": [{"node": "v1", "critic": {"kind": "value", "set": ["v0", "v1"]}, "baseline": {"kind": "value", "set": ["v0"]}}]},
    {"id": "tree4-invalid-critic", "checks": false, "expect_unbiased": false,
     "nodes": [{"node": "v1", "critic": {"kind": "value", "set": ["v1"]}}]}
  ]
})";

}  // namespace

const std::map<std::string, std::string>& builtin_menus() {
  static const std::map<std::string, std::string> m = {
      {"chain2", kChain2},     {"chain2-g", kChain2G}, {"noise", kNoise},  {"noncong", kNoncong},
      {"factored", kFactored}, {"chain2-bb", kChain2BB}, {"tree4", kTree4},
  };
  return m;
}

ExperimentConfig builtin_menu(const std::string& name) {
  auto it = builtin_menus().find(name);
  if (it == builtin_menus().end()) throw Error(Errc::ConfigError, "unknown menu '" + name + "'");
  return parse_config(nlohmann::json::parse(it->second), "menu " + name);
}

}  // namespace scg
