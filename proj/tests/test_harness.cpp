#include <fstream>
#include <set>

#include "doctest.h"
#include "scg/error.hpp"
#include "scg/experiment.hpp"
#include "scg/fixtures.hpp"
#include "scg/oracle.hpp"

using namespace scg;
using nlohmann::json;

namespace {

std::string config_error(const json& doc) {
  try {
    parse_config(doc, "menu.json");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ConfigError);
    return e.what();
  }
  FAIL("config accepted");
  return {};
}

}  // namespace

TEST_SUITE("harness_cli") {
  TEST_CASE("fixture registry") {
    std::set<std::string> names;
    for (const Fixture& f : fixtures()) names.insert(f.name);
    for (const char* n : {"FIG11A", "FIG11B", "NOISE", "NONCONG", "TREE4", "DECOMP", "CHAIN2", "CHAIN2-G", "CHAIN2-BB",
                          "FACTORED"})
      CHECK(names.count(n) == 1);
    CHECK(enumerate_support(fixture("CHAIN2").graph, fixture("CHAIN2").inputs()).atoms.size() == 16);
    CHECK_THROWS_AS(fixture("NOPE"), Error);
  }

  TEST_CASE("analysis reports match the golden files") {
    for (const Fixture& f : fixtures()) {
      CAPTURE(f.name);
      std::ifstream in(std::string(SCG_TEST_DATA) + "/golden/" + f.name + ".json");
      REQUIRE(in.good());
      const json golden = json::parse(in);
      CHECK(analysis_report(f) == golden);
    }
  }

  TEST_CASE("config errors name the offending path") {
    std::string e = config_error(json::parse(R"({"fixture": "CHAIN2", "estimators": [
        {"id": "x", "nodes": [{"node": "a0", "critc": {"kind": "value", "set": ["s0"]}}]}]})"));
    CHECK(e.find("menu.json") != std::string::npos);
    CHECK(e.find("$.estimators[0].nodes[0].critc") != std::string::npos);
    e = config_error(json::parse(R"({"fixture": "CHAIN2", "samples": -3, "estimators": []})"));
    CHECK(e.find("samples") != std::string::npos);
    e = config_error(json::parse(R"({"fixture": "CHAIN3", "estimators": []})"));
    CHECK(e.find("CHAIN3") != std::string::npos);
    // Node names resolve against the graph when the row is built.
    const ExperimentConfig cfg = parse_config(json::parse(R"({"fixture": "CHAIN2", "estimators": [
        {"id": "x", "nodes": [{"node": "q9"}]}]})"), "menu.json");
    try {
      build_row(cfg, cfg.estimators[0]);
      FAIL("unknown node accepted");
    } catch (const Error& err) {
      CHECK(err.code() == Errc::ConfigError);
      CHECK(std::string(err.what()).find("q9") != std::string::npos);
    }
  }

  TEST_CASE("an empty estimator list gives an empty result") {
    const ExperimentConfig cfg = parse_config(json::parse(R"({"fixture": "CHAIN2", "estimators": []})"), "m");
    const auto rows = run_experiment(cfg);
    CHECK(rows.empty());
    CHECK(results_csv(rows) == "id,fixture,param,n,seed,mc_mean,stderr,exact_gradient,exact_mean,exact_var,gate\n");
  }

  TEST_CASE("CSV output is identical across runs") {
    ExperimentConfig cfg = builtin_menu("chain2");
    cfg.samples = 2000;
    for (RowConfig& r : cfg.estimators) r.samples = 0;
    const std::string a = results_csv(run_experiment(cfg));
    const std::string b = results_csv(run_experiment(cfg));
    CHECK(a == b);
    CHECK(std::count(a.begin(), a.end(), '\n') > 1);
  }

  TEST_CASE("NOISE menu reproduces the variance regimes") {
    ExperimentConfig cfg = builtin_menu("noise");
    cfg.samples = 2000;
    std::map<std::string, double> var;
    for (const ResultRow& r : run_experiment(cfg)) {
      CHECK(r.enumerable);
      CHECK(std::abs(r.exact_mean - r.exact_gradient) <= 1e-10);
      var[r.id] = r.exact_var;
    }
    const double r1 = var.at("noise-c-z-zp-b-empty"), r2 = var.at("noise-c-z-b-empty");
    const double r3 = var.at("noise-c-z-zp-b-zp"), r4 = var.at("noise-c-z-b-zp");
    CHECK(r1 > r2 + 1.0);
    CHECK(std::abs(r2 - r3) <= 1e-10);
    CHECK(r4 > r2 + 1.0);
  }

  TEST_CASE("node analysis JSON") {
    const Fixture& c = fixture("CHAIN2");
    NodeQuery q;
    q.critic = c.set({"s0", "a0"});
    q.baseline = c.set({"s1"});
    const json j = analyze_node(c.graph, c.id("a0"), q);
    CHECK(j.at("node") == "a0");
    CHECK(j.at("query").at("critic").at("valid_critic") == true);
    CHECK(j.at("query").at("baseline").at("congruent_with_critic") == false);
    CHECK(j.at("query").at("baseline").at("valid_baseline") == false);
  }
}
