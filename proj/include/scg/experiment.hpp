#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "scg/estimators.hpp"
#include "scg/graph.hpp"

namespace scg {

struct RowConfig {
  std::string id;
  std::string fixture;  // empty: the config's graph
  std::map<std::string, double> inputs;
  size_t samples = 0;  // 0: config default
  unsigned long long seed = 0;
  bool has_seed = false;
  bool expect_unbiased = true;
  nlohmann::json spec;  // validated estimator description
};

struct ExperimentConfig {
  std::string fixture;     // or
  std::string graph_path;  // a graph file
  std::map<std::string, double> inputs;
  size_t samples = 10000;
  unsigned long long seed = 1;
  EnumOptions enumeration;
  std::string output;
  std::vector<RowConfig> estimators;
};

// Throws ConfigError naming the file position or the JSON path at fault.
ExperimentConfig parse_config(const nlohmann::json& doc, const std::string& what);
ExperimentConfig load_config(const std::string& path);

// A graph plus the estimator compiled on it; the graph outlives the sources.
struct Built {
  std::shared_ptr<const Graph> graph;
  Inputs inputs;
  std::unique_ptr<CompiledEstimator> est;
};
Built build_row(const ExperimentConfig& cfg, const RowConfig& row);

struct ResultRow {
  std::string id, fixture, param;
  size_t n = 0;
  unsigned long long seed = 0;
  double mc_mean = 0.0, stderr_ = 0.0;
  bool enumerable = false;
  double exact_gradient = 0.0, exact_mean = 0.0, exact_var = 0.0;
  bool pass = false;
};

std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg);
std::string results_csv(const std::vector<ResultRow>& rows);

// Experiment menus shipped with the library (also copied under configs/).
const std::map<std::string, std::string>& builtin_menus();
ExperimentConfig builtin_menu(const std::string& name);

}  // namespace scg
