#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "scg/estimators.hpp"
#include "scg/graph.hpp"
#include "scg/sample.hpp"

namespace scg {

// A set choice registered with a fixture; its verdicts go into the golden report.
//   critic / baseline / markov: node, A = set
//   separator: node = u, A = S in the given order
//   nested: node = v, baselines A within B, critic set C
//   decomposition: node = cost, A = C
struct SetChoice {
  std::string kind, node;
  std::vector<std::string> A, B, C;
};

struct BootstrapChoice {
  std::string node;
  std::vector<std::string> X;
  // (nodes, cond); a part whose nodes are all costs is taken as sampled.
  std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>> parts;
};

// Gradient-critic bootstrap on the fixture graph after reparameterizing `reparam`.
struct GradBootstrapChoice {
  std::vector<std::string> reparam;
  std::string u;
  std::vector<std::string> S;
  std::vector<std::string> C_u;
  std::vector<std::vector<std::string>> parts;
};

struct Fixture {
  std::string name, summary;
  Graph graph;
  std::map<std::string, double> canonical;
  std::optional<ChainSpec> chain;
  std::vector<SetChoice> sets;
  std::vector<BootstrapChoice> bootstraps;
  std::vector<GradBootstrapChoice> grad_bootstraps;

  Inputs inputs() const { return make_inputs(graph, canonical); }
  NodeSet set(const std::vector<std::string>& names) const { return graph.set(names); }
  NodeId id(const std::string& n) const { return graph.id(n); }
};

const std::vector<Fixture>& fixtures();
// Throws ConfigError for unknown names.
const Fixture& fixture(const std::string& name);

// Verdicts of every registered set choice plus per-node reachability facts.
nlohmann::json analysis_report(const Fixture& f);

// Extra sets to query in analyze_node; absent means "not asked".
struct NodeQuery {
  std::optional<NodeSet> critic, baseline, markov;
  std::optional<std::vector<NodeId>> separator;
};
// Verdicts for one node on an arbitrary graph: its reachability facts, the
// standard candidate sets, and whatever the query adds.
nlohmann::json analyze_node(const Graph& g, NodeId v, const NodeQuery& q = {});

}  // namespace scg
