#pragma once

#include <string>
#include <utility>
#include <vector>

#include "scg/graph.hpp"

namespace scg {

struct SeparatorVerdict {
  enum class Kind { NotSeparator, Unordered, OrderedOnly };
  Kind kind = Kind::NotSeparator;
  std::vector<NodeId> order;  // topological order of S for OrderedOnly
  NodeId escape = -1;         // a cost or stochastic child reached around S
};
const char* verdict_name(SeparatorVerdict::Kind k);

struct RootDecomposition {
  NodeSet V, W;
};

NodeSet det_closure(const Graph& g, const NodeSet& C);
RootDecomposition root_decomposition(const Graph& g, NodeId l, const NodeSet& C);

bool d_separated(const Graph& g, const NodeSet& A, const NodeSet& B, const NodeSet& Z);
// A is the implicit node log p(v) with parents {v} and the parents of v.
bool d_separated_logp(const Graph& g, NodeId v, const NodeSet& B, const NodeSet& Z);

bool is_valid_baseline_set(const Graph& g, NodeId v, const NodeSet& B);
bool is_valid_critic_set(const Graph& g, NodeId v, const NodeSet& C);
bool is_markov(const Graph& g, const NodeSet& X, NodeId v);
// Markov with respect to an explicit cost set instead of L(v).
bool is_markov_costs(const Graph& g, const NodeSet& X, const NodeSet& costs);
NodeSet ancestors_closure(const Graph& g, const NodeSet& X);
bool is_congruent(const NodeSet& B, const NodeSet& C);
NodeSet maximal_congruent_baseline(const Graph& g, NodeId v, const NodeSet& C);

SeparatorVerdict separator_verdict(const Graph& g, NodeId u, const std::vector<NodeId>& S);

bool check_decomposition(const Graph& g, NodeId v, const std::vector<NodeSet>& parts);
// parts: (node set V_i, conditioning set X_{V_i}). A part of cost nodes is V_0.
bool validate_bootstrap(const Graph& g, NodeId v, const NodeSet& X_v,
                        const std::vector<std::pair<NodeSet, NodeSet>>& parts);

}  // namespace scg
