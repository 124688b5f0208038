#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "scg/expr.hpp"

namespace scg {

using NodeId = int;
using NodeSet = std::set<NodeId>;

enum class Kind { Input, Deterministic, Stochastic, Cost };
enum class Family { Categorical, Bernoulli, Gaussian };

const char* kind_name(Kind k);
const char* family_name(Family f);

// Bernoulli is kept as declared (prob) for dumping, but carries the two
// categorical logits log(1-p), log(p) that every consumer uses.
struct Dist {
  Family family = Family::Categorical;
  int K = 0;
  std::vector<Expr> logits;
  Expr prob;
  Expr mean, logstd;

  bool categorical() const { return family != Family::Gaussian; }
};

struct NodeDecl {
  std::string name;
  Kind kind = Kind::Input;
  std::vector<std::string> parents;
  Expr fn;
  Dist dist;
};

namespace decl {
NodeDecl input(const std::string& name);
NodeDecl deterministic(const std::string& name, std::vector<std::string> parents, const std::string& expr);
NodeDecl cost(const std::string& name, std::vector<std::string> parents, const std::string& expr);
NodeDecl categorical(const std::string& name, std::vector<std::string> parents,
                     const std::vector<std::string>& logits);
NodeDecl bernoulli(const std::string& name, std::vector<std::string> parents, const std::string& prob);
NodeDecl gaussian(const std::string& name, std::vector<std::string> parents, const std::string& mean,
                  const std::string& logstd);
}  // namespace decl

struct Node {
  std::string name;
  Kind kind = Kind::Input;
  std::vector<NodeId> parents;
  std::vector<NodeId> children;
  Expr fn;
  Dist dist;
};

class Graph {
 public:
  size_t size() const { return nodes_.size(); }
  const Node& node(NodeId v) const { return nodes_[static_cast<size_t>(v)]; }
  const std::string& name(NodeId v) const { return node(v).name; }
  NodeId id(const std::string& name) const;
  bool has(const std::string& name) const { return index_.count(name) != 0; }

  // Parents always precede children.
  const std::vector<NodeId>& order() const { return order_; }
  int position(NodeId v) const { return pos_[static_cast<size_t>(v)]; }

  const NodeSet& costs() const { return costs_; }
  const NodeSet& inputs() const { return inputs_; }
  const NodeSet& stochastic() const { return stochastic_; }
  bool is_stochastic(NodeId v) const { return node(v).kind == Kind::Stochastic; }
  bool is_cost(NodeId v) const { return node(v).kind == Kind::Cost; }
  bool is_input(NodeId v) const { return node(v).kind == Kind::Input; }
  // Gaussian, or computed from a continuous parent.
  bool is_continuous(NodeId v) const { return continuous_[static_cast<size_t>(v)]; }

  NodeSet set(const std::vector<std::string>& names) const;
  std::vector<std::string> names(const NodeSet& s) const;
  std::vector<std::string> names(const std::vector<NodeId>& s) const;
  const std::vector<NodeDecl>& decls() const { return decls_; }

 private:
  friend Graph build_graph(std::vector<NodeDecl> decls);
  std::vector<Node> nodes_;
  std::vector<NodeDecl> decls_;
  std::map<std::string, NodeId> index_;
  std::vector<NodeId> order_;
  std::vector<int> pos_;
  std::vector<bool> continuous_;
  NodeSet costs_, inputs_, stochastic_;
};

// NodeIds are declaration indices; parents may be declared in any order.
Graph build_graph(std::vector<NodeDecl> decls);

NodeSet descendants(const Graph& g, NodeId v);
NodeSet ancestors(const Graph& g, NodeId v);
// Path a_0..a_K is blocked when some a_i, i >= 1, lies in blockers.
bool exists_unblocked_path(const Graph& g, NodeId from, NodeId to, const NodeSet& blockers);
bool deterministically_computable(const Graph& g, NodeId x, const NodeSet& V);
NodeSet cost_to_go_set(const Graph& g, NodeId v);
NodeSet cost_to_go_set(const Graph& g, const NodeSet& vs);

}  // namespace scg
