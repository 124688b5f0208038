#include "scg/graph.hpp"

#include <queue>

#include "scg/error.hpp"

namespace scg {

const char* kind_name(Kind k) {
  switch (k) {
    case Kind::Input: return "input";
    case Kind::Deterministic: return "deterministic";
    case Kind::Stochastic: return "stochastic";
    case Kind::Cost: return "cost";
  }
  return "?";
}

const char* family_name(Family f) {
  switch (f) {
    case Family::Categorical: return "categorical";
    case Family::Bernoulli: return "bernoulli";
    case Family::Gaussian: return "gaussian";
  }
  return "?";
}

namespace decl {

NodeDecl input(const std::string& name) {
  NodeDecl d;
  d.name = name;
  d.kind = Kind::Input;
  return d;
}

NodeDecl deterministic(const std::string& name, std::vector<std::string> parents, const std::string& expr) {
  NodeDecl d;
  d.name = name;
  d.kind = Kind::Deterministic;
  d.fn = parse_expr(expr, parents, name);
  d.parents = std::move(parents);
  return d;
}

NodeDecl cost(const std::string& name, std::vector<std::string> parents, const std::string& expr) {
  NodeDecl d = deterministic(name, std::move(parents), expr);
  d.kind = Kind::Cost;
  return d;
}

NodeDecl categorical(const std::string& name, std::vector<std::string> parents,
                     const std::vector<std::string>& logits) {
  NodeDecl d;
  d.name = name;
  d.kind = Kind::Stochastic;
  d.dist.family = Family::Categorical;
  d.dist.K = static_cast<int>(logits.size());
  for (const auto& l : logits) d.dist.logits.push_back(parse_expr(l, parents, name));
  d.parents = std::move(parents);
  return d;
}

NodeDecl bernoulli(const std::string& name, std::vector<std::string> parents, const std::string& prob) {
  NodeDecl d;
  d.name = name;
  d.kind = Kind::Stochastic;
  d.dist.family = Family::Bernoulli;
  d.dist.K = 2;
  d.dist.prob = parse_expr(prob, parents, name);
  d.parents = std::move(parents);
  return d;
}

NodeDecl gaussian(const std::string& name, std::vector<std::string> parents, const std::string& mean,
                  const std::string& logstd) {
  NodeDecl d;
  d.name = name;
  d.kind = Kind::Stochastic;
  d.dist.family = Family::Gaussian;
  d.dist.mean = parse_expr(mean, parents, name);
  d.dist.logstd = parse_expr(logstd, parents, name);
  d.parents = std::move(parents);
  return d;
}

}  // namespace decl

NodeId Graph::id(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error(Errc::UnknownNode, "no node named '" + name + "'");
  return it->second;
}

NodeSet Graph::set(const std::vector<std::string>& names) const {
  NodeSet s;
  for (const auto& n : names) s.insert(id(n));
  return s;
}

std::vector<std::string> Graph::names(const NodeSet& s) const {
  std::vector<std::string> out;
  for (NodeId v : s) out.push_back(name(v));
  return out;
}

std::vector<std::string> Graph::names(const std::vector<NodeId>& s) const {
  std::vector<std::string> out;
  for (NodeId v : s) out.push_back(name(v));
  return out;
}

static void check_arity(const Expr& e, size_t nparents, const std::string& node) {
  if (e.empty()) throw Error(Errc::BadDeclaration, "node '" + node + "' is missing an expression");
  if (e.max_slot() >= static_cast<int>(nparents))
    throw Error(Errc::BadDeclaration, "node '" + node + "' references a slot beyond its parents");
}

Graph build_graph(std::vector<NodeDecl> decls) {
  Graph g;
  const size_t n = decls.size();
  for (size_t i = 0; i < n; ++i) {
    if (!g.index_.emplace(decls[i].name, static_cast<NodeId>(i)).second)
      throw Error(Errc::DuplicateNode, "node '" + decls[i].name + "' declared twice");
  }
  g.nodes_.resize(n);
  for (size_t i = 0; i < n; ++i) {
    NodeDecl& d = decls[i];
    Node& nd = g.nodes_[i];
    nd.name = d.name;
    nd.kind = d.kind;
    for (const auto& p : d.parents) {
      auto it = g.index_.find(p);
      if (it == g.index_.end())
        throw Error(Errc::UnknownParent, "node '" + d.name + "' names unknown parent '" + p + "'");
      nd.parents.push_back(it->second);
    }
    if (d.kind == Kind::Input && !nd.parents.empty())
      throw Error(Errc::InputWithParent, "input '" + d.name + "' declares parents");
    switch (d.kind) {
      case Kind::Input: break;
      case Kind::Deterministic:
      case Kind::Cost:
        check_arity(d.fn, nd.parents.size(), d.name);
        nd.fn = d.fn;
        break;
      case Kind::Stochastic: {
        Dist& dist = d.dist;
        if (dist.family == Family::Gaussian) {
          check_arity(dist.mean, nd.parents.size(), d.name);
          check_arity(dist.logstd, nd.parents.size(), d.name);
        } else if (dist.family == Family::Bernoulli) {
          check_arity(dist.prob, nd.parents.size(), d.name);
          dist.K = 2;
          dist.logits = {Expr::log(Expr::add({Expr::constant(1.0), Expr::neg(dist.prob)})), Expr::log(dist.prob)};
        } else {
          if (dist.K < 2 || dist.logits.size() != static_cast<size_t>(dist.K))
            throw Error(Errc::BadDeclaration, "categorical '" + d.name + "' needs K >= 2 logits");
          for (const auto& l : dist.logits) check_arity(l, nd.parents.size(), d.name);
        }
        nd.dist = dist;
        break;
      }
    }
  }
  for (size_t i = 0; i < n; ++i)
    for (NodeId p : g.nodes_[i].parents) {
      if (g.nodes_[static_cast<size_t>(p)].kind == Kind::Cost)
        throw Error(Errc::CostWithChild,
                    "cost '" + g.nodes_[static_cast<size_t>(p)].name + "' feeds '" + g.nodes_[i].name + "'");
      g.nodes_[static_cast<size_t>(p)].children.push_back(static_cast<NodeId>(i));
    }

  // Kahn's algorithm, smallest declaration index first so declaration order
  // survives whenever it is already topological.
  std::vector<int> indeg(n, 0);
  for (size_t i = 0; i < n; ++i) indeg[i] = static_cast<int>(g.nodes_[i].parents.size());
  std::priority_queue<NodeId, std::vector<NodeId>, std::greater<>> ready;
  for (size_t i = 0; i < n; ++i)
    if (indeg[i] == 0) ready.push(static_cast<NodeId>(i));
  while (!ready.empty()) {
    NodeId v = ready.top();
    ready.pop();
    g.order_.push_back(v);
    for (NodeId c : g.nodes_[static_cast<size_t>(v)].children)
      if (--indeg[static_cast<size_t>(c)] == 0) ready.push(c);
  }
  if (g.order_.size() != n) {
    std::string members;
    for (size_t i = 0; i < n; ++i)
      if (indeg[i] > 0) members += (members.empty() ? "" : ", ") + g.nodes_[i].name;
    throw Error(Errc::CycleDetected, "cycle among {" + members + "}");
  }
  g.pos_.assign(n, 0);
  for (size_t k = 0; k < n; ++k) g.pos_[static_cast<size_t>(g.order_[k])] = static_cast<int>(k);

  g.continuous_.assign(n, false);
  for (NodeId v : g.order_) {
    const Node& nd = g.nodes_[static_cast<size_t>(v)];
    bool c = false;
    if (nd.kind == Kind::Stochastic) {
      c = nd.dist.family == Family::Gaussian;
    } else {
      for (NodeId p : nd.parents) c = c || g.continuous_[static_cast<size_t>(p)];
    }
    g.continuous_[static_cast<size_t>(v)] = c;
    if (nd.kind == Kind::Cost) g.costs_.insert(v);
    if (nd.kind == Kind::Input) g.inputs_.insert(v);
    if (nd.kind == Kind::Stochastic) g.stochastic_.insert(v);
  }
  g.decls_ = std::move(decls);
  return g;
}

NodeSet descendants(const Graph& g, NodeId v) {
  NodeSet out{v};
  std::vector<NodeId> stack{v};
  while (!stack.empty()) {
    NodeId x = stack.back();
    stack.pop_back();
    for (NodeId c : g.node(x).children)
      if (out.insert(c).second) stack.push_back(c);
  }
  return out;
}

NodeSet ancestors(const Graph& g, NodeId v) {
  NodeSet out{v};
  std::vector<NodeId> stack{v};
  while (!stack.empty()) {
    NodeId x = stack.back();
    stack.pop_back();
    for (NodeId p : g.node(x).parents)
      if (out.insert(p).second) stack.push_back(p);
  }
  return out;
}

bool exists_unblocked_path(const Graph& g, NodeId from, NodeId to, const NodeSet& blockers) {
  if (from == to) return true;
  std::vector<char> seen(g.size(), 0);
  std::vector<NodeId> stack{from};
  seen[static_cast<size_t>(from)] = 1;
  while (!stack.empty()) {
    NodeId x = stack.back();
    stack.pop_back();
    for (NodeId c : g.node(x).children) {
      if (blockers.count(c) || seen[static_cast<size_t>(c)]) continue;
      if (c == to) return true;
      seen[static_cast<size_t>(c)] = 1;
      stack.push_back(c);
    }
  }
  return false;
}

bool deterministically_computable(const Graph& g, NodeId x, const NodeSet& V) {
  // The start node of a path blocks it too: a stochastic node in V cannot
  // inject randomness.
  for (NodeId s : g.stochastic()) {
    if (V.count(s)) continue;
    if (exists_unblocked_path(g, s, x, V)) return false;
  }
  return true;
}

NodeSet cost_to_go_set(const Graph& g, NodeId v) {
  NodeSet out;
  for (NodeId d : descendants(g, v))
    if (g.is_cost(d)) out.insert(d);
  return out;
}

NodeSet cost_to_go_set(const Graph& g, const NodeSet& vs) {
  NodeSet out;
  for (NodeId v : vs) {
    NodeSet c = cost_to_go_set(g, v);
    out.insert(c.begin(), c.end());
  }
  return out;
}

}  // namespace scg
