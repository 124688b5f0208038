#include "scg/analysis.hpp"

#include <algorithm>
#include <deque>

#include "scg/error.hpp"

namespace scg {

const char* verdict_name(SeparatorVerdict::Kind k) {
  switch (k) {
    case SeparatorVerdict::Kind::NotSeparator: return "NotSeparator";
    case SeparatorVerdict::Kind::Unordered: return "Unordered";
    case SeparatorVerdict::Kind::OrderedOnly: return "OrderedOnly";
  }
  return "?";
}

namespace {

// Adjacency copy of a graph with room for one extra deterministic node.
struct DagView {
  std::vector<std::vector<NodeId>> parents, children;
  std::vector<char> stochastic;

  explicit DagView(const Graph& g) {
    const size_t n = g.size();
    parents.resize(n);
    children.resize(n);
    stochastic.resize(n);
    for (size_t i = 0; i < n; ++i) {
      const Node& nd = g.node(static_cast<NodeId>(i));
      parents[i] = nd.parents;
      children[i] = nd.children;
      stochastic[i] = nd.kind == Kind::Stochastic;
    }
  }
  NodeId add_deterministic(const std::vector<NodeId>& ps) {
    const NodeId x = static_cast<NodeId>(parents.size());
    parents.push_back(ps);
    children.emplace_back();
    stochastic.push_back(0);
    for (NodeId p : ps) children[static_cast<size_t>(p)].push_back(x);
    return x;
  }
  size_t size() const { return parents.size(); }
};

// Parents precede children among the view's nodes; the extra node is last in
// index but may come earlier in order, so iterate to a fixed point.
std::vector<char> closure_in(const DagView& d, const NodeSet& C) {
  std::vector<char> in(d.size(), 0);
  for (NodeId c : C) in[static_cast<size_t>(c)] = 1;
  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t x = 0; x < d.size(); ++x) {
      if (in[x] || d.stochastic[x]) continue;
      bool all = true;
      for (NodeId p : d.parents[x]) all = all && in[static_cast<size_t>(p)];
      if (all) {
        in[x] = 1;
        changed = true;
      }
    }
  }
  return in;
}

// Bayes-ball reachability (active trails from A given Z).
std::vector<char> reachable(const DagView& d, const NodeSet& A, const std::vector<char>& inZ) {
  const size_t n = d.size();
  std::vector<char> anc(n, 0);
  std::vector<NodeId> stack;
  for (size_t i = 0; i < n; ++i)
    if (inZ[i]) {
      anc[i] = 1;
      stack.push_back(static_cast<NodeId>(i));
    }
  while (!stack.empty()) {
    NodeId x = stack.back();
    stack.pop_back();
    for (NodeId p : d.parents[static_cast<size_t>(x)])
      if (!anc[static_cast<size_t>(p)]) {
        anc[static_cast<size_t>(p)] = 1;
        stack.push_back(p);
      }
  }
  std::vector<char> seen_up(n, 0), seen_down(n, 0), reach(n, 0);
  std::deque<std::pair<NodeId, bool>> q;  // (node, arrived from a child)
  for (NodeId a : A) q.emplace_back(a, true);
  while (!q.empty()) {
    auto [y, up] = q.front();
    q.pop_front();
    const size_t i = static_cast<size_t>(y);
    auto& seen = up ? seen_up : seen_down;
    if (seen[i]) continue;
    seen[i] = 1;
    if (!inZ[i]) reach[i] = 1;
    if (up) {
      if (inZ[i]) continue;
      for (NodeId p : d.parents[i]) q.emplace_back(p, true);
      for (NodeId c : d.children[i]) q.emplace_back(c, false);
    } else {
      if (!inZ[i])
        for (NodeId c : d.children[i]) q.emplace_back(c, false);
      if (anc[i])
        for (NodeId p : d.parents[i]) q.emplace_back(p, true);
    }
  }
  return reach;
}

bool d_sep_view(const DagView& d, NodeSet A, NodeSet B, const NodeSet& Z) {
  const std::vector<char> inZ = closure_in(d, Z);
  auto strip = [&](NodeSet& s) {
    for (auto it = s.begin(); it != s.end();) it = inZ[static_cast<size_t>(*it)] ? s.erase(it) : std::next(it);
  };
  strip(A);
  strip(B);
  if (A.empty() || B.empty()) return true;
  const std::vector<char> reach = reachable(d, A, inZ);
  for (NodeId b : B)
    if (reach[static_cast<size_t>(b)]) return false;
  return true;
}

}  // namespace

NodeSet det_closure(const Graph& g, const NodeSet& C) {
  std::vector<char> in = closure_in(DagView(g), C);
  NodeSet out;
  for (size_t i = 0; i < in.size(); ++i)
    if (in[i]) out.insert(static_cast<NodeId>(i));
  return out;
}

RootDecomposition root_decomposition(const Graph& g, NodeId l, const NodeSet& C) {
  RootDecomposition rd;
  NodeSet cur{l};
  while (true) {
    NodeSet next;
    for (NodeId x : cur) {
      if (g.is_stochastic(x) || g.is_input(x) || C.count(x)) next.insert(x);
      else next.insert(g.node(x).parents.begin(), g.node(x).parents.end());
    }
    if (next == cur) break;
    cur = std::move(next);
  }
  rd.V = cur;
  for (NodeId w : g.stochastic()) {
    if (C.count(w)) continue;
    for (NodeId x : rd.V)
      if (exists_unblocked_path(g, w, x, C)) {
        rd.W.insert(w);
        break;
      }
  }
  return rd;
}

bool d_separated(const Graph& g, const NodeSet& A, const NodeSet& B, const NodeSet& Z) {
  return d_sep_view(DagView(g), A, B, Z);
}

bool d_separated_logp(const Graph& g, NodeId v, const NodeSet& B, const NodeSet& Z) {
  DagView d(g);
  std::vector<NodeId> ps{v};
  ps.insert(ps.end(), g.node(v).parents.begin(), g.node(v).parents.end());
  const NodeId lam = d.add_deterministic(ps);
  return d_sep_view(d, {lam}, B, Z);
}

bool is_valid_baseline_set(const Graph& g, NodeId v, const NodeSet& B) {
  for (NodeId d : descendants(g, v))
    if (B.count(d)) return false;
  return true;
}

bool is_valid_critic_set(const Graph& g, NodeId v, const NodeSet& C) {
  if (!C.count(v)) return false;
  const NodeSet closure = det_closure(g, C);
  NodeSet rest;
  for (NodeId c : cost_to_go_set(g, v))
    if (!closure.count(c)) rest.insert(c);
  return d_separated_logp(g, v, rest, C);
}

bool is_markov_costs(const Graph& g, const NodeSet& X, const NodeSet& costs) {
  // Inputs are fixed constants; their descendants in X do not break Markovness.
  for (NodeId w = 0; w < static_cast<NodeId>(g.size()); ++w) {
    if (X.count(w) || g.is_input(w)) continue;
    bool reaches = false;
    for (NodeId c : costs) {
      if (X.count(c)) continue;
      if (exists_unblocked_path(g, w, c, X)) {
        reaches = true;
        break;
      }
    }
    if (!reaches) continue;
    for (NodeId d : descendants(g, w))
      if (X.count(d)) return false;
  }
  return true;
}

bool is_markov(const Graph& g, const NodeSet& X, NodeId v) { return is_markov_costs(g, X, cost_to_go_set(g, v)); }

NodeSet ancestors_closure(const Graph& g, const NodeSet& X) {
  NodeSet out;
  for (NodeId x : X) {
    NodeSet a = ancestors(g, x);
    out.insert(a.begin(), a.end());
  }
  return out;
}

bool is_congruent(const NodeSet& B, const NodeSet& C) { return std::includes(C.begin(), C.end(), B.begin(), B.end()); }

NodeSet maximal_congruent_baseline(const Graph& g, NodeId v, const NodeSet& C) {
  NodeSet out = C;
  for (NodeId d : descendants(g, v)) out.erase(d);
  return out;
}

SeparatorVerdict separator_verdict(const Graph& g, NodeId u, const std::vector<NodeId>& S) {
  SeparatorVerdict verdict;
  const NodeSet inS(S.begin(), S.end());
  // Walk deterministic edges of the surrogate loss from u. A stochastic child
  // contributes log p(child), a direct term of the loss, so reaching it escapes.
  std::vector<char> seen(g.size(), 0);
  std::vector<NodeId> stack{u};
  seen[static_cast<size_t>(u)] = 1;
  while (!stack.empty()) {
    NodeId x = stack.back();
    stack.pop_back();
    if (x != u && g.is_cost(x)) {
      verdict.escape = x;
      return verdict;
    }
    for (NodeId c : g.node(x).children) {
      if (g.is_stochastic(c)) {
        verdict.escape = c;
        return verdict;
      }
      if (inS.count(c) || seen[static_cast<size_t>(c)]) continue;
      seen[static_cast<size_t>(c)] = 1;
      stack.push_back(c);
    }
  }
  bool ordered = false;
  for (NodeId a : S) {
    const NodeSet d = descendants(g, a);
    for (NodeId b : S)
      if (b != a && d.count(b)) ordered = true;
  }
  verdict.order = S;
  std::stable_sort(verdict.order.begin(), verdict.order.end(),
                   [&](NodeId a, NodeId b) { return g.position(a) < g.position(b); });
  verdict.kind = ordered ? SeparatorVerdict::Kind::OrderedOnly : SeparatorVerdict::Kind::Unordered;
  if (!ordered) verdict.order.clear();
  return verdict;
}

bool check_decomposition(const Graph& g, NodeId v, const std::vector<NodeSet>& parts) {
  NodeSet seen;
  for (const NodeSet& p : parts)
    for (NodeId c : cost_to_go_set(g, p))
      if (!seen.insert(c).second) return false;
  return seen == cost_to_go_set(g, v);
}

bool validate_bootstrap(const Graph& g, NodeId v, const NodeSet& X_v,
                        const std::vector<std::pair<NodeSet, NodeSet>>& parts) {
  std::vector<NodeSet> sets;
  for (const auto& p : parts) sets.push_back(p.first);
  if (!check_decomposition(g, v, sets))
    throw Error(Errc::DecompositionInvalid, "parts do not partition the cost-to-go of '" + g.name(v) + "'");
  bool subset = true;
  for (const auto& p : parts) subset = subset && is_congruent(X_v, p.second);
  if (subset) return true;
  for (const auto& p : parts) {
    if (!is_markov_costs(g, p.second, cost_to_go_set(g, p.first))) return false;
    if (!is_congruent(X_v, ancestors_closure(g, p.second))) return false;
  }
  return true;
}

}  // namespace scg
