// Randomized invariants checked against exact enumeration.
#include "doctest.h"
#include "scg/analysis.hpp"
#include "scg/estimators.hpp"
#include "scg/fixtures.hpp"
#include "scg/oracle.hpp"

using namespace scg;

namespace {

bool discrete(const Graph& g) {
  for (NodeId v = 0; v < static_cast<NodeId>(g.size()); ++v)
    if (g.is_continuous(v)) return false;
  return true;
}

std::vector<NodeId> non_inputs(const Graph& g) {
  std::vector<NodeId> out;
  for (NodeId v = 0; v < static_cast<NodeId>(g.size()); ++v)
    if (!g.is_input(v)) out.push_back(v);
  return out;
}

NodeSet random_subset(const std::vector<NodeId>& pool, Rng& rng) {
  NodeSet s;
  for (NodeId v : pool)
    if (rng() & 1) s.insert(v);
  return s;
}

// E[f | X] evaluated on each atom.
std::vector<double> cond_mean(const SupportTable& t, const NodeSet& X, const std::function<double(const Assignment&)>& f) {
  const ValueFn m = exact_value(t, X, f);
  std::vector<double> out;
  for (const Atom& a : t.atoms) out.push_back(m.value(a.a));
  return out;
}

double max_gap(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_SUITE("properties") {
  TEST_CASE("a valid critic set preserves E[score * cost-to-go]") {
    Rng rng(101);
    size_t checked = 0;
    for (const Fixture& f : fixtures()) {
      if (!discrete(f.graph) || f.graph.inputs().empty()) continue;
      const SupportTable t = enumerate_support(f.graph, f.inputs());
      const std::vector<NodeId> pool = non_inputs(f.graph);
      for (NodeId v : f.graph.stochastic()) {
        const NodeSet ctg = cost_to_go_set(f.graph, v);
        for (int trial = 0; trial < 30; ++trial) {
          NodeSet C = random_subset(pool, rng);
          C.insert(v);
          if (!is_valid_critic_set(f.graph, v, C)) continue;
          const ValueFn Q = exact_value(t, C, ctg);
          std::vector<double> lhs(f.graph.inputs().size()), rhs(lhs.size());
          for (const Atom& a : t.atoms) {
            const std::vector<double> s = score_vector(f.graph, a.a, v);
            for (size_t k = 0; k < s.size(); ++k) {
              lhs[k] += a.p * s[k] * cost_sum(a.a, ctg);
              rhs[k] += a.p * s[k] * Q.value(a.a);
            }
          }
          CAPTURE(f.name);
          CHECK(max_gap(lhs, rhs) <= 1e-10);
          ++checked;
        }
      }
    }
    CHECK(checked > 20);
  }

  TEST_CASE("unordered separators have no ancestor relations inside S") {
    Rng rng(7);
    size_t unordered = 0;
    for (const Fixture& f : fixtures()) {
      for (NodeId u = 0; u < static_cast<NodeId>(f.graph.size()); ++u) {
        std::vector<NodeId> pool;
        for (NodeId w : descendants(f.graph, u))
          if (w != u) pool.push_back(w);
        if (pool.empty()) continue;
        for (int trial = 0; trial < 20; ++trial) {
          const NodeSet S = random_subset(pool, rng);
          if (S.empty()) continue;
          const std::vector<NodeId> s(S.begin(), S.end());
          const SeparatorVerdict sv = separator_verdict(f.graph, u, s);
          if (sv.kind != SeparatorVerdict::Kind::Unordered) continue;
          ++unordered;
          for (NodeId a : s)
            for (NodeId b : s)
              if (a != b) CHECK(descendants(f.graph, a).count(b) == 0);
        }
      }
    }
    CHECK(unordered > 10);
  }

  TEST_CASE("Markov sets screen off their ancestors") {
    Rng rng(23);
    size_t markov = 0;
    for (const Fixture& f : fixtures()) {
      if (!discrete(f.graph)) continue;
      const SupportTable t = enumerate_support(f.graph, f.inputs());
      const std::vector<NodeId> pool = non_inputs(f.graph);
      for (NodeId v : pool) {
        const NodeSet ctg = cost_to_go_set(f.graph, v);
        const auto L = [&](const Assignment& a) { return cost_sum(a, ctg); };
        for (int trial = 0; trial < 20; ++trial) {
          NodeSet X = random_subset(pool, rng);
          X.insert(v);
          if (!is_markov(f.graph, X, v)) continue;
          ++markov;
          CAPTURE(f.name);
          CHECK(max_gap(cond_mean(t, X, L), cond_mean(t, ancestors_closure(f.graph, X), L)) <= 1e-10);
        }
      }
    }
    CHECK(markov > 20);
  }

  TEST_CASE("a validated bootstrap reproduces the value function") {
    Rng rng(5);
    size_t validated = 0;
    const Fixture& c = fixture("CHAIN2");
    const SupportTable t = enumerate_support(c.graph, c.inputs());
    const std::vector<NodeId> pool = non_inputs(c.graph);
    const NodeId s0 = c.id("s0");
    const NodeSet r0 = c.set({"r0"}), s1 = c.set({"s1"});
    for (int trial = 0; trial < 200; ++trial) {
      NodeSet X = random_subset(pool, rng), X1 = random_subset(pool, rng);
      X.insert(s0);
      X1.insert(c.id("s1"));
      const std::vector<std::pair<NodeSet, NodeSet>> parts{{r0, r0}, {s1, X1}};
      if (!validate_bootstrap(c.graph, s0, X, parts)) continue;
      ++validated;
      const ValueFn V1 = exact_value(t, X1, cost_to_go_set(c.graph, s1));
      const auto target = [&](const Assignment& a) { return a[c.id("r0")] + V1.value(a); };
      const auto L = [&](const Assignment& a) { return cost_sum(a, cost_to_go_set(c.graph, s0)); };
      CHECK(max_gap(cond_mean(t, X, target), cond_mean(t, X, L)) <= 1e-10);
    }
    CHECK(validated > 5);
  }
}
