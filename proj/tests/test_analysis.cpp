#include "doctest.h"
#include "scg/analysis.hpp"
#include "scg/error.hpp"
#include "scg/fixtures.hpp"
#include "scg/oracle.hpp"

using namespace scg;

namespace {

const Fixture& F(const char* n) { return fixture(n); }

SeparatorVerdict::Kind verdict(const Fixture& f, const char* u, std::vector<const char*> S) {
  std::vector<NodeId> s;
  for (const char* n : S) s.push_back(f.id(n));
  return separator_verdict(f.graph, f.id(u), s).kind;
}

// h feeds both the part node n and its cost, so V(n) is not Markov.
Graph hidden_parent() {
  return build_graph({
      decl::bernoulli("h", {}, "0.5"),
      decl::bernoulli("s", {}, "0.3"),
      decl::categorical("n", {"s", "h"}, {"0", "(add s h)"}),
      decl::cost("c0", {"s"}, "(mul 2 s)"),
      decl::cost("c1", {"n", "h"}, "(add n (mul 3 h))"),
  });
}

}  // namespace

TEST_SUITE("graph_analysis") {
  TEST_CASE("deterministic closure") {
    const Fixture& f = F("FIG11B");
    CHECK(det_closure(f.graph, f.set({"x"})).size() == 6);
    const Fixture& c = F("CHAIN2");
    NodeSet want = c.set({"s0", "a0", "r0"});
    for (NodeId i : c.graph.inputs()) want.insert(i);
    CHECK(det_closure(c.graph, c.set({"s0", "a0"})) == want);
    const Graph g = build_graph({decl::bernoulli("z", {}, "0.5"), decl::cost("l", {"z"}, "z")});
    CHECK(det_closure(g, {}).empty());
  }

  TEST_CASE("root decomposition") {
    const Fixture& d = F("DECOMP");
    const RootDecomposition r = root_decomposition(d.graph, d.id("l"), d.set({"vr", "v2", "v4"}));
    CHECK(r.W == d.set({"v3", "v1"}));
    CHECK(r.W.count(d.id("vr")) == 0);
    NodeSet all;
    for (NodeId v : d.graph.stochastic()) all.insert(v);
    CHECK(root_decomposition(d.graph, d.id("l"), all).W.empty());
    const Fixture& c = F("CHAIN2");
    const RootDecomposition rc = root_decomposition(c.graph, c.id("r1"), c.set({"s1", "a1"}));
    CHECK(rc.W.empty());
    CHECK(rc.V.count(c.id("s1")) == 1);
    CHECK(rc.V.count(c.id("a1")) == 1);
  }

  TEST_CASE("d-separation") {
    const Fixture& c = F("CHAIN2");
    CHECK(d_separated_logp(c.graph, c.id("a0"), c.set({"r1"}), c.set({"s0", "a0", "s1"})));
    CHECK(d_separated(c.graph, c.set({"r0"}), c.set({"r1"}), c.set({"s0", "a0"})));
    CHECK_FALSE(d_separated(c.graph, c.set({"a0"}), c.set({"r1"}), c.set({"s0"})));
    CHECK(d_separated(c.graph, c.set({"s0"}), c.set({"r1"}), c.set({"s0"})));
    const Fixture& n = F("NOISE");
    CHECK(d_separated(n.graph, n.set({"z"}), n.set({"zp"}), {}));
    // Deterministic copy.
    const Graph g = build_graph({decl::bernoulli("z", {}, "0.5"), decl::deterministic("y", {"z"}, "z")});
    CHECK_FALSE(d_separated(g, {g.id("z")}, {g.id("y")}, {}));
    // Explaining away: a collider observed.
    const Graph col = build_graph({decl::bernoulli("a", {}, "0.5"), decl::bernoulli("b", {}, "0.5"),
                                   decl::categorical("c", {"a", "b"}, {"0", "(add a b)"})});
    CHECK(d_separated(col, {col.id("a")}, {col.id("b")}, {}));
    CHECK_FALSE(d_separated(col, {col.id("a")}, {col.id("b")}, {col.id("c")}));
    const SupportTable t = enumerate_support(col, {});
    CHECK_FALSE(check_ci_numeric(t, {col.id("a")}, {col.id("b")}, {col.id("c")}));
  }

  TEST_CASE("the logp query from the worked list agrees with numeric independence") {
    const Fixture& c = F("CHAIN2");
    const NodeSet Z = c.set({"s0", "a0", "s1"});
    // log p(a0) is a function of (s0, a0), both in Z, so it is separated from anything.
    CHECK(d_separated_logp(c.graph, c.id("a0"), c.set({"r0"}), c.set({"s0", "a0"})));
    const SupportTable t = enumerate_support(c.graph, c.inputs());
    CHECK(check_ci_numeric(t, c.set({"a0"}), c.set({"r1"}), Z) == d_separated(c.graph, c.set({"a0"}), c.set({"r1"}), Z));
  }

  TEST_CASE("baseline sets") {
    const Fixture& c = F("CHAIN2");
    CHECK(is_valid_baseline_set(c.graph, c.id("a1"), c.set({"s0", "a0", "s1"})));
    CHECK(is_valid_baseline_set(c.graph, c.id("a1"), {}));
    CHECK_FALSE(is_valid_baseline_set(c.graph, c.id("a0"), c.set({"s1"})));
    const Fixture& n = F("NOISE");
    CHECK(is_valid_baseline_set(n.graph, n.id("z"), n.set({"zp"})));
  }

  TEST_CASE("critic sets") {
    const Fixture& c = F("CHAIN2");
    CHECK(is_valid_critic_set(c.graph, c.id("a0"), c.set({"s0", "a0"})));
    CHECK_FALSE(is_valid_critic_set(c.graph, c.id("a0"), c.set({"s0"})));
    const Fixture& t = F("TREE4");
    CHECK_FALSE(is_valid_critic_set(t.graph, t.id("v1"), t.set({"v1"})));
    CHECK(is_valid_critic_set(t.graph, t.id("v1"), t.set({"v0", "v1"})));
  }

  TEST_CASE("Markov sets") {
    const Fixture& c = F("CHAIN2");
    CHECK(is_markov(c.graph, c.set({"s1", "a1"}), c.id("a1")));
    NodeSet all;
    for (NodeId v = 0; v < static_cast<NodeId>(c.graph.size()); ++v)
      if (!c.graph.is_input(v) && !c.graph.is_cost(v)) all.insert(v);
    CHECK(is_markov(c.graph, all, c.id("a0")));
    const Fixture& t = F("TREE4");
    CHECK_FALSE(is_markov(t.graph, t.set({"v1"}), t.id("v1")));
    CHECK(is_markov(t.graph, t.set({"v0", "v1"}), t.id("v1")));
  }

  TEST_CASE("ancestor closure") {
    const Fixture& c = F("CHAIN2");
    NodeSet want = c.set({"s1", "s0", "a0"});
    for (NodeId i : c.graph.inputs()) want.insert(i);
    CHECK(ancestors_closure(c.graph, c.set({"s1"})) == want);
    CHECK(ancestors_closure(c.graph, {}).empty());
    NodeSet roots;
    for (NodeId v = 0; v < static_cast<NodeId>(c.graph.size()); ++v)
      if (c.graph.node(v).parents.empty()) roots.insert(v);
    CHECK(ancestors_closure(c.graph, roots) == roots);
  }

  TEST_CASE("congruence") {
    const Fixture& c = F("CHAIN2");
    CHECK(is_congruent({}, c.set({"s0"})));
    CHECK(is_congruent(c.set({"s0"}), c.set({"s0", "a0"})));
    const Fixture& n = F("NOISE");
    CHECK_FALSE(is_congruent(n.set({"zp"}), n.set({"z"})));
    CHECK(maximal_congruent_baseline(c.graph, c.id("a1"), c.set({"s1", "a1"})) == c.set({"s1"}));
    CHECK(maximal_congruent_baseline(c.graph, c.id("a1"), c.set({"s0", "s1"})) == c.set({"s0", "s1"}));
    CHECK(maximal_congruent_baseline(c.graph, c.id("a1"), c.set({"a1"})).empty());
  }

  TEST_CASE("separator verdicts") {
    const Fixture& f = F("FIG11B");
    CHECK(verdict(f, "x", {"v2", "v3"}) == SeparatorVerdict::Kind::Unordered);
    CHECK(verdict(f, "x", {"v3", "v4"}) == SeparatorVerdict::Kind::OrderedOnly);
    CHECK(verdict(f, "x", {"v3"}) == SeparatorVerdict::Kind::NotSeparator);
    const SeparatorVerdict sv = separator_verdict(f.graph, f.id("x"), {f.id("v4"), f.id("v3")});
    CHECK(f.graph.names(sv.order) == std::vector<std::string>{"v3", "v4"});
  }

  TEST_CASE("decomposition") {
    const Fixture& c = F("CHAIN2");
    CHECK(check_decomposition(c.graph, c.id("s0"), {c.set({"r0"}), c.set({"s1"})}));
    CHECK(check_decomposition(c.graph, c.id("s0"), {c.set({"s0"})}));
    CHECK_FALSE(check_decomposition(c.graph, c.id("s0"), {c.set({"r0"}), c.set({"s1"}), c.set({"a1"})}));
  }

  TEST_CASE("bootstrap validity") {
    const Fixture& c = F("CHAIN2");
    const NodeSet s0 = c.set({"s0"}), s1 = c.set({"s1"}), r0 = c.set({"r0"});
    CHECK(validate_bootstrap(c.graph, c.id("s0"), s0, {{r0, r0}, {s1, s1}}));
    CHECK(validate_bootstrap(c.graph, c.id("s0"), s0, {{c.set({"s0"}), s0}}));
    const Graph h = hidden_parent();
    CHECK_FALSE(validate_bootstrap(h, h.id("s"), {h.id("s")}, {{{h.id("c0")}, {h.id("c0")}}, {{h.id("n")}, {h.id("n")}}}));
    try {
      validate_bootstrap(c.graph, c.id("s0"), s0, {{r0, r0}});
      FAIL("expected DecompositionInvalid");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::DecompositionInvalid);
    }
  }
}
