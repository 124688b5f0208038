#include "scg/fixtures.hpp"

#include "scg/analysis.hpp"
#include "scg/error.hpp"

namespace scg {

using nlohmann::json;

namespace {

using D = std::vector<NodeDecl>;

const char* kSigmoidTh = "(recip (add 1 (exp (neg th))))";

Fixture fig11a() {
  Fixture f;
  f.name = "FIG11A";
  f.summary = "deterministic: v1 = 2v, v2 = v*v1, l = v1 + 3*v2";
  f.graph = build_graph(D{
      decl::input("v"),
      decl::deterministic("v1", {"v"}, "(mul 2 v)"),
      decl::deterministic("v2", {"v", "v1"}, "(mul v v1)"),
      decl::cost("l", {"v1", "v2"}, "(add v1 (mul 3 v2))"),
  });
  f.canonical = {{"v", 0.5}};
  f.sets = {{"separator", "v", {"v1", "v2"}, {}, {}}, {"separator", "v", {"v1"}, {}, {}}};
  return f;
}

Fixture fig11b() {
  Fixture f;
  f.name = "FIG11B";
  f.summary = "deterministic: v1 = x+1, v2 = v1*x, v3 = 2*v1, v4 = v2+v3, l = v3*v4";
  f.graph = build_graph(D{
      decl::input("x"),
      decl::deterministic("v1", {"x"}, "(add x 1)"),
      decl::deterministic("v2", {"v1", "x"}, "(mul v1 x)"),
      decl::deterministic("v3", {"v1"}, "(mul 2 v1)"),
      decl::deterministic("v4", {"v2", "v3"}, "(add v2 v3)"),
      decl::cost("l", {"v3", "v4"}, "(mul v3 v4)"),
  });
  f.canonical = {{"x", 1.0}};
  f.sets = {{"separator", "x", {"v2", "v3"}, {}, {}},
            {"separator", "x", {"v3", "v4"}, {}, {}},
            {"separator", "x", {"v3"}, {}, {}},
            {"separator", "x", {"v1"}, {}, {}}};
  return f;
}

Fixture noise() {
  Fixture f;
  f.name = "NOISE";
  f.summary = "z ~ Bernoulli(sigmoid(th)), independent noise zp = +-1, l = l(z) + 10*zp";
  f.graph = build_graph(D{
      decl::input("th"),
      decl::bernoulli("z", {"th"}, kSigmoidTh),
      decl::categorical("zp", {}, {"0", "0"}),
      decl::cost("l", {"z", "zp"}, "(add (select z 1 3) (affine -10 20 zp))"),
  });
  f.canonical = {{"th", 0.0}};
  f.sets = {{"critic", "z", {"z", "zp"}, {}, {}}, {"critic", "z", {"z"}, {}, {}},
            {"baseline", "z", {"zp"}, {}, {}},    {"baseline", "z", {}, {}, {}},
            {"nested", "z", {}, {"zp"}, {"z", "zp"}}};
  return f;
}

Fixture noncong() {
  Fixture f;
  f.name = "NONCONG";
  f.summary = "shared large noise v0 in v1 and v1p, small independent noise n1, n1p; l = v1 + v1p";
  f.graph = build_graph(D{
      decl::input("th"),
      decl::bernoulli("z", {"th"}, kSigmoidTh),
      decl::categorical("v0", {}, {"0", "0"}),
      decl::categorical("n1", {}, {"0", "0"}),
      decl::categorical("n1p", {}, {"0", "0"}),
      decl::deterministic("v1", {"z", "v0", "n1"}, "(add (select z 1 3) (affine -10 20 v0) (affine -1 2 n1))"),
      decl::deterministic("v1p", {"v0", "n1p"}, "(add (affine -10 20 v0) (affine -1 2 n1p))"),
      decl::cost("l", {"v1", "v1p"}, "(add v1 v1p)"),
  });
  f.canonical = {{"th", 0.0}};
  f.sets = {{"critic", "z", {"z", "v1"}, {}, {}},
            {"baseline", "z", {"v1p"}, {}, {}},
            {"baseline", "z", {}, {}, {}},
            {"baseline", "z", {"v1"}, {}, {}}};
  return f;
}

Fixture tree4() {
  Fixture f;
  f.name = "TREE4";
  f.summary = "v0 -> v1 -> {v2, v3}; l1 after v1 (also reads v0), l3 after v3";
  f.graph = build_graph(D{
      decl::input("th"),
      decl::categorical("v0", {}, {"0", "0.3"}),
      decl::categorical("v1", {"th", "v0"}, {"0", "(add th (select v0 -1 1))"}),
      decl::categorical("v2", {"v1"}, {"0", "(select v1 0.2 -0.4)"}),
      decl::categorical("v3", {"v1"}, {"0", "(select v1 -0.5 0.7)"}),
      decl::cost("l1", {"v0", "v1"}, "(select v0 (select v1 1 3) (select v1 -2 0.5))"),
      decl::cost("l3", {"v2", "v3"}, "(add (select v3 0 2) (select v2 0.5 -1))"),
  });
  f.canonical = {{"th", 0.3}};
  f.sets = {{"critic", "v1", {"v1"}, {}, {}},
            {"critic", "v1", {"v0", "v1"}, {}, {}},
            {"critic", "v2", {"v2"}, {}, {}},
            {"critic", "v2", {"v0", "v1", "v2"}, {}, {}},
            {"markov", "v1", {"v1"}, {}, {}},
            {"markov", "v1", {"v0", "v1"}, {}, {}},
            {"markov", "v3", {"v3"}, {}, {}},
            {"baseline", "v1", {"v0"}, {}, {}},
            {"baseline", "v1", {"v2"}, {}, {}},
            {"baseline", "v2", {"v0", "v1"}, {}, {}},
            {"nested", "v1", {}, {"v0"}, {"v0", "v1"}},
            {"nested", "v2", {"v1"}, {"v0", "v1"}, {"v0", "v1", "v2"}}};
  f.bootstraps = {{"v1", {"v0", "v1"}, {{{"l1"}, {"l1"}}, {{"v2", "v3"}, {"v1"}}}}};
  return f;
}

Fixture decomp() {
  Fixture f;
  f.name = "DECOMP";
  f.summary = "vr -> v1 -> v3 -> d -> l, v0 -> v2 -> d, vr -> v4 -> l; conditioning set {vr, v2, v4}";
  f.graph = build_graph(D{
      decl::categorical("v0", {}, {"0", "0.2"}),
      decl::categorical("vr", {}, {"0", "-0.3"}),
      decl::categorical("v1", {"vr"}, {"0", "(select vr 0.5 -0.5)"}),
      decl::categorical("v2", {"v0"}, {"0", "(select v0 0.4 -0.6)"}),
      decl::categorical("v3", {"v1"}, {"0", "(select v1 -0.2 0.9)"}),
      decl::deterministic("d", {"v2", "v3"}, "(add v2 (mul 2 v3))"),
      decl::categorical("v4", {"vr"}, {"0", "(select vr 0.1 -0.7)"}),
      decl::cost("l", {"d", "v4"}, "(add (mul d v4) d)"),
  });
  f.sets = {{"decomposition", "l", {"vr", "v2", "v4"}, {}, {}},
            {"decomposition", "l", {}, {}, {}},
            {"decomposition", "l", {"v0", "vr", "v1", "v2", "v3", "v4"}, {}, {}},
            {"markov", "v2", {"v2"}, {}, {}},
            {"critic", "v3", {"v3"}, {}, {}}};
  return f;
}

ChainSpec chain_of(const Graph& g) {
  return ChainSpec{{g.id("s0"), g.id("s1")}, {g.id("a0"), g.id("a1")}, {g.id("r0"), g.id("r1")}};
}

void chain_sets(Fixture& f) {
  f.sets = {{"critic", "a0", {"s0", "a0"}, {}, {}},
            {"critic", "a1", {"s1", "a1"}, {}, {}},
            {"critic", "a0", {"a0"}, {}, {}},
            {"baseline", "a0", {"s0"}, {}, {}},
            {"baseline", "a1", {"s1"}, {}, {}},
            {"baseline", "a1", {"s0", "a0", "s1"}, {}, {}},
            {"baseline", "a0", {"s1"}, {}, {}},
            {"markov", "a0", {"s0", "a0"}, {}, {}},
            {"markov", "a1", {"s1", "a1"}, {}, {}},
            {"markov", "s1", {"s1"}, {}, {}},
            {"markov", "s0", {"s0"}, {}, {}},
            {"nested", "a0", {}, {"s0"}, {"s0", "a0"}},
            {"nested", "a1", {}, {"s1"}, {"s1", "a1"}},
            {"nested", "a1", {"s1"}, {"s0", "a0", "s1"}, {"s0", "a0", "s1", "a1"}}};
  f.bootstraps = {{"s0", {"s0"}, {{{"r0"}, {"r0"}}, {{"s1"}, {"s1"}}}},
                  {"a0", {"s0", "a0"}, {{{"r0"}, {"r0"}}, {{"s1"}, {"s1"}}}},
                  {"a0", {"s0", "a0"}, {{{"r0"}, {"r0"}}, {{"s1", "a1"}, {"s1", "a1"}}}},
                  {"s1", {"s1"}, {{{"a1"}, {"s1", "a1"}}}}};
}

Fixture chain2() {
  Fixture f;
  f.name = "CHAIN2";
  f.summary = "2-state 2-action 2-step decision process, policy logits linear in (th0, th1)";
  f.graph = build_graph(D{
      decl::input("th0"),
      decl::input("th1"),
      decl::categorical("s0", {}, {"0", "0.4"}),
      decl::categorical("a0", {"s0", "th0", "th1"}, {"0", "(select s0 th0 th1)"}),
      decl::cost("r0", {"s0", "a0"}, "(select s0 (select a0 1 -0.5) (select a0 0.2 0.8))"),
      decl::categorical("s1", {"s0", "a0"}, {"0", "(select s0 (select a0 -1 1.2) (select a0 0.5 -0.3))"}),
      decl::categorical("a1", {"s1", "th0", "th1"}, {"0", "(select s1 th0 th1)"}),
      decl::cost("r1", {"s1", "a1"}, "(select s1 (select a1 0.3 2) (select a1 -1 0.6))"),
  });
  f.canonical = {{"th0", 0.0}, {"th1", 0.0}};
  f.chain = chain_of(f.graph);
  chain_sets(f);
  return f;
}

Fixture chain2g() {
  Fixture f;
  f.name = "CHAIN2-G";
  f.summary = "CHAIN2 with Gaussian actions and quadratic rewards";
  f.graph = build_graph(D{
      decl::input("th"),
      decl::categorical("s0", {}, {"0", "0.4"}),
      decl::gaussian("a0", {"th", "s0"}, "(add (mul th (select s0 -1 1)) 0.1)", "-0.7"),
      decl::cost("r0", {"a0", "s0"}, "(pow (add a0 (select s0 -0.5 0.3)) 2)"),
      decl::categorical("s1", {"s0", "a0"}, {"0", "(affine 0.2 0.8 a0 1 (select s0 -0.3 0.4))"}),
      decl::gaussian("a1", {"th", "s1"}, "(add (mul th (select s1 -1 1)) -0.2)", "-0.7"),
      decl::cost("r1", {"a1", "s1"}, "(pow (add a1 (select s1 0.4 -0.6)) 2)"),
  });
  f.canonical = {{"th", 0.2}};
  f.chain = chain_of(f.graph);
  chain_sets(f);
  f.grad_bootstraps = {{{"a0", "a1"}, "th", {"a0", "a1"}, {}, {{"s0", "a0"}, {"s1", "a1"}}},
                       {{"a0", "a1"}, "a1", {"r1"}, {"s1", "a1"}, {{"s1", "a1", "r1"}}}};
  return f;
}

Fixture chain2bb() {
  Fixture f;
  f.name = "CHAIN2-BB";
  f.summary = "CHAIN2 whose policy parameters tp_i are drawn from two-point distributions with mean th_i";
  f.graph = build_graph(D{
      decl::input("th0"),
      decl::input("th1"),
      decl::bernoulli("k0", {"th0"}, "(affine 0.5 0.5 th0)"),
      decl::bernoulli("k1", {"th1"}, "(affine 0.5 0.5 th1)"),
      decl::deterministic("tp0", {"k0"}, "(affine -1 2 k0)"),
      decl::deterministic("tp1", {"k1"}, "(affine -1 2 k1)"),
      decl::categorical("s0", {}, {"0", "0.4"}),
      decl::deterministic("pi0", {"s0", "tp0", "tp1"}, "(select s0 tp0 tp1)"),
      decl::categorical("a0", {"pi0"}, {"0", "pi0"}),
      decl::cost("r0", {"s0", "a0"}, "(select s0 (select a0 1 -0.5) (select a0 0.2 0.8))"),
      decl::categorical("s1", {"s0", "a0"}, {"0", "(select s0 (select a0 -1 1.2) (select a0 0.5 -0.3))"}),
      decl::deterministic("pi1", {"s1", "tp0", "tp1"}, "(select s1 tp0 tp1)"),
      decl::categorical("a1", {"pi1"}, {"0", "pi1"}),
      decl::cost("r1", {"s1", "a1"}, "(select s1 (select a1 0.3 2) (select a1 -1 0.6))"),
  });
  f.canonical = {{"th0", 0.1}, {"th1", -0.2}};
  f.chain = chain_of(f.graph);
  f.sets = {{"critic", "a1", {"s1", "pi1", "a1"}, {}, {}},
            {"critic", "k0", {"k0"}, {}, {}},
            {"critic", "k0", {"k0", "k1"}, {}, {}},
            {"baseline", "a1", {"s1", "pi1"}, {}, {}},
            {"markov", "a1", {"s1", "pi1", "a1"}, {}, {}}};
  return f;
}

Fixture factored() {
  Fixture f;
  f.name = "FACTORED";
  f.summary = "one state, two independent action dimensions with separate parameters";
  f.graph = build_graph(D{
      decl::input("th0"),
      decl::input("th1"),
      decl::categorical("s", {}, {"0", "0.3"}),
      decl::categorical("a0", {"th0", "s"}, {"0", "(add th0 (select s 0.5 -0.5))"}),
      decl::categorical("a1", {"th1", "s"}, {"0", "(add th1 (select s -0.3 0.4))"}),
      decl::cost("r", {"s", "a0", "a1"},
                 "(select s (select a0 (select a1 1 -1) (select a1 0.5 2)) (select a0 (select a1 -0.5 0) (select a1 3 1)))"),
  });
  f.canonical = {{"th0", 0.2}, {"th1", -0.1}};
  f.sets = {{"critic", "a0", {"s", "a0"}, {}, {}},
            {"critic", "a0", {"s", "a0", "a1"}, {}, {}},
            {"baseline", "a0", {"s", "a1"}, {}, {}},
            {"baseline", "a0", {"s"}, {}, {}},
            {"nested", "a0", {}, {"s"}, {"s", "a0"}},
            {"nested", "a0", {"s"}, {"s", "a1"}, {"s", "a0", "a1"}},
            {"markov", "a0", {"s", "a0"}, {}, {}}};
  return f;
}

}  // namespace

const std::vector<Fixture>& fixtures() {
  static const std::vector<Fixture> all = {fig11a(), fig11b(), noise(),   noncong(),  tree4(),
                                           decomp(), chain2(), chain2g(), chain2bb(), factored()};
  return all;
}

const Fixture& fixture(const std::string& name) {
  for (const Fixture& f : fixtures())
    if (f.name == name) return f;
  throw Error(Errc::ConfigError, "unknown fixture '" + name + "'");
}

json analysis_report(const Fixture& f) {
  const Graph& g = f.graph;
  json r;
  r["fixture"] = f.name;
  r["order"] = g.names(g.order());
  json nodes = json::array();
  for (NodeId v : g.order()) {
    json n;
    n["name"] = g.name(v);
    n["kind"] = kind_name(g.node(v).kind);
    n["descendants"] = g.names(descendants(g, v));
    n["cost_to_go"] = g.names(cost_to_go_set(g, v));
    nodes.push_back(n);
  }
  r["nodes"] = nodes;
  json sets = json::array();
  for (const SetChoice& s : f.sets) {
    json e;
    e["kind"] = s.kind;
    e["node"] = s.node;
    e["A"] = s.A;
    const NodeId v = g.id(s.node);
    const NodeSet A = g.set(s.A);
    if (s.kind == "critic") {
      e["valid"] = is_valid_critic_set(g, v, A);
    } else if (s.kind == "baseline") {
      e["valid"] = is_valid_baseline_set(g, v, A);
    } else if (s.kind == "markov") {
      e["markov"] = is_markov(g, A, v);
    } else if (s.kind == "separator") {
      std::vector<NodeId> S;
      for (const auto& n : s.A) S.push_back(g.id(n));
      const SeparatorVerdict sv = separator_verdict(g, v, S);
      e["verdict"] = verdict_name(sv.kind);
      e["order"] = g.names(sv.order);
      if (sv.escape >= 0) e["escape"] = g.name(sv.escape);
    } else if (s.kind == "nested") {
      e["B"] = s.B;
      e["C"] = s.C;
      const NodeSet B = g.set(s.B), C = g.set(s.C);
      e["inner_valid"] = is_valid_baseline_set(g, v, A);
      e["outer_valid"] = is_valid_baseline_set(g, v, B);
      e["critic_valid"] = is_valid_critic_set(g, v, C);
      e["nested"] = is_congruent(A, B) && is_congruent(B, C);
    } else if (s.kind == "decomposition") {
      const RootDecomposition d = root_decomposition(g, v, A);
      e["V"] = g.names(d.V);
      e["W"] = g.names(d.W);
    } else {
      throw Error(Errc::ConfigError, "unknown set kind '" + s.kind + "'");
    }
    sets.push_back(e);
  }
  r["sets"] = sets;
  json boots = json::array();
  for (const BootstrapChoice& b : f.bootstraps) {
    json e;
    e["node"] = b.node;
    e["X"] = b.X;
    std::vector<std::pair<NodeSet, NodeSet>> parts;
    json jp = json::array();
    for (const auto& [nodes, cond] : b.parts) {
      parts.emplace_back(g.set(nodes), g.set(cond));
      jp.push_back({{"nodes", nodes}, {"cond", cond}});
    }
    e["parts"] = jp;
    try {
      e["valid"] = validate_bootstrap(g, g.id(b.node), g.set(b.X), parts);
    } catch (const Error& err) {
      e["valid"] = false;
      e["error"] = errc_name(err.code());
    }
    boots.push_back(e);
  }
  r["bootstraps"] = boots;
  return r;
}

json analyze_node(const Graph& g, NodeId v, const NodeQuery& q) {
  const Node& n = g.node(v);
  json r;
  r["node"] = n.name;
  r["kind"] = kind_name(n.kind);
  r["parents"] = g.names(n.parents);
  r["descendants"] = g.names(descendants(g, v));
  r["cost_to_go"] = g.names(cost_to_go_set(g, v));
  r["det_closure"] = g.names(det_closure(g, {v}));

  NodeSet parents(n.parents.begin(), n.parents.end()), anc;
  for (NodeId w : ancestors(g, v))
    if (!g.is_input(w)) anc.insert(w);
  for (NodeId w : n.parents)
    if (g.is_input(w)) parents.erase(w);
  auto verdicts = [&](const NodeSet& X) {
    json e;
    e["set"] = g.names(X);
    e["valid_critic"] = is_valid_critic_set(g, v, X);
    e["valid_baseline"] = is_valid_baseline_set(g, v, X);
    e["markov"] = is_markov(g, X, v);
    return e;
  };
  NodeSet self_parents = parents, self_anc = anc;
  self_parents.insert(v);
  self_anc.insert(v);
  json cands = json::object();
  cands["empty"] = verdicts({});
  cands["self"] = verdicts({v});
  cands["parents"] = verdicts(parents);
  cands["self_and_parents"] = verdicts(self_parents);
  cands["ancestors"] = verdicts(anc);
  cands["self_and_ancestors"] = verdicts(self_anc);
  r["candidates"] = cands;

  const NodeSet C = q.critic ? *q.critic : self_anc;
  r["maximal_congruent_baseline"] = {{"critic", g.names(C)},
                                     {"baseline", g.names(maximal_congruent_baseline(g, v, C))}};
  json decomp = json::array();
  for (NodeId l : cost_to_go_set(g, v)) {
    const RootDecomposition d = root_decomposition(g, l, C);
    decomp.push_back({{"cost", g.name(l)}, {"V", g.names(d.V)}, {"W", g.names(d.W)}});
  }
  r["root_decompositions"] = decomp;
  if (!n.children.empty()) {
    const SeparatorVerdict sv = separator_verdict(g, v, n.children);
    r["children_as_separator"] = {{"S", g.names(n.children)}, {"verdict", verdict_name(sv.kind)}};
  }

  json asked = json::object();
  if (q.critic) asked["critic"] = verdicts(*q.critic);
  if (q.baseline) {
    json e = verdicts(*q.baseline);
    if (q.critic) e["congruent_with_critic"] = is_congruent(*q.baseline, *q.critic);
    asked["baseline"] = e;
  }
  if (q.markov) asked["markov"] = verdicts(*q.markov);
  if (q.separator) {
    const SeparatorVerdict sv = separator_verdict(g, v, *q.separator);
    json e{{"S", g.names(*q.separator)}, {"verdict", verdict_name(sv.kind)}, {"order", g.names(sv.order)}};
    if (sv.escape >= 0) e["escape"] = g.name(sv.escape);
    asked["separator"] = e;
  }
  if (!asked.empty()) r["query"] = asked;
  return r;
}

}  // namespace scg
