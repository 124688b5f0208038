#include <cstdlib>

#include "doctest.h"
#include "scg/error.hpp"
#include "scg/fixtures.hpp"
#include "scg/oracle.hpp"

using namespace scg;

namespace {

double total_p(const SupportTable& t) {
  double s = 0.0;
  for (const Atom& a : t.atoms) s += a.p;
  return s;
}

// E[total cost] by enumeration at perturbed inputs.
double J(const Graph& g, Inputs in) {
  const SupportTable t = enumerate_support(g, in);
  double s = 0.0;
  for (const Atom& a : t.atoms) s += a.p * total_cost(a.a, g);
  return s;
}

}  // namespace

TEST_SUITE("exact_oracle") {
  TEST_CASE("support sizes") {
    const Fixture& c = fixture("CHAIN2");
    const SupportTable t = enumerate_support(c.graph, c.inputs());
    CHECK(t.atoms.size() == 16);
    CHECK(total_p(t) == doctest::Approx(1.0).epsilon(1e-15));

    const Graph b = build_graph({decl::bernoulli("z", {}, "0.5")});
    const SupportTable tb = enumerate_support(b, {});
    REQUIRE(tb.atoms.size() == 2);
    CHECK(tb.atoms[0].p == doctest::Approx(0.5));
    CHECK(tb.atoms[1].p == doctest::Approx(0.5));

    const Graph n = build_graph({decl::gaussian("x", {}, "0.3", "-0.2")});
    const SupportTable tn = enumerate_support(n, {});
    CHECK(tn.atoms.size() == 16);
    CHECK(std::abs(total_p(tn) - 1.0) <= 1e-12);
  }

  TEST_CASE("Gauss-Hermite integrates low-degree polynomials exactly") {
    const Quadrature& q = gauss_hermite(16);
    // E[z^k] for a standard normal: 0 for odd k, (k-1)!! for even k.
    double dfact = 1.0;
    for (int k = 0; k <= 31; ++k) {
      double m = 0.0, scale = 0.0;
      for (size_t j = 0; j < q.z.size(); ++j) {
        m += q.w[j] * std::pow(q.z[j], k);
        scale += q.w[j] * std::abs(std::pow(q.z[j], k));
      }
      const double want = k % 2 ? 0.0 : dfact;
      CHECK(std::abs(m - want) <= 1e-12 * std::max(1.0, scale));
      if (k % 2 == 1) dfact *= k;
    }
  }

  TEST_CASE("support cap from the environment") {
    const Fixture& c = fixture("CHAIN2");
    setenv("SCG_SUPPORT_CAP", "8", 1);
    CHECK_THROWS_AS(enumerate_support(c.graph, c.inputs()), Error);
    try {
      enumerate_support(c.graph, c.inputs());
    } catch (const Error& e) {
      CHECK(e.code() == Errc::SupportTooLarge);
    }
    unsetenv("SCG_SUPPORT_CAP");
    CHECK(enumerate_support(c.graph, c.inputs()).atoms.size() == 16);
  }

  TEST_CASE("exact values") {
    const Fixture& c = fixture("CHAIN2");
    const Graph& g = c.graph;
    const SupportTable t = enumerate_support(g, c.inputs());
    const NodeId s0 = c.id("s0"), a0 = c.id("a0");
    const ValueFn Q = exact_value(t, {s0, a0}, cost_to_go_set(g, a0));
    const ValueFn V = exact_value(t, {s0}, cost_to_go_set(g, a0));
    CHECK(Q.entries.size() == 4);
    for (double s : {0.0, 1.0}) {
      // Uniform policy at theta = 0.
      const double mix = 0.5 * Q.at({s, 0.0}) + 0.5 * Q.at({s, 1.0});
      CHECK(std::abs(V.at({s}) - mix) <= 1e-12);
    }
    NodeSet all;
    for (NodeId v = 0; v < static_cast<NodeId>(g.size()); ++v) all.insert(v);
    const ValueFn atomwise = exact_value(t, all, g.costs());
    for (const Atom& a : t.atoms) CHECK(atomwise.value(a.a) == doctest::Approx(total_cost(a.a, g)).epsilon(1e-15));
    const ValueFn mean = exact_value(t, {}, g.costs());
    CHECK(mean.entries.size() == 1);
    CHECK(std::abs(mean.at({}) - J(g, c.inputs())) <= 1e-12);
  }

  TEST_CASE("exact gradient critic matches the critic's derivative") {
    const Fixture& f = fixture("CHAIN2-G");
    const Graph& g = f.graph;
    const Inputs in = f.inputs();
    const NodeId s1 = f.id("s1"), a1 = f.id("a1");
    ExactValueFn Q(g, in, {s1, a1}, cost_to_go_set(g, a1));
    ExactGradCritic G(g, in, a1, {s1, a1});
    const SupportTable t = enumerate_support(g, in);
    const ValueFn table = exact_gradient_critic(t, a1, {s1, a1});
    for (int i = 0; i < 40; ++i) {
      const Assignment& a = t.atoms[static_cast<size_t>(i) * 7 % t.atoms.size()].a;
      Assignment up = a, dn = a;
      up.values[static_cast<size_t>(a1)] += 1e-5;
      dn.values[static_cast<size_t>(a1)] -= 1e-5;
      const double fd = (Q.value(up) - Q.value(dn)) / 2e-5;
      CHECK(std::abs(fd - G.value(a)) <= 1e-6 * (1.0 + std::abs(fd)));
      CHECK(std::abs(table.value(a) - G.value(a)) <= 1e-10 * (1.0 + std::abs(fd)));
      CHECK(std::abs(Q.derivative(a, a1) - G.value(a)) <= 1e-10 * (1.0 + std::abs(fd)));
    }
    NodeSet all;
    for (NodeId v = 0; v < static_cast<NodeId>(g.size()); ++v) all.insert(v);
    const ValueFn full = exact_gradient_critic(t, a1, all);
    for (size_t i = 0; i < t.atoms.size(); i += 13)
      CHECK(full.value(t.atoms[i].a) == doctest::Approx(surrogate_derivative(g, t.atoms[i].a, a1)).epsilon(1e-12));
  }

  TEST_CASE("gradient critic of a node with no path to a cost") {
    const Graph g = build_graph({decl::input("th"), decl::bernoulli("z", {"th"}, "0.5"),
                                 decl::bernoulli("w", {}, "0.5"), decl::cost("l", {"w"}, "(mul 3 w)")});
    const SupportTable t = enumerate_support(g, {0.0});
    const ValueFn f = exact_gradient_critic(t, g.id("z"), {g.id("z")});
    for (const auto& [k, v] : f.entries) CHECK(v == 0.0);
    CHECK(exact_parameter_gradient(g, {0.0}, g.id("th")) == 0.0);
  }

  TEST_CASE("exact parameter gradient against finite differences") {
    const Fixture& c = fixture("CHAIN2");
    const Inputs in = c.inputs();
    const ExactGradient eg = exact_parameter_gradient(c.graph, in);
    CHECK(std::abs(eg.J - J(c.graph, in)) <= 1e-12);
    for (NodeId th : c.graph.inputs()) {
      Inputs up = in, dn = in;
      up[static_cast<size_t>(th)] += 1e-5;
      dn[static_cast<size_t>(th)] -= 1e-5;
      const double fd = (J(c.graph, up) - J(c.graph, dn)) / 2e-5;
      CHECK(std::abs(fd - eg.grad[static_cast<size_t>(th)]) <= 1e-8);
    }
    // Continuous fixture too.
    const Fixture& gf = fixture("CHAIN2-G");
    const NodeId th = gf.id("th");
    Inputs up = gf.inputs(), dn = gf.inputs();
    up[static_cast<size_t>(th)] += 1e-5;
    dn[static_cast<size_t>(th)] -= 1e-5;
    const double fd = (J(gf.graph, up) - J(gf.graph, dn)) / 2e-5;
    CHECK(std::abs(fd - exact_parameter_gradient(gf.graph, gf.inputs(), th)) <= 1e-7);
  }

  TEST_CASE("uncontrollable noise does not change the gradient") {
    const Fixture& n = fixture("NOISE");
    const Graph& g = n.graph;
    const Graph without = build_graph({
        decl::input("th"),
        decl::bernoulli("z", {"th"}, "(recip (add 1 (exp (neg th))))"),
        decl::cost("l", {"z"}, "(select z 1 3)"),
    });
    for (double th : {-0.7, 0.0, 0.4}) {
      const double a = exact_parameter_gradient(g, make_inputs(g, {{"th", th}}), n.id("th"));
      const double b = exact_parameter_gradient(without, {th}, 0);
      CHECK(std::abs(a - b) <= 1e-10);
    }
  }

  TEST_CASE("numeric conditional independence") {
    const Graph g = build_graph({decl::bernoulli("a", {}, "0.3"), decl::bernoulli("b", {}, "0.6"),
                                 decl::deterministic("c", {"a"}, "a")});
    const SupportTable t = enumerate_support(g, {});
    CHECK(check_ci_numeric(t, {g.id("a")}, {g.id("b")}, {}));
    CHECK_FALSE(check_ci_numeric(t, {g.id("a")}, {g.id("c")}, {}));
    CHECK(check_ci_numeric(t, {g.id("a")}, {g.id("c")}, {g.id("a")}));
  }

  TEST_CASE("estimator moments") {
    const Fixture& c = fixture("CHAIN2");
    const SupportTable t = enumerate_support(c.graph, c.inputs());
    const Moments m = estimator_moments(t, [](const Assignment&) { return 2.5; });
    CHECK(m.mean == doctest::Approx(2.5));
    CHECK(std::abs(m.var) <= 1e-15);
  }
}
