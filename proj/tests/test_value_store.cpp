#include "doctest.h"
#include "scg/error.hpp"
#include "scg/fixtures.hpp"
#include "scg/oracle.hpp"
#include "scg/value_store.hpp"

using namespace scg;

namespace {

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return Errc::ConfigError;
}

}  // namespace

TEST_SUITE("value_store") {
  TEST_CASE("fit on return with atom weights is the exact conditional mean") {
    const Fixture& c = fixture("CHAIN2");
    const SupportTable t = enumerate_support(c.graph, c.inputs());
    const auto data = atom_weights(t);
    for (auto [X, v] : {std::pair{c.set({"s0", "a0"}), c.id("a0")}, std::pair{c.set({"s1"}), c.id("s1")},
                        std::pair{NodeSet{}, c.id("s0")}}) {
      const Fit f = fit_on_return(c.graph, data, X, v);
      const ValueFn want = exact_value(t, X, cost_to_go_set(c.graph, v));
      for (const Atom& a : t.atoms) CHECK(std::abs(f.fn.value(a.a) - want.value(a.a)) <= 1e-12);
      CHECK(f.report.residual_max <= 1e-12);
    }
    CHECK(fit_on_return(c.graph, data, {}, c.id("s0")).fn.cells().size() == 1);
  }

  TEST_CASE("a stream of one repeated draw fits that draw's return") {
    const Fixture& c = fixture("CHAIN2");
    Rng rng(3);
    const Assignment a = forward_sample(c.graph, c.inputs(), rng);
    const std::vector<Assignment> stream(50, a);
    const Fit f = fit_on_return(c.graph, unit_weights(stream), c.set({"s0", "a0"}), c.id("a0"));
    CHECK(f.fn.value(a) == doctest::Approx(cost_sum(a, c.set({"r0", "r1"}))).epsilon(1e-14));
    CHECK(f.fn.stderr_at(f.fn.key(a)) == 0.0);
    CHECK(f.report.loss <= 1e-24);
  }

  TEST_CASE("unseen keys predict zero and count a miss") {
    const Fixture& c = fixture("CHAIN2");
    Rng rng(1);
    std::vector<Assignment> stream;
    Assignment probe;
    for (int i = 0; i < 200; ++i) {
      Assignment a = forward_sample(c.graph, c.inputs(), rng);
      if (a[c.id("s0")] == 1.0)
        probe = a;
      else
        stream.push_back(a);
    }
    REQUIRE(!probe.values.empty());
    Fit f = fit_on_return(c.graph, unit_weights(stream), c.set({"s0"}), c.id("s0"));
    CHECK(f.fn.misses() == 0);
    CHECK(f.fn.value(probe) == 0.0);
    CHECK(f.fn.misses() == 1);
    f.fn.reset_misses();
    CHECK(f.fn.misses() == 0);
  }

  TEST_CASE("bootstrap fit") {
    const Fixture& c = fixture("CHAIN2");
    const SupportTable t = enumerate_support(c.graph, c.inputs());
    const auto data = atom_weights(t);
    const NodeSet s0 = c.set({"s0"}), s1 = c.set({"s1"}), r0 = c.set({"r0"});
    auto V1 = std::make_shared<ValueFn>(exact_value(t, s1, cost_to_go_set(c.graph, c.id("s1"))));
    const Fit f = fit_bootstrap(c.graph, data, c.id("s0"), s0, {{r0, r0, nullptr}, {s1, s1, V1}});
    const ValueFn want = exact_value(t, s0, cost_to_go_set(c.graph, c.id("s0")));
    for (const Atom& a : t.atoms) CHECK(std::abs(f.fn.value(a.a) - want.value(a.a)) <= 1e-8);

    const Graph z = build_graph({decl::bernoulli("b", {}, "0.3"), decl::cost("l", {"b"}, "0")});
    const SupportTable tz = enumerate_support(z, {});
    const Fit fz = fit_bootstrap(z, atom_weights(tz), z.id("b"), {z.id("b")}, {{{z.id("l")}, {z.id("l")}, nullptr}});
    for (const auto& [k, cell] : fz.fn.cells()) CHECK(cell.params[0] == 0.0);

    CHECK(code_of([&] { fit_bootstrap(c.graph, data, c.id("s0"), s0, {{r0, r0, nullptr}}); }) ==
          Errc::BootstrapInvalid);
  }

  TEST_CASE("Sobolev gradient critic matches the exact gradient critic") {
    const Fixture& f = fixture("CHAIN2-G");
    const SupportTable t = enumerate_support(f.graph, f.inputs());
    const auto data = atom_weights(t);
    const NodeId a1 = f.id("a1");
    const NodeSet C = f.set({"s1", "a1"});
    const ExactGradCritic G(f.graph, f.inputs(), a1, C);
    const ExactValueFn Q(f.graph, f.inputs(), C, cost_to_go_set(f.graph, a1));
    for (CriticMode m : {CriticMode::Sobolev, CriticMode::GradOnly, CriticMode::ValueOnly}) {
      SobolevOptions opt;
      opt.mode = m;
      const Fit fit = fit_gradient_critic(f.graph, data, a1, C, opt);
      for (size_t i = 0; i < t.atoms.size(); i += 11) {
        const Assignment& a = t.atoms[i].a;
        CHECK(std::abs(fit.fn.derivative(a, a1) - G.value(a)) <= 1e-8);
        if (m != CriticMode::GradOnly) CHECK(std::abs(fit.fn.value(a) - Q.value(a)) <= 1e-8);
      }
    }
  }

  TEST_CASE("constant loss gives a flat critic") {
    const Graph g = build_graph({decl::gaussian("x", {}, "0", "0"), decl::cost("l", {"x"}, "(add 3 (mul 0 x))")});
    const SupportTable t = enumerate_support(g, {});
    const Fit fit = fit_gradient_critic(g, atom_weights(t), g.id("x"), {g.id("x")});
    for (const Atom& a : t.atoms) {
      CHECK(std::abs(fit.fn.derivative(a.a, g.id("x"))) <= 1e-10);
      CHECK(std::abs(fit.fn.value(a.a) - 3.0) <= 1e-10);
    }
  }

  TEST_CASE("gradient critic preconditions") {
    const Fixture& f = fixture("CHAIN2-G");
    const SupportTable t = enumerate_support(f.graph, f.inputs());
    const auto data = atom_weights(t);
    const NodeId a1 = f.id("a1");
    CHECK(code_of([&] { fit_gradient_critic(f.graph, data, a1, f.set({"a1"})); }) == Errc::NotMarkov);
    SobolevOptions grad_only;
    grad_only.mode = CriticMode::GradOnly;
    CHECK_NOTHROW(fit_gradient_critic(f.graph, data, a1, f.set({"a1"}), grad_only));
    CHECK(code_of([&] { fit_gradient_critic(f.graph, data, a1, f.set({"s1"})); }) == Errc::PreconditionFailed);
    SobolevOptions zero;
    zero.alpha = zero.beta = 0.0;
    CHECK(code_of([&] { fit_gradient_critic(f.graph, data, a1, f.set({"s1", "a1"}), zero); }) ==
          Errc::PreconditionFailed);
    // Tabular keys over a continuous node.
    CHECK(code_of([&] { fit_on_return(f.graph, data, f.set({"a0"}), f.id("a0")); }) == Errc::PreconditionFailed);
  }

  TEST_CASE("JSON round trip") {
    const Fixture& f = fixture("CHAIN2-G");
    const SupportTable t = enumerate_support(f.graph, f.inputs());
    const Fit fit = fit_gradient_critic(f.graph, atom_weights(t), f.id("a1"), f.set({"s1", "a1"}));
    const LearnedValueFn back = LearnedValueFn::from_json(f.graph, fit.fn.to_json(f.graph));
    CHECK(back.anchor() == fit.fn.anchor());
    CHECK(back.degree() == fit.fn.degree());
    for (size_t i = 0; i < t.atoms.size(); i += 7) CHECK(back.value(t.atoms[i].a) == fit.fn.value(t.atoms[i].a));
    CHECK(back.to_json(f.graph) == fit.fn.to_json(f.graph));

    const Fixture& c = fixture("CHAIN2");
    const SupportTable tc = enumerate_support(c.graph, c.inputs());
    const Fit tab = fit_on_return(c.graph, atom_weights(tc), c.set({"s0", "a0"}), c.id("a0"));
    CHECK(LearnedValueFn::from_json(c.graph, tab.fn.to_json(c.graph)).to_json(c.graph) == tab.fn.to_json(c.graph));
    CHECK(code_of([&] { LearnedValueFn::from_json(c.graph, nlohmann::json::parse(R"({"set": 3})")); }) ==
          Errc::ConfigError);
  }
}
