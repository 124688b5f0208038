#include "doctest.h"
#include "scg/error.hpp"
#include "scg/estimators.hpp"
#include "scg/experiment.hpp"
#include "scg/fixtures.hpp"
#include "scg/oracle.hpp"

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

NodeSpec node(NodeId v, CriticChoice c, BaselineChoice b = BaselineChoice::none()) {
  NodeSpec n;
  n.node = v;
  n.critic = std::move(c);
  n.baseline = std::move(b);
  return n;
}

double truth(const Fixture& f, const char* param) {
  return exact_parameter_gradient(f.graph, f.inputs(), f.id(param));
}

// Max over params of |E[estimate] - exact gradient| on the enumeration.
double bias(const Fixture& f, const EstimatorSpec& spec, CompileOptions opt = {}) {
  const CompiledEstimator est(f.graph, f.inputs(), spec, opt);
  const ExactGradient eg = exact_parameter_gradient(f.graph, f.inputs());
  const auto mom = est.exact_moments();
  double worst = 0.0;
  for (size_t k = 0; k < mom.size(); ++k)
    worst = std::max(worst, std::abs(mom[k].mean - eg.grad[static_cast<size_t>(est.params()[k])]));
  return worst;
}

EstimatorSpec q_minus_v(const Fixture& f) {
  EstimatorSpec s;
  for (auto [st, ac] : {std::pair{"s0", "a0"}, std::pair{"s1", "a1"}})
    s.nodes.push_back(node(f.id(ac), CriticChoice::value(f.set({st, ac})), BaselineChoice::value(f.set({st}))));
  return s;
}

}  // namespace

TEST_SUITE("estimators") {
  TEST_CASE("score function on CHAIN2 is exactly unbiased") {
    const Fixture& c = fixture("CHAIN2");
    CHECK(bias(c, {}) <= 1e-10);
    CHECK(bias(c, q_minus_v(c)) <= 1e-10);
  }

  TEST_CASE("surrogate of a graph without stochastic nodes is the loss") {
    const Fixture& f = fixture("FIG11B");
    const CompiledEstimator est(f.graph, f.inputs(), {});
    Rng rng(0);
    const Assignment a = forward_sample(f.graph, f.inputs(), rng);
    Tape t = record(f.graph, a);
    CHECK(t.value(est.surrogate(t, a)) == 24.0);
    const GradientEstimate ge = est.monte_carlo(10, 1);
    CHECK(ge.mean[0] == 32.0);
    CHECK(ge.stderr_[0] == 0.0);
  }

  TEST_CASE("Monte Carlo gate and the single-sample edge") {
    const Fixture& c = fixture("CHAIN2");
    const GradientEstimate ge = score_function_estimate(c.graph, {}, c.inputs(), 100000, 1);
    for (size_t k = 0; k < ge.params.size(); ++k)
      CHECK(std::abs(ge.mean[k] - truth(c, ge.params[k].c_str())) <= 4.0 * ge.stderr_[k]);
    const GradientEstimate one = score_function_estimate(c.graph, {}, c.inputs(), 1, 9);
    const CompiledEstimator est(c.graph, c.inputs(), {});
    Rng rng(9);
    const std::vector<double> e = est.estimate(forward_sample(c.graph, c.inputs(), rng));
    CHECK(one.n == 1);
    CHECK(one.mean == e);
    for (double s : one.stderr_) CHECK(s == 0.0);
  }

  TEST_CASE("same-variance regimes on independent noise") {
    const Fixture& n = fixture("NOISE");
    const NodeId z = n.id("z");
    EstimatorSpec a, b;
    a.nodes.push_back(node(z, CriticChoice::value(n.set({"z"})), BaselineChoice::value({})));
    b.nodes.push_back(node(z, CriticChoice::value(n.set({"z", "zp"})), BaselineChoice::value(n.set({"zp"}))));
    const double va = CompiledEstimator(n.graph, n.inputs(), a).exact_moments()[0].var;
    const double vb = CompiledEstimator(n.graph, n.inputs(), b).exact_moments()[0].var;
    CHECK(std::abs(va - vb) <= 1e-12);
  }

  TEST_CASE("reparameterization") {
    const Fixture& f = fixture("CHAIN2-G");
    const Graph r = reparameterize(f.graph, f.id("a0"));
    CHECK(r.is_input(r.id("a0")) == false);
    CHECK_FALSE(r.is_stochastic(r.id("a0")));
    CHECK(r.is_stochastic(r.id("eps_a0")));
    CHECK(r.id("r1") == f.id("r1"));
    const double g0 = exact_parameter_gradient(f.graph, f.inputs(), f.id("th"));
    const double g1 = exact_parameter_gradient(r, make_inputs(r, f.canonical), r.id("th"));
    CHECK(std::abs(g0 - g1) <= 1e-8);
    CHECK(code_of([&] { reparameterize(r, r.id("a0")); }) == Errc::UnsupportedFamily);
    CHECK(code_of([&] { reparameterize(f.graph, f.id("s0")); }) == Errc::UnsupportedFamily);

    const Graph c = build_graph({decl::input("th"), decl::gaussian("x", {}, "0.5", "-1"),
                                 decl::cost("l", {"x", "th"}, "(mul th (pow x 2))")});
    const Graph rc = reparameterize(c, c.id("x"));
    CHECK(std::abs(exact_parameter_gradient(c, {1.0}, 0) - exact_parameter_gradient(rc, make_inputs(rc, {{"th", 1.0}}), 0)) <=
          1e-12);
  }

  TEST_CASE("pathwise and gradient-critic estimators are exactly unbiased") {
    const Fixture& f = fixture("CHAIN2-G");
    EstimatorSpec path;
    path.reparameterize = {f.id("a0"), f.id("a1")};
    CHECK(bias(f, path) <= 1e-9);

    EstimatorSpec gc = path;
    Injection inj;
    inj.u = f.id("th");
    inj.S = {f.id("a0"), f.id("a1")};
    inj.sources = {nullptr, nullptr};
    inj.sets = {f.set({"s0", "a0"}), f.set({"s1", "a1"})};
    gc.injections.push_back(inj);
    CHECK(bias(f, gc) <= 1e-9);

    EstimatorSpec svg0 = gc;
    svg0.injections[0].value_gradient = true;
    CHECK(bias(f, svg0) <= 1e-9);

    const GradientEstimate ge = gradient_critic_estimate(
        f.graph, f.inputs(), f.id("th"), {f.id("a0"), f.id("a1")},
        {std::make_shared<ExactGradCritic>(f.graph, f.inputs(), f.id("a0"), f.set({"s0", "a0"})),
         std::make_shared<ExactGradCritic>(f.graph, f.inputs(), f.id("a1"), f.set({"s1", "a1"}))},
        20000, 4, {f.id("a0"), f.id("a1")});
    CHECK(std::abs(ge.mean[0] - truth(f, "th")) <= 4.0 * ge.stderr_[0]);
  }

  TEST_CASE("injection with exact downstream gradients reproduces backprop") {
    const Fixture& f = fixture("FIG11B");
    EstimatorSpec s;
    Injection inj;
    inj.u = f.id("x");
    inj.S = {f.id("v3"), f.id("v4")};
    inj.sources = {std::make_shared<ConstantSource>(std::vector<NodeId>{}, 10.0),
                   std::make_shared<ConstantSource>(std::vector<NodeId>{}, 4.0)};
    s.injections.push_back(inj);
    const CompiledEstimator est(f.graph, f.inputs(), s);
    CHECK(est.exact_moments()[0].mean == 32.0);

    EstimatorSpec bad;
    inj.S = {f.id("v3")};
    inj.sources = {std::make_shared<ConstantSource>(std::vector<NodeId>{}, 10.0)};
    bad.injections.push_back(inj);
    CHECK(code_of([&] { CompiledEstimator(f.graph, f.inputs(), bad); }) == Errc::NotSeparator);
  }

  TEST_CASE("children of u as separator equal the plain pathwise estimate") {
    const Fixture& f = fixture("CHAIN2-G");
    const Graph r = reparameterize(reparameterize(f.graph, f.id("a0")), f.id("a1"));
    const Inputs in = make_inputs(r, f.canonical);
    EstimatorSpec plain;
    EstimatorSpec inj_spec;
    Injection inj;
    inj.u = r.id("a1");
    inj.S = {r.id("r1")};
    inj.sources = {std::make_shared<ConstantSource>(std::vector<NodeId>{}, 1.0)};
    inj_spec.injections.push_back(inj);
    const CompiledEstimator a(r, in, plain), b(r, in, inj_spec);
    Rng rng(5);
    for (int i = 0; i < 20; ++i) {
      const Assignment x = forward_sample(r, in, rng);
      const auto ea = a.estimate(x), eb = b.estimate(x);
      for (size_t k = 0; k < ea.size(); ++k) CHECK(ea[k] == doctest::Approx(eb[k]).epsilon(1e-12));
    }
  }

  TEST_CASE("optimal baselines") {
    const Fixture& c = fixture("CHAIN2");
    const SupportTable t = enumerate_support(c.graph, c.inputs());
    const NodeId a0 = c.id("a0");
    const NodeSet C = c.set({"s0", "a0"}), B = c.set({"s0"});
    EstimatorSpec opt, val;
    opt.nodes.push_back(node(a0, CriticChoice::value(C), BaselineChoice::optimal(B)));
    val.nodes.push_back(node(a0, CriticChoice::value(C), BaselineChoice::value(B)));
    const auto mo = CompiledEstimator(c.graph, c.inputs(), opt).exact_moments();
    const auto mv = CompiledEstimator(c.graph, c.inputs(), val).exact_moments();
    double vo = 0.0, vv = 0.0;
    for (size_t k = 0; k < mo.size(); ++k) vo += mo[k].var, vv += mv[k].var;
    CHECK(vo <= vv + 1e-12);
    CHECK(bias(c, opt) <= 1e-10);

    // Bernoulli(1/2) scores have constant magnitude, so B* reduces to V(B).
    const Fixture& n = fixture("NOISE");
    const SupportTable tn = enumerate_support(n.graph, n.inputs());
    const NodeId z = n.id("z");
    const ValueFn bstar = optimal_baseline(tn, z, n.set({"z", "zp"}), {});
    const ValueFn v = exact_value(tn, {}, cost_to_go_set(n.graph, z));
    CHECK(bstar.at({}) == doctest::Approx(v.at({})).epsilon(1e-12));

    EstimatorSpec noncong;
    noncong.nodes.push_back(node(a0, CriticChoice::empirical(), BaselineChoice::optimal(B)));
    CHECK(code_of([&] { CompiledEstimator(c.graph, c.inputs(), noncong); }) == Errc::NotCongruent);
  }

  TEST_CASE("k-step and lambda critics") {
    const Fixture& c = fixture("CHAIN2");
    const ChainSpec& ch = *c.chain;
    const Inputs in = c.inputs();
    const CriticChoice k0 = kstep_critic(c.graph, ch, 0, 0, in);
    CHECK(k0.kind == CriticChoice::Kind::Value);
    CHECK(k0.set == c.set({"s0", "a0"}));
    CHECK(kstep_critic(c.graph, ch, 0, 1, in).kind == CriticChoice::Kind::Empirical);
    CHECK(kstep_critic(c.graph, ch, 1, 0, in).set == c.set({"s1", "a1"}));

    EstimatorSpec a, b;
    a.nodes.push_back(node(c.id("a0"), lambda_critic(c.graph, ch, 0, 0.0, in)));
    b.nodes.push_back(node(c.id("a0"), k0));
    const CompiledEstimator ea(c.graph, in, a), eb(c.graph, in, b);
    const SupportTable t = enumerate_support(c.graph, in);
    for (const Atom& at : t.atoms) {
      const auto x = ea.estimate(at.a), y = eb.estimate(at.a);
      for (size_t k = 0; k < x.size(); ++k) CHECK(x[k] == doctest::Approx(y[k]).epsilon(1e-12));
    }
    ChainSpec broken = ch;
    broken.rewards.pop_back();
    CHECK(code_of([&] { kstep_critic(c.graph, broken, 0, 0, in); }) == Errc::NotAChain);
  }

  TEST_CASE("debiased estimator") {
    const Fixture& f = fixture("CHAIN2-G");
    const Inputs in = f.inputs();
    const NodeId a0 = f.id("a0");
    const NodeSet C = f.set({"s0", "a0"});
    auto exact = std::make_shared<ExactValueFn>(f.graph, in, C, cost_to_go_set(f.graph, a0));
    for (SourcePtr q : {SourcePtr(exact), SourcePtr(std::make_shared<ConstantSource>(sorted(C), 0.0)),
                        SourcePtr(std::make_shared<ScaledSource>(exact, 1.5))}) {
      EstimatorSpec s;
      NodeSpec n = node(a0, CriticChoice::value(C, q));
      n.debias = true;
      s.nodes.push_back(n);
      CHECK(bias(f, s) <= 1e-9);
    }
    // A zero critic collapses to the score-function estimator sample by sample.
    EstimatorSpec zero, plain;
    NodeSpec n = node(a0, CriticChoice::value(C, std::make_shared<ConstantSource>(sorted(C), 0.0)));
    n.debias = true;
    zero.nodes.push_back(n);
    const CompiledEstimator ez(f.graph, in, zero), ep(f.graph, in, plain);
    Rng rng(8);
    for (int i = 0; i < 20; ++i) {
      const Assignment x = forward_sample(f.graph, in, rng);
      const auto u = ez.estimate(x), v = ep.estimate(x);
      CHECK(u[0] == doctest::Approx(v[0]).epsilon(1e-12));
    }
    const GradientEstimate ge = debiased_estimate(f.graph, in, a0, C, exact, 20000, 3);
    CHECK(std::abs(ge.mean[0] - truth(f, "th")) <= 4.0 * ge.stderr_[0]);

    const Fixture& c = fixture("CHAIN2");
    EstimatorSpec cat;
    NodeSpec m = node(c.id("a0"), CriticChoice::value(c.set({"s0", "a0"})));
    m.debias = true;
    cat.nodes.push_back(m);
    CHECK(code_of([&] { CompiledEstimator(c.graph, c.inputs(), cat); }) == Errc::InvalidSpec);
  }

  TEST_CASE("invalid critic sets are refused unless checks are off") {
    const Fixture& t = fixture("TREE4");
    EstimatorSpec s;
    s.nodes.push_back(node(t.id("v1"), CriticChoice::value(t.set({"v1"}))));
    CHECK(code_of([&] { CompiledEstimator(t.graph, t.inputs(), s); }) == Errc::InvalidSpec);
    CompileOptions off;
    off.checks = false;
    CHECK(bias(t, s, off) > 1e-8);
    EstimatorSpec bad_baseline;
    bad_baseline.nodes.push_back(node(t.id("v1"), CriticChoice::empirical(), BaselineChoice::value(t.set({"v2"}))));
    CHECK(code_of([&] { CompiledEstimator(t.graph, t.inputs(), bad_baseline); }) == Errc::InvalidSpec);
  }

  TEST_CASE("gradient-critic bootstrap") {
    const Fixture& f = fixture("CHAIN2-G");
    const Graph r = reparameterize(reparameterize(f.graph, f.id("a0")), f.id("a1"));
    const Inputs in = make_inputs(r, f.canonical);
    const NodeId th = r.id("th"), a0 = r.id("a0"), a1 = r.id("a1"), r1 = r.id("r1");
    BootstrapCheck bc =
        gradient_critic_bootstrap_check(r, in, th, {a0, a1}, {}, {r.set({"s0", "a0"}), r.set({"s1", "a1"})});
    CHECK(bc.ok);
    bc = gradient_critic_bootstrap_check(r, in, a1, {r1}, r.set({"s1", "a1"}), {r.set({"s1", "a1", "r1"})});
    CHECK(bc.ok);
    // a0 -> r0 escapes S = [a1].
    CHECK_FALSE(gradient_critic_bootstrap_check(r, in, a0, {a1}, r.set({"s0", "a0"}), {r.set({"s1", "a1"})}).ok);
    // A non-Markov part is a precondition failure, not an inequality.
    bc = gradient_critic_bootstrap_check(r, in, th, {a0, a1}, {}, {r.set({"a0"}), r.set({"a1"})});
    CHECK_FALSE(bc.ok);
    CHECK_FALSE(bc.failure.empty());
  }

  TEST_CASE("built-in menus compile") {
    for (const auto& [name, text] : builtin_menus()) {
      const ExperimentConfig cfg = builtin_menu(name);
      for (const RowConfig& row : cfg.estimators) CHECK_NOTHROW(build_row(cfg, row));
    }
  }
}
