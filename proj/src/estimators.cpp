#include "scg/estimators.hpp"

#include <algorithm>
#include <cmath>

#include "scg/analysis.hpp"
#include "scg/error.hpp"
#include "scg/tape.hpp"

namespace scg {

CriticChoice CriticChoice::value(NodeSet C, SourcePtr s) {
  CriticChoice c;
  c.kind = Kind::Value;
  c.set = std::move(C);
  c.source = std::move(s);
  return c;
}

CriticChoice CriticChoice::partial(NodeSet V0, std::vector<PartSpec> parts) {
  CriticChoice c;
  c.kind = Kind::PartialAverage;
  c.V0 = std::move(V0);
  c.parts = std::move(parts);
  return c;
}

CriticChoice CriticChoice::mix(std::vector<std::pair<double, CriticChoice>> m) {
  CriticChoice c;
  c.kind = Kind::Mixture;
  c.mixture = std::move(m);
  return c;
}

BaselineChoice BaselineChoice::value(NodeSet B, SourcePtr s) {
  BaselineChoice b;
  b.kind = Kind::Value;
  b.set = std::move(B);
  b.source = std::move(s);
  return b;
}

BaselineChoice BaselineChoice::optimal(NodeSet B) {
  BaselineChoice b;
  b.kind = Kind::Optimal;
  b.set = std::move(B);
  return b;
}

namespace {

std::string set_str(const Graph& g, const NodeSet& s) {
  std::string out = "{";
  for (NodeId v : s) out += (out.size() > 1 ? "," : "") + g.name(v);
  return out + "}";
}

[[noreturn]] void invalid(const Graph& g, NodeId v, const std::string& msg) {
  throw Error(Errc::InvalidSpec, "node '" + g.name(v) + "': " + msg);
}

// d Q / d v of an exact critic, served as a value.
class CriticDerivative : public ValueSource {
 public:
  CriticDerivative(std::shared_ptr<const ValueSource> q, NodeId v) : q_(std::move(q)), v_(v) {}
  const std::vector<NodeId>& members() const override { return q_->members(); }
  double value(const Assignment& a) const override { return q_->derivative(a, v_); }

 private:
  std::shared_ptr<const ValueSource> q_;
  NodeId v_;
};

}  // namespace

Graph reparameterize(const Graph& g, NodeId v) {
  const Node& nd = g.node(v);
  if (nd.kind != Kind::Stochastic || nd.dist.family != Family::Gaussian)
    throw Error(Errc::UnsupportedFamily, "'" + nd.name + "' is not a Gaussian stochastic node");
  std::string eps = "eps_" + nd.name;
  while (g.has(eps)) eps += "_";
  std::vector<NodeDecl> decls = g.decls();
  NodeDecl& d = decls[static_cast<size_t>(v)];
  const int slot = static_cast<int>(d.parents.size());
  d.kind = Kind::Deterministic;
  d.fn = Expr::add({nd.dist.mean, Expr::mul({Expr::exp(nd.dist.logstd), Expr::var(slot)})});
  d.parents.push_back(eps);
  d.dist = Dist{};
  decls.push_back(decl::gaussian(eps, {}, "0", "0"));
  return build_graph(std::move(decls));
}

std::vector<double> score_vector(const Graph& g, const Assignment& a, NodeId v) {
  Tape t = record(g, a);
  const std::vector<double> adj = t.adjoints(t.logp_slot.at(static_cast<size_t>(v)));
  std::vector<double> out;
  for (NodeId p : g.inputs()) out.push_back(adj[static_cast<size_t>(t.node_slot[static_cast<size_t>(p)])]);
  return out;
}

ValueFn optimal_baseline(const SupportTable& t, NodeId v, const NodeSet& C, const NodeSet& B) {
  if (!is_congruent(B, C))
    throw Error(Errc::NotCongruent, "baseline set is not contained in the critic set");
  const Graph& g = *t.g;
  const NodeSet ctg = cost_to_go_set(g, v);
  const ValueFn Q = exact_value(t, C, ctg);
  ValueFn out;
  out.set = sorted(B);
  std::map<Key, std::array<double, 4>> acc;  // sum p s^2 Q, sum p s^2, sum p Q, sum p
  for (const Atom& at : t.atoms) {
    double s2 = 0.0;
    for (double s : score_vector(g, at.a, v)) s2 += s * s;
    const double q = Q.value(at.a);
    auto& x = acc[key_of(at.a, out.set)];
    x[0] += at.p * s2 * q;
    x[1] += at.p * s2;
    x[2] += at.p * q;
    x[3] += at.p;
  }
  for (const auto& [k, x] : acc) out.entries[k] = x[1] > 0.0 ? x[0] / x[1] : x[2] / x[3];
  return out;
}

void CompiledEstimator::resolve_sources(CriticChoice& c, NodeId v) {
  switch (c.kind) {
    case CriticChoice::Kind::Empirical: break;
    case CriticChoice::Kind::Value:
      if (!c.source)
        c.source = std::make_shared<ExactValueFn>(*orig_, inputs_, c.set, cost_to_go_set(*orig_, v), opt_.enumeration);
      break;
    case CriticChoice::Kind::PartialAverage:
      for (PartSpec& p : c.parts)
        if (!p.source)
          p.source = std::make_shared<ExactValueFn>(*orig_, inputs_, p.cond, cost_to_go_set(*orig_, p.nodes),
                                                    opt_.enumeration);
      break;
    case CriticChoice::Kind::Mixture:
      for (auto& [w, m] : c.mixture) resolve_sources(m, v);
      break;
  }
}

static void validate_critic(const Graph& g, NodeId v, const CriticChoice& c) {
  switch (c.kind) {
    case CriticChoice::Kind::Empirical: return;
    case CriticChoice::Kind::Value:
      if (!is_valid_critic_set(g, v, c.set))
        invalid(g, v, "critic set " + set_str(g, c.set) + " fails the critic validity check");
      return;
    case CriticChoice::Kind::PartialAverage: {
      if (c.parts.empty()) {
        if (c.V0 != cost_to_go_set(g, v)) invalid(g, v, "a partial average without parts must sample all of L(v)");
        return;
      }
      NodeSet Xv;
      bool first = true;
      for (const PartSpec& p : c.parts) {
        NodeSet up = ancestors_closure(g, p.cond);
        if (first) Xv = up;
        else {
          NodeSet both;
          std::set_intersection(Xv.begin(), Xv.end(), up.begin(), up.end(), std::inserter(both, both.end()));
          Xv = both;
        }
        first = false;
      }
      for (const PartSpec& p : c.parts) {
        if (!is_congruent(p.cond, Xv))
          invalid(g, v, "part set " + set_str(g, p.cond) + " is not contained in the common ancestor closure");
        if (!is_markov_costs(g, p.cond, cost_to_go_set(g, p.nodes)))
          invalid(g, v, "part set " + set_str(g, p.cond) + " is not Markov");
      }
      if (!is_valid_critic_set(g, v, Xv)) invalid(g, v, "implied set " + set_str(g, Xv) + " is not a valid critic set");
      const NodeSet closure = det_closure(g, Xv);
      NodeSet expected;
      for (NodeId l : cost_to_go_set(g, v))
        if (closure.count(l)) expected.insert(l);
      if (expected != c.V0)
        invalid(g, v, "sampled costs " + set_str(g, c.V0) + " differ from those computable from the implied set " +
                          set_str(g, expected));
      std::vector<NodeSet> parts{c.V0};
      for (const PartSpec& p : c.parts) parts.push_back(p.nodes);
      if (!check_decomposition(g, v, parts)) invalid(g, v, "parts do not partition L(v)");
      return;
    }
    case CriticChoice::Kind::Mixture: {
      double total = 0.0;
      for (const auto& [w, m] : c.mixture) {
        if (w < 0.0) invalid(g, v, "negative mixture weight");
        total += w;
        validate_critic(g, v, m);
      }
      if (std::abs(total - 1.0) > 1e-12) invalid(g, v, "mixture weights do not sum to 1");
      return;
    }
  }
}

void CompiledEstimator::validate(const Term& t) const {
  const Graph& g = *graph_;
  validate_critic(g, t.node, t.critic);
  if (t.baseline.kind != BaselineChoice::Kind::None && !is_valid_baseline_set(g, t.node, t.baseline.set))
    invalid(g, t.node, "baseline set " + set_str(g, t.baseline.set) + " contains a descendant");
}

CompiledEstimator::CompiledEstimator(const Graph& g, const Inputs& inputs, EstimatorSpec spec, CompileOptions opt)
    : orig_(std::make_shared<Graph>(g)), inputs_(inputs), opt_(opt) {
  inputs_.resize(g.size(), 0.0);
  params_.assign(g.inputs().begin(), g.inputs().end());
  Graph cur = g;
  for (NodeId v : spec.reparameterize) cur = reparameterize(cur, v);
  graph_ = std::make_shared<Graph>(std::move(cur));
  const Graph& G = *graph_;

  std::map<NodeId, NodeSpec> by_node;
  for (NodeSpec& ns : spec.nodes) {
    if (ns.node < 0 || ns.node >= static_cast<NodeId>(G.size()))
      throw Error(Errc::UnknownNode, "estimator spec names an unknown node");
    if (!G.is_stochastic(ns.node)) invalid(G, ns.node, "not stochastic in the estimator graph");
    by_node[ns.node] = ns;
  }
  for (NodeId w : G.stochastic()) {
    if (G.node(w).parents.empty() && !by_node.count(w)) continue;  // log p has no parameter dependence
    Term t;
    t.node = w;
    if (auto it = by_node.find(w); it != by_node.end()) {
      t.critic = it->second.critic;
      t.baseline = it->second.baseline;
      t.debias = it->second.debias;
    }
    t.ctg = sorted(cost_to_go_set(G, w));
    if (opt_.checks) validate(t);
    if (t.debias) {
      if (t.critic.kind != CriticChoice::Kind::Value) invalid(G, w, "debiasing needs a value critic");
      if (G.node(w).dist.family != Family::Gaussian) invalid(G, w, "debiasing needs a Gaussian node");
    }
    if (t.baseline.kind == BaselineChoice::Kind::Optimal) {
      if (t.critic.kind != CriticChoice::Kind::Value || !is_congruent(t.baseline.set, t.critic.set))
        throw Error(Errc::NotCongruent, "node '" + G.name(w) + "': optimal baseline needs a congruent value critic");
      if (w >= static_cast<NodeId>(g.size()) || !g.is_stochastic(w))
        invalid(G, w, "optimal baseline needs the node stochastic in the original graph");
      if (!table_) table_ = std::make_shared<SupportTable>(enumerate_support(*orig_, inputs_, opt_.enumeration));
      t.baseline.source = std::make_shared<ValueFn>(optimal_baseline(*table_, w, t.critic.set, t.baseline.set));
    }
    resolve_sources(t.critic, w);
    if (t.baseline.kind == BaselineChoice::Kind::Value && !t.baseline.source)
      t.baseline.source = std::make_shared<ExactValueFn>(*orig_, inputs_, t.baseline.set, cost_to_go_set(*orig_, w),
                                                         opt_.enumeration);
    terms_.push_back(std::move(t));
  }

  for (Injection& in : spec.injections) {
    SeparatorVerdict sv = separator_verdict(G, in.u, in.S);
    if (sv.kind == SeparatorVerdict::Kind::NotSeparator)
      throw Error(Errc::NotSeparator, "S does not separate '" + G.name(in.u) + "' (escapes at '" +
                                          (sv.escape >= 0 ? G.name(sv.escape) : std::string("?")) + "')");
    Inj j;
    j.u = in.u;
    j.S = in.S;
    j.sources = in.sources;
    j.sources.resize(in.S.size());
    for (size_t i = 0; i < in.S.size(); ++i) {
      if (j.sources[i]) continue;
      const NodeId vi = in.S[i];
      const NodeSet C = i < in.sets.size() ? in.sets[i] : NodeSet{vi};
      if (vi >= static_cast<NodeId>(g.size()))
        throw Error(Errc::PreconditionFailed, "exact injected sources need members of the original graph");
      if (in.value_gradient) {
        auto q = std::make_shared<ExactValueFn>(*orig_, inputs_, C, cost_to_go_set(*orig_, vi), opt_.enumeration);
        j.sources[i] = std::make_shared<CriticDerivative>(q, vi);
      } else {
        j.sources[i] = std::make_shared<ExactGradCritic>(*orig_, inputs_, vi, C, opt_.enumeration);
      }
    }
    for (NodeId p : params_) {
      bool applies = p == in.u;
      if (!applies && G.is_input(p)) {
        SeparatorVerdict pv = separator_verdict(G, p, {in.u});
        applies = pv.kind != SeparatorVerdict::Kind::NotSeparator && exists_unblocked_path(G, p, in.u, {});
      }
      j.applies.push_back(applies);
    }
    injections_.push_back(std::move(j));
  }
}

double CompiledEstimator::critic_value(const CriticChoice& c, const Assignment& a,
                                       const std::vector<NodeId>& ctg) const {
  switch (c.kind) {
    case CriticChoice::Kind::Empirical: {
      double s = 0.0;
      for (NodeId l : ctg) s += a[l];
      return s;
    }
    case CriticChoice::Kind::Value: return c.source->value(a);
    case CriticChoice::Kind::PartialAverage: {
      double s = 0.0;
      for (NodeId l : c.V0) s += a[l];
      for (const PartSpec& p : c.parts) s += p.source->value(a);
      return s;
    }
    case CriticChoice::Kind::Mixture: {
      double s = 0.0;
      for (const auto& [w, m] : c.mixture)
        if (w != 0.0) s += w * critic_value(m, a, ctg);
      return s;
    }
  }
  return 0.0;
}

int CompiledEstimator::surrogate(Tape& t, const Assignment& a) const {
  const Graph& G = *graph_;
  std::vector<int> terms;
  for (NodeId c : G.costs()) terms.push_back(t.node_slot[static_cast<size_t>(c)]);
  for (const Term& term : terms_) {
    const NodeId w = term.node;
    // Derivative first: exact sources fill their value cache on the way.
    const double dq = term.debias ? term.critic.source->derivative(a, w) : 0.0;
    double adv = critic_value(term.critic, a, term.ctg);
    if (term.baseline.kind != BaselineChoice::Kind::None) adv -= term.baseline.source->value(a);
    if (term.debias) {
      double L = 0.0;
      for (NodeId l : term.ctg) L += a[l];
      const double b = term.baseline.kind != BaselineChoice::Kind::None ? term.baseline.source->value(a) : 0.0;
      const double q = term.critic.source->value(a);
      terms.push_back(t.mul(t.logp_slot[static_cast<size_t>(w)], t.constant(L - q - b)));
      // v rebuilt from its location and scale with the standardized draw held fixed.
      std::vector<int> ps;
      for (NodeId p : G.node(w).parents) ps.push_back(t.node_slot[static_cast<size_t>(p)]);
      const int mu = t.emit(G.node(w).dist.mean, ps);
      const int sigma = t.exp(t.emit(G.node(w).dist.logstd, ps));
      const double eps = (a[w] - t.value(mu)) / t.value(sigma);
      const int shadow = t.add(mu, t.mul(sigma, t.constant(eps)));
      terms.push_back(t.mul(t.constant(dq), shadow));
      continue;
    }
    terms.push_back(t.mul(t.logp_slot[static_cast<size_t>(w)], t.constant(adv)));
  }
  return t.sum(terms);
}

std::vector<double> CompiledEstimator::estimate(const Assignment& a) const {
  Tape t = record(*graph_, a);
  const int ls = surrogate(t, a);
  std::vector<double> adj;
  t.adjoints(ls, nullptr, adj);
  std::vector<double> out;
  out.reserve(params_.size());
  for (NodeId p : params_) out.push_back(adj[static_cast<size_t>(t.node_slot[static_cast<size_t>(p)])]);
  for (const Inj& j : injections_) {
    std::vector<double> injected;
    for (size_t i = 0; i < j.S.size(); ++i) injected.push_back(j.sources[i]->value(a));
    const double H = horizon_backprop(t, j.u, j.S, injected);
    std::vector<double> du;
    t.adjoints(t.node_slot[static_cast<size_t>(j.u)], nullptr, du);
    for (size_t k = 0; k < params_.size(); ++k)
      if (j.applies[k]) out[k] = H * du[static_cast<size_t>(t.node_slot[static_cast<size_t>(params_[k])])];
  }
  return out;
}

GradientEstimate CompiledEstimator::monte_carlo(size_t n, unsigned long long seed) const {
  GradientEstimate ge;
  for (NodeId p : params_) ge.params.push_back(orig_->name(p));
  const size_t m = params_.size();
  std::vector<double> mean(m, 0.0), m2(m, 0.0);
  Rng rng(seed);
  Inputs in = inputs_;
  in.resize(graph_->size(), 0.0);
  for (size_t i = 0; i < n; ++i) {
    const Assignment a = forward_sample(*graph_, in, rng);
    const std::vector<double> e = estimate(a);
    const double k = static_cast<double>(i + 1);
    for (size_t j = 0; j < m; ++j) {
      const double d = e[j] - mean[j];
      mean[j] += d / k;
      m2[j] += d * (e[j] - mean[j]);
    }
  }
  ge.n = n;
  ge.mean = mean;
  ge.stderr_.assign(m, 0.0);
  if (n > 1)
    for (size_t j = 0; j < m; ++j) ge.stderr_[j] = std::sqrt(m2[j] / static_cast<double>(n - 1) / static_cast<double>(n));
  return ge;
}

std::vector<Moments> CompiledEstimator::exact_moments() const {
  Inputs in = inputs_;
  in.resize(graph_->size(), 0.0);
  const SupportTable t = enumerate_support(*graph_, in, opt_.enumeration);
  return estimator_moments(t, [&](const Assignment& a) { return estimate(a); });
}

GradientEstimate score_function_estimate(const Graph& g, const EstimatorSpec& spec, const Inputs& inputs, size_t n,
                                         unsigned long long seed) {
  if (!spec.reparameterize.empty())
    throw Error(Errc::PreconditionFailed, "score-function estimates do not reparameterize");
  return CompiledEstimator(g, inputs, spec).monte_carlo(n, seed);
}

GradientEstimate pathwise_estimate(const Graph& g, const EstimatorSpec& spec, const Inputs& inputs, size_t n,
                                   unsigned long long seed) {
  return CompiledEstimator(g, inputs, spec).monte_carlo(n, seed);
}

GradientEstimate gradient_critic_estimate(const Graph& g, const Inputs& inputs, NodeId u, const std::vector<NodeId>& S,
                                          const std::vector<SourcePtr>& sources, size_t n, unsigned long long seed,
                                          const std::vector<NodeId>& reparam) {
  EstimatorSpec spec;
  spec.reparameterize = reparam;
  Injection in;
  in.u = u;
  in.S = S;
  in.sources = sources;
  if (in.sources.size() != S.size())
    throw Error(Errc::MissingCriticKey, "one gradient-critic source per separator member is required");
  spec.injections.push_back(in);
  return CompiledEstimator(g, inputs, spec).monte_carlo(n, seed);
}

GradientEstimate debiased_estimate(const Graph& g, const Inputs& inputs, NodeId v, const NodeSet& C, SourcePtr qhat,
                                   size_t n, unsigned long long seed) {
  EstimatorSpec spec;
  NodeSpec ns;
  ns.node = v;
  ns.critic = CriticChoice::value(C, std::move(qhat));
  ns.debias = true;
  spec.nodes.push_back(ns);
  return CompiledEstimator(g, inputs, spec).monte_carlo(n, seed);
}

static void check_chain(const Graph& g, const ChainSpec& c, size_t t) {
  const size_t T = c.actions.size();
  if (T == 0 || c.states.size() != T || c.rewards.size() != T)
    throw Error(Errc::NotAChain, "chain needs one state, action and reward per step");
  for (size_t i = 0; i < T; ++i) {
    const NodeSet d = descendants(g, c.actions[i]);
    if (!d.count(c.rewards[i]) || !descendants(g, c.states[i]).count(c.actions[i]))
      throw Error(Errc::NotAChain, "step " + std::to_string(i) + " is not s -> a -> r");
    if (i + 1 < T && !d.count(c.states[i + 1]))
      throw Error(Errc::NotAChain, "action " + std::to_string(i) + " does not reach the next state");
  }
  if (t >= T) throw Error(Errc::NotAChain, "step index beyond the horizon");
}

CriticChoice kstep_critic(const Graph& g, const ChainSpec& c, size_t t, int k, const Inputs& inputs) {
  check_chain(g, c, t);
  if (k < 0) throw Error(Errc::PreconditionFailed, "k must be non-negative");
  const size_t T = c.actions.size();
  if (k == 0) {
    const NodeSet C{c.states[t], c.actions[t]};
    return CriticChoice::value(C, std::make_shared<ExactValueFn>(g, inputs, C, cost_to_go_set(g, c.actions[t])));
  }
  const size_t next = t + static_cast<size_t>(k) + 1;
  if (next >= T) return CriticChoice::empirical();
  NodeSet V0;
  for (size_t i = t; i < next; ++i) V0.insert(c.rewards[i]);
  const NodeSet S{c.states[next]};
  PartSpec p{S, S, std::make_shared<ExactValueFn>(g, inputs, S, cost_to_go_set(g, S))};
  return CriticChoice::partial(V0, {p});
}

CriticChoice lambda_critic(const Graph& g, const ChainSpec& c, size_t t, double lambda, const Inputs& inputs) {
  check_chain(g, c, t);
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error(Errc::PreconditionFailed, "lambda must lie in [0, 1]");
  const int kmax = static_cast<int>(c.actions.size() - 1 - t);
  std::vector<std::pair<double, CriticChoice>> m;
  for (int k = 0; k <= kmax; ++k) {
    const double w = k < kmax ? (1.0 - lambda) * std::pow(lambda, k) : std::pow(lambda, k);
    if (w != 0.0) m.emplace_back(w, kstep_critic(g, c, t, k, inputs));
  }
  if (m.size() == 1) return m[0].second;
  return CriticChoice::mix(std::move(m));
}

BootstrapCheck gradient_critic_bootstrap_check(const Graph& g, const Inputs& inputs, NodeId u,
                                               const std::vector<NodeId>& S, const NodeSet& C_u,
                                               const std::vector<NodeSet>& parts, double tol) {
  BootstrapCheck r;
  if (parts.size() != S.size()) {
    r.failure = "one conditioning set per separator member is required";
    return r;
  }
  for (size_t i = 0; i < S.size(); ++i) {
    if (!is_congruent(C_u, parts[i])) {
      r.failure = "C_u is not contained in the set of '" + g.name(S[i]) + "'";
      return r;
    }
    if (!parts[i].count(S[i]) || !is_markov(g, parts[i], S[i])) {
      r.failure = "set " + set_str(g, parts[i]) + " is not a Markov set for '" + g.name(S[i]) + "'";
      return r;
    }
  }
  if (separator_verdict(g, u, S).kind == SeparatorVerdict::Kind::NotSeparator) {
    r.failure = "S does not separate '" + g.name(u) + "'";
    return r;
  }
  Inputs in = inputs;
  in.resize(g.size(), 0.0);
  const SupportTable table = enumerate_support(g, in);
  const std::vector<NodeId> cu = sorted(C_u);

  struct PerAtom {
    double du;
    std::vector<double> dv;
    Tape tape;
  };
  std::vector<PerAtom> pa;
  pa.reserve(table.atoms.size());
  for (const Atom& at : table.atoms) {
    PerAtom x{0.0, {}, record(g, at.a)};
    Tape& t = x.tape;
    std::vector<int> terms;
    for (NodeId c : g.costs()) terms.push_back(t.node_slot[static_cast<size_t>(c)]);
    for (NodeId w : g.stochastic())
      terms.push_back(t.mul(t.logp_slot[static_cast<size_t>(w)], t.constant(cost_sum(at.a, cost_to_go_set(g, w)))));
    const std::vector<double> adj = t.adjoints(t.sum(terms));
    x.du = adj[static_cast<size_t>(t.node_slot[static_cast<size_t>(u)])];
    for (NodeId v : S) x.dv.push_back(adj[static_cast<size_t>(t.node_slot[static_cast<size_t>(v)])]);
    pa.push_back(std::move(x));
  }
  // Exact gradient-critic tables g_{v_i}(C_{v_i}) on this enumeration.
  std::vector<std::map<Key, std::pair<double, double>>> gv(S.size());
  for (size_t k = 0; k < pa.size(); ++k)
    for (size_t i = 0; i < S.size(); ++i) {
      auto& e = gv[i][key_of(table.atoms[k].a, sorted(parts[i]))];
      e.first += table.atoms[k].p * pa[k].dv[i];
      e.second += table.atoms[k].p;
    }
  std::map<Key, std::array<double, 3>> acc;  // lhs, rhs, p
  for (size_t k = 0; k < pa.size(); ++k) {
    const Atom& at = table.atoms[k];
    std::vector<double> injected;
    for (size_t i = 0; i < S.size(); ++i) {
      const auto& e = gv[i][key_of(at.a, sorted(parts[i]))];
      injected.push_back(e.first / e.second);
    }
    const double rhs = horizon_backprop(pa[k].tape, u, S, injected);
    auto& x = acc[key_of(at.a, cu)];
    x[0] += at.p * pa[k].du;
    x[1] += at.p * rhs;
    x[2] += at.p;
  }
  for (const auto& [key, x] : acc) {
    const double err = std::abs(x[0] / x[2] - x[1] / x[2]);
    r.max_err = std::max(r.max_err, err);
  }
  r.ok = r.max_err <= tol;
  if (!r.ok) r.failure = "equality fails by " + std::to_string(r.max_err);
  return r;
}

}  // namespace scg
