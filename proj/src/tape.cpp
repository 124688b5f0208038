#include "scg/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "scg/analysis.hpp"
#include "scg/error.hpp"

namespace scg {

namespace {
constexpr double kHalfLog2Pi = 0.91893853320467274178;
}

int Tape::add(int a, int b) { return push({TOp::Add, a, b, 0.0, value(a) + value(b)}); }
int Tape::mul(int a, int b) { return push({TOp::Mul, a, b, 0.0, value(a) * value(b)}); }
int Tape::neg(int a) { return push({TOp::Neg, a, -1, 0.0, -value(a)}); }
int Tape::recip(int a) { return push({TOp::Recip, a, -1, 0.0, ops::recip(value(a))}); }
int Tape::exp(int a) { return push({TOp::Exp, a, -1, 0.0, ops::exp(value(a))}); }
int Tape::log(int a) { return push({TOp::Log, a, -1, 0.0, ops::log(value(a))}); }
int Tape::tanh(int a) { return push({TOp::Tanh, a, -1, 0.0, ops::tanh(value(a))}); }
int Tape::pow(int a, int n) { return push({TOp::Pow, a, -1, static_cast<double>(n), ops::pow(value(a), n)}); }
int Tape::scale(int a, double c) { return push({TOp::Scale, a, -1, c, c * value(a)}); }
int Tape::id(int a) { return push({TOp::Id, a, -1, 0.0, value(a)}); }
int Tape::stop_grad(int a) { return push({TOp::StopGrad, a, -1, 0.0, value(a)}); }

int Tape::sum(const std::vector<int>& xs) {
  if (xs.empty()) return constant(0.0);
  int s = xs[0];
  for (size_t i = 1; i < xs.size(); ++i) s = add(s, xs[i]);
  return s;
}

int Tape::emit(const Expr& e, const std::vector<int>& ps) { return emit_at(e, e.root(), ps); }

int Tape::emit_at(const Expr& e, int idx, const std::vector<int>& ps) {
  const ENode& n = e.node(idx);
  switch (n.op) {
    case EOp::Const: return constant(n.c);
    case EOp::Var: return ps[static_cast<size_t>(n.i)];
    case EOp::Add: {
      int s = emit_at(e, n.args[0], ps);
      for (size_t k = 1; k < n.args.size(); ++k) s = add(s, emit_at(e, n.args[k], ps));
      return s;
    }
    case EOp::Mul: {
      int s = emit_at(e, n.args[0], ps);
      for (size_t k = 1; k < n.args.size(); ++k) s = mul(s, emit_at(e, n.args[k], ps));
      return s;
    }
    case EOp::Neg: return neg(emit_at(e, n.args[0], ps));
    case EOp::Recip: return recip(emit_at(e, n.args[0], ps));
    case EOp::Exp: return exp(emit_at(e, n.args[0], ps));
    case EOp::Log: return log(emit_at(e, n.args[0], ps));
    case EOp::Tanh: return tanh(emit_at(e, n.args[0], ps));
    case EOp::Pow: return pow(emit_at(e, n.args[0], ps), n.i);
    case EOp::Affine: {
      int s = constant(n.c);
      for (size_t k = 0; k < n.args.size(); ++k) s = add(s, scale(emit_at(e, n.args[k], ps), n.coef[k]));
      return s;
    }
    case EOp::Select: {
      // The index is discrete: it selects a branch but carries no gradient.
      int ix = emit_at(e, n.args[0], ps);
      int k = ops::select_index(value(ix), n.args.size() - 1);
      return emit_at(e, n.args[static_cast<size_t>(k) + 1], ps);
    }
  }
  return constant(0.0);
}

void Tape::adjoints(int target, const std::vector<char>* held, std::vector<double>& adj) const {
  adj.assign(recs_.size(), 0.0);
  adj[static_cast<size_t>(target)] = 1.0;
  for (int i = target; i >= 0; --i) {
    const double gi = adj[static_cast<size_t>(i)];
    if (gi == 0.0) continue;
    if (held && (*held)[static_cast<size_t>(i)]) continue;
    const TRec& r = recs_[static_cast<size_t>(i)];
    auto A = [&](int s) -> double& { return adj[static_cast<size_t>(s)]; };
    switch (r.op) {
      case TOp::Leaf:
      case TOp::Const:
      case TOp::StopGrad: break;
      case TOp::Add:
        A(r.a) += gi;
        A(r.b) += gi;
        break;
      case TOp::Mul:
        A(r.a) += gi * value(r.b);
        A(r.b) += gi * value(r.a);
        break;
      case TOp::Neg: A(r.a) -= gi; break;
      case TOp::Recip: A(r.a) += gi * (-(r.val * r.val)); break;
      case TOp::Exp: A(r.a) += gi * r.val; break;
      case TOp::Log: A(r.a) += gi / value(r.a); break;
      case TOp::Tanh: A(r.a) += gi * (1.0 - r.val * r.val); break;
      case TOp::Pow: {
        const int n = static_cast<int>(r.aux);
        if (n != 0) A(r.a) += gi * n * ops::ipow(value(r.a), n - 1);
        break;
      }
      case TOp::Scale: A(r.a) += gi * r.aux; break;
      case TOp::Id: A(r.a) += gi; break;
    }
  }
}

std::vector<double> Tape::adjoints(int target, const std::vector<char>* held) const {
  std::vector<double> adj;
  adjoints(target, held, adj);
  return adj;
}

int emit_node(Tape& t, const Graph& g, NodeId v, const std::vector<int>& parent_slots) {
  const int start = static_cast<int>(t.size());
  int s = t.emit(g.node(v).fn, parent_slots);
  return s < start ? t.id(s) : s;
}

int emit_log_softmax(Tape& t, const std::vector<int>& l, int k) {
  double m = -std::numeric_limits<double>::infinity();
  for (int s : l) m = std::max(m, t.value(s));
  int acc = t.exp(t.add(l[0], t.constant(-m)));
  for (size_t i = 1; i < l.size(); ++i) acc = t.add(acc, t.exp(t.add(l[i], t.constant(-m))));
  const int lse = t.add(t.log(acc), t.constant(m));
  return t.add(l[static_cast<size_t>(k)], t.neg(lse));
}

int emit_gaussian_logpdf(Tape& t, int x, int mu, int logstd) {
  const int sigma = t.exp(logstd);
  const int z = t.mul(t.add(x, t.neg(mu)), t.recip(sigma));
  return t.add(t.add(t.scale(t.pow(z, 2), -0.5), t.neg(logstd)), t.constant(-kHalfLog2Pi));
}

int emit_log_prob_at(Tape& t, const Graph& g, NodeId v, const std::vector<int>& ps, int value_slot) {
  const Dist& d = g.node(v).dist;
  if (d.family == Family::Gaussian) return emit_gaussian_logpdf(t, value_slot, t.emit(d.mean, ps), t.emit(d.logstd, ps));
  std::vector<int> l;
  l.reserve(d.logits.size());
  for (const auto& e : d.logits) l.push_back(t.emit(e, ps));
  return emit_log_softmax(t, l, ops::select_index(t.value(value_slot), l.size()));
}

int emit_log_prob(Tape& t, const Graph& g, NodeId v, const std::vector<int>& ps, double value) {
  return emit_log_prob_at(t, g, v, ps, t.constant(value));
}

Tape record(const Graph& g, const Assignment& a) {
  Tape t;
  t.graph = &g;
  t.reserve(g.size() * 24);
  t.node_slot.assign(g.size(), -1);
  t.logp_slot.assign(g.size(), -1);
  std::vector<int> ps;
  for (NodeId v : g.order()) {
    const Node& nd = g.node(v);
    ps.clear();
    for (NodeId p : nd.parents) ps.push_back(t.node_slot[static_cast<size_t>(p)]);
    int s;
    if (nd.kind == Kind::Input || nd.kind == Kind::Stochastic) {
      s = t.leaf(a[v]);
    } else {
      s = emit_node(t, g, v, ps);
    }
    t.node_slot[static_cast<size_t>(v)] = s;
    if (nd.kind == Kind::Stochastic) t.logp_slot[static_cast<size_t>(v)] = emit_log_prob(t, g, v, ps, a[v]);
  }
  return t;
}

static GradMap to_gradmap(const Tape& t, const std::vector<double>& adj) {
  GradMap gm;
  gm.grads.assign(t.node_slot.size(), 0.0);
  for (size_t v = 0; v < t.node_slot.size(); ++v)
    if (t.node_slot[v] >= 0) gm.grads[v] = adj[static_cast<size_t>(t.node_slot[v])];
  return gm;
}

GradMap backward(const Tape& t, NodeId target) {
  return to_gradmap(t, t.adjoints(t.node_slot.at(static_cast<size_t>(target))));
}

GradMap backward_with_holds(const Tape& t, NodeId target, const NodeSet& holds) {
  std::vector<char> held(t.size(), 0);
  for (NodeId h : holds)
    if (h != target) held[static_cast<size_t>(t.node_slot.at(static_cast<size_t>(h)))] = 1;
  return to_gradmap(t, t.adjoints(t.node_slot.at(static_cast<size_t>(target)), &held));
}

double horizon_backprop(const Tape& t, NodeId u, const std::vector<NodeId>& S, const std::vector<double>& injected,
                        bool naive) {
  if (!t.graph) throw Error(Errc::PreconditionFailed, "tape is not bound to a graph");
  const Graph& g = *t.graph;
  if (S.size() != injected.size()) throw Error(Errc::PreconditionFailed, "one injected value per separator member");
  SeparatorVerdict verdict = separator_verdict(g, u, S);
  if (verdict.kind == SeparatorVerdict::Kind::NotSeparator)
    throw Error(Errc::NotSeparator, "separator does not block every deterministic path from '" + g.name(u) + "'");
  std::vector<size_t> idx(S.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return g.position(S[a]) < g.position(S[b]); });

  const int us = t.node_slot.at(static_cast<size_t>(u));
  std::vector<char> held(t.size(), 0);
  std::vector<double> adj;
  double total = 0.0;
  for (size_t k = 0; k < idx.size(); ++k) {
    const NodeId vi = S[idx[k]];
    t.adjoints(t.node_slot.at(static_cast<size_t>(vi)), naive ? nullptr : &held, adj);
    total += injected[idx[k]] * adj[static_cast<size_t>(us)];
    held[static_cast<size_t>(t.node_slot[static_cast<size_t>(vi)])] = 1;
  }
  return total;
}

double finite_difference(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

double finite_difference(const Graph& g, const Inputs& in, NodeId input, NodeId target, double h) {
  auto f = [&](double x) {
    Inputs shifted = in;
    shifted[static_cast<size_t>(input)] = x;
    std::vector<double> vals(g.size(), 0.0);
    for (NodeId v : g.order()) {
      const Node& nd = g.node(v);
      if (nd.kind == Kind::Input) vals[static_cast<size_t>(v)] = shifted[static_cast<size_t>(v)];
      else if (nd.kind == Kind::Stochastic)
        throw Error(Errc::PreconditionFailed, "finite_difference on a graph with stochastic node '" + nd.name + "'");
      else vals[static_cast<size_t>(v)] = eval_node(g, v, vals);
    }
    return vals[static_cast<size_t>(target)];
  };
  return finite_difference(f, in.at(static_cast<size_t>(input)), h);
}

}  // namespace scg
