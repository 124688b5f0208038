#include "scg/oracle.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>

#include "scg/error.hpp"

namespace scg {

Key key_of(const Assignment& a, const std::vector<NodeId>& set) {
  Key k(set.size());
  for (size_t i = 0; i < set.size(); ++i) k[i] = a[set[i]];
  return k;
}

std::vector<NodeId> sorted(const NodeSet& s) { return {s.begin(), s.end()}; }

double ValueSource::derivative(const Assignment&, NodeId) const {
  throw Error(Errc::PreconditionFailed, "this value source is not differentiable");
}

double ValueFn::at(const Key& k) const {
  auto it = entries.find(k);
  if (it == entries.end()) throw Error(Errc::MissingCriticKey, "no table entry for the requested key");
  return it->second;
}

double ValueFn::value(const Assignment& a) const { return at(key_of(a, set)); }

// Golub-Welsch on the Jacobi matrix of the Hermite weight, then Newton
// polishing of each root on the orthonormal recurrence. Weights come from
// the Christoffel function, which keeps them accurate to machine precision.
static Quadrature build_gh(int n) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) J(k, k - 1) = J(k - 1, k) = std::sqrt(k / 2.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  Quadrature q;
  for (int i = 0; i < n; ++i) {
    double x = es.eigenvalues()(i);
    std::vector<double> p(static_cast<size_t>(n) + 1);
    for (int it = 0; it < 3; ++it) {
      p[0] = 1.0;
      p[1] = std::sqrt(2.0) * x;
      for (int k = 1; k < n; ++k)
        p[static_cast<size_t>(k) + 1] =
            (std::sqrt(2.0) * x * p[static_cast<size_t>(k)] - std::sqrt(k) * p[static_cast<size_t>(k) - 1]) /
            std::sqrt(k + 1.0);
      const double dp = std::sqrt(2.0 * n) * p[static_cast<size_t>(n) - 1];
      x -= p[static_cast<size_t>(n)] / dp;
    }
    double s = 1.0, pk_1 = 1.0, pk = std::sqrt(2.0) * x;
    for (int k = 1; k < n; ++k) {
      s += pk * pk;
      const double next = (std::sqrt(2.0) * x * pk - std::sqrt(k) * pk_1) / std::sqrt(k + 1.0);
      pk_1 = pk;
      pk = next;
    }
    q.z.push_back(std::sqrt(2.0) * x);
    q.w.push_back(1.0 / s);
  }
  double total = 0.0;
  for (double w : q.w) total += w;
  for (double& w : q.w) w /= total;
  return q;
}

const Quadrature& gauss_hermite(int order) {
  static std::mutex mu;
  static std::map<int, Quadrature> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(order);
  if (it == cache.end()) {
    if (order < 1 || order > 64) throw Error(Errc::PreconditionFailed, "quadrature order must be in 1..64");
    it = cache.emplace(order, build_gh(order)).first;
  }
  return it->second;
}

size_t default_support_cap() {
  if (const char* env = std::getenv("SCG_SUPPORT_CAP")) {
    char* end = nullptr;
    unsigned long long v = std::strtoull(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<size_t>(v);
  }
  return 1000000;
}

Evidence Evidence::from(const Graph& g, const Assignment& a, const std::vector<NodeId>& members) {
  Evidence ev(g.size());
  for (NodeId m : members) ev.set(m, a[m]);
  return ev;
}

namespace {

void check_cap(const Graph& g, const Evidence& ev, const EnumOptions& opt) {
  const size_t cap = opt.cap ? opt.cap : default_support_cap();
  double size = 1.0;
  for (NodeId v : g.stochastic()) {
    if (!ev.has.empty() && ev.has[static_cast<size_t>(v)]) continue;
    const Dist& d = g.node(v).dist;
    size *= d.family == Family::Gaussian ? opt.order : d.K;
  }
  if (size > static_cast<double>(cap))
    throw Error(Errc::SupportTooLarge,
                "support of " + std::to_string(static_cast<long long>(size)) + " atoms exceeds cap " + std::to_string(cap));
}

struct DoubleDfs {
  const Graph& g;
  const Inputs& in;
  const Evidence& ev;
  const Quadrature& q;
  const AtomFn& fn;
  std::vector<double> val, logp, pv, logits;

  void rec(size_t k, double w) {
    const auto& order = g.order();
    if (k == order.size()) {
      fn(val, logp, w);
      return;
    }
    const NodeId v = order[k];
    const size_t i = static_cast<size_t>(v);
    const Node& nd = g.node(v);
    const bool has = ev.has[i];
    switch (nd.kind) {
      case Kind::Input:
        val[i] = in.at(i);
        rec(k + 1, w);
        return;
      case Kind::Deterministic:
      case Kind::Cost: {
        parent_values(g, v, val, pv);
        const double x = nd.fn.eval(pv.data());
        if (has && x != ev.value[i]) return;
        val[i] = x;
        rec(k + 1, w);
        return;
      }
      case Kind::Stochastic: break;
    }
    parent_values(g, v, val, pv);
    if (nd.dist.family == Family::Gaussian) {
      const double mu = nd.dist.mean.eval(pv.data());
      const double ls = nd.dist.logstd.eval(pv.data());
      if (has) {
        val[i] = ev.value[i];
        logp[i] = gaussian_logpdf(val[i], mu, ls);
        rec(k + 1, w * std::exp(logp[i]));
        return;
      }
      const double sigma = ops::exp(ls);
      for (size_t j = 0; j < q.z.size(); ++j) {
        val[i] = mu + sigma * q.z[j];
        logp[i] = gaussian_logpdf(val[i], mu, ls);
        rec(k + 1, w * q.w[j]);
      }
      return;
    }
    categorical_logits(g, v, pv.data(), logits);
    const std::vector<double> l = logits;  // recursion reuses the scratch buffer
    if (has) {
      val[i] = ev.value[i];
      logp[i] = log_softmax_at(l, ops::select_index(val[i], l.size()));
      rec(k + 1, w * std::exp(logp[i]));
      return;
    }
    for (size_t j = 0; j < l.size(); ++j) {
      const double lp = log_softmax_at(l, static_cast<int>(j));
      val[i] = static_cast<double>(j);
      logp[i] = lp;
      rec(k + 1, w * std::exp(lp));
    }
  }
};

// Enumeration recorded on a tape so expectations can be differentiated.
struct TapeDfs {
  const Graph& g;
  const Inputs& in;
  const Evidence& ev;
  const Quadrature& q;
  TapeDfs(const Graph& g_, const Inputs& in_, const Evidence& ev_, const Quadrature& q_)
      : g(g_), in(in_), ev(ev_), q(q_) {}
  NodeId live = -1;
  bool live_inputs = false, live_weights = false, live_locations = false;
  std::function<int(TapeDfs&)> integrand;

  Tape t;
  std::vector<int> slot;
  std::vector<double> val;
  std::vector<int> input_slot;
  std::vector<int> lp;  // log p slot of each stochastic node on the current branch, -1 if not yet emitted
  int live_slot = -1;
  int num = -1, den_slot = -1;
  double den = 0.0;

  void run() {
    const size_t n = g.size();
    slot.assign(n, -1);
    val.assign(n, 0.0);
    input_slot.assign(n, -1);
    lp.assign(n, -1);
    t.reserve(1536);
    for (NodeId v : g.inputs()) {
      const double x = in.at(static_cast<size_t>(v));
      input_slot[static_cast<size_t>(v)] = live_inputs ? t.leaf(x) : t.constant(x);
    }
    if (live >= 0) live_slot = t.leaf(ev.value[static_cast<size_t>(live)]);
    rec(0, live_weights ? t.constant(1.0) : -1, 1.0);
    if (num < 0) num = t.constant(0.0);
  }

  int log_prob(NodeId v) {
    int& s = lp[static_cast<size_t>(v)];
    if (s < 0) s = emit_log_prob(t, g, v, parent_slots(v), val[static_cast<size_t>(v)]);
    return s;
  }

  std::vector<int> parent_slots(NodeId v) const {
    std::vector<int> ps;
    ps.reserve(g.node(v).parents.size());
    for (NodeId p : g.node(v).parents) ps.push_back(slot[static_cast<size_t>(p)]);
    return ps;
  }

  void next(size_t k, int ws, double w, int factor_slot, double factor) {
    if (live_weights) rec(k + 1, t.mul(ws, factor_slot), 0.0);
    else rec(k + 1, -1, w * factor);
  }

  void rec(size_t k, int ws, double w) {
    const auto& order = g.order();
    if (k == order.size()) {
      const int f = integrand(*this);
      int term;
      if (live_weights) {
        term = t.mul(ws, f);
        den_slot = den_slot < 0 ? ws : t.add(den_slot, ws);
        den += t.value(ws);
      } else {
        term = t.scale(f, w);
        den += w;
      }
      num = num < 0 ? term : t.add(num, term);
      return;
    }
    const NodeId v = order[k];
    const size_t i = static_cast<size_t>(v);
    const Node& nd = g.node(v);
    const bool has = ev.has[i];
    if (nd.kind == Kind::Input) {
      slot[i] = input_slot[i];
      val[i] = in.at(i);
      rec(k + 1, ws, w);
      return;
    }
    const std::vector<int> ps = parent_slots(v);
    if (nd.kind != Kind::Stochastic) {
      const int s = emit_node(t, g, v, ps);
      if (has && t.value(s) != ev.value[i]) return;
      slot[i] = s;
      val[i] = t.value(s);
      rec(k + 1, ws, w);
      return;
    }
    if (has) {
      const int xs = v == live ? live_slot : t.constant(ev.value[i]);
      const int l = emit_log_prob_at(t, g, v, ps, xs);
      slot[i] = xs;
      val[i] = ev.value[i];
      lp[i] = v == live ? -1 : l;
      const int f = live_weights ? t.exp(l) : -1;
      next(k, ws, w, f, std::exp(t.value(l)));
      return;
    }
    if (nd.dist.family == Family::Gaussian) {
      const int mu = t.emit(nd.dist.mean, ps);
      const int sigma = t.exp(t.emit(nd.dist.logstd, ps));
      for (size_t j = 0; j < q.z.size(); ++j) {
        const double x = t.value(mu) + t.value(sigma) * q.z[j];
        slot[i] = live_locations ? t.add(mu, t.mul(sigma, t.constant(q.z[j]))) : t.constant(x);
        val[i] = x;
        lp[i] = -1;
        const int f = live_weights ? t.constant(q.w[j]) : -1;
        next(k, ws, w, f, q.w[j]);
      }
      return;
    }
    std::vector<int> l;
    l.reserve(nd.dist.logits.size());
    for (const auto& e : nd.dist.logits) l.push_back(t.emit(e, ps));
    for (size_t j = 0; j < l.size(); ++j) {
      const int lj = emit_log_softmax(t, l, static_cast<int>(j));
      slot[i] = t.constant(static_cast<double>(j));
      val[i] = static_cast<double>(j);
      lp[i] = lj;
      const int f = live_weights ? t.exp(lj) : -1;
      next(k, ws, w, f, std::exp(t.value(lj)));
    }
  }
};

double g_tamper = 0.0;

}  // namespace

void enumerate_given(const Graph& g, const Inputs& inputs, const Evidence& ev_in, const AtomFn& fn, EnumOptions opt) {
  const Evidence ev = ev_in.has.empty() ? Evidence(g.size()) : ev_in;
  check_cap(g, ev, opt);
  DoubleDfs d{g, inputs, ev, gauss_hermite(opt.order), fn, {}, {}, {}, {}};
  d.val.assign(g.size(), 0.0);
  d.logp.assign(g.size(), std::numeric_limits<double>::quiet_NaN());
  d.rec(0, 1.0);
}

SupportTable enumerate_support(const Graph& g, const Inputs& inputs, EnumOptions opt) {
  SupportTable t;
  t.g = &g;
  t.inputs = inputs;
  t.order = opt.order;
  enumerate_given(
      g, inputs, Evidence(g.size()),
      [&](const std::vector<double>& values, const std::vector<double>& logp, double w) {
        if (w > 0.0) t.atoms.push_back({Assignment{values, logp}, w});
      },
      opt);
  return t;
}

Scalar cost_target(const NodeSet& costs) {
  std::vector<NodeId> cs(costs.begin(), costs.end());
  return [cs](const Assignment& a) {
    double s = 0.0;
    for (NodeId c : cs) s += a[c];
    return s;
  };
}

void set_value_tamper(double delta) { g_tamper = delta; }
double value_tamper() { return g_tamper; }

ValueFn exact_value(const SupportTable& t, const NodeSet& X, const Scalar& S) {
  ValueFn f;
  f.set = sorted(X);
  std::map<Key, std::pair<double, double>> acc;
  for (const Atom& at : t.atoms) {
    auto& [num, den] = acc[key_of(at.a, f.set)];
    num += at.p * S(at.a);
    den += at.p;
  }
  for (const auto& [k, nd] : acc) f.entries[k] = nd.first / nd.second + g_tamper;
  return f;
}

ValueFn exact_value(const SupportTable& t, const NodeSet& X, const NodeSet& costs) {
  return exact_value(t, X, cost_target(costs));
}

double surrogate_derivative(const Graph& g, const Assignment& a, NodeId v) {
  Tape t = record(g, a);
  std::vector<int> terms;
  for (NodeId c : g.costs()) terms.push_back(t.node_slot[static_cast<size_t>(c)]);
  for (NodeId w : g.stochastic()) {
    const double Lw = cost_sum(a, cost_to_go_set(g, w));
    terms.push_back(t.mul(t.logp_slot[static_cast<size_t>(w)], t.constant(Lw)));
  }
  const int ls = t.sum(terms);
  return t.adjoints(ls)[static_cast<size_t>(t.node_slot[static_cast<size_t>(v)])];
}

ValueFn exact_gradient_critic(const SupportTable& t, NodeId v, const NodeSet& C) {
  const Graph& g = *t.g;
  std::map<const Atom*, double> d;
  for (const Atom& at : t.atoms) d[&at] = surrogate_derivative(g, at.a, v);
  ValueFn f;
  f.set = sorted(C);
  std::map<Key, std::pair<double, double>> acc;
  for (const Atom& at : t.atoms) {
    auto& [num, den] = acc[key_of(at.a, f.set)];
    num += at.p * d[&at];
    den += at.p;
  }
  for (const auto& [k, nd] : acc) f.entries[k] = nd.first / nd.second;
  return f;
}

ExactGradient exact_parameter_gradient(const Graph& g, const Inputs& inputs, EnumOptions opt) {
  Evidence ev(g.size());
  check_cap(g, ev, opt);
  TapeDfs d{g, inputs, ev, gauss_hermite(opt.order)};
  d.live_inputs = d.live_weights = d.live_locations = true;
  const std::vector<NodeId> costs(g.costs().begin(), g.costs().end());
  d.integrand = [&](TapeDfs& s) {
    std::vector<int> cs;
    for (NodeId c : costs) cs.push_back(s.slot[static_cast<size_t>(c)]);
    return s.t.sum(cs);
  };
  d.run();
  ExactGradient out;
  out.J = d.t.value(d.num);
  out.grad.assign(g.size(), 0.0);
  const std::vector<double> adj = d.t.adjoints(d.num);
  for (NodeId v : g.inputs()) out.grad[static_cast<size_t>(v)] = adj[static_cast<size_t>(d.input_slot[static_cast<size_t>(v)])];
  return out;
}

double exact_parameter_gradient(const Graph& g, const Inputs& inputs, NodeId theta, EnumOptions opt) {
  if (!g.is_input(theta)) throw Error(Errc::PreconditionFailed, "'" + g.name(theta) + "' is not an input");
  return exact_parameter_gradient(g, inputs, opt).grad[static_cast<size_t>(theta)];
}

bool check_ci_numeric(const SupportTable& t, const NodeSet& A, const NodeSet& B, const NodeSet& Z, double tol) {
  const std::vector<NodeId> a = sorted(A), b = sorted(B), z = sorted(Z);
  struct Group {
    double pz = 0.0;
    std::map<Key, double> pa, pb;
    std::map<std::pair<Key, Key>, double> pab;
  };
  std::map<Key, Group> groups;
  for (const Atom& at : t.atoms) {
    Group& gr = groups[key_of(at.a, z)];
    Key ka = key_of(at.a, a), kb = key_of(at.a, b);
    gr.pz += at.p;
    gr.pa[ka] += at.p;
    gr.pb[kb] += at.p;
    gr.pab[{ka, kb}] += at.p;
  }
  for (const auto& [kz, gr] : groups) {
    double tv = 0.0;
    for (const auto& [ka, pa] : gr.pa)
      for (const auto& [kb, pb] : gr.pb) {
        auto it = gr.pab.find({ka, kb});
        const double joint = it == gr.pab.end() ? 0.0 : it->second / gr.pz;
        tv += std::abs(joint - (pa / gr.pz) * (pb / gr.pz));
      }
    if (0.5 * tv > tol) return false;
  }
  return true;
}

Moments estimator_moments(const SupportTable& t, const Scalar& f) {
  std::vector<double> vals;
  vals.reserve(t.atoms.size());
  Moments m;
  for (const Atom& at : t.atoms) {
    vals.push_back(f(at.a));
    m.mean += at.p * vals.back();
  }
  for (size_t i = 0; i < vals.size(); ++i) m.var += t.atoms[i].p * (vals[i] - m.mean) * (vals[i] - m.mean);
  return m;
}

std::vector<Moments> estimator_moments(const SupportTable& t,
                                       const std::function<std::vector<double>(const Assignment&)>& f) {
  std::vector<std::vector<double>> vals;
  std::vector<Moments> m;
  for (const Atom& at : t.atoms) {
    vals.push_back(f(at.a));
    if (m.empty()) m.resize(vals.back().size());
    for (size_t j = 0; j < m.size(); ++j) m[j].mean += at.p * vals.back()[j];
  }
  for (size_t i = 0; i < vals.size(); ++i)
    for (size_t j = 0; j < m.size(); ++j) {
      const double d = vals[i][j] - m[j].mean;
      m[j].var += t.atoms[i].p * d * d;
    }
  return m;
}

ExactValueFn::ExactValueFn(const Graph& g, Inputs inputs, const NodeSet& X, const NodeSet& costs, EnumOptions opt)
    : g_(&g), inputs_(std::move(inputs)), set_(sorted(X)), costs_(costs), opt_(opt) {
  for (NodeId m : set_)
    if (g.is_continuous(m) && !g.is_stochastic(m))
      throw Error(Errc::PreconditionFailed,
                  "conditioning on continuous deterministic node '" + g.name(m) + "' is not supported");
}

double ExactValueFn::value(const Assignment& a) const {
  Key k = key_of(a, set_);
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = cache_.find(k);
    if (it != cache_.end()) return it->second + g_tamper;
  }
  const Scalar S = cost_target(costs_);
  const std::vector<NodeId> cs(costs_.begin(), costs_.end());
  double num = 0.0, den = 0.0;
  enumerate_given(
      *g_, inputs_, Evidence::from(*g_, a, set_),
      [&](const std::vector<double>& values, const std::vector<double>&, double w) {
        double s = 0.0;
        for (NodeId c : cs) s += values[static_cast<size_t>(c)];
        num += w * s;
        den += w;
      },
      opt_);
  if (!(den > 0.0)) throw Error(Errc::MissingCriticKey, "conditioning values have zero probability");
  const double q = num / den;
  std::lock_guard<std::mutex> lock(mu_);
  cache_.emplace(std::move(k), q);
  return q + g_tamper;
}

double ExactValueFn::derivative(const Assignment& a, NodeId v) const {
  bool member = false;
  for (NodeId m : set_) member = member || m == v;
  if (!member) return 0.0;
  if (!g_->is_stochastic(v))
    throw Error(Errc::PreconditionFailed, "derivative only with respect to a stochastic member");
  std::pair<Key, NodeId> k{key_of(a, set_), v};
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = dcache_.find(k);
    if (it != dcache_.end()) return it->second;
  }
  const Evidence ev = Evidence::from(*g_, a, set_);
  check_cap(*g_, ev, opt_);
  TapeDfs d{*g_, inputs_, ev, gauss_hermite(opt_.order)};
  d.live = v;
  d.live_weights = d.live_locations = true;
  const std::vector<NodeId> cs(costs_.begin(), costs_.end());
  d.integrand = [&](TapeDfs& s) {
    std::vector<int> xs;
    for (NodeId c : cs) xs.push_back(s.slot[static_cast<size_t>(c)]);
    return s.t.sum(xs);
  };
  d.run();
  if (d.den_slot < 0 || !(d.den > 0.0)) throw Error(Errc::MissingCriticKey, "conditioning values have zero probability");
  const int q = d.t.mul(d.num, d.t.recip(d.den_slot));
  const double dq = d.t.adjoints(q)[static_cast<size_t>(d.live_slot)];
  std::lock_guard<std::mutex> lock(mu_);
  cache_.emplace(k.first, d.t.value(q));
  dcache_.emplace(std::move(k), dq);
  return dq;
}

ExactGradCritic::ExactGradCritic(const Graph& g, Inputs inputs, NodeId v, const NodeSet& C, EnumOptions opt)
    : g_(&g), inputs_(std::move(inputs)), v_(v), set_(sorted(C)), opt_(opt) {
  for (NodeId d : descendants(g, v))
    if (d != v && g.is_stochastic(d)) desc_.insert(d);
  for (NodeId m : set_)
    if (g.is_continuous(m) && !g.is_stochastic(m))
      throw Error(Errc::PreconditionFailed,
                  "conditioning on continuous deterministic node '" + g.name(m) + "' is not supported");
}

double ExactGradCritic::value(const Assignment& a) const {
  Key k = key_of(a, set_);
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = cache_.find(k);
    if (it != cache_.end()) return it->second;
  }
  const Graph& g = *g_;
  const Evidence ev = Evidence::from(g, a, set_);
  double result;
  if (ev.has[static_cast<size_t>(v_)] && g.is_stochastic(v_)) {
    check_cap(g, ev, opt_);
    TapeDfs d{g, inputs_, ev, gauss_hermite(opt_.order)};
    d.live = v_;
    std::vector<std::pair<NodeId, std::vector<NodeId>>> ctg;
    for (NodeId w : desc_) ctg.emplace_back(w, sorted(cost_to_go_set(g, w)));
    const NodeSet& costs = g.costs();
    d.integrand = [&](TapeDfs& s) {
      std::vector<int> terms;
      for (NodeId c : costs) terms.push_back(s.slot[static_cast<size_t>(c)]);
      for (const auto& [w, cw] : ctg) {
        double Lw = 0.0;
        for (NodeId c : cw) Lw += s.val[static_cast<size_t>(c)];
        terms.push_back(s.t.mul(s.log_prob(w), s.t.constant(Lw)));
      }
      return s.t.sum(terms);
    };
    d.run();
    if (!(d.den > 0.0)) throw Error(Errc::MissingCriticKey, "conditioning values have zero probability");
    result = d.t.adjoints(d.num)[static_cast<size_t>(d.live_slot)] / d.den;
  } else {
    double num = 0.0, den = 0.0;
    enumerate_given(
        g, inputs_, ev,
        [&](const std::vector<double>& values, const std::vector<double>& logp, double w) {
          num += w * surrogate_derivative(g, Assignment{values, logp}, v_);
          den += w;
        },
        opt_);
    if (!(den > 0.0)) throw Error(Errc::MissingCriticKey, "conditioning values have zero probability");
    result = num / den;
  }
  std::lock_guard<std::mutex> lock(mu_);
  cache_.emplace(std::move(k), result);
  return result;
}

}  // namespace scg
