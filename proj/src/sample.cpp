#include "scg/sample.hpp"

#include <limits>

#include "scg/error.hpp"

namespace scg {

namespace {
constexpr double kHalfLog2Pi = 0.91893853320467274178;
}

Inputs make_inputs(const Graph& g, const std::map<std::string, double>& by_name) {
  Inputs in(g.size(), 0.0);
  for (const auto& [name, val] : by_name) {
    NodeId v = g.id(name);
    if (!g.is_input(v)) throw Error(Errc::PreconditionFailed, "'" + name + "' is not an input node");
    in[static_cast<size_t>(v)] = val;
  }
  return in;
}

void parent_values(const Graph& g, NodeId v, const std::vector<double>& values, std::vector<double>& out) {
  const auto& ps = g.node(v).parents;
  out.resize(ps.size());
  for (size_t i = 0; i < ps.size(); ++i) out[i] = values[static_cast<size_t>(ps[i])];
}

double eval_node(const Graph& g, NodeId v, const std::vector<double>& values) {
  std::vector<double> pv;
  parent_values(g, v, values, pv);
  return g.node(v).fn.eval(pv.data());
}

void categorical_logits(const Graph& g, NodeId v, const double* pv, std::vector<double>& logits) {
  const Dist& d = g.node(v).dist;
  logits.resize(static_cast<size_t>(d.K));
  for (int k = 0; k < d.K; ++k) logits[static_cast<size_t>(k)] = d.logits[static_cast<size_t>(k)].eval(pv);
}

static double max_of(const std::vector<double>& xs) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : xs) m = x > m ? x : m;
  return m;
}

double log_softmax_at(const std::vector<double>& logits, int k) {
  const double m = max_of(logits);
  double s = ops::exp(logits[0] + (-m));
  for (size_t i = 1; i < logits.size(); ++i) s = s + ops::exp(logits[i] + (-m));
  const double lse = ops::log(s) + m;
  return logits[static_cast<size_t>(k)] + (-lse);
}

void softmax(const std::vector<double>& logits, std::vector<double>& probs) {
  probs.resize(logits.size());
  for (size_t k = 0; k < logits.size(); ++k) probs[k] = std::exp(log_softmax_at(logits, static_cast<int>(k)));
}

double gaussian_logpdf(double x, double mu, double logstd) {
  const double sigma = ops::exp(logstd);
  const double z = (x + (-mu)) * ops::recip(sigma);
  return ((-0.5 * ops::pow(z, 2)) + (-logstd)) + (-kHalfLog2Pi);
}

double node_log_prob(const Graph& g, NodeId v, const std::vector<double>& values, double value) {
  std::vector<double> pv;
  parent_values(g, v, values, pv);
  const Dist& d = g.node(v).dist;
  if (d.family == Family::Gaussian) return gaussian_logpdf(value, d.mean.eval(pv.data()), d.logstd.eval(pv.data()));
  std::vector<double> logits;
  categorical_logits(g, v, pv.data(), logits);
  return log_softmax_at(logits, ops::select_index(value, logits.size()));
}

Assignment forward_sample(const Graph& g, const Inputs& inputs, Rng& rng) {
  Assignment a;
  const size_t n = g.size();
  a.values.assign(n, 0.0);
  a.logp.assign(n, std::numeric_limits<double>::quiet_NaN());
  std::vector<double> pv, logits, probs;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (NodeId v : g.order()) {
    const Node& nd = g.node(v);
    const size_t i = static_cast<size_t>(v);
    switch (nd.kind) {
      case Kind::Input: a.values[i] = inputs.at(i); break;
      case Kind::Deterministic:
      case Kind::Cost:
        parent_values(g, v, a.values, pv);
        a.values[i] = nd.fn.eval(pv.data());
        break;
      case Kind::Stochastic: {
        parent_values(g, v, a.values, pv);
        if (nd.dist.family == Family::Gaussian) {
          const double mu = nd.dist.mean.eval(pv.data());
          const double ls = nd.dist.logstd.eval(pv.data());
          const double x = mu + ops::exp(ls) * normal(rng);
          a.values[i] = x;
          a.logp[i] = gaussian_logpdf(x, mu, ls);
        } else {
          categorical_logits(g, v, pv.data(), logits);
          softmax(logits, probs);
          const double u = unif(rng);
          int k = 0;
          double acc = probs[0];
          while (k + 1 < static_cast<int>(probs.size()) && u >= acc) acc += probs[static_cast<size_t>(++k)];
          a.values[i] = k;
          a.logp[i] = log_softmax_at(logits, k);
        }
        break;
      }
    }
  }
  return a;
}

double cost_sum(const Assignment& a, const NodeSet& costs) {
  double s = 0.0;
  for (NodeId c : costs) s += a[c];
  return s;
}

double total_cost(const Assignment& a, const Graph& g) { return cost_sum(a, g.costs()); }

bool recheck(const Graph& g, const Assignment& a) {
  for (NodeId v : g.order()) {
    Kind k = g.node(v).kind;
    if (k != Kind::Deterministic && k != Kind::Cost) continue;
    if (eval_node(g, v, a.values) != a[v]) return false;
  }
  return true;
}

}  // namespace scg
