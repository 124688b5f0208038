#include "scg/value_store.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "scg/analysis.hpp"
#include "scg/error.hpp"

namespace scg {

using nlohmann::json;

LearnedValueFn::LearnedValueFn(std::vector<NodeId> set, NodeId anchor, int degree)
    : set_(std::move(set)), anchor_(anchor), degree_(anchor >= 0 ? degree : 0) {
  std::sort(set_.begin(), set_.end());
  for (NodeId m : set_)
    if (m != anchor_) keyed_.push_back(m);
  if (anchor_ >= 0 && !std::binary_search(set_.begin(), set_.end(), anchor_))
    throw Error(Errc::PreconditionFailed, "anchor must be a member of the set");
}

LearnedValueFn::LearnedValueFn(const LearnedValueFn& o)
    : set_(o.set_), keyed_(o.keyed_), anchor_(o.anchor_), degree_(o.degree_), cells_(o.cells_),
      misses_(o.misses_.load()) {}

LearnedValueFn& LearnedValueFn::operator=(const LearnedValueFn& o) {
  set_ = o.set_;
  keyed_ = o.keyed_;
  anchor_ = o.anchor_;
  degree_ = o.degree_;
  cells_ = o.cells_;
  misses_ = o.misses_.load();
  return *this;
}

Key LearnedValueFn::key(const Assignment& a) const { return key_of(a, keyed_); }

double LearnedValueFn::value(const Assignment& a) const {
  auto it = cells_.find(key(a));
  if (it == cells_.end() || it->second.params.empty()) {
    ++misses_;
    return 0.0;
  }
  const std::vector<double>& c = it->second.params;
  if (anchor_ < 0) return c[0];
  const double x = a[anchor_];
  double s = 0.0;
  for (size_t j = c.size(); j-- > 0;) s = s * x + c[j];
  return s;
}

double LearnedValueFn::derivative(const Assignment& a, NodeId v) const {
  if (v != anchor_ || anchor_ < 0) return 0.0;
  auto it = cells_.find(key(a));
  if (it == cells_.end() || it->second.params.empty()) {
    ++misses_;
    return 0.0;
  }
  const std::vector<double>& c = it->second.params;
  const double x = a[anchor_];
  double s = 0.0;
  for (size_t j = c.size(); j-- > 1;) s = s * x + static_cast<double>(j) * c[j];
  return s;
}

double LearnedValueFn::stderr_at(const Key& k) const {
  auto it = cells_.find(k);
  if (it == cells_.end() || it->second.count < 2 || it->second.weight <= 0.0) return 0.0;
  const Cell& c = it->second;
  const double n = static_cast<double>(c.count);
  return std::sqrt(c.m2 / c.weight * n / (n - 1.0) / n);
}

json LearnedValueFn::to_json(const Graph& g) const {
  json j;
  j["set"] = g.names(set_);
  j["anchor"] = anchor_ >= 0 ? json(g.name(anchor_)) : json(nullptr);
  j["degree"] = degree_;
  j["keys"] = json::array();
  j["params"] = json::array();
  for (const auto& [k, c] : cells_) {
    j["keys"].push_back(k);
    j["params"].push_back(c.params);
  }
  j["misses"] = misses();
  return j;
}

LearnedValueFn LearnedValueFn::from_json(const Graph& g, const json& j) {
  try {
    std::vector<NodeId> set;
    for (const auto& n : j.at("set")) set.push_back(g.id(n.get<std::string>()));
    NodeId anchor = j.at("anchor").is_null() ? -1 : g.id(j.at("anchor").get<std::string>());
    LearnedValueFn f(set, anchor, j.at("degree").get<int>());
    const json& keys = j.at("keys");
    const json& params = j.at("params");
    if (keys.size() != params.size()) throw Error(Errc::ConfigError, "learned table: keys and params differ in length");
    for (size_t i = 0; i < keys.size(); ++i) {
      Cell c;
      c.params = params[i].get<std::vector<double>>();
      f.cells_[keys[i].get<Key>()] = c;
    }
    f.misses_ = j.at("misses").get<size_t>();
    return f;
  } catch (const json::exception& e) {
    throw Error(Errc::ConfigError, std::string("learned table: ") + e.what());
  }
}

std::vector<Weighted> unit_weights(const std::vector<Assignment>& stream) {
  std::vector<Weighted> out;
  out.reserve(stream.size());
  for (const Assignment& a : stream) out.push_back({&a, 1.0});
  return out;
}

std::vector<Weighted> atom_weights(const SupportTable& t) {
  std::vector<Weighted> out;
  out.reserve(t.atoms.size());
  for (const Atom& at : t.atoms) out.push_back({&at.a, at.p});
  return out;
}

namespace {

void require_discrete(const Graph& g, const std::vector<NodeId>& keyed) {
  for (NodeId m : keyed)
    if (g.is_continuous(m))
      throw Error(Errc::PreconditionFailed, "'" + g.name(m) + "' is continuous; tabular keys must be discrete");
}

// Weighted running conditional mean of target(a) keyed by X.
Fit tabular_fit(const Graph& g, const std::vector<Weighted>& data, const NodeSet& X,
                const std::function<double(const Assignment&)>& target) {
  Fit f{LearnedValueFn(sorted(X)), {}};
  require_discrete(g, f.fn.key_nodes());
  auto& cells = f.fn.cells();
  for (const Weighted& d : data) {
    if (d.w <= 0.0) continue;
    auto& c = cells[f.fn.key(*d.a)];
    if (c.params.empty()) c.params.assign(1, 0.0);
    const double y = target(*d.a);
    c.weight += d.w;
    ++c.count;
    const double delta = y - c.params[0];
    c.params[0] += d.w / c.weight * delta;
    c.m2 += d.w * delta * (y - c.params[0]);
  }
  f.report.steps = data.size();
  double W = 0.0, sq = 0.0;
  std::map<Key, std::pair<double, double>> res;
  for (const Weighted& d : data) {
    const double r = target(*d.a) - f.fn.value(*d.a);
    sq += d.w * r * r;
    W += d.w;
    auto& e = res[f.fn.key(*d.a)];
    e.first += d.w * r;
    e.second += d.w;
  }
  f.report.loss = W > 0.0 ? sq / W : 0.0;
  for (const auto& [k, e] : res)
    if (e.second > 0.0) f.report.residual_max = std::max(f.report.residual_max, std::abs(e.first / e.second));
  return f;
}

}  // namespace

Fit fit_on_return(const Graph& g, const std::vector<Weighted>& data, const NodeSet& X, NodeId v) {
  const NodeSet ctg = cost_to_go_set(g, v);
  return tabular_fit(g, data, X, [&](const Assignment& a) { return cost_sum(a, ctg); });
}

Fit fit_bootstrap(const Graph& g, const std::vector<Weighted>& data, NodeId v, const NodeSet& X_v,
                  const std::vector<PartSpec>& parts) {
  std::vector<std::pair<NodeSet, NodeSet>> p;
  for (const PartSpec& s : parts) p.emplace_back(s.nodes, s.cond);
  bool ok = false;
  try {
    ok = validate_bootstrap(g, v, X_v, p);
  } catch (const Error& e) {
    throw Error(Errc::BootstrapInvalid, e.what());
  }
  if (!ok) throw Error(Errc::BootstrapInvalid, "part sets do not certify the bootstrap for '" + g.name(v) + "'");
  std::vector<NodeSet> sampled;
  for (const PartSpec& s : parts) sampled.push_back(s.source ? NodeSet{} : cost_to_go_set(g, s.nodes));
  return tabular_fit(g, data, X_v, [&](const Assignment& a) {
    double y = 0.0;
    for (size_t i = 0; i < parts.size(); ++i) y += parts[i].source ? parts[i].source->value(a) : cost_sum(a, sampled[i]);
    return y;
  });
}

Fit fit_gradient_critic(const Graph& g, const std::vector<Weighted>& data, NodeId v, const NodeSet& C,
                        SobolevOptions opt) {
  if (!C.count(v)) throw Error(Errc::PreconditionFailed, "the anchor must belong to the critic set");
  const bool use_value = opt.mode != CriticMode::GradOnly && opt.alpha > 0.0;
  const bool use_grad = opt.mode != CriticMode::ValueOnly && opt.beta > 0.0;
  if (!use_value && !use_grad) throw Error(Errc::PreconditionFailed, "both loss weights are zero");
  if (opt.mode != CriticMode::GradOnly && !is_markov(g, C, v))
    throw Error(Errc::NotMarkov, "critic set is not Markov for '" + g.name(v) + "'");
  if (use_value) {
    // The anchor must keep some randomness given the rest of C, or the value
    // fit cannot see its slope.
    NodeSet rest = C;
    rest.erase(v);
    bool noisy = g.is_stochastic(v);
    for (NodeId w : ancestors(g, v))
      if (g.is_stochastic(w) && !rest.count(w)) noisy = true;
    if (!noisy)
      throw Error(Errc::PreconditionFailed, "'" + g.name(v) + "' has no noise given the rest of the critic set");
  }
  const double alpha = opt.mode == CriticMode::GradOnly ? 0.0 : opt.alpha;
  const double beta = opt.mode == CriticMode::ValueOnly ? 0.0 : opt.beta;
  const int d = std::max(opt.degree, 1);
  Fit f{LearnedValueFn(sorted(C), v, d), {}};
  require_discrete(g, f.fn.key_nodes());
  const NodeSet ctg = cost_to_go_set(g, v);

  struct Normal {
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    size_t n = 0;
    double w = 0.0;
  };
  std::map<Key, Normal> eq;
  std::vector<std::pair<double, double>> targets;
  targets.reserve(data.size());
  Eigen::VectorXd phi(d + 1), dphi(d + 1);
  auto features = [&](double x) {
    double p = 1.0;
    for (int j = 0; j <= d; ++j) {
      phi[j] = p;
      dphi[j] = j == 0 ? 0.0 : j * phi[j - 1];
      p *= x;
    }
  };
  for (const Weighted& s : data) {
    const double y = alpha > 0.0 ? cost_sum(*s.a, ctg) : 0.0;
    const double gy = beta > 0.0 ? surrogate_derivative(g, *s.a, v) : 0.0;
    targets.emplace_back(y, gy);
    if (s.w <= 0.0) continue;
    Normal& ne = eq[f.fn.key(*s.a)];
    if (ne.n == 0) {
      ne.A = Eigen::MatrixXd::Zero(d + 1, d + 1);
      ne.b = Eigen::VectorXd::Zero(d + 1);
    }
    features((*s.a)[v]);
    ne.A += s.w * (alpha * phi * phi.transpose() + beta * dphi * dphi.transpose());
    ne.b += s.w * (alpha * y * phi + beta * gy * dphi);
    ++ne.n;
    ne.w += s.w;
  }
  for (auto& [k, ne] : eq) {
    // Minimum-norm solution: grad-only fits leave c_0 free and get c_0 = 0.
    const Eigen::VectorXd c = ne.A.completeOrthogonalDecomposition().solve(ne.b);
    LearnedValueFn::Cell& cell = f.fn.cells()[k];
    cell.params.assign(c.data(), c.data() + c.size());
    cell.count = ne.n;
    cell.weight = ne.w;
  }
  f.report.steps = data.size();
  double W = 0.0, sq = 0.0;
  std::map<Key, std::pair<double, double>> res;
  for (size_t i = 0; i < data.size(); ++i) {
    const Assignment& a = *data[i].a;
    const double w = data[i].w;
    double r2 = 0.0, r = 0.0;
    if (alpha > 0.0) {
      const double e = targets[i].first - f.fn.value(a);
      r2 += alpha * e * e;
      r += alpha * e;
    }
    if (beta > 0.0) {
      const double e = targets[i].second - f.fn.derivative(a, v);
      r2 += beta * e * e;
      r += beta * e;
    }
    sq += w * r2;
    W += w;
    auto& acc = res[f.fn.key(a)];
    acc.first += w * r;
    acc.second += w;
  }
  f.report.loss = W > 0.0 ? sq / W : 0.0;
  for (const auto& [k, e] : res)
    if (e.second > 0.0) f.report.residual_max = std::max(f.report.residual_max, std::abs(e.first / e.second));
  return f;
}

}  // namespace scg
