#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "scg/graph.hpp"
#include "scg/sample.hpp"
#include "scg/tape.hpp"
#include "scg/value_source.hpp"

namespace scg {

// Standard normal Gauss-Hermite rule: abscissae z_k and weights summing to 1.
struct Quadrature {
  std::vector<double> z, w;
};
const Quadrature& gauss_hermite(int order);

// 10^6 unless SCG_SUPPORT_CAP is set.
size_t default_support_cap();

struct EnumOptions {
  int order = 16;
  size_t cap = 0;  // 0: default_support_cap()
};

struct Atom {
  Assignment a;
  double p = 0.0;
};

struct SupportTable {
  const Graph* g = nullptr;
  Inputs inputs;
  int order = 16;
  std::vector<Atom> atoms;
};

SupportTable enumerate_support(const Graph& g, const Inputs& inputs, EnumOptions opt = {});

// Fixed values for some nodes. Stochastic evidence contributes its
// probability (or density) as a weight; deterministic evidence prunes.
struct Evidence {
  std::vector<char> has;
  std::vector<double> value;
  explicit Evidence(size_t n = 0) : has(n, 0), value(n, 0.0) {}
  void set(NodeId v, double x) {
    has[static_cast<size_t>(v)] = 1;
    value[static_cast<size_t>(v)] = x;
  }
  static Evidence from(const Graph& g, const Assignment& a, const std::vector<NodeId>& members);
};

using AtomFn = std::function<void(const std::vector<double>& values, const std::vector<double>& logp, double w)>;
// Weighted enumeration consistent with the evidence; weights are unnormalized.
void enumerate_given(const Graph& g, const Inputs& inputs, const Evidence& ev, const AtomFn& fn, EnumOptions opt = {});

using Scalar = std::function<double(const Assignment&)>;
Scalar cost_target(const NodeSet& costs);

// Test hook: added to every exact value the oracle returns.
void set_value_tamper(double delta);
double value_tamper();

ValueFn exact_value(const SupportTable& t, const NodeSet& X, const Scalar& S);
ValueFn exact_value(const SupportTable& t, const NodeSet& X, const NodeSet& costs);

// d L^s / d v on one assignment for the plain surrogate
// L^s = sum of costs + sum_w log p(w) * L(w) with L(w) held constant.
double surrogate_derivative(const Graph& g, const Assignment& a, NodeId v);
ValueFn exact_gradient_critic(const SupportTable& t, NodeId v, const NodeSet& C);

struct ExactGradient {
  double J = 0.0;
  std::vector<double> grad;  // indexed by NodeId; nonzero only at inputs
};
ExactGradient exact_parameter_gradient(const Graph& g, const Inputs& inputs, EnumOptions opt = {});
double exact_parameter_gradient(const Graph& g, const Inputs& inputs, NodeId theta, EnumOptions opt = {});

bool check_ci_numeric(const SupportTable& t, const NodeSet& A, const NodeSet& B, const NodeSet& Z,
                      double tol = 1e-9);

struct Moments {
  double mean = 0.0, var = 0.0;
};
Moments estimator_moments(const SupportTable& t, const Scalar& f);
// Componentwise moments of a vector-valued estimator.
std::vector<Moments> estimator_moments(const SupportTable& t,
                                       const std::function<std::vector<double>(const Assignment&)>& f);

// Exact E[sum of costs | members] evaluated on demand by enumeration given
// the members' values, cached per key. Works for continuous members.
class ExactValueFn : public ValueSource {
 public:
  ExactValueFn(const Graph& g, Inputs inputs, const NodeSet& X, const NodeSet& costs, EnumOptions opt = {});
  const std::vector<NodeId>& members() const override { return set_; }
  double value(const Assignment& a) const override;
  double derivative(const Assignment& a, NodeId v) const override;
  const Graph& graph() const { return *g_; }

 private:
  const Graph* g_;
  Inputs inputs_;
  std::vector<NodeId> set_;
  NodeSet costs_;
  EnumOptions opt_;
  mutable std::mutex mu_;
  mutable std::map<Key, double> cache_;
  mutable std::map<std::pair<Key, NodeId>, double> dcache_;
};

// Exact E[d L^s / d v | members] on demand, L^s as in surrogate_derivative.
class ExactGradCritic : public ValueSource {
 public:
  ExactGradCritic(const Graph& g, Inputs inputs, NodeId v, const NodeSet& C, EnumOptions opt = {});
  const std::vector<NodeId>& members() const override { return set_; }
  double value(const Assignment& a) const override;
  NodeId anchor() const { return v_; }

 private:
  const Graph* g_;
  Inputs inputs_;
  NodeId v_;
  std::vector<NodeId> set_;
  NodeSet desc_;
  EnumOptions opt_;
  mutable std::mutex mu_;
  mutable std::map<Key, double> cache_;
};

}  // namespace scg
