#pragma once

#include <atomic>
#include <map>
#include <vector>

#include "json.hpp"
#include "scg/graph.hpp"
#include "scg/oracle.hpp"
#include "scg/value_source.hpp"

namespace scg {

// Learned table over the discrete members of a conditioning set. With an
// anchor, each key holds polynomial coefficients c_0..c_d in the anchor's
// value; otherwise one scalar per key. Unseen keys predict 0 and count a miss.
class LearnedValueFn : public ValueSource {
 public:
  struct Cell {
    std::vector<double> params;
    double weight = 0.0;  // total sample weight
    double m2 = 0.0;      // weighted sum of squared deviations (tabular)
    size_t count = 0;
  };

  LearnedValueFn() = default;
  LearnedValueFn(std::vector<NodeId> set, NodeId anchor = -1, int degree = 0);
  LearnedValueFn(const LearnedValueFn& o);
  LearnedValueFn& operator=(const LearnedValueFn& o);

  const std::vector<NodeId>& members() const override { return set_; }
  double value(const Assignment& a) const override;
  // d/d anchor of the polynomial; 0 for any other node.
  double derivative(const Assignment& a, NodeId v) const override;

  NodeId anchor() const { return anchor_; }
  int degree() const { return degree_; }
  // Key over the members other than the anchor.
  Key key(const Assignment& a) const;
  const std::vector<NodeId>& key_nodes() const { return keyed_; }
  std::map<Key, Cell>& cells() { return cells_; }
  const std::map<Key, Cell>& cells() const { return cells_; }
  // Standard error of a tabular cell's running mean.
  double stderr_at(const Key& k) const;

  size_t misses() const { return misses_.load(); }
  void reset_misses() { misses_ = 0; }

  nlohmann::json to_json(const Graph& g) const;
  static LearnedValueFn from_json(const Graph& g, const nlohmann::json& j);

 private:
  std::vector<NodeId> set_, keyed_;
  NodeId anchor_ = -1;
  int degree_ = 0;
  std::map<Key, Cell> cells_;
  mutable std::atomic<size_t> misses_{0};
};

struct TrainReport {
  size_t steps = 0;
  double loss = 0.0;          // mean squared residual after fitting
  double residual_max = 0.0;  // max over keys of |mean residual|
};

struct Fit {
  LearnedValueFn fn;
  TrainReport report;
};

// Weighted samples; a stream of draws has unit weights, an enumeration its
// atom probabilities.
struct Weighted {
  const Assignment* a;
  double w;
};
std::vector<Weighted> unit_weights(const std::vector<Assignment>& stream);
std::vector<Weighted> atom_weights(const SupportTable& t);

// Tabular regression of L(v) on the values of X: a running conditional mean.
Fit fit_on_return(const Graph& g, const std::vector<Weighted>& data, const NodeSet& X, NodeId v);

// Regression toward sampled costs of the parts with null sources plus the
// other parts' source values. Throws BootstrapInvalid.
Fit fit_bootstrap(const Graph& g, const std::vector<Weighted>& data, NodeId v, const NodeSet& X_v,
                  const std::vector<PartSpec>& parts);

enum class CriticMode { GradOnly, ValueOnly, Sobolev };
struct SobolevOptions {
  CriticMode mode = CriticMode::Sobolev;
  double alpha = 1.0;  // value term
  double beta = 1.0;   // gradient term
  int degree = 3;
};
// Per-key polynomial in v fitted to L(v) and/or d L^s / d v. Throws NotMarkov
// for value-bearing modes when C is not Markov for v.
Fit fit_gradient_critic(const Graph& g, const std::vector<Weighted>& data, NodeId v, const NodeSet& C,
                        SobolevOptions opt = {});

}  // namespace scg
