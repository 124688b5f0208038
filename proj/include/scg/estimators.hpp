#pragma once

#include <memory>
#include <string>
#include <vector>

#include "scg/graph.hpp"
#include "scg/oracle.hpp"
#include "scg/sample.hpp"
#include "scg/value_source.hpp"

namespace scg {

struct CriticChoice {
  enum class Kind { Empirical, Value, PartialAverage, Mixture };
  Kind kind = Kind::Empirical;
  NodeSet set;  // Value
  SourcePtr source;
  NodeSet V0;  // PartialAverage: costs taken as sampled
  std::vector<PartSpec> parts;
  std::vector<std::pair<double, CriticChoice>> mixture;

  static CriticChoice empirical() { return {}; }
  static CriticChoice value(NodeSet C, SourcePtr s = nullptr);
  static CriticChoice partial(NodeSet V0, std::vector<PartSpec> parts);
  static CriticChoice mix(std::vector<std::pair<double, CriticChoice>> m);
};

struct BaselineChoice {
  enum class Kind { None, Value, Optimal };
  Kind kind = Kind::None;
  NodeSet set;
  SourcePtr source;

  static BaselineChoice none() { return {}; }
  static BaselineChoice value(NodeSet B, SourcePtr s = nullptr);
  static BaselineChoice optimal(NodeSet B);
};

struct NodeSpec {
  NodeId node = -1;
  CriticChoice critic;
  BaselineChoice baseline;
  bool debias = false;
};

// Replace the gradient reaching `u` by sum_i g_{v_i} dv_i/du over S.
struct Injection {
  NodeId u = -1;
  std::vector<NodeId> S;
  std::vector<SourcePtr> sources;  // one per member; null: exact gradient-critic
  std::vector<NodeSet> sets;       // conditioning set per member for null sources
  bool value_gradient = false;     // null sources give d Q / d v_i of an exact critic instead
};

struct EstimatorSpec {
  std::vector<NodeSpec> nodes;  // unlisted stochastic nodes: empirical, no baseline
  std::vector<NodeId> reparameterize;
  std::vector<Injection> injections;
};

struct CompileOptions {
  bool checks = true;  // false skips set-validity checks (for demonstrations)
  EnumOptions enumeration;
};

struct GradientEstimate {
  std::vector<std::string> params;
  std::vector<double> mean, stderr_;
  size_t n = 0;
};

// Location-scale transform v = mu + exp(logstd) * eps with a new standard
// normal root eps_<v> appended after the existing nodes (ids are preserved).
Graph reparameterize(const Graph& g, NodeId v);

class CompiledEstimator {
 public:
  // Missing sources are filled with exact oracle sources built on `g`.
  CompiledEstimator(const Graph& g, const Inputs& inputs, EstimatorSpec spec, CompileOptions opt = {});

  // Graph the estimator samples from (reparameterized when requested).
  const Graph& graph() const { return *graph_; }
  const Graph& original() const { return *orig_; }
  const std::vector<NodeId>& params() const { return params_; }
  const Inputs& inputs() const { return inputs_; }

  // Per-sample gradient estimate, one entry per input of the original graph.
  std::vector<double> estimate(const Assignment& a) const;
  // Records L^s on a tape; returns its slot.
  int surrogate(Tape& t, const Assignment& a) const;

  GradientEstimate monte_carlo(size_t n, unsigned long long seed) const;
  std::vector<Moments> exact_moments() const;

 private:
  struct Term {
    NodeId node;
    CriticChoice critic;
    BaselineChoice baseline;
    bool debias = false;
    std::vector<NodeId> ctg;  // L(node)
  };
  struct Inj {
    NodeId u;
    std::vector<NodeId> S;
    std::vector<SourcePtr> sources;
    std::vector<char> applies;  // per param
  };

  double critic_value(const CriticChoice& c, const Assignment& a, const std::vector<NodeId>& ctg) const;
  void resolve_sources(CriticChoice& c, NodeId v);
  void validate(const Term& t) const;

  std::shared_ptr<const Graph> orig_, graph_;
  Inputs inputs_;
  std::vector<NodeId> params_;
  std::vector<Term> terms_;
  std::vector<Inj> injections_;
  CompileOptions opt_;
  std::shared_ptr<SupportTable> table_;  // original graph, for optimal baselines
};

GradientEstimate score_function_estimate(const Graph& g, const EstimatorSpec& spec, const Inputs& inputs, size_t n,
                                         unsigned long long seed);
GradientEstimate pathwise_estimate(const Graph& g, const EstimatorSpec& spec, const Inputs& inputs, size_t n,
                                   unsigned long long seed);
GradientEstimate gradient_critic_estimate(const Graph& g, const Inputs& inputs, NodeId u, const std::vector<NodeId>& S,
                                          const std::vector<SourcePtr>& sources, size_t n, unsigned long long seed,
                                          const std::vector<NodeId>& reparam = {});
GradientEstimate debiased_estimate(const Graph& g, const Inputs& inputs, NodeId v, const NodeSet& C, SourcePtr qhat,
                                   size_t n, unsigned long long seed);

// d log p(v) / d theta on one assignment, per input of g.
std::vector<double> score_vector(const Graph& g, const Assignment& a, NodeId v);

ValueFn optimal_baseline(const SupportTable& t, NodeId v, const NodeSet& C, const NodeSet& B);

// A decision-process chain: s_t -> a_t -> r_t, s_{t+1}.
struct ChainSpec {
  std::vector<NodeId> states, actions, rewards;
};
// Critic for action a_t: k = 0 gives Q(s_t, a_t); k >= 1 gives
// r_t + ... + r_{t+k} + V(s_{t+k+1}), empirical once the horizon is reached.
CriticChoice kstep_critic(const Graph& g, const ChainSpec& c, size_t t, int k, const Inputs& inputs);
// (1 - lambda) sum_{k < kmax} lambda^k Q^k + lambda^kmax Q^kmax, kmax = horizon - 1 - t.
CriticChoice lambda_critic(const Graph& g, const ChainSpec& c, size_t t, double lambda, const Inputs& inputs);

// Exact check of g_u = sum_i E[g_{v_i} dv_i/du | C_u] on an enumeration of g.
struct BootstrapCheck {
  bool ok = false;
  double max_err = 0.0;
  std::string failure;
};
BootstrapCheck gradient_critic_bootstrap_check(const Graph& g, const Inputs& inputs, NodeId u,
                                               const std::vector<NodeId>& S, const NodeSet& C_u,
                                               const std::vector<NodeSet>& parts, double tol = 1e-8);

}  // namespace scg
