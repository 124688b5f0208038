#pragma once

#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "scg/graph.hpp"

namespace scg {

// Indexed by NodeId; only entries of input nodes are read.
using Inputs = std::vector<double>;
Inputs make_inputs(const Graph& g, const std::map<std::string, double>& by_name);

struct Assignment {
  std::vector<double> values;
  std::vector<double> logp;  // NaN for non-stochastic nodes

  double operator[](NodeId v) const { return values[static_cast<size_t>(v)]; }
  bool has_logp(NodeId v) const { return !std::isnan(logp[static_cast<size_t>(v)]); }
};

using Rng = std::mt19937_64;

Assignment forward_sample(const Graph& g, const Inputs& inputs, Rng& rng);
double total_cost(const Assignment& a, const Graph& g);
double cost_sum(const Assignment& a, const NodeSet& costs);

// Family helpers shared by sampling, enumeration and the tape. The operation
// order here is mirrored exactly by the tape so replays are bit-identical.
void parent_values(const Graph& g, NodeId v, const std::vector<double>& values, std::vector<double>& out);
double eval_node(const Graph& g, NodeId v, const std::vector<double>& values);
void categorical_logits(const Graph& g, NodeId v, const double* pv, std::vector<double>& logits);
double log_softmax_at(const std::vector<double>& logits, int k);
void softmax(const std::vector<double>& logits, std::vector<double>& probs);
double gaussian_logpdf(double x, double mu, double logstd);
// log p(value | parents) for a stochastic node
double node_log_prob(const Graph& g, NodeId v, const std::vector<double>& values, double value);

// Recompute every deterministic/cost node from its parents; true iff all match bit for bit.
bool recheck(const Graph& g, const Assignment& a);

}  // namespace scg
