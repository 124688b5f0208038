#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "scg/graph.hpp"
#include "scg/sample.hpp"

namespace scg {

enum class TOp : std::uint8_t { Leaf, Const, Add, Mul, Neg, Recip, Exp, Log, Tanh, Pow, Scale, Id, StopGrad };

struct TRec {
  TOp op = TOp::Const;
  int a = -1, b = -1;
  double aux = 0.0;
  double val = 0.0;
};

class Tape {
 public:
  int leaf(double v) { return push({TOp::Leaf, -1, -1, 0.0, v}); }
  int constant(double v) { return push({TOp::Const, -1, -1, 0.0, v}); }
  int add(int a, int b);
  int mul(int a, int b);
  int neg(int a);
  int recip(int a);
  int exp(int a);
  int log(int a);
  int tanh(int a);
  int pow(int a, int n);
  int scale(int a, double c);
  int id(int a);
  int stop_grad(int a);
  int sum(const std::vector<int>& xs);

  // Variables of e read parent_slots. Throws NumericalDomain.
  int emit(const Expr& e, const std::vector<int>& parent_slots);

  double value(int s) const { return recs_[static_cast<size_t>(s)].val; }
  size_t size() const { return recs_.size(); }
  const TRec& rec(int s) const { return recs_[static_cast<size_t>(s)]; }
  void reserve(size_t n) { recs_.reserve(n); }

  // Reverse sweep from target. Held slots receive adjoint but do not pass it on.
  void adjoints(int target, const std::vector<char>* held, std::vector<double>& adj) const;
  std::vector<double> adjoints(int target, const std::vector<char>* held = nullptr) const;

  // Graph binding filled by record().
  const Graph* graph = nullptr;
  std::vector<int> node_slot;
  std::vector<int> logp_slot;

 private:
  int push(TRec r) {
    recs_.push_back(r);
    return static_cast<int>(recs_.size()) - 1;
  }
  int emit_at(const Expr& e, int idx, const std::vector<int>& ps);
  std::vector<TRec> recs_;
};

// Node value slot for a deterministic/cost node; always a fresh record.
int emit_node(Tape& t, const Graph& g, NodeId v, const std::vector<int>& parent_slots);
// log p(value | parents); the node's own value enters as a constant.
int emit_log_prob(Tape& t, const Graph& g, NodeId v, const std::vector<int>& parent_slots, double value);
int emit_log_prob_at(Tape& t, const Graph& g, NodeId v, const std::vector<int>& parent_slots, int value_slot);
int emit_log_softmax(Tape& t, const std::vector<int>& logit_slots, int k);
int emit_gaussian_logpdf(Tape& t, int x, int mu, int logstd);

Tape record(const Graph& g, const Assignment& a);

struct GradMap {
  std::vector<double> grads;
  double operator[](NodeId v) const { return grads[static_cast<size_t>(v)]; }
};

GradMap backward(const Tape& t, NodeId target);
GradMap backward_with_holds(const Tape& t, NodeId target, const NodeSet& holds);

// Sum_i injected_i * dv_i/du with v_1..v_{i-1} held. S is put in topological
// order first (injected is permuted along). `naive` drops the holds.
double horizon_backprop(const Tape& t, NodeId u, const std::vector<NodeId>& S, const std::vector<double>& injected,
                        bool naive = false);

double finite_difference(const std::function<double(double)>& f, double x, double h);
// d target / d input by central differences on forward evaluation.
double finite_difference(const Graph& g, const Inputs& in, NodeId input, NodeId target, double h);

}  // namespace scg
