#pragma once

#include <map>
#include <memory>
#include <vector>

#include "scg/graph.hpp"
#include "scg/sample.hpp"

namespace scg {

using Key = std::vector<double>;
Key key_of(const Assignment& a, const std::vector<NodeId>& set);
std::vector<NodeId> sorted(const NodeSet& s);

// Anything that maps an assignment of a conditioning set to a scalar: exact
// oracle tables, on-demand exact conditionals, learned tables.
class ValueSource {
 public:
  virtual ~ValueSource() = default;
  virtual const std::vector<NodeId>& members() const = 0;
  virtual double value(const Assignment& a) const = 0;
  // d value / d v at a. Throws PreconditionFailed when unsupported.
  virtual double derivative(const Assignment& a, NodeId v) const;
};

// A finite table keyed by the values of `set`. Lookups of absent keys throw
// MissingCriticKey.
class ValueFn : public ValueSource {
 public:
  std::vector<NodeId> set;
  std::map<Key, double> entries;

  const std::vector<NodeId>& members() const override { return set; }
  double value(const Assignment& a) const override;
  double at(const Key& k) const;
};

using SourcePtr = std::shared_ptr<const ValueSource>;

// c * inner, derivative included.
class ScaledSource : public ValueSource {
 public:
  ScaledSource(SourcePtr inner, double c) : inner_(std::move(inner)), c_(c) {}
  const std::vector<NodeId>& members() const override { return inner_->members(); }
  double value(const Assignment& a) const override { return c_ * inner_->value(a); }
  double derivative(const Assignment& a, NodeId v) const override { return c_ * inner_->derivative(a, v); }

 private:
  SourcePtr inner_;
  double c_;
};

class ConstantSource : public ValueSource {
 public:
  ConstantSource(std::vector<NodeId> members, double c) : members_(std::move(members)), c_(c) {}
  const std::vector<NodeId>& members() const override { return members_; }
  double value(const Assignment&) const override { return c_; }
  double derivative(const Assignment&, NodeId) const override { return 0.0; }

 private:
  std::vector<NodeId> members_;
  double c_;
};

// A part of a cost decomposition: the cost-to-go of `nodes` averaged given
// `cond`. A null source means the part's costs are taken as sampled.
struct PartSpec {
  NodeSet nodes;
  NodeSet cond;
  SourcePtr source;
};

}  // namespace scg
