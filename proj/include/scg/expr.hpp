#pragma once

// Scalar expression bodies for deterministic nodes, costs and distribution
// parameters. Variables are parent slots 0..n-1 of the owning node.

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace scg {

enum class EOp { Const, Var, Add, Mul, Neg, Recip, Exp, Log, Tanh, Pow, Affine, Select };

struct ENode {
  EOp op = EOp::Const;
  double c = 0.0;            // Const value, Affine bias
  int i = 0;                 // Var slot, Pow exponent
  std::vector<int> args;     // child node indices
  std::vector<double> coef;  // Affine weights, one per arg
};

class Expr {
 public:
  Expr() = default;

  static Expr constant(double c);
  static Expr var(int slot);
  static Expr add(std::vector<Expr> terms);
  static Expr mul(std::vector<Expr> factors);
  static Expr neg(Expr e);
  static Expr recip(Expr e);
  static Expr exp(Expr e);
  static Expr log(Expr e);
  static Expr tanh(Expr e);
  static Expr pow(Expr e, int n);
  static Expr affine(double bias, std::vector<std::pair<double, Expr>> terms);
  static Expr select(Expr index, std::vector<Expr> branches);

  bool empty() const { return root_ < 0; }
  int root() const { return root_; }
  const std::vector<ENode>& nodes() const { return nodes_; }
  const ENode& node(int i) const { return nodes_[static_cast<size_t>(i)]; }

  // Throws Error(NumericalDomain) outside an op's domain.
  double eval(const double* parents) const;
  // Highest parent slot referenced, -1 if none.
  int max_slot() const;
  std::string to_string(const std::vector<std::string>& parent_names) const;

 private:
  int absorb(const Expr& other);
  int push(ENode n);
  double eval_at(int idx, const double* x) const;
  void print(int idx, const std::vector<std::string>& names, std::string& out) const;

  std::vector<ENode> nodes_;
  int root_ = -1;
};

// Prefix s-expression syntax, e.g. "(add (mul 2 v1) v2)". Names resolve to
// positions in parent_names. Errors name the node and the token offset.
Expr parse_expr(std::string_view src, const std::vector<std::string>& parent_names,
                const std::string& node_name);

namespace ops {
double exp(double x);
double log(double x);
double recip(double x);
double tanh(double x);
// Exponentiation by squaring; unchecked.
double ipow(double x, int n);
double pow(double x, int n);
int select_index(double k, size_t n);
}  // namespace ops

}  // namespace scg
