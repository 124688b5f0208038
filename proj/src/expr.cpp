#include "scg/expr.hpp"

#include <cctype>
#include <charconv>
#include <cstdint>
#include <cmath>
#include <cstdlib>
#include <string>

#include "scg/error.hpp"

namespace scg {

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::CycleDetected: return "CycleDetected";
    case Errc::UnknownParent: return "UnknownParent";
    case Errc::CostWithChild: return "CostWithChild";
    case Errc::InputWithParent: return "InputWithParent";
    case Errc::DuplicateNode: return "DuplicateNode";
    case Errc::BadDeclaration: return "BadDeclaration";
    case Errc::ParseError: return "ParseError";
    case Errc::NumericalDomain: return "NumericalDomain";
    case Errc::SupportTooLarge: return "SupportTooLarge";
    case Errc::UnsupportedFamily: return "UnsupportedFamily";
    case Errc::InvalidSpec: return "InvalidSpec";
    case Errc::NotSeparator: return "NotSeparator";
    case Errc::MissingCriticKey: return "MissingCriticKey";
    case Errc::NotCongruent: return "NotCongruent";
    case Errc::NotAChain: return "NotAChain";
    case Errc::DecompositionInvalid: return "DecompositionInvalid";
    case Errc::BootstrapInvalid: return "BootstrapInvalid";
    case Errc::NotMarkov: return "NotMarkov";
    case Errc::PreconditionFailed: return "PreconditionFailed";
    case Errc::ConfigError: return "ConfigError";
    case Errc::UnknownNode: return "UnknownNode";
  }
  return "Error";
}

namespace ops {

static double checked(double r, const char* what, double x) {
  if (!std::isfinite(r))
    throw Error(Errc::NumericalDomain, std::string(what) + " of " + std::to_string(x) + " is not finite");
  return r;
}

double exp(double x) { return checked(std::exp(x), "exp", x); }

double log(double x) {
  if (!(x > 0.0)) throw Error(Errc::NumericalDomain, "log of non-positive value " + std::to_string(x));
  return std::log(x);
}

double recip(double x) {
  if (x == 0.0) throw Error(Errc::NumericalDomain, "reciprocal of zero");
  return checked(1.0 / x, "reciprocal", x);
}

double tanh(double x) { return std::tanh(x); }

double ipow(double x, int n) {
  unsigned m = n < 0 ? static_cast<unsigned>(-(n + 1)) + 1u : static_cast<unsigned>(n);
  double r = 1.0;
  for (double b = x; m != 0; m >>= 1, b *= b)
    if (m & 1u) r *= b;
  return n < 0 ? 1.0 / r : r;
}

double pow(double x, int n) {
  if (n < 0 && x == 0.0) throw Error(Errc::NumericalDomain, "negative power of zero");
  return checked(ipow(x, n), "pow", x);
}

int select_index(double k, size_t n) {
  double r = std::round(k);
  if (std::fabs(k - r) > 1e-9 || r < 0.0 || r >= static_cast<double>(n))
    throw Error(Errc::NumericalDomain,
                "select index " + std::to_string(k) + " outside 0.." + std::to_string(n - 1));
  return static_cast<int>(r);
}

}  // namespace ops

int Expr::push(ENode n) {
  nodes_.push_back(std::move(n));
  root_ = static_cast<int>(nodes_.size()) - 1;
  return root_;
}

int Expr::absorb(const Expr& other) {
  if (other.empty()) throw Error(Errc::BadDeclaration, "empty sub-expression");
  int off = static_cast<int>(nodes_.size());
  for (ENode n : other.nodes_) {
    for (int& a : n.args) a += off;
    nodes_.push_back(std::move(n));
  }
  return other.root_ + off;
}

Expr Expr::constant(double c) {
  Expr e;
  ENode n;
  n.op = EOp::Const;
  n.c = c;
  e.push(n);
  return e;
}

Expr Expr::var(int slot) {
  Expr e;
  ENode n;
  n.op = EOp::Var;
  n.i = slot;
  e.push(n);
  return e;
}

Expr Expr::add(std::vector<Expr> terms) {
  Expr e;
  ENode n;
  n.op = EOp::Add;
  if (terms.empty()) throw Error(Errc::BadDeclaration, "add needs arguments");
  for (auto& t : terms) n.args.push_back(e.absorb(t));
  e.push(std::move(n));
  return e;
}

Expr Expr::mul(std::vector<Expr> factors) {
  Expr e;
  ENode n;
  n.op = EOp::Mul;
  if (factors.empty()) throw Error(Errc::BadDeclaration, "mul needs arguments");
  for (auto& t : factors) n.args.push_back(e.absorb(t));
  e.push(std::move(n));
  return e;
}

Expr Expr::neg(Expr x) {
  Expr e;
  ENode n;
  n.op = EOp::Neg;
  n.args.push_back(e.absorb(x));
  e.push(std::move(n));
  return e;
}

Expr Expr::recip(Expr x) {
  Expr e;
  ENode n;
  n.op = EOp::Recip;
  n.args.push_back(e.absorb(x));
  e.push(std::move(n));
  return e;
}

Expr Expr::exp(Expr x) {
  Expr e;
  ENode n;
  n.op = EOp::Exp;
  n.args.push_back(e.absorb(x));
  e.push(std::move(n));
  return e;
}

Expr Expr::log(Expr x) {
  Expr e;
  ENode n;
  n.op = EOp::Log;
  n.args.push_back(e.absorb(x));
  e.push(std::move(n));
  return e;
}

Expr Expr::tanh(Expr x) {
  Expr e;
  ENode n;
  n.op = EOp::Tanh;
  n.args.push_back(e.absorb(x));
  e.push(std::move(n));
  return e;
}

Expr Expr::pow(Expr x, int k) {
  Expr e;
  ENode n;
  n.op = EOp::Pow;
  n.i = k;
  n.args.push_back(e.absorb(x));
  e.push(std::move(n));
  return e;
}

Expr Expr::affine(double bias, std::vector<std::pair<double, Expr>> terms) {
  Expr e;
  ENode n;
  n.op = EOp::Affine;
  n.c = bias;
  for (auto& [w, t] : terms) {
    n.coef.push_back(w);
    n.args.push_back(e.absorb(t));
  }
  e.push(std::move(n));
  return e;
}

Expr Expr::select(Expr index, std::vector<Expr> branches) {
  if (branches.empty()) throw Error(Errc::BadDeclaration, "select needs branches");
  Expr e;
  ENode n;
  n.op = EOp::Select;
  n.args.push_back(e.absorb(index));
  for (auto& b : branches) n.args.push_back(e.absorb(b));
  e.push(std::move(n));
  return e;
}

double Expr::eval(const double* parents) const {
  if (empty()) throw Error(Errc::BadDeclaration, "evaluating an empty expression");
  return eval_at(root_, parents);
}

double Expr::eval_at(int idx, const double* x) const {
  const ENode& n = nodes_[static_cast<size_t>(idx)];
  switch (n.op) {
    case EOp::Const: return n.c;
    case EOp::Var: return x[n.i];
    case EOp::Add: {
      double s = eval_at(n.args[0], x);
      for (size_t k = 1; k < n.args.size(); ++k) s = s + eval_at(n.args[k], x);
      return s;
    }
    case EOp::Mul: {
      double s = eval_at(n.args[0], x);
      for (size_t k = 1; k < n.args.size(); ++k) s = s * eval_at(n.args[k], x);
      return s;
    }
    case EOp::Neg: return -eval_at(n.args[0], x);
    case EOp::Recip: return ops::recip(eval_at(n.args[0], x));
    case EOp::Exp: return ops::exp(eval_at(n.args[0], x));
    case EOp::Log: return ops::log(eval_at(n.args[0], x));
    case EOp::Tanh: return ops::tanh(eval_at(n.args[0], x));
    case EOp::Pow: return ops::pow(eval_at(n.args[0], x), n.i);
    case EOp::Affine: {
      double s = n.c;
      for (size_t k = 0; k < n.args.size(); ++k) s = s + n.coef[k] * eval_at(n.args[k], x);
      return s;
    }
    case EOp::Select: {
      int k = ops::select_index(eval_at(n.args[0], x), n.args.size() - 1);
      return eval_at(n.args[static_cast<size_t>(k) + 1], x);
    }
  }
  return 0.0;
}

int Expr::max_slot() const {
  int m = -1;
  for (const auto& n : nodes_)
    if (n.op == EOp::Var && n.i > m) m = n.i;
  return m;
}

static std::string fmt_num(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

static const char* op_name(EOp op) {
  switch (op) {
    case EOp::Add: return "add";
    case EOp::Mul: return "mul";
    case EOp::Neg: return "neg";
    case EOp::Recip: return "reciprocal";
    case EOp::Exp: return "exp";
    case EOp::Log: return "log";
    case EOp::Tanh: return "tanh";
    case EOp::Pow: return "pow";
    case EOp::Affine: return "affine";
    case EOp::Select: return "select";
    default: return "?";
  }
}

void Expr::print(int idx, const std::vector<std::string>& names, std::string& out) const {
  const ENode& n = nodes_[static_cast<size_t>(idx)];
  if (n.op == EOp::Const) {
    out += fmt_num(n.c);
    return;
  }
  if (n.op == EOp::Var) {
    out += static_cast<size_t>(n.i) < names.size() ? names[static_cast<size_t>(n.i)]
                                                   : "$" + std::to_string(n.i);
    return;
  }
  out += '(';
  out += op_name(n.op);
  if (n.op == EOp::Affine) {
    out += ' ';
    out += fmt_num(n.c);
    for (size_t k = 0; k < n.args.size(); ++k) {
      out += ' ';
      out += fmt_num(n.coef[k]);
      out += ' ';
      print(n.args[k], names, out);
    }
  } else {
    for (int a : n.args) {
      out += ' ';
      print(a, names, out);
    }
    if (n.op == EOp::Pow) out += ' ' + std::to_string(n.i);
  }
  out += ')';
}

std::string Expr::to_string(const std::vector<std::string>& parent_names) const {
  std::string out;
  if (!empty()) print(root_, parent_names, out);
  return out;
}

namespace {

struct Token {
  std::string text;
  size_t pos;
};

class Parser {
 public:
  Parser(std::string_view src, const std::vector<std::string>& names, const std::string& node)
      : names_(names), node_(node), len_(src.size()) {
    size_t i = 0;
    while (i < src.size()) {
      char ch = src[i];
      if (std::isspace(static_cast<unsigned char>(ch))) {
        ++i;
      } else if (ch == '(' || ch == ')') {
        toks_.push_back({std::string(1, ch), i});
        ++i;
      } else {
        size_t j = i;
        while (j < src.size() && !std::isspace(static_cast<unsigned char>(src[j])) && src[j] != '(' &&
               src[j] != ')')
          ++j;
        toks_.push_back({std::string(src.substr(i, j - i)), i});
        i = j;
      }
    }
  }

  Expr parse() {
    Expr e = expr();
    if (at_ < toks_.size()) fail("unexpected trailing token '" + toks_[at_].text + "'", toks_[at_].pos);
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg, size_t pos) const {
    throw Error(Errc::ParseError, "node '" + node_ + "': " + msg + " at position " + std::to_string(pos));
  }

  const Token& next() {
    if (at_ >= toks_.size()) fail("unexpected end of expression", len_);
    return toks_[at_++];
  }

  bool peek_close() const { return at_ < toks_.size() && toks_[at_].text == ")"; }

  static bool as_number(const std::string& s, double& out) {
    const char* b = s.c_str();
    char* end = nullptr;
    out = std::strtod(b, &end);
    return end != b && *end == '\0';
  }

  double number() {
    const Token& t = next();
    double v;
    if (!as_number(t.text, v)) fail("expected a numeric literal, got '" + t.text + "'", t.pos);
    return v;
  }

  void close(size_t open_pos) {
    if (at_ >= toks_.size()) fail("unclosed '(' opened", open_pos);
    const Token& t = next();
    if (t.text != ")") fail("expected ')', got '" + t.text + "'", t.pos);
  }

  Expr expr() {
    const Token& t = next();
    if (t.text == ")") fail("unexpected ')'", t.pos);
    if (t.text != "(") {
      double v;
      if (as_number(t.text, v)) return Expr::constant(v);
      for (size_t k = 0; k < names_.size(); ++k)
        if (names_[k] == t.text) return Expr::var(static_cast<int>(k));
      fail("'" + t.text + "' is not a parent of this node", t.pos);
    }
    size_t open = t.pos;
    const Token& op = next();
    const std::string name = op.text;
    std::vector<Expr> args;
    auto rest = [&]() {
      while (!peek_close()) {
        if (at_ >= toks_.size()) fail("unclosed '(' opened", open);
        args.push_back(expr());
      }
    };
    auto arity = [&](size_t lo, size_t hi) {
      if (args.size() < lo || args.size() > hi)
        fail("'" + name + "' takes " + (lo == hi ? std::to_string(lo) : std::to_string(lo) + "+") +
                 " arguments, got " + std::to_string(args.size()),
             op.pos);
    };
    Expr out;
    if (name == "add" || name == "mul") {
      rest();
      arity(1, SIZE_MAX);
      out = name == "add" ? Expr::add(std::move(args)) : Expr::mul(std::move(args));
    } else if (name == "neg" || name == "reciprocal" || name == "recip" || name == "exp" || name == "log" ||
               name == "tanh") {
      rest();
      arity(1, 1);
      Expr a = std::move(args[0]);
      if (name == "neg") out = Expr::neg(a);
      else if (name == "exp") out = Expr::exp(a);
      else if (name == "log") out = Expr::log(a);
      else if (name == "tanh") out = Expr::tanh(a);
      else out = Expr::recip(a);
    } else if (name == "pow") {
      Expr base = expr();
      const Token& nt = next();
      double v;
      if (!as_number(nt.text, v) || v != std::floor(v)) fail("pow exponent must be an integer literal", nt.pos);
      out = Expr::pow(base, static_cast<int>(v));
    } else if (name == "affine") {
      double bias = number();
      std::vector<std::pair<double, Expr>> terms;
      while (!peek_close()) {
        if (at_ >= toks_.size()) fail("unclosed '(' opened", open);
        double w = number();
        terms.emplace_back(w, expr());
      }
      out = Expr::affine(bias, std::move(terms));
    } else if (name == "select") {
      rest();
      arity(2, SIZE_MAX);
      Expr idx = std::move(args[0]);
      args.erase(args.begin());
      out = Expr::select(idx, std::move(args));
    } else {
      fail("unknown operator '" + name + "'", op.pos);
    }
    close(open);
    return out;
  }

  const std::vector<std::string>& names_;
  std::string node_;
  size_t len_;
  std::vector<Token> toks_;
  size_t at_ = 0;
};

}  // namespace

Expr parse_expr(std::string_view src, const std::vector<std::string>& parent_names, const std::string& node_name) {
  return Parser(src, parent_names, node_name).parse();
}

}  // namespace scg
