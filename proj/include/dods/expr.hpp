#pragma once

// Expression language for scalar fields of named variables.
//
// Every user-supplied function (right-hand sides, delay relations, vector
// field coefficients, linear coefficients, initial functions) is an Expr.
// Evaluation is templated on the scalar so the same tree yields values
// (double), first derivatives (Dual<double>) and second derivatives
// (Dual<Dual<double>>).

#include <cmath>
#include <initializer_list>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dods/dual.hpp"
#include "dods/errors.hpp"

namespace dods {

enum class EvalMode { Unchecked, Checked };

/// A univariate function supplied numerically rather than as a formula
/// (quadrature-defined xi(x), solver-defined B(x), ...). Derivatives are
/// provided as further ScalarFunction objects so that dual evaluation can
/// recurse.
class ScalarFunction {
 public:
  virtual ~ScalarFunction() = default;
  virtual double value(double x) const = 0;
  /// Derivative as a function; throws DomainError when unavailable.
  virtual std::shared_ptr<const ScalarFunction> derivative() const;
  virtual std::string name() const = 0;
};

namespace detail {

enum class NodeKind { Literal, Variable, Neg, Add, Sub, Mul, Div, Pow, Call, External };
enum class Func { Exp, Log, Sin, Cos, Tan, Atan, Atan2, Sqrt, Abs, Sign };

struct Node {
  NodeKind kind;
  double literal = 0.0;
  int var = -1;
  Func func = Func::Exp;
  std::vector<std::shared_ptr<const Node>> args;
  std::shared_ptr<const ScalarFunction> external;
};
using NodePtr = std::shared_ptr<const Node>;

}  // namespace detail

class Expr {
 public:
  /// Constant zero with no variables.
  Expr();

  static Expr parse(std::string_view source, std::vector<std::string> variables);
  static Expr constant(double value, std::vector<std::string> variables = {});
  static Expr variable(const std::string& name, std::vector<std::string> variables);
  /// ext(arg) where arg is an expression over `arg.variables()`.
  static Expr external(std::shared_ptr<const ScalarFunction> fn, const Expr& arg);

  const std::vector<std::string>& variables() const noexcept { return vars_; }
  int index_of(std::string_view name) const;
  bool depends_on(std::string_view name) const;
  bool is_constant() const;

  template <typename Scalar>
  Scalar evaluate(std::span<const Scalar> values, EvalMode mode = EvalMode::Unchecked) const;

  double operator()(std::initializer_list<double> values, EvalMode mode = EvalMode::Unchecked) const {
    return evaluate<double>(std::span<const double>(values.begin(), values.size()), mode);
  }

  /// Canonical fully parenthesised text; parses back to an identical tree.
  std::string to_string() const;

  /// Replace variables by expressions. Every replacement and every surviving
  /// variable must live in `new_variables`.
  Expr substitute(const std::map<std::string, Expr>& replacements,
                  std::vector<std::string> new_variables) const;
  /// Replace the named variables by numeric constants and drop them.
  Expr bind(const std::map<std::string, double>& constants) const;
  /// Same tree, re-indexed over a superset (or permutation) of variables.
  Expr rebase(std::vector<std::string> new_variables) const;

  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);
  friend Expr operator/(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a);

 private:
  Expr(detail::NodePtr root, std::vector<std::string> vars) : root_(std::move(root)), vars_(std::move(vars)) {}

  detail::NodePtr root_;
  std::vector<std::string> vars_;
};

/// Free-function spellings of the module operations.
Expr parse(std::string_view source, const std::vector<std::string>& variables);
double eval(const Expr& expr, std::span<const double> values, EvalMode mode = EvalMode::Unchecked);
double eval(const Expr& expr, const std::map<std::string, double>& values, EvalMode mode = EvalMode::Unchecked);

struct ValueAndPartial {
  double value;
  double partial;
};
ValueAndPartial diff_eval(const Expr& expr, std::span<const double> values, std::string_view direction,
                          EvalMode mode = EvalMode::Unchecked);
ValueAndPartial diff_eval(const Expr& expr, const std::map<std::string, double>& values,
                          std::string_view direction, EvalMode mode = EvalMode::Unchecked);

/// Directional derivative: evaluates with every variable seeded by `direction`.
ValueAndPartial directional(const Expr& expr, std::span<const double> point, std::span<const double> direction,
                            EvalMode mode = EvalMode::Unchecked);

// ---------------------------------------------------------------------------

namespace detail {

inline bool near_integer(double e) { return std::abs(e - std::round(e)) < 1e-12; }

template <typename S>
void check_domain(const S& v, EvalMode mode, const char* what) {
  if (mode == EvalMode::Checked && !std::isfinite(real_part(v))) throw DomainError(what);
}

template <typename S>
S apply_external(const ScalarFunction& fn, const S& arg) {
  if constexpr (is_dual_v<S>) {
    auto d = fn.derivative();
    return S{apply_external(fn, arg.value), apply_external(*d, arg.value) * arg.partial};
  } else {
    return fn.value(arg);
  }
}

template <typename S>
S eval_node(const Node& n, std::span<const S> v, EvalMode mode);

inline bool has_variable(const Node& n) {
  if (n.kind == NodeKind::Variable) return true;
  for (const auto& a : n.args)
    if (has_variable(*a)) return true;
  return false;
}

template <typename S>
S eval_pow(const Node& n, std::span<const S> v, EvalMode mode) {
  using std::pow;
  S base = eval_node<S>(*n.args[0], v, mode);
  S expo = eval_node<S>(*n.args[1], v, mode);
  const double b = real_part(base);
  const double e = real_part(expo);
  const bool constant_exponent = !has_variable(*n.args[1]);
  if (mode == EvalMode::Checked) {
    if (b == 0.0 && e < 0.0) throw DomainError("0 raised to a negative power");
    if (b < 0.0 && !near_integer(e)) throw DomainError("negative base with non-integer exponent");
  }
  if (constant_exponent || !is_dual_v<S>) {
    double ee = near_integer(e) ? std::round(e) : e;
    if constexpr (is_dual_v<S>) {
      return pow(base, ee);
    } else {
      return std::pow(base, ee);
    }
  } else {
    if constexpr (is_dual_v<S>) {
      if (b <= 0.0) {
        if (mode == EvalMode::Checked) throw DomainError("non-positive base with variable exponent");
      }
      return pow(base, expo);
    } else {
      return std::pow(base, expo);
    }
  }
}

template <typename S>
S eval_node(const Node& n, std::span<const S> v, EvalMode mode) {
  using std::abs;
  using std::atan;
  using std::atan2;
  using std::cos;
  using std::exp;
  using std::log;
  using std::sin;
  using std::sqrt;
  using std::tan;
  switch (n.kind) {
    case NodeKind::Literal:
      return S(n.literal);
    case NodeKind::Variable:
      return v[static_cast<std::size_t>(n.var)];
    case NodeKind::Neg:
      return -eval_node<S>(*n.args[0], v, mode);
    case NodeKind::Add:
      return eval_node<S>(*n.args[0], v, mode) + eval_node<S>(*n.args[1], v, mode);
    case NodeKind::Sub:
      return eval_node<S>(*n.args[0], v, mode) - eval_node<S>(*n.args[1], v, mode);
    case NodeKind::Mul:
      return eval_node<S>(*n.args[0], v, mode) * eval_node<S>(*n.args[1], v, mode);
    case NodeKind::Div: {
      S num = eval_node<S>(*n.args[0], v, mode);
      S den = eval_node<S>(*n.args[1], v, mode);
      if (mode == EvalMode::Checked && real_part(den) == 0.0) throw DomainError("division by zero");
      S r = num / den;
      check_domain(r, mode, "non-finite quotient");
      return r;
    }
    case NodeKind::Pow: {
      S r = eval_pow<S>(n, v, mode);
      check_domain(r, mode, "non-finite power");
      return r;
    }
    case NodeKind::External: {
      S a = eval_node<S>(*n.args[0], v, mode);
      S r = apply_external(*n.external, a);
      check_domain(r, mode, "non-finite external function value");
      return r;
    }
    case NodeKind::Call:
      break;
  }
  S a = eval_node<S>(*n.args[0], v, mode);
  const double av = real_part(a);
  switch (n.func) {
    case Func::Exp: {
      S r = exp(a);
      check_domain(r, mode, "exp overflow");
      return r;
    }
    case Func::Log:
      if (mode == EvalMode::Checked && av <= 0.0) throw DomainError("log of non-positive argument");
      return log(a);
    case Func::Sin:
      return sin(a);
    case Func::Cos:
      return cos(a);
    case Func::Tan: {
      S r = tan(a);
      check_domain(r, mode, "tan pole");
      return r;
    }
    case Func::Atan:
      return atan(a);
    case Func::Atan2: {
      S b = eval_node<S>(*n.args[1], v, mode);
      if (mode == EvalMode::Checked && av == 0.0 && real_part(b) == 0.0) throw DomainError("atan2(0, 0)");
      return atan2(a, b);
    }
    case Func::Sqrt:
      if (mode == EvalMode::Checked && av < 0.0) throw DomainError("sqrt of negative argument");
      if constexpr (is_dual_v<S>) {
        if (mode == EvalMode::Checked && av == 0.0) throw DomainError("sqrt not differentiable at 0");
      }
      return sqrt(a);
    case Func::Abs:
      return abs(a);
    case Func::Sign:
      return sign(a);
  }
  return S(0.0);
}

}  // namespace detail

template <typename Scalar>
Scalar Expr::evaluate(std::span<const Scalar> values, EvalMode mode) const {
  if (values.size() < vars_.size()) throw Error("evaluate: expected " + std::to_string(vars_.size()) + " values");
  return detail::eval_node<Scalar>(*root_, values, mode);
}

}  // namespace dods
