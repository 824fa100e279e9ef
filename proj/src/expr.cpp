#include "dods/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <functional>

namespace dods {

using detail::Func;
using detail::Node;
using detail::NodeKind;
using detail::NodePtr;

std::shared_ptr<const ScalarFunction> ScalarFunction::derivative() const {
  throw DomainError("no derivative available for " + name());
}

namespace {

NodePtr make_literal(double v) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Literal;
  n->literal = v;
  return n;
}

NodePtr make_var(int i) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Variable;
  n->var = i;
  return n;
}

NodePtr make_op(NodeKind k, std::vector<NodePtr> args) {
  auto n = std::make_shared<Node>();
  n->kind = k;
  n->args = std::move(args);
  return n;
}

NodePtr make_call(Func f, std::vector<NodePtr> args) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Call;
  n->func = f;
  n->args = std::move(args);
  return n;
}

struct FuncInfo {
  const char* name;
  Func func;
  int arity;
};

constexpr FuncInfo kFuncs[] = {
    {"exp", Func::Exp, 1},   {"log", Func::Log, 1},   {"sin", Func::Sin, 1},   {"cos", Func::Cos, 1},
    {"tan", Func::Tan, 1},   {"atan", Func::Atan, 1}, {"atan2", Func::Atan2, 2}, {"sqrt", Func::Sqrt, 1},
    {"abs", Func::Abs, 1},   {"sign", Func::Sign, 1},
};

const FuncInfo* find_func(std::string_view name) {
  for (const auto& f : kFuncs)
    if (name == f.name) return &f;
  return nullptr;
}

const char* func_name(Func f) {
  for (const auto& info : kFuncs)
    if (info.func == f) return info.name;
  return "?";
}

enum class Tok { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, Comma, End };

struct Token {
  Tok kind;
  std::size_t offset;
  std::string text;
  double number = 0.0;
};

std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
      while (i < s.size() && (std::isdigit(static_cast<unsigned char>(s[i])) || s[i] == '.')) ++i;
      if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
        std::size_t j = i + 1;
        if (j < s.size() && (s[j] == '+' || s[j] == '-')) ++j;
        if (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) {
          i = j;
          while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
        }
      }
      std::string text(s.substr(start, i - start));
      if (std::count(text.begin(), text.end(), '.') > 1) throw SyntaxError("malformed number", start);
      out.push_back({Tok::Number, start, text, std::strtod(text.c_str(), nullptr)});
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_')) ++i;
      out.push_back({Tok::Ident, start, std::string(s.substr(start, i - start))});
      continue;
    }
    Tok k;
    switch (c) {
      case '+': k = Tok::Plus; break;
      case '-': k = Tok::Minus; break;
      case '*': k = Tok::Star; break;
      case '/': k = Tok::Slash; break;
      case '^': k = Tok::Caret; break;
      case '(': k = Tok::LParen; break;
      case ')': k = Tok::RParen; break;
      case ',': k = Tok::Comma; break;
      default: throw SyntaxError(std::string("unexpected character '") + c + "'", start);
    }
    out.push_back({k, start, std::string(1, c)});
    ++i;
  }
  out.push_back({Tok::End, s.size(), ""});
  return out;
}

class Parser {
 public:
  Parser(std::string_view src, const std::vector<std::string>& vars) : toks_(tokenize(src)), vars_(vars) {}

  NodePtr run() {
    NodePtr e = expression(0);
    if (peek().kind != Tok::End) throw SyntaxError("unexpected '" + peek().text + "'", peek().offset);
    return e;
  }

 private:
  static constexpr int kAdd = 10, kMul = 20, kUnary = 25, kPow = 30;

  const Token& peek() const { return toks_[pos_]; }
  const Token& next() { return toks_[pos_++]; }

  static int infix_power(Tok k) {
    switch (k) {
      case Tok::Plus:
      case Tok::Minus: return kAdd;
      case Tok::Star:
      case Tok::Slash: return kMul;
      case Tok::Caret: return kPow;
      default: return -1;
    }
  }

  NodePtr expression(int min_bp) {
    NodePtr lhs = prefix();
    for (;;) {
      const Token& op = peek();
      const int bp = infix_power(op.kind);
      if (bp < 0) {
        if (op.kind == Tok::Number || op.kind == Tok::Ident || op.kind == Tok::LParen)
          throw SyntaxError("missing operator", op.offset);
        break;
      }
      if (bp <= min_bp) break;
      next();
      // '^' is right associative: its right operand may contain another '^'.
      const int rbp = op.kind == Tok::Caret ? kPow - 1 : bp;
      NodePtr rhs = expression(rbp);
      NodeKind k = NodeKind::Add;
      switch (op.kind) {
        case Tok::Plus: k = NodeKind::Add; break;
        case Tok::Minus: k = NodeKind::Sub; break;
        case Tok::Star: k = NodeKind::Mul; break;
        case Tok::Slash: k = NodeKind::Div; break;
        case Tok::Caret: k = NodeKind::Pow; break;
        default: break;
      }
      lhs = make_op(k, {lhs, rhs});
    }
    return lhs;
  }

  NodePtr prefix() {
    const Token& t = next();
    switch (t.kind) {
      case Tok::Number:
        return make_literal(t.number);
      case Tok::Minus:
        return make_op(NodeKind::Neg, {expression(kUnary)});
      case Tok::Plus:
        return expression(kUnary);
      case Tok::LParen: {
        NodePtr e = expression(0);
        if (peek().kind != Tok::RParen) throw SyntaxError("expected ')'", peek().offset);
        next();
        return e;
      }
      case Tok::Ident:
        return identifier(t);
      case Tok::End:
        throw SyntaxError("unexpected end of input", t.offset);
      default:
        throw SyntaxError("unexpected '" + t.text + "'", t.offset);
    }
  }

  NodePtr identifier(const Token& t) {
    if (peek().kind == Tok::LParen) {
      const FuncInfo* f = find_func(t.text);
      if (!f) throw UnknownIdentifier(t.text);
      next();
      std::vector<NodePtr> args;
      args.push_back(expression(0));
      while (peek().kind == Tok::Comma) {
        next();
        args.push_back(expression(0));
      }
      if (peek().kind != Tok::RParen) throw SyntaxError("expected ')'", peek().offset);
      next();
      if (static_cast<int>(args.size()) != f->arity)
        throw SyntaxError(std::string(f->name) + " expects " + std::to_string(f->arity) + " argument(s)", t.offset);
      return make_call(f->func, std::move(args));
    }
    auto it = std::find(vars_.begin(), vars_.end(), t.text);
    if (it != vars_.end()) return make_var(static_cast<int>(it - vars_.begin()));
    if (t.text == "pi") return make_literal(3.14159265358979323846);
    if (t.text == "e") return make_literal(2.71828182845904523536);
    if (find_func(t.text)) throw SyntaxError("function '" + t.text + "' needs an argument list", t.offset);
    throw UnknownIdentifier(t.text);
  }

  std::vector<Token> toks_;
  const std::vector<std::string>& vars_;
  std::size_t pos_ = 0;
};

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s(buf);
  if (v < 0) return "(" + s + ")";
  return s;
}

void unparse(const Node& n, const std::vector<std::string>& vars, std::string& out) {
  switch (n.kind) {
    case NodeKind::Literal:
      out += format_number(n.literal);
      return;
    case NodeKind::Variable:
      out += vars[static_cast<std::size_t>(n.var)];
      return;
    case NodeKind::Neg:
      out += "(-";
      unparse(*n.args[0], vars, out);
      out += ")";
      return;
    case NodeKind::Add:
    case NodeKind::Sub:
    case NodeKind::Mul:
    case NodeKind::Div:
    case NodeKind::Pow: {
      const char* op = n.kind == NodeKind::Add   ? " + "
                       : n.kind == NodeKind::Sub ? " - "
                       : n.kind == NodeKind::Mul ? " * "
                       : n.kind == NodeKind::Div ? " / "
                                                 : " ^ ";
      out += "(";
      unparse(*n.args[0], vars, out);
      out += op;
      unparse(*n.args[1], vars, out);
      out += ")";
      return;
    }
    case NodeKind::Call:
      out += func_name(n.func);
      out += "(";
      for (std::size_t i = 0; i < n.args.size(); ++i) {
        if (i) out += ", ";
        unparse(*n.args[i], vars, out);
      }
      out += ")";
      return;
    case NodeKind::External:
      out += n.external->name();
      out += "(";
      unparse(*n.args[0], vars, out);
      out += ")";
      return;
  }
}

NodePtr remap(const NodePtr& n, const std::function<NodePtr(int)>& on_var) {
  if (n->kind == NodeKind::Variable) return on_var(n->var);
  if (n->args.empty()) return n;
  auto copy = std::make_shared<Node>(*n);
  for (auto& a : copy->args) a = remap(a, on_var);
  return copy;
}

bool any_var(const Node& n, const std::function<bool(int)>& pred) {
  if (n.kind == NodeKind::Variable) return pred(n.var);
  for (const auto& a : n.args)
    if (any_var(*a, pred)) return true;
  return false;
}

std::vector<std::string> merge_vars(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::string> out = a;
  for (const auto& v : b)
    if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
  return out;
}

}  // namespace

Expr::Expr() : root_(make_literal(0.0)) {}

Expr Expr::parse(std::string_view source, std::vector<std::string> variables) {
  Parser p(source, variables);
  NodePtr root = p.run();
  return Expr(root, std::move(variables));
}

Expr Expr::constant(double value, std::vector<std::string> variables) {
  return Expr(make_literal(value), std::move(variables));
}

Expr Expr::variable(const std::string& name, std::vector<std::string> variables) {
  auto it = std::find(variables.begin(), variables.end(), name);
  if (it == variables.end()) throw UnknownIdentifier(name);
  const int i = static_cast<int>(it - variables.begin());
  return Expr(make_var(i), std::move(variables));
}

Expr Expr::external(std::shared_ptr<const ScalarFunction> fn, const Expr& arg) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::External;
  n->external = std::move(fn);
  n->args = {arg.root_};
  return Expr(n, arg.vars_);
}

int Expr::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < vars_.size(); ++i)
    if (vars_[i] == name) return static_cast<int>(i);
  return -1;
}

bool Expr::depends_on(std::string_view name) const {
  const int i = index_of(name);
  if (i < 0) return false;
  return any_var(*root_, [i](int v) { return v == i; });
}

bool Expr::is_constant() const {
  return !any_var(*root_, [](int) { return true; });
}

std::string Expr::to_string() const {
  std::string out;
  unparse(*root_, vars_, out);
  return out;
}

Expr Expr::rebase(std::vector<std::string> new_variables) const {
  std::vector<int> map(vars_.size(), -1);
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    auto it = std::find(new_variables.begin(), new_variables.end(), vars_[i]);
    if (it != new_variables.end()) map[i] = static_cast<int>(it - new_variables.begin());
  }
  NodePtr r = remap(root_, [&](int v) -> NodePtr {
    if (map[static_cast<std::size_t>(v)] < 0) throw UnknownIdentifier(vars_[static_cast<std::size_t>(v)]);
    return make_var(map[static_cast<std::size_t>(v)]);
  });
  return Expr(r, std::move(new_variables));
}

Expr Expr::substitute(const std::map<std::string, Expr>& replacements, std::vector<std::string> new_variables) const {
  std::vector<NodePtr> table(vars_.size());
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    auto it = replacements.find(vars_[i]);
    if (it != replacements.end()) {
      table[i] = it->second.rebase(new_variables).root_;
    } else {
      auto jt = std::find(new_variables.begin(), new_variables.end(), vars_[i]);
      if (jt != new_variables.end()) table[i] = make_var(static_cast<int>(jt - new_variables.begin()));
    }
  }
  NodePtr r = remap(root_, [&](int v) -> NodePtr {
    const auto& t = table[static_cast<std::size_t>(v)];
    if (!t) throw UnknownIdentifier(vars_[static_cast<std::size_t>(v)]);
    return t;
  });
  return Expr(r, std::move(new_variables));
}

Expr Expr::bind(const std::map<std::string, double>& constants) const {
  std::map<std::string, Expr> repl;
  std::vector<std::string> kept;
  for (const auto& v : vars_) {
    auto it = constants.find(v);
    if (it != constants.end())
      repl.emplace(v, Expr::constant(it->second));
    else
      kept.push_back(v);
  }
  return substitute(repl, kept);
}

Expr operator+(const Expr& a, const Expr& b) {
  auto vars = merge_vars(a.vars_, b.vars_);
  return Expr(make_op(NodeKind::Add, {a.rebase(vars).root_, b.rebase(vars).root_}), vars);
}
Expr operator-(const Expr& a, const Expr& b) {
  auto vars = merge_vars(a.vars_, b.vars_);
  return Expr(make_op(NodeKind::Sub, {a.rebase(vars).root_, b.rebase(vars).root_}), vars);
}
Expr operator*(const Expr& a, const Expr& b) {
  auto vars = merge_vars(a.vars_, b.vars_);
  return Expr(make_op(NodeKind::Mul, {a.rebase(vars).root_, b.rebase(vars).root_}), vars);
}
Expr operator/(const Expr& a, const Expr& b) {
  auto vars = merge_vars(a.vars_, b.vars_);
  return Expr(make_op(NodeKind::Div, {a.rebase(vars).root_, b.rebase(vars).root_}), vars);
}
Expr operator-(const Expr& a) { return Expr(make_op(NodeKind::Neg, {a.root_}), a.vars_); }

Expr parse(std::string_view source, const std::vector<std::string>& variables) {
  return Expr::parse(source, variables);
}

double eval(const Expr& expr, std::span<const double> values, EvalMode mode) {
  return expr.evaluate<double>(values, mode);
}

namespace {
std::vector<double> gather(const Expr& expr, const std::map<std::string, double>& values) {
  std::vector<double> v;
  v.reserve(expr.variables().size());
  for (const auto& name : expr.variables()) {
    auto it = values.find(name);
    if (it == values.end()) throw UnknownIdentifier(name);
    v.push_back(it->second);
  }
  return v;
}
}  // namespace

double eval(const Expr& expr, const std::map<std::string, double>& values, EvalMode mode) {
  auto v = gather(expr, values);
  return expr.evaluate<double>(std::span<const double>(v), mode);
}

ValueAndPartial diff_eval(const Expr& expr, std::span<const double> values, std::string_view direction,
                          EvalMode mode) {
  const int k = expr.index_of(direction);
  if (k < 0) throw UnknownIdentifier(std::string(direction));
  std::vector<Dual<double>> d(values.begin(), values.end());
  d[static_cast<std::size_t>(k)].partial = 1.0;
  auto r = expr.evaluate<Dual<double>>(std::span<const Dual<double>>(d), mode);
  return {r.value, r.partial};
}

ValueAndPartial diff_eval(const Expr& expr, const std::map<std::string, double>& values, std::string_view direction,
                          EvalMode mode) {
  auto v = gather(expr, values);
  return diff_eval(expr, std::span<const double>(v), direction, mode);
}

ValueAndPartial directional(const Expr& expr, std::span<const double> point, std::span<const double> direction,
                            EvalMode mode) {
  std::vector<Dual<double>> d(point.size());
  for (std::size_t i = 0; i < point.size(); ++i) d[i] = Dual<double>{point[i], i < direction.size() ? direction[i] : 0.0};
  auto r = expr.evaluate<Dual<double>>(std::span<const Dual<double>>(d), mode);
  return {r.value, r.partial};
}

}  // namespace dods
