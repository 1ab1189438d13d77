#include "occlp/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>

namespace occlp {

std::string format_double(double v) {
  char buf[32];
  // shortest form that round-trips
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

namespace detail {

enum class Kind { Literal, Variable, Unary, Binary, Call };
enum class BinOp { Add, Sub, Mul, Div, Pow };
enum class Func { Sin, Cos, Tan, Exp, Log, Abs, Sqrt, Sgn, Min, Max };

struct ExprNode {
  Kind kind;
  double literal = 0.0;
  std::string name;
  BinOp op = BinOp::Add;
  Func func = Func::Sin;
  std::shared_ptr<const ExprNode> a, b;
};

using NodePtr = std::shared_ptr<const ExprNode>;

namespace {

struct FuncInfo {
  const char* name;
  Func func;
  int arity;
};

constexpr FuncInfo kFuncs[] = {
    {"sin", Func::Sin, 1}, {"cos", Func::Cos, 1},   {"tan", Func::Tan, 1},
    {"exp", Func::Exp, 1}, {"log", Func::Log, 1},   {"abs", Func::Abs, 1},
    {"sqrt", Func::Sqrt, 1}, {"sgn", Func::Sgn, 1}, {"min", Func::Min, 2},
    {"max", Func::Max, 2},
};

const FuncInfo* lookup_func(std::string_view name) {
  for (const auto& f : kFuncs)
    if (name == f.name) return &f;
  return nullptr;
}

double apply_func(Func f, double x, double y) {
  switch (f) {
    case Func::Sin: return std::sin(x);
    case Func::Cos: return std::cos(x);
    case Func::Tan: return std::tan(x);
    case Func::Exp: return std::exp(x);
    case Func::Log:
      if (x <= 0.0) throw ExprEvalError("log of nonpositive value " + format_double(x));
      return std::log(x);
    case Func::Abs: return std::fabs(x);
    case Func::Sqrt:
      if (x < 0.0) throw ExprEvalError("sqrt of negative value " + format_double(x));
      return std::sqrt(x);
    case Func::Sgn: return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
    case Func::Min: return std::fmin(x, y);
    case Func::Max: return std::fmax(x, y);
  }
  return 0.0;
}

double apply_bin(BinOp op, double x, double y) {
  switch (op) {
    case BinOp::Add: return x + y;
    case BinOp::Sub: return x - y;
    case BinOp::Mul: return x * y;
    case BinOp::Div: return x / y;
    case BinOp::Pow: return std::pow(x, y);
  }
  return 0.0;
}

// --- recursive descent parser -------------------------------------------
//
//   expr    := term (('+'|'-') term)*
//   term    := unary (('*'|'/') unary)*
//   unary   := '-' unary | power
//   power   := atom ('^' unary)?          (right associative; -x^2 = -(x^2))
//   atom    := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  NodePtr parse() {
    skip_ws();
    if (pos_ >= src_.size()) throw ExprParseError("empty expression", 0);
    NodePtr e = parse_expr();
    skip_ws();
    if (pos_ < src_.size())
      throw ExprParseError("expected operator or end of input, found '" +
                               std::string(1, src_[pos_]) + "'",
                           pos_);
    return e;
  }

 private:
  std::string_view src_;
  std::size_t pos_ = 0;

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c, const char* what) {
    if (!accept(c)) throw ExprParseError(std::string("expected ") + what, pos_);
  }

  char peek() {
    skip_ws();
    return pos_ < src_.size() ? src_[pos_] : '\0';
  }

  NodePtr parse_expr() {
    NodePtr lhs = parse_term();
    for (;;) {
      if (accept('+'))
        lhs = make_bin(BinOp::Add, lhs, parse_term());
      else if (accept('-'))
        lhs = make_bin(BinOp::Sub, lhs, parse_term());
      else
        return lhs;
    }
  }

  NodePtr parse_term() {
    NodePtr lhs = parse_unary();
    for (;;) {
      if (accept('*'))
        lhs = make_bin(BinOp::Mul, lhs, parse_unary());
      else if (accept('/'))
        lhs = make_bin(BinOp::Div, lhs, parse_unary());
      else
        return lhs;
    }
  }

  NodePtr parse_unary() {
    if (accept('-')) {
      auto node = std::make_shared<ExprNode>();
      node->kind = Kind::Unary;
      node->a = parse_unary();
      return node;
    }
    return parse_power();
  }

  NodePtr parse_power() {
    NodePtr base = parse_atom();
    if (accept('^')) return make_bin(BinOp::Pow, base, parse_unary());
    return base;
  }

  NodePtr parse_atom() {
    skip_ws();
    if (pos_ >= src_.size())
      throw ExprParseError("expected number, variable, function or '('", pos_);
    char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr e = parse_expr();
      expect(')', "')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_ident();
    throw ExprParseError("expected number, variable, function or '(', found '" +
                             std::string(1, c) + "'",
                         pos_);
  }

  NodePtr parse_number() {
    const char* begin = src_.data() + pos_;
    char* end = nullptr;
    // strtod accepts leading signs and hex, neither of which can reach here
    // because '-' is consumed by parse_unary and a digit/'.' starts us off.
    double v = std::strtod(begin, &end);
    if (end == begin) throw ExprParseError("malformed number", pos_);
    pos_ += static_cast<std::size_t>(end - begin);
    auto node = std::make_shared<ExprNode>();
    node->kind = Kind::Literal;
    node->literal = v;
    return node;
  }

  NodePtr parse_ident() {
    std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
      ++pos_;
    std::string name(src_.substr(start, pos_ - start));
    if (peek() == '(') {
      const FuncInfo* info = lookup_func(name);
      if (!info) throw ExprParseError("unknown function '" + name + "'", start);
      expect('(', "'('");
      auto node = std::make_shared<ExprNode>();
      node->kind = Kind::Call;
      node->func = info->func;
      node->a = parse_expr();
      if (info->arity == 2) {
        expect(',', "',' (two-argument function)");
        node->b = parse_expr();
      }
      expect(')', "')'");
      return node;
    }
    auto node = std::make_shared<ExprNode>();
    node->kind = Kind::Variable;
    node->name = std::move(name);
    return node;
  }

  static NodePtr make_bin(BinOp op, NodePtr a, NodePtr b) {
    auto node = std::make_shared<ExprNode>();
    node->kind = Kind::Binary;
    node->op = op;
    node->a = std::move(a);
    node->b = std::move(b);
    return node;
  }
};

double eval_node(const ExprNode& n, const std::map<std::string, double>& env) {
  switch (n.kind) {
    case Kind::Literal: return n.literal;
    case Kind::Variable: {
      auto it = env.find(n.name);
      if (it == env.end()) throw ExprEvalError("unbound variable '" + n.name + "'");
      return it->second;
    }
    case Kind::Unary: return -eval_node(*n.a, env);
    case Kind::Binary: return apply_bin(n.op, eval_node(*n.a, env), eval_node(*n.b, env));
    case Kind::Call: {
      double x = eval_node(*n.a, env);
      double y = n.b ? eval_node(*n.b, env) : 0.0;
      return apply_func(n.func, x, y);
    }
  }
  return 0.0;
}

// precedence levels used by the printer; higher binds tighter
int bin_prec(BinOp op) {
  switch (op) {
    case BinOp::Add:
    case BinOp::Sub: return 1;
    case BinOp::Mul:
    case BinOp::Div: return 2;
    case BinOp::Pow: return 4;
  }
  return 0;
}

void print_node(const ExprNode& n, std::string& out, int parent_prec, bool right_side) {
  switch (n.kind) {
    case Kind::Literal: {
      if (n.literal < 0.0) {
        // negative literal prints with an explicit sign; wrap like a unary
        bool paren = parent_prec > 3;
        if (paren) out += '(';
        out += format_double(n.literal);
        if (paren) out += ')';
      } else {
        out += format_double(n.literal);
      }
      return;
    }
    case Kind::Variable: out += n.name; return;
    case Kind::Unary: {
      bool paren = parent_prec > 3;
      if (paren) out += '(';
      out += '-';
      print_node(*n.a, out, 3, true);
      if (paren) out += ')';
      return;
    }
    case Kind::Binary: {
      int prec = bin_prec(n.op);
      bool paren = prec < parent_prec || (prec == parent_prec && right_side && n.op != BinOp::Pow);
      if (paren) out += '(';
      // '^' is right associative; its left child needs parens at equal prec
      print_node(*n.a, out, n.op == BinOp::Pow ? prec + 1 : prec, false);
      switch (n.op) {
        case BinOp::Add: out += " + "; break;
        case BinOp::Sub: out += " - "; break;
        case BinOp::Mul: out += "*"; break;
        case BinOp::Div: out += "/"; break;
        case BinOp::Pow: out += "^"; break;
      }
      print_node(*n.b, out, n.op == BinOp::Pow ? prec : prec + 1, true);
      if (paren) out += ')';
      return;
    }
    case Kind::Call: {
      for (const auto& f : kFuncs)
        if (f.func == n.func) {
          out += f.name;
          break;
        }
      out += '(';
      print_node(*n.a, out, 0, false);
      if (n.b) {
        out += ", ";
        print_node(*n.b, out, 0, false);
      }
      out += ')';
      return;
    }
  }
}

bool same_node(const ExprNode& a, const ExprNode& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Kind::Literal: return a.literal == b.literal;
    case Kind::Variable: return a.name == b.name;
    case Kind::Unary: return same_node(*a.a, *b.a);
    case Kind::Binary: return a.op == b.op && same_node(*a.a, *b.a) && same_node(*a.b, *b.b);
    case Kind::Call:
      if (a.func != b.func) return false;
      if (!same_node(*a.a, *b.a)) return false;
      if (!a.b != !b.b) return false;
      return !a.b || same_node(*a.b, *b.b);
  }
  return false;
}

void collect_vars(const ExprNode& n, std::vector<std::string>& out) {
  switch (n.kind) {
    case Kind::Variable: out.push_back(n.name); return;
    case Kind::Literal: return;
    default:
      if (n.a) collect_vars(*n.a, out);
      if (n.b) collect_vars(*n.b, out);
  }
}

}  // namespace
}  // namespace detail

Expr parse_expression(std::string_view source) {
  if (source.empty()) throw ExprParseError("empty expression", 0);
  detail::Parser parser(source);
  return Expr(parser.parse());
}

double Expr::eval(const std::map<std::string, double>& env) const {
  if (!root_) throw ExprEvalError("evaluating empty expression");
  return detail::eval_node(*root_, env);
}

std::string Expr::print() const {
  std::string out;
  if (root_) detail::print_node(*root_, out, 0, false);
  return out;
}

std::vector<std::string> Expr::variables() const {
  std::vector<std::string> vars;
  if (root_) detail::collect_vars(*root_, vars);
  std::sort(vars.begin(), vars.end());
  vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
  return vars;
}

bool Expr::same_structure(const Expr& other) const {
  if (!root_ || !other.root_) return root_ == other.root_;
  return detail::same_node(*root_, *other.root_);
}

// --- compiled form --------------------------------------------------------

namespace {
enum OpCode : int {
  kPushLiteral = -1,
  kPushSlot = -2,
  kNegate = -3,
  kBinBase = -10,  // kBinBase - int(BinOp)
  // nonnegative codes are function ids
};
}

CompiledExpr::CompiledExpr(const Expr& expr, const std::vector<std::string>& names) {
  if (!expr.root_) throw ExprEvalError("compiling empty expression");
  int depth = 0, max_depth = 0;
  std::function<void(const detail::ExprNode&)> emit = [&](const detail::ExprNode& n) {
    using detail::Kind;
    switch (n.kind) {
      case Kind::Literal:
        tape_.push_back({kPushLiteral, n.literal, 0});
        max_depth = std::max(max_depth, ++depth);
        return;
      case Kind::Variable: {
        auto it = std::find(names.begin(), names.end(), n.name);
        if (it == names.end()) {
          std::string declared;
          for (const auto& v : names) declared += declared.empty() ? v : ", " + v;
          throw ExprEvalError("unbound variable '" + n.name + "' (declared: " + declared + ")");
        }
        tape_.push_back({kPushSlot, 0.0, static_cast<int>(it - names.begin())});
        max_depth = std::max(max_depth, ++depth);
        return;
      }
      case Kind::Unary:
        emit(*n.a);
        tape_.push_back({kNegate, 0.0, 0});
        return;
      case Kind::Binary:
        emit(*n.a);
        emit(*n.b);
        tape_.push_back({kBinBase - static_cast<int>(n.op), 0.0, 0});
        --depth;
        return;
      case Kind::Call:
        emit(*n.a);
        if (n.b) {
          emit(*n.b);
          --depth;
        }
        tape_.push_back({static_cast<int>(n.func), 0.0, 0});
        return;
    }
  };
  emit(*expr.root_);
  stack_.resize(static_cast<std::size_t>(max_depth));
}

double CompiledExpr::eval(const double* slots) const {
  double* sp = stack_.data();
  for (const Op& op : tape_) {
    if (op.code == kPushLiteral) {
      *sp++ = op.value;
    } else if (op.code == kPushSlot) {
      *sp++ = slots[op.slot];
    } else if (op.code == kNegate) {
      sp[-1] = -sp[-1];
    } else if (op.code <= kBinBase) {
      auto b = static_cast<detail::BinOp>(kBinBase - op.code);
      --sp;
      sp[-1] = detail::apply_bin(b, sp[-1], sp[0]);
    } else {
      auto f = static_cast<detail::Func>(op.code);
      if (f == detail::Func::Min || f == detail::Func::Max) {
        --sp;
        sp[-1] = detail::apply_func(f, sp[-1], sp[0]);
      } else {
        sp[-1] = detail::apply_func(f, sp[-1], 0.0);
      }
    }
  }
  return sp[-1];
}

}  // namespace occlp
