#pragma once

// Independent expression interpreter used as a test oracle. It evaluates the
// source text directly by precedence climbing, never touching the library's
// AST, so agreement between the two is evidence both got the grammar right.

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <map>
#include <stdexcept>
#include <string>

namespace oracle {

class Interp {
 public:
  Interp(const std::string& src, const std::map<std::string, double>& env)
      : src_(src), env_(env) {}

  double run() {
    double v = expr();
    ws();
    if (pos_ != src_.size()) throw std::runtime_error("oracle: trailing input");
    return v;
  }

 private:
  const std::string& src_;
  const std::map<std::string, double>& env_;
  std::size_t pos_ = 0;

  void ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }
  char peek() {
    ws();
    return pos_ < src_.size() ? src_[pos_] : '\0';
  }
  bool eat(char c) {
    if (peek() == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  double expr() {
    double v = term();
    for (;;) {
      if (eat('+'))
        v += term();
      else if (eat('-'))
        v -= term();
      else
        return v;
    }
  }

  double term() {
    double v = unary();
    for (;;) {
      if (eat('*'))
        v *= unary();
      else if (eat('/'))
        v /= unary();
      else
        return v;
    }
  }

  double unary() {
    if (eat('-')) return -unary();
    return power();
  }

  double power() {
    double base = atom();
    if (eat('^')) return std::pow(base, unary());
    return base;
  }

  double atom() {
    char c = peek();
    if (c == '(') {
      eat('(');
      double v = expr();
      if (!eat(')')) throw std::runtime_error("oracle: missing )");
      return v;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = src_.c_str() + pos_;
      char* end = nullptr;
      double v = std::strtod(begin, &end);
      pos_ += static_cast<std::size_t>(end - begin);
      return v;
    }
    std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
      ++pos_;
    std::string name = src_.substr(start, pos_ - start);
    if (peek() == '(') {
      eat('(');
      double a = expr();
      double b = 0.0;
      bool binary = eat(',');
      if (binary) b = expr();
      if (!eat(')')) throw std::runtime_error("oracle: missing )");
      if (name == "sin") return std::sin(a);
      if (name == "cos") return std::cos(a);
      if (name == "tan") return std::tan(a);
      if (name == "exp") return std::exp(a);
      if (name == "log") return std::log(a);
      if (name == "abs") return std::fabs(a);
      if (name == "sqrt") return std::sqrt(a);
      if (name == "sgn") return a > 0 ? 1.0 : (a < 0 ? -1.0 : 0.0);
      if (name == "min") return std::fmin(a, b);
      if (name == "max") return std::fmax(a, b);
      throw std::runtime_error("oracle: unknown function " + name);
    }
    auto it = env_.find(name);
    if (it == env_.end()) throw std::runtime_error("oracle: unbound " + name);
    return it->second;
  }
};

inline double eval(const std::string& src, const std::map<std::string, double>& env) {
  return Interp(src, env).run();
}

}  // namespace oracle
