#pragma once

#include <functional>
#include <string>
#include <vector>

#include "occlp/common.hpp"

namespace occlp {

/// One C^1 test function with exact value and gradient evaluators.
struct BasisFunction {
  std::string name;
  std::function<double(const VectorXd&)> value;
  std::function<void(const VectorXd&, VectorXd&)> gradient;
  double sup_norm = 1.0;  // bound on |value| over the construction box
};

// Finite family of C^1 test functions: monomials in the coordinates affinely
// rescaled to [-1, 1] per axis (constant excluded), total degree <= d,
// optionally augmented with sin/cos/x*sin terms on one axis for systems with
// a periodic coordinate. Sup-norms over the box are 1 by construction.
class Basis {
 public:
  Basis(const VectorXd& box_lo, const VectorXd& box_hi) : lo_(box_lo), hi_(box_hi) {
    if (lo_.size() != hi_.size() || ((hi_ - lo_).array() <= 0.0).any())
      throw ConfigError("basis box needs lo < hi per axis");
  }

  static Basis monomials(const VectorXd& box_lo, const VectorXd& box_hi, int max_degree);

  /// Appends sin(x_a), cos(x_a) and x_a*sin(x_a)/s, s chosen so sup <= 1 on
  /// the box. Skips any that duplicate an existing name.
  void add_trig(int axis);

  int size() const { return static_cast<int>(functions_.size()); }
  const BasisFunction& operator[](int b) const { return functions_[b]; }

  double value(int b, const VectorXd& y) const { return functions_[b].value(y); }
  VectorXd gradient(int b, const VectorXd& y) const {
    VectorXd g(lo_.size());
    functions_[b].gradient(y, g);
    return g;
  }

  const VectorXd& box_lo() const { return lo_; }
  const VectorXd& box_hi() const { return hi_; }
  std::vector<std::string> names() const;

  /// ψ(y) = Σ_b coeffs[b] φ_b(y) and its gradient.
  double combine(const VectorXd& coeffs, const VectorXd& y) const;
  VectorXd combine_gradient(const VectorXd& coeffs, const VectorXd& y) const;

 private:
  VectorXd lo_, hi_;
  std::vector<BasisFunction> functions_;
};

}  // namespace occlp
