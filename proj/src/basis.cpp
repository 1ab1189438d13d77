#include "occlp/basis.hpp"

#include <cmath>

namespace occlp {

namespace {

// z_a = scale_a * (y_a - mid_a) maps [lo_a, hi_a] onto [-1, 1]
struct Rescale {
  VectorXd mid, scale;
};

Rescale make_rescale(const VectorXd& lo, const VectorXd& hi) {
  Rescale r;
  r.mid = 0.5 * (lo + hi);
  r.scale = 2.0 * (hi - lo).cwiseInverse();
  return r;
}

double ipow(double z, int e) {
  double v = 1.0;
  for (int i = 0; i < e; ++i) v *= z;
  return v;
}

std::string monomial_name(const VectorXi& powers) {
  std::string name;
  for (int a = 0; a < powers.size(); ++a) {
    if (powers(a) == 0) continue;
    if (!name.empty()) name += "*";
    name += "z" + std::to_string(a + 1);
    if (powers(a) > 1) name += "^" + std::to_string(powers(a));
  }
  return name;
}

}  // namespace

Basis Basis::monomials(const VectorXd& box_lo, const VectorXd& box_hi, int max_degree) {
  Basis basis(box_lo, box_hi);
  if (max_degree < 0) throw ConfigError("basis degree must be nonnegative");
  const int n = static_cast<int>(box_lo.size());
  const Rescale rs = make_rescale(box_lo, box_hi);

  // enumerate exponent vectors by total degree, then lexicographically
  std::vector<VectorXi> exponents;
  VectorXi p = VectorXi::Zero(n);
  std::function<void(int, int)> enumerate = [&](int axis, int remaining) {
    if (axis == n - 1) {
      p(axis) = remaining;
      exponents.push_back(p);
      return;
    }
    for (int e = remaining; e >= 0; --e) {
      p(axis) = e;
      enumerate(axis + 1, remaining - e);
    }
  };
  for (int total = 1; total <= max_degree; ++total) enumerate(0, total);

  for (const VectorXi& powers : exponents) {
    BasisFunction fn;
    fn.name = monomial_name(powers);
    fn.value = [powers, rs](const VectorXd& y) {
      double v = 1.0;
      for (int a = 0; a < powers.size(); ++a)
        v *= ipow(rs.scale(a) * (y(a) - rs.mid(a)), powers(a));
      return v;
    };
    fn.gradient = [powers, rs](const VectorXd& y, VectorXd& g) {
      const int n = static_cast<int>(powers.size());
      for (int a = 0; a < n; ++a) {
        if (powers(a) == 0) {
          g(a) = 0.0;
          continue;
        }
        double v = powers(a) * rs.scale(a);
        for (int b = 0; b < n; ++b) {
          const double z = rs.scale(b) * (y(b) - rs.mid(b));
          v *= ipow(z, b == a ? powers(b) - 1 : powers(b));
        }
        g(a) = v;
      }
    };
    basis.functions_.push_back(std::move(fn));
  }
  return basis;
}

void Basis::add_trig(int axis) {
  if (axis < 0 || axis >= lo_.size()) throw ConfigError("trig axis out of range");
  const double extent = std::max(std::fabs(lo_(axis)), std::fabs(hi_(axis)));
  const double xs_scale = std::max(1.0, extent);  // sup |x sin x| <= extent on the box

  auto have = [&](const std::string& name) {
    for (const auto& f : functions_)
      if (f.name == name) return true;
    return false;
  };

  BasisFunction s;
  s.name = "sin(x" + std::to_string(axis + 1) + ")";
  s.value = [axis](const VectorXd& y) { return std::sin(y(axis)); };
  s.gradient = [axis](const VectorXd& y, VectorXd& g) {
    g.setZero();
    g(axis) = std::cos(y(axis));
  };

  BasisFunction c;
  c.name = "cos(x" + std::to_string(axis + 1) + ")";
  c.value = [axis](const VectorXd& y) { return std::cos(y(axis)); };
  c.gradient = [axis](const VectorXd& y, VectorXd& g) {
    g.setZero();
    g(axis) = -std::sin(y(axis));
  };

  BasisFunction xs;
  xs.name = "x" + std::to_string(axis + 1) + "*sin(x" + std::to_string(axis + 1) + ")/" +
            format_double(xs_scale);
  xs.value = [axis, xs_scale](const VectorXd& y) {
    return y(axis) * std::sin(y(axis)) / xs_scale;
  };
  xs.gradient = [axis, xs_scale](const VectorXd& y, VectorXd& g) {
    g.setZero();
    g(axis) = (std::sin(y(axis)) + y(axis) * std::cos(y(axis))) / xs_scale;
  };

  for (auto& fn : {s, c, xs})
    if (!have(fn.name)) functions_.push_back(fn);
}

std::vector<std::string> Basis::names() const {
  std::vector<std::string> out;
  out.reserve(functions_.size());
  for (const auto& f : functions_) out.push_back(f.name);
  return out;
}

double Basis::combine(const VectorXd& coeffs, const VectorXd& y) const {
  if (coeffs.size() != size()) throw ConfigError("coefficient vector does not match basis size");
  double v = 0.0;
  for (int b = 0; b < size(); ++b)
    if (coeffs(b) != 0.0) v += coeffs(b) * functions_[b].value(y);
  return v;
}

VectorXd Basis::combine_gradient(const VectorXd& coeffs, const VectorXd& y) const {
  if (coeffs.size() != size()) throw ConfigError("coefficient vector does not match basis size");
  VectorXd g = VectorXd::Zero(lo_.size()), tmp(lo_.size());
  for (int b = 0; b < size(); ++b) {
    if (coeffs(b) == 0.0) continue;
    functions_[b].gradient(y, tmp);
    g += coeffs(b) * tmp;
  }
  return g;
}

}  // namespace occlp
