#pragma once

#include "asqe/anderson.hpp"
#include "asqe/torus.hpp"

#include <Eigen/Core>

#include <vector>

namespace asqe {

inline constexpr int kMaxWickDegree = 16;

/// H_k(x, s2) by H_{k+1} = x H_k - k s2 H_{k-1}; works for scalars and for
/// Eigen arrays (coefficient-wise). At s2 = 0 this is x^k.
template <typename T, typename S>
T hermite(int k, const T& x, const S& s2) {
  if (k == 0) return T(x * 0 + 1);
  T prev = T(x * 0 + 1);
  T cur = x;
  for (int j = 1; j < k; ++j) {
    T next = x * cur - (static_cast<double>(j) * s2) * prev;
    prev = std::move(cur);
    cur = std::move(next);
  }
  return cur;
}

/// sum_p C(k, p) x^{k-p} H_p(y), unit variance. Equals H_k(x + y, 1).
double hermite_binomial(int k, double x, double y);

/// F(X) = sum_k a_k X^k with even degree 2m and a_{2m} > 0; f = F' with
/// coefficients b_p = (p+1) a_{p+1}.
class WickPolynomial {
 public:
  /// Trailing zeros are not trimmed. The zero polynomial (all a_k == 0) is
  /// allowed as the free case; otherwise the degree must be even with a
  /// positive leading coefficient, at most kMaxWickDegree.
  explicit WickPolynomial(std::vector<double> a);

  static WickPolynomial zero() { return WickPolynomial({0.0}); }
  static WickPolynomial quartic(double a4 = 0.25) { return WickPolynomial({0.0, 0.0, 0.0, 0.0, a4}); }

  const std::vector<double>& a() const { return a_; }
  std::vector<double> b() const;
  /// Highest index with a nonzero coefficient (0 for constants and zero).
  int degree() const { return degree_; }
  bool is_zero() const;
  /// True when F is constant (degree 0): the drift vanishes.
  bool is_constant() const { return degree_ == 0; }

  double F(double x) const;
  double f(double x) const;

 private:
  std::vector<double> a_;
  int degree_ = 0;
};

/// sum_k a_k H_k(x, s2) and sum_k a_k k H_{k-1}(x, s2), coefficient-wise.
Eigen::ArrayXd F_diamond(const WickPolynomial& poly, const Eigen::ArrayXd& x, const Eigen::ArrayXd& s2);
Eigen::ArrayXd f_diamond(const WickPolynomial& poly, const Eigen::ArrayXd& x, const Eigen::ArrayXd& s2);

/// Pointwise H_k(f(x), sigma^2(x)).
Field wick_power(const Field& f, int k, const VarianceField& var);
Field eval_F_diamond(const WickPolynomial& poly, const Field& f, const VarianceField& var);
Field eval_f_diamond(const WickPolynomial& poly, const Field& f, const VarianceField& var);

}  // namespace asqe
