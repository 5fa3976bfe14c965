#include "asqe/wick.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace asqe {

double hermite_binomial(int k, double x, double y) {
  if (k < 0) throw std::invalid_argument("hermite_binomial: k must be >= 0");
  double sum = 0.0;
  double binom = 1.0;
  for (int p = 0; p <= k; ++p) {
    sum += binom * std::pow(x, k - p) * hermite(p, y, 1.0);
    binom = binom * (k - p) / (p + 1);
  }
  return sum;
}

WickPolynomial::WickPolynomial(std::vector<double> a) : a_(std::move(a)) {
  if (a_.empty()) throw std::invalid_argument("F_coeffs: at least one coefficient is required");
  for (double v : a_)
    if (!std::isfinite(v)) throw std::invalid_argument("F_coeffs: coefficients must be finite");
  degree_ = 0;
  for (int k = static_cast<int>(a_.size()) - 1; k > 0; --k) {
    if (a_[k] != 0.0) {
      degree_ = k;
      break;
    }
  }
  if (degree_ > kMaxWickDegree) {
    throw std::invalid_argument("F_coeffs: degree " + std::to_string(degree_) + " exceeds " +
                                std::to_string(kMaxWickDegree));
  }
  if (degree_ % 2 != 0) {
    throw std::invalid_argument("F_coeffs: degree " + std::to_string(degree_) + " is odd; F must have even degree");
  }
  if (degree_ > 0 && !(a_[degree_] > 0.0)) {
    throw std::invalid_argument("F_coeffs: leading coefficient must be positive");
  }
  a_.resize(static_cast<std::size_t>(degree_) + 1);
}

std::vector<double> WickPolynomial::b() const {
  std::vector<double> b(std::max(degree_, 1), 0.0);
  for (int p = 0; p < degree_; ++p) b[p] = (p + 1) * a_[p + 1];
  return b;
}

bool WickPolynomial::is_zero() const { return degree_ == 0 && a_[0] == 0.0; }

double WickPolynomial::F(double x) const {
  double acc = 0.0;
  for (int k = degree_; k >= 0; --k) acc = acc * x + a_[k];
  return acc;
}

double WickPolynomial::f(double x) const {
  double acc = 0.0;
  for (int k = degree_; k >= 1; --k) acc = acc * x + k * a_[k];
  return acc;
}

namespace {

// Runs the Hermite recursion once per point and accumulates sum a_k H_k and
// sum a_k k H_{k-1}.
void diamond_both(const WickPolynomial& poly, const Eigen::ArrayXd& x, const Eigen::ArrayXd& s2, Eigen::ArrayXd* F,
                  Eigen::ArrayXd* f) {
  if (x.size() != s2.size()) throw std::invalid_argument("Wick evaluation: variance size mismatch");
  const auto& a = poly.a();
  const int deg = poly.degree();
  if (F) F->resize(x.size());
  if (f) f->resize(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double xi = x[i], vi = s2[i];
    double prev = 1.0, cur = xi;
    double Fi = a[0], fi = 0.0;
    if (deg > 0) {
      Fi += a[1] * cur;
      fi += a[1];
    }
    for (int k = 1; k < deg; ++k) {
      const double next = xi * cur - k * vi * prev;
      prev = cur;
      cur = next;
      Fi += a[k + 1] * cur;
      fi += (k + 1) * a[k + 1] * prev;
    }
    if (F) (*F)[i] = Fi;
    if (f) (*f)[i] = fi;
  }
}

void require_match(const Field& f, const VarianceField& var, const char* where) {
  require_same_grid(f, var.sigma_sq, where);
  require_finite(f, where);
}

}  // namespace

Eigen::ArrayXd F_diamond(const WickPolynomial& poly, const Eigen::ArrayXd& x, const Eigen::ArrayXd& s2) {
  Eigen::ArrayXd F;
  diamond_both(poly, x, s2, &F, nullptr);
  return F;
}

Eigen::ArrayXd f_diamond(const WickPolynomial& poly, const Eigen::ArrayXd& x, const Eigen::ArrayXd& s2) {
  Eigen::ArrayXd f;
  diamond_both(poly, x, s2, nullptr, &f);
  return f;
}

Field wick_power(const Field& f, int k, const VarianceField& var) {
  require_match(f, var, "wick_power");
  if (k < 0 || k > kMaxWickDegree) throw std::invalid_argument("wick_power: k out of range");
  const Eigen::ArrayXd h = hermite(k, f.values().array().eval(), var.sigma_sq.values().array().eval());
  return Field(f.grid(), h.matrix());
}

Field eval_F_diamond(const WickPolynomial& poly, const Field& f, const VarianceField& var) {
  require_match(f, var, "eval_F_diamond");
  return Field(f.grid(), F_diamond(poly, f.values().array(), var.sigma_sq.values().array()).matrix());
}

Field eval_f_diamond(const WickPolynomial& poly, const Field& f, const VarianceField& var) {
  require_match(f, var, "eval_f_diamond");
  return Field(f.grid(), f_diamond(poly, f.values().array(), var.sigma_sq.values().array()).matrix());
}

}  // namespace asqe
