#include "asqe/stats.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace asqe::stats {

double mean(const Eigen::VectorXd& x) {
  if (x.size() == 0) throw std::invalid_argument("stats::mean: empty sample");
  return x.mean();
}

double variance(const Eigen::VectorXd& x) {
  if (x.size() < 2) throw std::invalid_argument("stats::variance: need at least two values");
  const double m = x.mean();
  return (x.array() - m).square().sum() / static_cast<double>(x.size() - 1);
}

double mean_stderr(const Eigen::VectorXd& x) { return std::sqrt(variance(x) / static_cast<double>(x.size())); }

double variance_stderr(const Eigen::VectorXd& x) {
  const double n = static_cast<double>(x.size());
  const double m = x.mean();
  const Eigen::ArrayXd c = x.array() - m;
  const double m2 = c.square().mean();
  const double m4 = c.square().square().mean();
  return std::sqrt(std::max(m4 - m2 * m2, 0.0) / n);
}

double covariance(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("stats::covariance: bad sample sizes");
  return ((x.array() - x.mean()) * (y.array() - y.mean())).sum() / static_cast<double>(x.size() - 1);
}

LinearFit linear_fit(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  const Eigen::Index n = x.size();
  if (n != y.size() || n < 2) throw std::invalid_argument("stats::linear_fit: need matching samples of size >= 2");
  const double mx = x.mean(), my = y.mean();
  const Eigen::ArrayXd dx = x.array() - mx;
  const double sxx = dx.square().sum();
  if (sxx == 0.0) throw std::invalid_argument("stats::linear_fit: x values are all equal");
  LinearFit fit;
  fit.slope = (dx * (y.array() - my)).sum() / sxx;
  fit.intercept = my - fit.slope * mx;
  if (n > 2) {
    const double rss = (y.array() - fit.intercept - fit.slope * x.array()).square().sum();
    fit.slope_stderr = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
  }
  return fit;
}

double kolmogorov_survival(double t) {
  if (t < 1e-3) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int j = 1; j <= 200; ++j) {
    const double term = sign * std::exp(-2.0 * j * j * t * t);
    sum += term;
    if (std::abs(term) < 1e-16 * std::abs(sum)) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_two_sample(Eigen::VectorXd x, Eigen::VectorXd y) {
  if (x.size() == 0 || y.size() == 0) throw std::invalid_argument("stats::ks_two_sample: empty sample");
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double n = static_cast<double>(x.size()), m = static_cast<double>(y.size());
  Eigen::Index i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] <= v) ++i;
    while (j < y.size() && y[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  const double ne = std::sqrt(n * m / (n + m));
  return {d, kolmogorov_survival((ne + 0.12 + 0.11 / ne) * d)};
}

Quadrature gauss_hermite(int order) {
  if (order < 1) throw std::invalid_argument("stats::gauss_hermite: order must be >= 1");
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(order, order);
  for (int i = 1; i < order; ++i) J(i, i - 1) = J(i - 1, i) = std::sqrt(static_cast<double>(i));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  return {es.eigenvalues(), es.eigenvectors().row(0).transpose().array().square().matrix()};
}

}  // namespace asqe::stats
