#pragma once

#include <Eigen/Core>

namespace asqe::stats {

double mean(const Eigen::VectorXd& x);
/// Unbiased sample variance.
double variance(const Eigen::VectorXd& x);
/// Standard error of the sample mean.
double mean_stderr(const Eigen::VectorXd& x);
/// Standard error of the sample variance, sqrt((m4 - s^4) / n).
double variance_stderr(const Eigen::VectorXd& x);
double covariance(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
};
/// Ordinary least squares y = intercept + slope x.
LinearFit linear_fit(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};
/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value
/// Q_KS((sqrt(ne) + 0.12 + 0.11/sqrt(ne)) D), ne = n m / (n + m).
KsResult ks_two_sample(Eigen::VectorXd x, Eigen::VectorXd y);
/// Q_KS(t) = 2 sum_{j>=1} (-1)^{j-1} e^{-2 j^2 t^2}.
double kolmogorov_survival(double t);

/// Gauss-Hermite rule for the standard normal weight (Golub-Welsch):
/// E p(g) = sum_i w_i p(x_i) exactly for deg p < 2 * order.
struct Quadrature {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};
Quadrature gauss_hermite(int order);

}  // namespace asqe::stats
