#pragma once

#include "asqe/anderson.hpp"
#include "asqe/wick.hpp"

#include <Eigen/Core>

#include <optional>

namespace asqe {

/// Zero-padded grid size on which F^diamond(P_N v) of a field with |k| <= K is
/// integrated without aliasing: base n times ceil(deg f + 1)/2, rounded up to a
/// power of two and to more than deg F * K.
int dealiased_grid_size(int base_n, int K, int poly_degree);

/// The Wick potential u -> int F^diamond(P_N chi_M u, sigma_N^2) dx in
/// eigen-coordinates u = sum_n a_n phi_n.
///
/// With M set, only the d_M modes with lambda_n < M^2 enter (chi_M vanishes
/// elsewhere) and coefficient vectors may be passed with length d_M or D.
/// Gradients always have length active_modes().
class WickPotential {
 public:
  WickPotential(const AndersonOperator& op, WickPolynomial poly, double N, std::optional<double> M = std::nullopt);

  const AndersonOperator& op() const { return *op_; }
  const WickPolynomial& poly() const { return poly_; }
  double N() const { return N_; }
  const std::optional<double>& M() const { return M_; }
  Eigen::Index active_modes() const { return d_; }
  const TorusGrid& padded_grid() const { return padded_; }
  /// sigma_N^2 on the padded grid (never chi-truncated).
  const VarianceField& variance() const { return var_; }
  /// chi(lambda_n / M^2) for the active modes (ones without M).
  const Eigen::VectorXd& chi() const { return chi_; }

  /// P_N chi_M u sampled on the padded grid.
  Eigen::VectorXd smoothed_values(const Eigen::VectorXd& a) const;
  /// chi_n <P_N g, phi_n> for the active modes, g given on the padded grid.
  Eigen::VectorXd pull_back(const Eigen::VectorXd& padded_values) const;

  double energy(const Eigen::VectorXd& a) const;
  /// d energy / d a_n = chi_n <P_N f^diamond(P_N chi_M u), phi_n>.
  Eigen::VectorXd gradient(const Eigen::VectorXd& a) const;

 private:
  Eigen::VectorXd active(const Eigen::VectorXd& a) const;

  const AndersonOperator* op_;
  WickPolynomial poly_;
  double N_;
  std::optional<double> M_;
  Eigen::Index d_;
  TorusGrid padded_;
  VarianceField var_;
  Eigen::VectorXd chi_;
  Eigen::VectorXd pw_;
  Eigen::MatrixXd W_;  // diag(pw) V_active diag(chi), D x d
  Eigen::MatrixXd Phi_;  // columns of W_ sampled on the padded grid; empty when d is large
};

}  // namespace asqe
