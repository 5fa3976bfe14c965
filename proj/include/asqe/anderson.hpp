#pragma once

#include "asqe/errors.hpp"
#include "asqe/galerkin.hpp"
#include "asqe/noise.hpp"
#include "asqe/torus.hpp"

#include <Eigen/Core>

#include <optional>
#include <string>
#include <vector>

namespace asqe {

/// c_K = (2 pi)^{-2} sum_{0 < |k| <= K} |k|^{-2}.
double lattice_counterterm(int K);

struct Counterterm {
  enum class Mode { automatic, fixed };
  Mode mode = Mode::automatic;
  double value = 0.0;

  static Counterterm automatic() { return {}; }
  static Counterterm fixed(double c) { return {Mode::fixed, c}; }

  double resolve(int K) const { return mode == Mode::automatic ? lattice_counterterm(K) : value; }
  /// "auto" or the value printed with round-trip precision; used in cache keys.
  std::string descriptor() const;
};

/// Renormalized, positivity-shifted Galerkin Anderson Hamiltonian.
///
/// Eigenvectors are kept as Galerkin coefficients: column n of
/// eigenvectors() holds <phi_n, b_a> for the basis of basis(). Grid samples
/// are produced on demand by synthesize / eigenfunction.
class AndersonOperator {
 public:
  AndersonOperator(TorusGrid grid, Field xi, int cutoff_K, Counterterm counterterm, double counterterm_value,
                   Eigen::VectorXd raw_eigenvalues, Eigen::MatrixXd eigenvectors,
                   std::optional<RngSpec> noise_ref = std::nullopt);

  const TorusGrid& grid() const { return grid_; }
  const GalerkinBasis& basis() const { return basis_; }
  int cutoff() const { return basis_.cutoff(); }
  Eigen::Index dim() const { return basis_.dim(); }

  /// Post-shift eigenvalues, ascending, eigenvalues()[0] == 1.
  const Eigen::VectorXd& eigenvalues() const { return lambda_; }
  const Eigen::VectorXd& raw_eigenvalues() const { return raw_lambda_; }
  const Eigen::MatrixXd& eigenvectors() const { return V_; }
  double counterterm() const { return c_; }
  const Counterterm& counterterm_mode() const { return mode_; }
  double shift() const { return shift_; }
  double raw_ground_state() const { return raw_lambda_[0]; }
  const Field& xi() const { return xi_; }
  const std::optional<RngSpec>& noise_ref() const { return noise_ref_; }

  /// <f, phi_n> for all n (f is projected onto the Galerkin span).
  Eigen::VectorXd project(const Field& f) const;
  /// sum_n a_n phi_n on the operator grid or on another grid resolving K.
  Field synthesize(const Eigen::VectorXd& eigen_coeffs) const;
  Field synthesize(const Eigen::VectorXd& eigen_coeffs, const TorusGrid& grid) const;
  Field eigenfunction(Eigen::Index n) const;
  /// Galerkin coefficients of sum_n a_n phi_n.
  Eigen::VectorXd to_basis(const Eigen::VectorXd& eigen_coeffs) const { return V_ * eigen_coeffs; }
  Eigen::VectorXd from_basis(const Eigen::VectorXd& basis_coeffs) const { return V_.transpose() * basis_coeffs; }

 private:
  TorusGrid grid_;
  GalerkinBasis basis_;
  Field xi_;
  Counterterm mode_;
  double c_;
  double shift_;
  Eigen::VectorXd raw_lambda_;
  Eigen::VectorXd lambda_;
  Eigen::MatrixXd V_;
  std::optional<RngSpec> noise_ref_;
};

/// Real-basis Galerkin matrix of -Delta + xi - c on {|k| <= K}, before the shift.
Eigen::MatrixXd assemble_galerkin_matrix(const GalerkinBasis& basis, const Field& xi, double counterterm);

/// Requires K <= n/3. Throws NumericalFailure if the eigensolve fails or the
/// assembled matrix is not symmetric to 1e-12.
AndersonOperator build_operator(const Field& xi, int cutoff_K, Counterterm counterterm = Counterterm::automatic(),
                                std::optional<RngSpec> noise_ref = std::nullopt);

/// Multiplier weights s(lambda_n / scale^2) (per SpectralSymbol::at).
Eigen::VectorXd spectral_weights(const AndersonOperator& op, const SpectralSymbol& symbol, double scale = 1.0);

/// sum_n s(lambda_n) <f, phi_n> phi_n.
Field functional_calculus(const AndersonOperator& op, const SpectralSymbol& symbol, double scale, const Field& f);

/// Projection onto span{phi_n : lambda_n <= threshold}.
Field sharp_projector(const AndersonOperator& op, double threshold, const Field& f);
Eigen::VectorXd sharp_mask(const AndersonOperator& op, double threshold);

/// Smoothing applied to eigenfunctions: P_N (Laplacian multiplier psi(|k|^2/N^2))
/// and/or chi_M (scalar weight chi(lambda_n/M^2)). Both empty means none.
struct Smoothing {
  std::optional<double> N;
  std::optional<double> M;

  static Smoothing none() { return {}; }
  static Smoothing p(double N) { return {N, std::nullopt}; }
  static Smoothing chi(double M) { return {std::nullopt, M}; }
  static Smoothing p_chi(double N, double M) { return {N, M}; }
};

/// Diagonal of P_N in the Galerkin basis (all ones when N is empty).
Eigen::VectorXd laplacian_weights(const GalerkinBasis& basis, std::optional<double> N);

/// Rows: (A phi_n)(x) for each point x (points x D).
Eigen::MatrixXd smoothed_eigenfunctions_at(const AndersonOperator& op, const Smoothing& s,
                                           const std::vector<Point>& points);

/// sum_n (A phi_n)(x) (B phi_n)(y) / lambda_n.
double green_function(const AndersonOperator& op, const Smoothing& left, const Smoothing& right, Point x, Point y);

/// Zero-noise Green function: sum_{|k| <= K} e^{ik.(x-y)} / ((2 pi)^2 (|k|^2 + 1)).
double lattice_green(int K, Point x, Point y);

struct VarianceField {
  Field sigma_sq;
  double N;
  std::optional<double> M;
};

/// sigma_N^2(x) = sum_n lambda_n^{-1} (P_N chi_M phi_n)(x)^2 on `grid` (default: the operator grid).
VarianceField sigma_field(const AndersonOperator& op, double N, std::optional<double> M = std::nullopt,
                          std::optional<TorusGrid> grid = std::nullopt);

/// (sum_n lambda_n^sigma <f, phi_n>^2)^{1/2}; f is projected onto the Galerkin span.
double dH_norm(const AndersonOperator& op, const Field& f, double sigma);
double dH_norm_coeffs(const AndersonOperator& op, const Eigen::VectorXd& eigen_coeffs, double sigma);

}  // namespace asqe
