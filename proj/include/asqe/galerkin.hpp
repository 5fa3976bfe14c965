#pragma once

// Real orthonormal Fourier basis of the Galerkin space {k in Z^2 : |k| <= K}.
//
// Basis functions, in order of increasing |k|^2 (ties broken by (k1, k2)):
//   index 0           : 1 / (2 pi)
//   each half-plane k : sqrt(2) cos(k.x) / (2 pi), then sqrt(2) sin(k.x) / (2 pi)
// where the half plane is k1 > 0, or k1 == 0 and k2 > 0.

#include "asqe/torus.hpp"

#include <Eigen/Core>

#include <vector>

namespace asqe {

struct BasisMode {
  enum class Part { constant, cosine, sine };
  int k1 = 0;
  int k2 = 0;
  Part part = Part::constant;
  double lambda() const { return static_cast<double>(k1) * k1 + static_cast<double>(k2) * k2; }
};

/// Number of lattice points with |k| <= K.
Eigen::Index lattice_count(int K);

class GalerkinBasis {
 public:
  explicit GalerkinBasis(int cutoff_K);

  int cutoff() const { return K_; }
  Eigen::Index dim() const { return static_cast<Eigen::Index>(modes_.size()); }
  const BasisMode& mode(Eigen::Index a) const { return modes_[static_cast<std::size_t>(a)]; }
  const std::vector<BasisMode>& modes() const { return modes_; }
  /// |k_a|^2 for every basis element.
  const Eigen::VectorXd& laplacian_eigenvalues() const { return lambda_; }

  /// Coefficients <f, b_a>. Exact for fields whose spectrum is resolved on the
  /// grid; modes outside the Galerkin space are discarded. Requires K < n/2.
  Eigen::VectorXd analyze(const Field& f) const;
  Eigen::VectorXd analyze_values(const Eigen::VectorXd& grid_values, int n) const;

  /// sum_a c_a b_a sampled on the grid. Requires K < n/2.
  Field synthesize(const Eigen::VectorXd& coefficients, const TorusGrid& grid) const;
  Eigen::VectorXd synthesize_values(const Eigen::VectorXd& coefficients, int n) const;

  /// Fourier table (full n x n, FFT order) of sum_a c_a b_a.
  FourierTable to_table(const Eigen::VectorXd& coefficients, int n) const;
  /// Basis coefficients from a Fourier table; entries with |k| > K are ignored.
  Eigen::VectorXd from_table(const FourierTable& table) const;

  /// Values b_a(x) for every a.
  Eigen::VectorXd basis_at(Point x) const;

 private:
  void check_grid(int n) const;

  int K_;
  std::vector<BasisMode> modes_;
  Eigen::VectorXd lambda_;
};

}  // namespace asqe
