#pragma once

// Geometry and Fourier analysis on the flat torus [0, 2pi)^2.
//
// Conventions used throughout the library:
//   * grid point (i, j) sits at x = (2 pi i / n, 2 pi j / n) and is stored at
//     values[i * n + j];
//   * Fourier coefficients are normalised so that f(x) = sum_k fhat_k e^{i k.x},
//     i.e. fhat_k = (2 pi)^{-2} int f e^{-i k.x} dx;
//   * a Fourier table is an n x n complex matrix in FFT index order, entry
//     (p, q) holding the wavenumber (wavenumber(p, n), wavenumber(q, n)).

#include <Eigen/Core>

#include <complex>
#include <functional>
#include <numbers>
#include <vector>

namespace asqe {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kTorusArea = kTwoPi * kTwoPi;

using FourierTable = Eigen::MatrixXcd;

struct Point {
  double x1 = 0.0;
  double x2 = 0.0;
};

class TorusGrid {
 public:
  explicit TorusGrid(int n_per_dim);

  int n() const { return n_; }
  Eigen::Index size() const { return static_cast<Eigen::Index>(n_) * n_; }
  double spacing() const { return kTwoPi / n_; }
  double cell_area() const { return spacing() * spacing(); }
  double coordinate(int i) const { return spacing() * i; }
  Point point(Eigen::Index flat) const {
    return {coordinate(static_cast<int>(flat / n_)), coordinate(static_cast<int>(flat % n_))};
  }

  /// Signed wavenumber of FFT index p on an n-point axis, in [-n/2, n/2).
  static int wavenumber(int p, int n) { return p < n / 2 ? p : p - n; }
  /// FFT index holding signed wavenumber k (requires |k| < n/2 or k == -n/2).
  static int index_of(int k, int n) { return k >= 0 ? k : k + n; }

  friend bool operator==(const TorusGrid& a, const TorusGrid& b) { return a.n_ == b.n_; }

 private:
  int n_;
};

class Field {
 public:
  explicit Field(const TorusGrid& grid);
  Field(const TorusGrid& grid, Eigen::VectorXd values);

  static Field constant(const TorusGrid& grid, double c);
  static Field from_function(const TorusGrid& grid, const std::function<double(Point)>& fn);

  const TorusGrid& grid() const { return grid_; }
  const Eigen::VectorXd& values() const { return values_; }
  Eigen::VectorXd& values() { return values_; }
  double operator[](Eigen::Index i) const { return values_[i]; }
  double& operator[](Eigen::Index i) { return values_[i]; }
  double at(int i, int j) const { return values_[static_cast<Eigen::Index>(i) * grid_.n() + j]; }

  bool is_finite() const;

  Field& operator+=(const Field& other);
  Field& operator-=(const Field& other);
  Field& operator*=(double s);

 private:
  TorusGrid grid_;
  Eigen::VectorXd values_;
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(double s, Field a);

/// Throws std::invalid_argument naming `where` if any value is NaN or infinite.
void require_finite(const Field& f, const char* where);
void require_same_grid(const Field& a, const Field& b, const char* where);

FourierTable to_fourier(const Field& f);
/// Inverse of to_fourier; the imaginary part of the synthesis is discarded.
Field from_fourier(const TorusGrid& grid, const FourierTable& coefficients);

// ---------------------------------------------------------------------------
// Spectral symbols

/// Canonical Schwartz multiplier psi(r) = exp(-r^2).
double schwartz_psi(double r);
/// Compactly supported bump chi(r) = exp(1 - 1/(1 - r^2)) on |r| < 1, zero elsewhere.
double bump_chi(double r);
/// Littlewood-Paley profile: smooth, 1 on [-1/2, 1/2], supported in [-1, 1].
double lp_profile(double r);
/// Symbol of the dyadic block Q_M evaluated at lambda = |k|^2 (M = 0 or a power of two).
double dyadic_block_symbol(int M, double lambda);

/// A radial spectral multiplier. `at(lambda, scale)` evaluates the symbol at
/// the eigenvalue lambda (|k|^2 for -Delta, lambda_n for H):
///   identity             -> 1
///   schwartz_psi         -> psi(lambda / scale^2)
///   bump_chi             -> chi(lambda / scale^2)
///   dyadic_block(M)      -> Q_M symbol at lambda (scale ignored)
///   fractional_power(s)  -> (1 + lambda)^{s/2} (scale ignored)
///   heat(t)              -> exp(-t lambda) (scale ignored)
struct SpectralSymbol {
  enum class Kind { identity, schwartz_psi, bump_chi, dyadic_block, fractional_power, heat };

  Kind kind = Kind::identity;
  double parameter = 0.0;

  static SpectralSymbol identity() { return {Kind::identity, 0.0}; }
  static SpectralSymbol psi() { return {Kind::schwartz_psi, 0.0}; }
  static SpectralSymbol chi() { return {Kind::bump_chi, 0.0}; }
  static SpectralSymbol dyadic_block(int M) { return {Kind::dyadic_block, static_cast<double>(M)}; }
  static SpectralSymbol fractional_power(double s) { return {Kind::fractional_power, s}; }
  static SpectralSymbol heat(double t) { return {Kind::heat, t}; }

  /// Throws if the parameters are invalid for the kind (negative heat time,
  /// non-positive scale for the scaled kinds).
  void validate(double scale) const;
  double at(double lambda, double scale = 1.0) const;
};

/// Fourier multiplier s(|k|^2) applied to f. The identity symbol returns f unchanged.
Field apply_multiplier(const Field& f, const SpectralSymbol& symbol, double scale = 1.0);
Field apply_radial_multiplier(const Field& f, const std::function<double(double)>& symbol_of_lambda);

/// Dyadic block indices {0, 1, 2, 4, ..., n/2}; together they resolve every grid mode.
std::vector<int> dyadic_blocks(const TorusGrid& grid);

/// Grid-quadrature L^p norm, p in [1, inf] (p = inf gives the max norm).
double lp_norm(const Field& f, double p);
double besov_norm(const Field& f, double s, double p, double q);

double integrate(const Field& f);
double torus_distance(Point x, Point y);

}  // namespace asqe
