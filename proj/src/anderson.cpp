#include "asqe/anderson.hpp"

#include <Eigen/Eigenvalues>

#include <charconv>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace asqe {

double lattice_counterterm(int K) {
  double sum = 0.0;
  for (int k1 = -K; k1 <= K; ++k1)
    for (int k2 = -K; k2 <= K; ++k2) {
      const int r2 = k1 * k1 + k2 * k2;
      if (r2 > 0 && r2 <= K * K) sum += 1.0 / r2;
    }
  return sum / kTorusArea;
}

std::string Counterterm::descriptor() const {
  if (mode == Mode::automatic) return "auto";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

AndersonOperator::AndersonOperator(TorusGrid grid, Field xi, int cutoff_K, Counterterm counterterm,
                                   double counterterm_value, Eigen::VectorXd raw_eigenvalues,
                                   Eigen::MatrixXd eigenvectors, std::optional<RngSpec> noise_ref)
    : grid_(grid),
      basis_(cutoff_K),
      xi_(std::move(xi)),
      mode_(counterterm),
      c_(counterterm_value),
      raw_lambda_(std::move(raw_eigenvalues)),
      V_(std::move(eigenvectors)),
      noise_ref_(noise_ref) {
  if (raw_lambda_.size() != basis_.dim() || V_.rows() != basis_.dim() || V_.cols() != basis_.dim()) {
    throw std::invalid_argument("AndersonOperator: eigendata does not match the Galerkin dimension");
  }
  shift_ = -raw_lambda_[0] + 1.0;
  lambda_ = raw_lambda_.array() + shift_;
  lambda_[0] = 1.0;
}

Eigen::VectorXd AndersonOperator::project(const Field& f) const { return from_basis(basis_.analyze(f)); }

Field AndersonOperator::synthesize(const Eigen::VectorXd& eigen_coeffs) const { return synthesize(eigen_coeffs, grid_); }

Field AndersonOperator::synthesize(const Eigen::VectorXd& eigen_coeffs, const TorusGrid& grid) const {
  if (eigen_coeffs.size() != dim()) throw std::invalid_argument("AndersonOperator::synthesize: wrong coefficient count");
  return basis_.synthesize(to_basis(eigen_coeffs), grid);
}

Field AndersonOperator::eigenfunction(Eigen::Index n) const {
  if (n < 0 || n >= dim()) throw std::out_of_range("AndersonOperator::eigenfunction: index out of range");
  return basis_.synthesize(V_.col(n), grid_);
}

Eigen::MatrixXd assemble_galerkin_matrix(const GalerkinBasis& basis, const Field& xi, double counterterm) {
  const int n = xi.grid().n();
  const FourierTable xh = to_fourier(xi);
  auto fetch = [&](int q1, int q2) -> std::complex<double> {
    if (std::abs(q1) >= n / 2 || std::abs(q2) >= n / 2) return {0.0, 0.0};
    return xh(TorusGrid::index_of(q1, n), TorusGrid::index_of(q2, n));
  };
  auto c = [&](int q1, int q2) { return fetch(q1, q2).real(); };
  auto s = [&](int q1, int q2) { return -fetch(q1, q2).imag(); };

  const Eigen::Index D = basis.dim();
  Eigen::MatrixXd A(D, D);
  const double r2 = std::numbers::sqrt2;
  A(0, 0) = c(0, 0);
  for (Eigen::Index a = 1; a < D; a += 2) {
    const auto& m = basis.mode(a);
    A(0, a) = A(a, 0) = r2 * c(m.k1, m.k2);
    A(0, a + 1) = A(a + 1, 0) = r2 * s(m.k1, m.k2);
  }
  for (Eigen::Index a = 1; a < D; a += 2) {
    const auto& ma = basis.mode(a);
    for (Eigen::Index b = 1; b < D; b += 2) {
      const auto& mb = basis.mode(b);
      const int d1 = ma.k1 - mb.k1, d2 = ma.k2 - mb.k2;
      const int p1 = ma.k1 + mb.k1, p2 = ma.k2 + mb.k2;
      const double cm = c(d1, d2), cp = c(p1, p2), sm = s(d1, d2), sp = s(p1, p2);
      A(a, b) = cm + cp;
      A(a + 1, b + 1) = cm - cp;
      A(a, b + 1) = sp - sm;
      A(a + 1, b) = sp + sm;
    }
  }
  const Eigen::VectorXd diag = basis.laplacian_eigenvalues().array() - counterterm;
  A.diagonal() += diag;
  return A;
}

AndersonOperator build_operator(const Field& xi, int cutoff_K, Counterterm counterterm,
                                std::optional<RngSpec> noise_ref) {
  require_finite(xi, "build_operator");
  const TorusGrid& grid = xi.grid();
  if (cutoff_K < 1) throw std::invalid_argument("build_operator: cutoff_K must be >= 1");
  if (3 * cutoff_K > grid.n()) {
    throw std::invalid_argument("build_operator: cutoff_K = " + std::to_string(cutoff_K) + " exceeds n_per_dim/3 = " +
                                std::to_string(grid.n() / 3));
  }
  const GalerkinBasis basis(cutoff_K);
  const double c = counterterm.resolve(cutoff_K);
  const Eigen::MatrixXd A = assemble_galerkin_matrix(basis, xi, c);
  const double asym = (A - A.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12) {
    throw NumericalFailure("build_operator: assembled matrix is not symmetric (max asymmetry " +
                             std::to_string(asym) + ")");
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(A);
  if (solver.info() != Eigen::Success) throw NumericalFailure("build_operator: symmetric eigensolve did not converge");

  Eigen::MatrixXd V = solver.eigenvectors();
  for (Eigen::Index j = 0; j < V.cols(); ++j) {
    for (Eigen::Index i = 0; i < V.rows(); ++i) {
      if (std::abs(V(i, j)) > 1e-10) {
        if (V(i, j) < 0.0) V.col(j) *= -1.0;
        break;
      }
    }
  }
  return AndersonOperator(grid, xi, cutoff_K, counterterm, c, solver.eigenvalues(), std::move(V), noise_ref);
}

Eigen::VectorXd spectral_weights(const AndersonOperator& op, const SpectralSymbol& symbol, double scale) {
  symbol.validate(scale);
  return op.eigenvalues().unaryExpr([&](double l) { return symbol.at(l, scale); });
}

Field functional_calculus(const AndersonOperator& op, const SpectralSymbol& symbol, double scale, const Field& f) {
  const Eigen::VectorXd w = spectral_weights(op, symbol, scale);
  return op.synthesize(w.cwiseProduct(op.project(f)), f.grid());
}

Eigen::VectorXd sharp_mask(const AndersonOperator& op, double threshold) {
  return (op.eigenvalues().array() <= threshold).cast<double>();
}

Field sharp_projector(const AndersonOperator& op, double threshold, const Field& f) {
  return op.synthesize(sharp_mask(op, threshold).cwiseProduct(op.project(f)), f.grid());
}

Eigen::VectorXd laplacian_weights(const GalerkinBasis& basis, std::optional<double> N) {
  if (!N) return Eigen::VectorXd::Ones(basis.dim());
  if (!(*N > 0.0)) throw std::invalid_argument("laplacian_weights: N must be > 0");
  const double n2 = *N * *N;
  return basis.laplacian_eigenvalues().unaryExpr([n2](double l) { return schwartz_psi(l / n2); });
}

namespace {

Eigen::VectorXd chi_weights(const AndersonOperator& op, std::optional<double> M) {
  if (!M) return Eigen::VectorXd::Ones(op.dim());
  return spectral_weights(op, SpectralSymbol{SpectralSymbol::Kind::bump_chi, 0.0}, *M);
}

}  // namespace

Eigen::MatrixXd smoothed_eigenfunctions_at(const AndersonOperator& op, const Smoothing& s,
                                           const std::vector<Point>& points) {
  const Eigen::VectorXd pw = laplacian_weights(op.basis(), s.N);
  Eigen::MatrixXd B(static_cast<Eigen::Index>(points.size()), op.dim());
  for (std::size_t i = 0; i < points.size(); ++i) {
    B.row(static_cast<Eigen::Index>(i)) = op.basis().basis_at(points[i]).cwiseProduct(pw).transpose();
  }
  Eigen::MatrixXd out = B * op.eigenvectors();
  return out * chi_weights(op, s.M).asDiagonal();
}

double green_function(const AndersonOperator& op, const Smoothing& left, const Smoothing& right, Point x, Point y) {
  const Eigen::RowVectorXd a = smoothed_eigenfunctions_at(op, left, {x});
  const Eigen::RowVectorXd b = smoothed_eigenfunctions_at(op, right, {y});
  return (a.array() * b.array() / op.eigenvalues().transpose().array()).sum();
}

double lattice_green(int K, Point x, Point y) {
  double sum = 0.0;
  for (int k1 = -K; k1 <= K; ++k1)
    for (int k2 = -K; k2 <= K; ++k2) {
      const int r2 = k1 * k1 + k2 * k2;
      if (r2 <= K * K) sum += std::cos(k1 * (x.x1 - y.x1) + k2 * (x.x2 - y.x2)) / (r2 + 1.0);
    }
  return sum / kTorusArea;
}

VarianceField sigma_field(const AndersonOperator& op, double N, std::optional<double> M,
                          std::optional<TorusGrid> grid) {
  if (!(N >= 1.0)) throw std::invalid_argument("sigma_field: N must be >= 1");
  const TorusGrid& g = grid ? *grid : op.grid();
  const Eigen::VectorXd pw = laplacian_weights(op.basis(), N);
  const Eigen::VectorXd scale = chi_weights(op, M).cwiseQuotient(op.eigenvalues().cwiseSqrt());
  const Eigen::MatrixXd W = pw.asDiagonal() * op.eigenvectors() * scale.asDiagonal();
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(g.size());
  for (Eigen::Index j = 0; j < W.cols(); ++j) {
    if (scale[j] == 0.0) continue;
    acc += op.basis().synthesize_values(W.col(j), g.n()).cwiseAbs2();
  }
  return {Field(g, std::move(acc)), N, M};
}

double dH_norm_coeffs(const AndersonOperator& op, const Eigen::VectorXd& a, double sigma) {
  return std::sqrt((op.eigenvalues().array().pow(sigma) * a.array().square()).sum());
}

double dH_norm(const AndersonOperator& op, const Field& f, double sigma) {
  return dH_norm_coeffs(op, op.project(f), sigma);
}

}  // namespace asqe
