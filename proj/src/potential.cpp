#include "asqe/potential.hpp"

#include <stdexcept>

namespace asqe {

namespace {
constexpr Eigen::Index kDenseModes = 64;
}

int dealiased_grid_size(int base_n, int K, int poly_degree) {
  const int deg_f = std::max(poly_degree - 1, 1);
  const int factor = (deg_f + 2) / 2;
  int n = base_n;
  while (n < base_n * factor || n <= poly_degree * K) n *= 2;
  return std::max(n, 8);
}

WickPotential::WickPotential(const AndersonOperator& op, WickPolynomial poly, double N, std::optional<double> M)
    : op_(&op),
      poly_(std::move(poly)),
      N_(N),
      M_(M),
      d_(op.dim()),
      padded_(dealiased_grid_size(op.grid().n(), op.cutoff(), poly_.degree())),
      var_(sigma_field(op, N, std::nullopt, padded_)) {
  if (M_) {
    if (!(*M_ > 0.0)) throw std::invalid_argument("WickPotential: M must be > 0");
    const double m2 = *M_ * *M_;
    d_ = 0;
    while (d_ < op.dim() && op.eigenvalues()[d_] < m2) ++d_;
    chi_ = op.eigenvalues().head(d_).unaryExpr([m2](double l) { return bump_chi(l / m2); });
  } else {
    chi_ = Eigen::VectorXd::Ones(d_);
  }
  pw_ = laplacian_weights(op.basis(), N_);
  W_ = pw_.asDiagonal() * op.eigenvectors().leftCols(d_) * chi_.asDiagonal();
  // A few active modes are cheaper as dense samples than as padded FFTs.
  if (d_ > 0 && d_ <= kDenseModes) {
    Phi_.resize(padded_.size(), d_);
    for (Eigen::Index j = 0; j < d_; ++j) Phi_.col(j) = op.basis().synthesize_values(W_.col(j), padded_.n());
  }
}

Eigen::VectorXd WickPotential::active(const Eigen::VectorXd& a) const {
  if (a.size() != d_ && a.size() != op_->dim()) {
    throw std::invalid_argument("WickPotential: coefficient vector has the wrong length");
  }
  return a.head(d_);
}

Eigen::VectorXd WickPotential::smoothed_values(const Eigen::VectorXd& a) const {
  if (d_ == 0) return Eigen::VectorXd::Zero(padded_.size());
  if (Phi_.size() > 0) return Phi_ * active(a);
  return op_->basis().synthesize_values(W_ * active(a), padded_.n());
}

Eigen::VectorXd WickPotential::pull_back(const Eigen::VectorXd& padded_values) const {
  if (d_ == 0) return Eigen::VectorXd(0);
  if (Phi_.size() > 0) return padded_.cell_area() * (Phi_.transpose() * padded_values);
  return W_.transpose() * op_->basis().analyze_values(padded_values, padded_.n());
}

double WickPotential::energy(const Eigen::VectorXd& a) const {
  if (poly_.is_constant()) {
    active(a);
    return poly_.a()[0] * kTorusArea;
  }
  const Eigen::ArrayXd v = smoothed_values(a).array();
  return padded_.cell_area() * F_diamond(poly_, v, var_.sigma_sq.values().array()).sum();
}

Eigen::VectorXd WickPotential::gradient(const Eigen::VectorXd& a) const {
  if (poly_.is_constant()) {
    active(a);
    return Eigen::VectorXd::Zero(d_);
  }
  const Eigen::ArrayXd v = smoothed_values(a).array();
  return pull_back(f_diamond(poly_, v, var_.sigma_sq.values().array()).matrix());
}

}  // namespace asqe
