#include "asqe/galerkin.hpp"

#include "fft.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <tuple>

namespace asqe {

using detail::cplx;

namespace {

constexpr double kInvTwoPi = 1.0 / kTwoPi;
const double kTrigNorm = std::numbers::sqrt2 / kTwoPi;

bool in_half_plane(int k1, int k2) { return k1 > 0 || (k1 == 0 && k2 > 0); }

}  // namespace

Eigen::Index lattice_count(int K) {
  Eigen::Index count = 0;
  for (int k1 = -K; k1 <= K; ++k1)
    for (int k2 = -K; k2 <= K; ++k2)
      if (k1 * k1 + k2 * k2 <= K * K) ++count;
  return count;
}

GalerkinBasis::GalerkinBasis(int cutoff_K) : K_(cutoff_K) {
  if (cutoff_K < 0) throw std::invalid_argument("GalerkinBasis: cutoff must be >= 0");
  std::vector<std::pair<int, int>> half;
  for (int k1 = 0; k1 <= K_; ++k1)
    for (int k2 = -K_; k2 <= K_; ++k2)
      if (in_half_plane(k1, k2) && k1 * k1 + k2 * k2 <= K_ * K_) half.emplace_back(k1, k2);
  std::sort(half.begin(), half.end(), [](const auto& a, const auto& b) {
    return std::make_tuple(a.first * a.first + a.second * a.second, a.first, a.second) <
           std::make_tuple(b.first * b.first + b.second * b.second, b.first, b.second);
  });
  modes_.push_back({0, 0, BasisMode::Part::constant});
  for (auto [k1, k2] : half) {
    modes_.push_back({k1, k2, BasisMode::Part::cosine});
    modes_.push_back({k1, k2, BasisMode::Part::sine});
  }
  lambda_.resize(dim());
  for (Eigen::Index a = 0; a < dim(); ++a) lambda_[a] = modes_[static_cast<std::size_t>(a)].lambda();
}

void GalerkinBasis::check_grid(int n) const {
  if (2 * K_ >= n) {
    throw std::invalid_argument("GalerkinBasis: cutoff " + std::to_string(K_) + " is not resolved on an " +
                                std::to_string(n) + "-point grid");
  }
}

namespace {

// Small (2K+1)^2 complex table of fhat for |k_i| <= K, indexed (k1 + K, k2 + K).
Eigen::MatrixXcd small_table(const GalerkinBasis& basis, const Eigen::VectorXd& c) {
  const int K = basis.cutoff();
  Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(2 * K + 1, 2 * K + 1);
  s(K, K) = c[0] * kInvTwoPi;
  const double scale = 1.0 / (kTwoPi * std::numbers::sqrt2);
  for (Eigen::Index a = 1; a < basis.dim(); a += 2) {
    const auto& m = basis.mode(a);
    const cplx fk(c[a] * scale, -c[a + 1] * scale);
    s(m.k1 + K, m.k2 + K) = fk;
    s(-m.k1 + K, -m.k2 + K) = std::conj(fk);
  }
  return s;
}

Eigen::VectorXd from_small_table(const GalerkinBasis& basis, const Eigen::MatrixXcd& s) {
  const int K = basis.cutoff();
  Eigen::VectorXd c(basis.dim());
  c[0] = kTwoPi * s(K, K).real();
  const double scale = kTwoPi * std::numbers::sqrt2;
  for (Eigen::Index a = 1; a < basis.dim(); a += 2) {
    const auto& m = basis.mode(a);
    const cplx fk = s(m.k1 + K, m.k2 + K);
    c[a] = scale * fk.real();
    c[a + 1] = -scale * fk.imag();
  }
  return c;
}

}  // namespace

Eigen::VectorXd GalerkinBasis::synthesize_values(const Eigen::VectorXd& coefficients, int n) const {
  check_grid(n);
  if (coefficients.size() != dim()) throw std::invalid_argument("GalerkinBasis::synthesize: wrong coefficient count");
  const Eigen::MatrixXcd s = small_table(*this, coefficients);
  const int rows = 2 * K_ + 1;

  // Inverse transform along k2 for each active k1 row: g(k1, x2_j).
  Eigen::MatrixXcd g(rows, n);
  std::vector<cplx> in(n), out(n);
  for (int r = 0; r < rows; ++r) {
    std::fill(in.begin(), in.end(), cplx(0.0, 0.0));
    for (int k2 = -K_; k2 <= K_; ++k2) in[TorusGrid::index_of(k2, n)] = s(r, k2 + K_);
    detail::fft_inverse(out.data(), in.data(), n);
    for (int j = 0; j < n; ++j) g(r, j) = out[j];
  }

  // Inverse transform along k1; each column is real so two are packed per FFT.
  Eigen::VectorXd values(static_cast<Eigen::Index>(n) * n);
  for (int j = 0; j < n; j += 2) {
    std::fill(in.begin(), in.end(), cplx(0.0, 0.0));
    for (int k1 = -K_; k1 <= K_; ++k1) {
      in[TorusGrid::index_of(k1, n)] = g(k1 + K_, j) + cplx(0.0, 1.0) * g(k1 + K_, j + 1);
    }
    detail::fft_inverse(out.data(), in.data(), n);
    for (int i = 0; i < n; ++i) {
      values[static_cast<Eigen::Index>(i) * n + j] = out[i].real();
      values[static_cast<Eigen::Index>(i) * n + j + 1] = out[i].imag();
    }
  }
  return values;
}

Field GalerkinBasis::synthesize(const Eigen::VectorXd& coefficients, const TorusGrid& grid) const {
  return Field(grid, synthesize_values(coefficients, grid.n()));
}

Eigen::VectorXd GalerkinBasis::analyze_values(const Eigen::VectorXd& v, int n) const {
  check_grid(n);
  if (v.size() != static_cast<Eigen::Index>(n) * n) throw std::invalid_argument("GalerkinBasis::analyze: wrong size");
  const int rows = 2 * K_ + 1;

  // Forward transform along x1, two real columns per complex FFT.
  Eigen::MatrixXcd g(rows, n);
  std::vector<cplx> in(n), out(n);
  for (int j = 0; j < n; j += 2) {
    for (int i = 0; i < n; ++i) {
      const Eigen::Index base = static_cast<Eigen::Index>(i) * n + j;
      in[i] = cplx(v[base], v[base + 1]);
    }
    detail::fft_forward(out.data(), in.data(), n);
    for (int k1 = -K_; k1 <= K_; ++k1) {
      const cplx z = out[TorusGrid::index_of(k1, n)];
      const cplx zc = std::conj(out[TorusGrid::index_of(-k1, n)]);
      g(k1 + K_, j) = 0.5 * (z + zc);
      g(k1 + K_, j + 1) = cplx(0.0, -0.5) * (z - zc);
    }
  }

  Eigen::MatrixXcd s(rows, rows);
  const double norm = 1.0 / (static_cast<double>(n) * n);
  for (int r = 0; r < rows; ++r) {
    for (int j = 0; j < n; ++j) in[j] = g(r, j);
    detail::fft_forward(out.data(), in.data(), n);
    for (int k2 = -K_; k2 <= K_; ++k2) s(r, k2 + K_) = out[TorusGrid::index_of(k2, n)] * norm;
  }
  return from_small_table(*this, s);
}

Eigen::VectorXd GalerkinBasis::analyze(const Field& f) const {
  require_finite(f, "GalerkinBasis::analyze");
  return analyze_values(f.values(), f.grid().n());
}

FourierTable GalerkinBasis::to_table(const Eigen::VectorXd& coefficients, int n) const {
  check_grid(n);
  const Eigen::MatrixXcd s = small_table(*this, coefficients);
  FourierTable t = FourierTable::Zero(n, n);
  for (int k1 = -K_; k1 <= K_; ++k1)
    for (int k2 = -K_; k2 <= K_; ++k2)
      t(TorusGrid::index_of(k1, n), TorusGrid::index_of(k2, n)) = s(k1 + K_, k2 + K_);
  return t;
}

Eigen::VectorXd GalerkinBasis::from_table(const FourierTable& table) const {
  const int n = static_cast<int>(table.rows());
  check_grid(n);
  Eigen::MatrixXcd s(2 * K_ + 1, 2 * K_ + 1);
  for (int k1 = -K_; k1 <= K_; ++k1)
    for (int k2 = -K_; k2 <= K_; ++k2)
      s(k1 + K_, k2 + K_) = table(TorusGrid::index_of(k1, n), TorusGrid::index_of(k2, n));
  return from_small_table(*this, s);
}

Eigen::VectorXd GalerkinBasis::basis_at(Point x) const {
  Eigen::VectorXd b(dim());
  b[0] = kInvTwoPi;
  for (Eigen::Index a = 1; a < dim(); a += 2) {
    const auto& m = modes_[static_cast<std::size_t>(a)];
    const double phase = m.k1 * x.x1 + m.k2 * x.x2;
    b[a] = kTrigNorm * std::cos(phase);
    b[a + 1] = kTrigNorm * std::sin(phase);
  }
  return b;
}

}  // namespace asqe
