#include "asqe/torus.hpp"

#include "fft.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace asqe {

using detail::cplx;

TorusGrid::TorusGrid(int n_per_dim) : n_(n_per_dim) {
  if (n_per_dim < 8 || (n_per_dim & (n_per_dim - 1)) != 0) {
    throw std::invalid_argument("TorusGrid: n_per_dim must be a power of two >= 8, got " +
                                std::to_string(n_per_dim));
  }
}

Field::Field(const TorusGrid& grid) : grid_(grid), values_(Eigen::VectorXd::Zero(grid.size())) {}

Field::Field(const TorusGrid& grid, Eigen::VectorXd values) : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size()) {
    throw std::invalid_argument("Field: value count does not match the grid");
  }
}

Field Field::constant(const TorusGrid& grid, double c) {
  return Field(grid, Eigen::VectorXd::Constant(grid.size(), c));
}

Field Field::from_function(const TorusGrid& grid, const std::function<double(Point)>& fn) {
  Field f(grid);
  for (Eigen::Index i = 0; i < grid.size(); ++i) f[i] = fn(grid.point(i));
  return f;
}

bool Field::is_finite() const { return values_.allFinite(); }

Field& Field::operator+=(const Field& other) {
  require_same_grid(*this, other, "Field::operator+=");
  values_ += other.values_;
  return *this;
}

Field& Field::operator-=(const Field& other) {
  require_same_grid(*this, other, "Field::operator-=");
  values_ -= other.values_;
  return *this;
}

Field& Field::operator*=(double s) {
  values_ *= s;
  return *this;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(double s, Field a) { return a *= s; }

void require_finite(const Field& f, const char* where) {
  if (!f.is_finite()) throw std::invalid_argument(std::string(where) + ": field has non-finite values");
}

void require_same_grid(const Field& a, const Field& b, const char* where) {
  if (!(a.grid() == b.grid())) throw std::invalid_argument(std::string(where) + ": fields live on different grids");
}

FourierTable to_fourier(const Field& f) {
  require_finite(f, "to_fourier");
  const int n = f.grid().n();
  FourierTable table(n, n);
  std::vector<cplx> row(n), out(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) row[j] = f.at(i, j);
    detail::fft_forward(out.data(), row.data(), n);
    for (int q = 0; q < n; ++q) table(i, q) = out[q];
  }
  for (int q = 0; q < n; ++q) {
    std::copy_n(table.col(q).data(), n, row.begin());
    detail::fft_forward(table.col(q).data(), row.data(), n);
  }
  table /= static_cast<double>(n) * n;
  return table;
}

Field from_fourier(const TorusGrid& grid, const FourierTable& coefficients) {
  const int n = grid.n();
  if (coefficients.rows() != n || coefficients.cols() != n) {
    throw std::invalid_argument("from_fourier: table shape does not match the grid");
  }
  FourierTable work = coefficients;
  std::vector<cplx> buf(n), out(n);
  for (int q = 0; q < n; ++q) {
    std::copy_n(work.col(q).data(), n, buf.begin());
    detail::fft_inverse(work.col(q).data(), buf.data(), n);
  }
  Field f(grid);
  for (int i = 0; i < n; ++i) {
    for (int q = 0; q < n; ++q) buf[q] = work(i, q);
    detail::fft_inverse(out.data(), buf.data(), n);
    for (int j = 0; j < n; ++j) f[static_cast<Eigen::Index>(i) * n + j] = out[j].real();
  }
  return f;
}

// ---------------------------------------------------------------------------

double schwartz_psi(double r) { return std::exp(-r * r); }

double bump_chi(double r) {
  if (std::abs(r) >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - r * r));
}

double lp_profile(double r) {
  const double a = std::abs(r);
  if (a <= 0.5) return 1.0;
  if (a >= 1.0) return 0.0;
  auto g = [](double s) { return std::exp(-1.0 / s); };
  const double t = 2.0 * a - 1.0;
  return g(1.0 - t) / (g(1.0 - t) + g(t));
}

double dyadic_block_symbol(int M, double lambda) {
  if (M == 0) return lp_profile(lambda);
  const double m2 = static_cast<double>(M) * M;
  return lp_profile(lambda / (4.0 * m2)) - lp_profile(lambda / m2);
}

void SpectralSymbol::validate(double scale) const {
  switch (kind) {
    case Kind::heat:
      if (!(parameter >= 0.0)) throw std::invalid_argument("heat symbol requires t >= 0");
      break;
    case Kind::schwartz_psi:
    case Kind::bump_chi:
      if (!(scale > 0.0)) throw std::invalid_argument("scaled symbol requires scale > 0");
      break;
    case Kind::dyadic_block:
      if (parameter < 0.0) throw std::invalid_argument("dyadic block index must be >= 0");
      break;
    default:
      break;
  }
}

double SpectralSymbol::at(double lambda, double scale) const {
  switch (kind) {
    case Kind::identity:
      return 1.0;
    case Kind::schwartz_psi:
      return schwartz_psi(lambda / (scale * scale));
    case Kind::bump_chi:
      return bump_chi(lambda / (scale * scale));
    case Kind::dyadic_block:
      return dyadic_block_symbol(static_cast<int>(parameter), lambda);
    case Kind::fractional_power:
      return std::pow(1.0 + lambda, 0.5 * parameter);
    case Kind::heat:
      return std::exp(-parameter * lambda);
  }
  return 1.0;
}

namespace {

void multiply_table(FourierTable& table, const std::function<double(double)>& symbol_of_lambda) {
  const int n = static_cast<int>(table.rows());
  for (int q = 0; q < n; ++q) {
    const int k2 = TorusGrid::wavenumber(q, n);
    for (int p = 0; p < n; ++p) {
      const int k1 = TorusGrid::wavenumber(p, n);
      table(p, q) *= symbol_of_lambda(static_cast<double>(k1) * k1 + static_cast<double>(k2) * k2);
    }
  }
}

}  // namespace

Field apply_radial_multiplier(const Field& f, const std::function<double(double)>& symbol_of_lambda) {
  FourierTable table = to_fourier(f);
  multiply_table(table, symbol_of_lambda);
  return from_fourier(f.grid(), table);
}

Field apply_multiplier(const Field& f, const SpectralSymbol& symbol, double scale) {
  symbol.validate(scale);
  if (symbol.kind == SpectralSymbol::Kind::identity) {
    require_finite(f, "apply_multiplier");
    return f;
  }
  return apply_radial_multiplier(f, [&](double lambda) { return symbol.at(lambda, scale); });
}

std::vector<int> dyadic_blocks(const TorusGrid& grid) {
  std::vector<int> blocks{0};
  for (int M = 1; M <= grid.n() / 2; M *= 2) blocks.push_back(M);
  return blocks;
}

double lp_norm(const Field& f, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p must be in [1, inf]");
  const auto& v = f.values();
  if (std::isinf(p)) return v.cwiseAbs().maxCoeff();
  if (p == 2.0) return std::sqrt(f.grid().cell_area() * v.squaredNorm());
  return std::pow(f.grid().cell_area() * v.cwiseAbs().array().pow(p).sum(), 1.0 / p);
}

double besov_norm(const Field& f, double s, double p, double q) {
  if (!(p >= 1.0) || !(q >= 1.0)) throw std::invalid_argument("besov_norm: p and q must be in [1, inf]");
  const FourierTable base = to_fourier(f);
  double acc = 0.0;
  for (int M : dyadic_blocks(f.grid())) {
    FourierTable block = base;
    multiply_table(block, [M](double lambda) { return dyadic_block_symbol(M, lambda); });
    const double weight = std::pow(1.0 + static_cast<double>(M) * M, 0.5 * s);
    const double term = weight * lp_norm(from_fourier(f.grid(), block), p);
    if (std::isinf(q)) {
      acc = std::max(acc, term);
    } else {
      acc += std::pow(term, q);
    }
  }
  return std::isinf(q) ? acc : std::pow(acc, 1.0 / q);
}

double integrate(const Field& f) {
  require_finite(f, "integrate");
  return f.grid().cell_area() * f.values().sum();
}

double torus_distance(Point x, Point y) {
  auto wrap = [](double d) {
    d = std::fmod(std::abs(d), kTwoPi);
    return std::min(d, kTwoPi - d);
  };
  return std::hypot(wrap(x.x1 - y.x1), wrap(x.x2 - y.x2));
}

}  // namespace asqe
