#include "asqe/noise.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <tuple>
#include <vector>

namespace asqe {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

RngSpec RngSpec::child(std::uint64_t index) const {
  return {master_seed, splitmix64(stream_id ^ splitmix64(index + 0x632BE59BD9B4E019ULL))};
}

Rng::Rng(const RngSpec& spec)
    : spec_(spec), engine_(splitmix64(spec.master_seed ^ splitmix64(spec.stream_id))) {}

double Rng::uniform() {
  // 53 random bits mapped to (0, 1].
  return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double r = std::sqrt(-2.0 * std::log(uniform()));
  const double theta = 2.0 * std::numbers::pi * uniform();
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

Eigen::VectorXd Rng::normals(Eigen::Index count) {
  Eigen::VectorXd v(count);
  for (Eigen::Index i = 0; i < count; ++i) v[i] = normal();
  return v;
}

Field sample_spatial_white_noise(const TorusGrid& grid, const RngSpec& spec) {
  const int n = grid.n();
  const int kmax = n / 2 - 1;
  std::vector<std::pair<int, int>> half;
  for (int k1 = 0; k1 <= kmax; ++k1)
    for (int k2 = -kmax; k2 <= kmax; ++k2)
      if (k1 > 0 || k2 > 0) half.emplace_back(k1, k2);
  std::sort(half.begin(), half.end(), [](const auto& a, const auto& b) {
    return std::make_tuple(a.first * a.first + a.second * a.second, a.first, a.second) <
           std::make_tuple(b.first * b.first + b.second * b.second, b.first, b.second);
  });

  Rng rng(spec);
  FourierTable table = FourierTable::Zero(n, n);
  const double inv_two_pi = 1.0 / kTwoPi;
  table(0, 0) = rng.normal() * inv_two_pi;
  const double pair_scale = inv_two_pi / std::numbers::sqrt2;
  for (auto [k1, k2] : half) {
    const double re = rng.normal();
    const double im = rng.normal();
    const std::complex<double> z(re * pair_scale, -im * pair_scale);
    table(TorusGrid::index_of(k1, n), TorusGrid::index_of(k2, n)) = z;
    table(TorusGrid::index_of(-k1, n), TorusGrid::index_of(-k2, n)) = std::conj(z);
  }
  return from_fourier(grid, table);
}

Eigen::VectorXd sample_mode_increments(Eigen::Index count, double dt, Rng& rng) {
  if (count < 1) throw std::invalid_argument("sample_mode_increments: count must be >= 1");
  if (!(dt > 0.0)) throw std::invalid_argument("sample_mode_increments: dt must be > 0");
  return std::sqrt(dt) * rng.normals(count);
}

}  // namespace asqe
