#pragma once

#include "asqe/torus.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <random>

namespace asqe {

/// Identifies one reproducible random stream. Child streams are derived by
/// hashing, so (master_seed, stream_id) pairs never need to be coordinated
/// between workers.
struct RngSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_id = 0;

  /// Stream for sub-task `index` of this stream (replica, chain, purpose).
  RngSpec child(std::uint64_t index) const;

  friend bool operator==(const RngSpec&, const RngSpec&) = default;
};

std::uint64_t splitmix64(std::uint64_t x);

/// mt19937_64 seeded with splitmix64(master_seed ^ splitmix64(stream_id)).
/// Normals come from Box-Muller on 53-bit uniforms, so the byte stream only
/// depends on the standard-specified engine.
class Rng {
 public:
  explicit Rng(const RngSpec& spec);

  const RngSpec& spec() const { return spec_; }
  /// Uniform on (0, 1].
  double uniform();
  double normal();
  Eigen::VectorXd normals(Eigen::Index count);

 private:
  RngSpec spec_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Band-limited spatial white noise: every sub-Nyquist Fourier mode is an
/// independent centred Gaussian with E|xi_k|^2 = (2 pi)^{-2} (real for k = 0),
/// Hermitian-symmetric, Nyquist modes zero. Modes are drawn shell by shell in
/// increasing |k|, so low modes do not change under grid refinement.
Field sample_spatial_white_noise(const TorusGrid& grid, const RngSpec& spec);

/// `count` independent N(0, dt) draws continuing the stream of `rng`.
Eigen::VectorXd sample_mode_increments(Eigen::Index count, double dt, Rng& rng);

}  // namespace asqe
