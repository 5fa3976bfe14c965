#pragma once

#include "asqe/anderson.hpp"
#include "asqe/noise.hpp"
#include "asqe/potential.hpp"
#include "asqe/wick.hpp"

#include <Eigen/Core>

#include <optional>
#include <string>
#include <vector>

namespace asqe {

struct PcnSettings {
  double beta = 0.2;
  int burn_in = 2000;
  int thin = 10;
  int chains = 4;
};

struct GibbsConfig {
  enum class Sampler { importance, pcn };

  WickPolynomial poly = WickPolynomial::quartic();
  double N = 8.0;
  /// chi_M truncation; absent means the untruncated rho_N.
  std::optional<double> M;
  Sampler sampler = Sampler::pcn;
  PcnSettings pcn;

  /// N >= 1, M^2 <= lambda_max, beta in (0, 1], positive chain settings.
  void validate(const AndersonOperator& op) const;
};

/// Draws are stored as eigen-coefficient columns (D x n); field(i)
/// synthesizes sample i on the operator grid.
struct SampleBatch {
  Eigen::MatrixXd coeffs;
  /// Self-normalized importance weights (mean 1), or all ones for pCN.
  Eigen::VectorXd weights;
  std::optional<double> acceptance_rate;
  double effective_sample_size = 0.0;
  std::vector<std::string> warnings;
  RngSpec seed;

  Eigen::Index size() const { return coeffs.cols(); }
  Field field(const AndersonOperator& op, Eigen::Index i) const { return op.synthesize(coeffs.col(i)); }
};

/// gamma_n / sqrt(lambda_n) for n = 0..D-1.
Eigen::VectorXd sample_gff_coeffs(const AndersonOperator& op, Rng& rng);
Field sample_gff(const AndersonOperator& op, const RngSpec& spec);

/// int F^diamond(P_N chi_M u, sigma_N^2) dx. Builds the potential on every
/// call; use WickPotential::energy in loops.
double energy(const AndersonOperator& op, const GibbsConfig& cfg, const Field& u);

struct PartitionEstimate {
  double Z = 1.0;
  double std_error = 0.0;
  Eigen::Index n_samples = 0;
};

/// Monte Carlo mean of exp(-energy) over mu^H. Throws NumericalFailure if an
/// energy falls below -700.
PartitionEstimate estimate_partition(const AndersonOperator& op, const GibbsConfig& cfg, Eigen::Index n_samples,
                                     const RngSpec& spec, int threads = 1);

/// Samples rho_N (or rho_{N,M} x (1 - Pi_M)^* mu^H when cfg.M is set).
///
/// pCN chains run on the modes the energy depends on (all modes without M,
/// the d_M low modes with M); with M the remaining modes are drawn exactly
/// from mu^H for every output sample. Chain c uses stream spec.child(c), and
/// samples are ordered chain by chain.
SampleBatch sample_gibbs(const AndersonOperator& op, const GibbsConfig& cfg, Eigen::Index n_samples,
                         const RngSpec& spec, int threads = 1);

/// Same with a prebuilt potential (must match cfg).
SampleBatch sample_gibbs(const WickPotential& potential, const GibbsConfig& cfg, Eigen::Index n_samples,
                         const RngSpec& spec, int threads = 1);

}  // namespace asqe
