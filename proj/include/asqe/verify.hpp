#pragma once

#include "asqe/anderson.hpp"
#include "asqe/dynamics.hpp"
#include "asqe/gibbs.hpp"
#include "asqe/noise.hpp"

#include <map>
#include <string>
#include <vector>

namespace asqe {

struct CheckCase {
  /// two_sided: |measured - expected| <= tolerance.
  /// at_most: measured <= expected + tolerance. at_least: measured >= expected - tolerance.
  enum class Bound { two_sided, at_most, at_least };

  std::string name;
  double measured = 0.0;
  double expected = 0.0;
  double tolerance = 0.0;
  Bound bound = Bound::two_sided;
  bool pass = false;
  std::string note;
};

CheckCase make_case(std::string name, double measured, double expected, double tolerance,
                    CheckCase::Bound bound = CheckCase::Bound::two_sided);

struct CheckReport {
  std::string suite;
  std::vector<CheckCase> cases;
  std::vector<RngSpec> seeds;
  /// Sample sizes, settings and ungated diagnostics.
  std::map<std::string, double> info;
  double wall_time_s = 0.0;

  bool passed() const;
  CheckCase& add(CheckCase c);
  /// Pretty JSON with sorted keys.
  std::string to_json() const;
};

struct AlgebraSettings {
  Eigen::Index samples = 100000;
};
/// Hermite orthogonality (k, l <= 4, rho in {0, 0.5, 1}), Wiener chaos
/// ratios (k <= 4, p in {4, 6}) and the Hermite binomial identity.
CheckReport check_algebra(const RngSpec& spec, const AlgebraSettings& settings = {});

/// Zero-noise eigenvalues against the shifted lattice spectrum and the
/// lambda_n-vs-n slope on [lambda_max/10, lambda_max/2] against 1/pi.
/// op_zero must be built from xi = 0 with counterterm 0.
CheckReport check_spectrum(const AndersonOperator& op_zero, const AndersonOperator& op_sampled);

/// Least-squares slope of lambda_n against n over lambda_n in [lambda_max/10, lambda_max/2].
double weyl_slope(const AndersonOperator& op);

struct GreenSettings {
  /// Part (a): distances d = c / N with c log-spaced on [c_min, c_max].
  double c_min = 0.05;
  double c_max = 0.5;
  int sweep_points = 8;
  int base_points = 4;
  /// Parts (b), (c): random pairs, with d >= min_pair_distance in (b).
  int pairs = 32;
  double min_pair_distance = 0.5;
  /// Part (c): M ladder (M_2 = 2 M_1) at N = N_fixed (0: largest N of the ladder).
  std::vector<double> M_ladder = {2.0, 4.0, 8.0};
  double N_fixed = 0.0;
};
CheckReport check_green(const AndersonOperator& op, const std::vector<double>& N_ladder, const RngSpec& spec,
                        const GreenSettings& settings = {});

struct FieldSettings {
  Eigen::Index covariance_draws = 10000;
  Eigen::Index cauchy_draws = 2000;
  std::vector<double> N_ladder = {2.0, 4.0, 8.0};
  /// Part (c): M ladder at N = N_for_M.
  std::vector<double> M_ladder = {2.0, 4.0, 8.0};
  double N_for_M = 8.0;
  double epsilon = 0.5;
  /// OU stationarity run.
  Eigen::Index ou_replicas = 2000;
  double ou_dt = 0.01;
  int ou_steps = 50;
  int ou_record_every = 10;
};
/// Law of the stochastic convolution, OU stationarity per recorded time and
/// the Wick-power Cauchy trends.
CheckReport check_fields(const AndersonOperator& op, const RngSpec& spec, const FieldSettings& settings = {},
                         int threads = 1);

/// E || (P_N - P_2N) loli ||^2_{D^{-eps}} under mu^H, exactly.
double cauchy_k1_oracle(const AndersonOperator& op, double N, double epsilon);

struct SemigroupSettings {
  int fields = 100;
};
CheckReport check_semigroup(const AndersonOperator& op, const RngSpec& spec, const SemigroupSettings& settings = {});

struct InvarianceSettings {
  /// Replicas re-run with dt and dt/2 on a shared path to calibrate the dt bias.
  Eigen::Index bias_replicas = 400;
  /// Initial-state sampler (pCN on the active block).
  PcnSettings pcn = {0.2, 2000, 100, 20};
  /// Mismatch control: initial law mu^H evolved under a_4 = control_a4.
  bool run_control = true;
  double control_a4 = 5.0;
  Eigen::Index control_replicas = 500;
};

/// Observables <u,phi_1>, <u,phi_3>, ||chi_M u||^2, int (P_N u)^{diamond 2},
/// energy(u) for each coefficient column (rows: observables).
Eigen::MatrixXd invariance_observables(const WickPotential& potential, const Eigen::MatrixXd& coeffs);
inline const std::vector<std::string>& invariance_observable_names() {
  static const std::vector<std::string> names = {"phi1", "phi3", "chiM_l2", "wick2_integral", "energy"};
  return names;
}

CheckReport check_invariance(const AndersonOperator& op, const GibbsConfig& cfg, const SimConfig& sim,
                             Eigen::Index n_replicas, const RngSpec& spec, const InvarianceSettings& settings = {},
                             int threads = 1);

struct PartitionSettings {
  std::vector<double> N_ladder = {2.0, 4.0, 8.0, 16.0};
  Eigen::Index samples = 10000;
};
/// Pairwise overlap of the 3-stderr bands of Z_N along the ladder.
CheckReport check_partition(const AndersonOperator& op, const GibbsConfig& cfg, const RngSpec& spec,
                            const PartitionSettings& settings = {}, int threads = 1);

struct DpdSettings {
  double T = 0.2;
  std::vector<double> dt_ladder = {4e-3, 2e-3, 1e-3, 5e-4};
  /// Reference full-scheme step is the finest ladder step divided by this.
  int reference_refinement = 8;
  int replicas = 8;
};
/// Strong self-convergence of the splitting against a fine full-scheme
/// reference on shared Brownian paths.
CheckReport check_dpd(const AndersonOperator& op, const GibbsConfig& cfg, const RngSpec& spec,
                      const DpdSettings& settings = {}, int threads = 1);

}  // namespace asqe
