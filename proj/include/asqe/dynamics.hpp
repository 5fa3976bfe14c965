#pragma once

#include "asqe/anderson.hpp"
#include "asqe/gibbs.hpp"
#include "asqe/noise.hpp"
#include "asqe/potential.hpp"

#include <Eigen/Core>

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace asqe {

struct SimConfig {
  double dt = 5e-4;
  double t_max = 0.5;
  int record_every = 100;
  /// Supplies poly, N and the optional chi_M threshold M.
  GibbsConfig cfg;

  /// dt > 0, t_max > 0, record_every >= 1, t_max/dt <= 1e7. Returns warnings
  /// (dt above 0.1/lambda_max).
  std::vector<std::string> validate(const AndersonOperator& op) const;
  long steps() const;
};

/// Which equation a Stepper integrates.
enum class Scheme {
  ou,          // (d_t + H) u = sqrt2 zeta
  full,        // + P_N f^diamond(P_N u)
  finite_dim,  // + chi_M P_N f^diamond(P_N chi_M u), requires M
};

/// Exponential Euler in eigen-coordinates:
///   a <- e^{-lambda dt} a - (1 - e^{-lambda dt})/lambda * g(a) + eta,
/// with eta the exact OU increment, Var eta_n = (1 - e^{-2 lambda_n dt})/lambda_n.
class Stepper {
 public:
  Stepper(const AndersonOperator& op, const SimConfig& sim, Scheme scheme);

  const AndersonOperator& op() const { return *op_; }
  Scheme scheme() const { return scheme_; }
  double dt() const { return dt_; }
  const Eigen::VectorXd& decay() const { return decay_; }
  const Eigen::VectorXd& noise_scale() const { return noise_scale_; }
  /// Null for the OU scheme.
  const WickPotential* potential() const { return potential_ ? &*potential_ : nullptr; }

  /// One exact OU increment; consumes D normals from rng.
  Eigen::VectorXd noise(Rng& rng) const;
  /// Projection of the nonlinearity onto every eigenmode (zeros outside the active block).
  Eigen::VectorXd drift(const Eigen::VectorXd& a) const;
  Eigen::VectorXd step(const Eigen::VectorXd& a, const Eigen::VectorXd& eta) const;
  Eigen::VectorXd step(const Eigen::VectorXd& a, Rng& rng) const { return step(a, noise(rng)); }
  /// Deterministic part only: e^{-lambda dt} a - phi1 * g.
  Eigen::VectorXd advance(const Eigen::VectorXd& a, const Eigen::VectorXd& g) const;

 private:
  const AndersonOperator* op_;
  Scheme scheme_;
  double dt_;
  Eigen::VectorXd decay_;
  Eigen::VectorXd phi1_;
  Eigen::VectorXd noise_scale_;
  std::optional<WickPotential> potential_;
};

/// Exact OU increment over r fine steps of size h, built from the fine
/// increments: sum_i e^{-lambda h (r-1-i)} eta_i.
Eigen::VectorXd aggregate_noise(const AndersonOperator& op, double fine_dt, const std::vector<Eigen::VectorXd>& fine);

/// Produces increments for steps of size ratio * fine_dt from one stream of
/// fine increments, so runs at different ratios share a Brownian path. With
/// ratio 1 the sequence equals Stepper::noise on Rng(spec).
class CoupledNoise {
 public:
  CoupledNoise(const AndersonOperator& op, double fine_dt, int ratio, const RngSpec& spec);
  Eigen::VectorXd next();

 private:
  const AndersonOperator* op_;
  double fine_dt_;
  int ratio_;
  Rng rng_;
  Eigen::VectorXd fine_scale_;
};

using NoiseSource = std::function<Eigen::VectorXd()>;

struct Trajectory {
  std::vector<double> times;
  /// Eigen-coefficient snapshots, one column per recorded time.
  Eigen::MatrixXd snapshots;
  bool halted = false;
  double halt_time = 0.0;
  double final_norm = 0.0;
  RngSpec seed;

  Field snapshot(const AndersonOperator& op, Eigen::Index i) const { return op.synthesize(snapshots.col(i)); }
};

/// Blow-up threshold on the L2 norm of the state.
inline constexpr double kBlowUpNorm = 1e6;

// Field-level single steps; rng streams continue across calls.
Field init_stationary_convolution(const AndersonOperator& op, Rng& rng);
Field step_ou(const AndersonOperator& op, const Field& state, double dt, Rng& rng);
Field step_full(const AndersonOperator& op, const Field& u, const SimConfig& sim, Rng& rng);
Field step_finite_dim(const AndersonOperator& op, const Field& u, const SimConfig& sim, Rng& rng);

/// Integrates from a0 up to t_max with noise from `spec`, recording every
/// record_every steps (and at t = 0). A state with non-finite entries or L2
/// norm above kBlowUpNorm halts the run; the halt time and norm are recorded.
Trajectory simulate(const Stepper& stepper, const SimConfig& sim, const Eigen::VectorXd& a0, const RngSpec& spec);
Trajectory simulate(const Stepper& stepper, const SimConfig& sim, const Eigen::VectorXd& a0, const NoiseSource& noise);

struct DpdResult {
  Trajectory u;
  Trajectory w;
  Trajectory loli;
};

/// Da Prato-Debussche splitting u = loli + w. loli follows the OU step with
/// the noise of `spec`; w solves d_t w + H w + chi_M P_N bold-f(P_N w, wick powers of P_N chi_M loli) = 0
/// by deterministic exponential Euler, where the nonlinearity is expanded
/// with the Hermite binomial formula. The scheme is full or finite_dim.
DpdResult solve_dpd(const Stepper& stepper, const SimConfig& sim, const Eigen::VectorXd& u0,
                    const Eigen::VectorXd& loli0, const RngSpec& spec);
DpdResult solve_dpd(const Stepper& stepper, const SimConfig& sim, const Eigen::VectorXd& u0,
                    const Eigen::VectorXd& loli0, const NoiseSource& noise);

/// Drift of the w-equation: chi_n <P_N bold-f, phi_n> with
/// bold-f = sum_p b_p sum_j C(p, j) (P_N chi_M w)^{p-j} (P_N chi_M loli)^{diamond j}.
Eigen::VectorXd dpd_drift(const WickPotential& potential, const Eigen::VectorXd& w, const Eigen::VectorXd& loli);

/// Psi_{N,M}(t) = 1/2 int |Pi_M w|^2 + b_{2m-1} int_0^t int |P_N chi_M Pi_M w|^{2m},
/// with the time integral accumulated by the trapezoidal rule over the recorded times.
std::vector<double> energy_monitor(const WickPotential& potential, const Trajectory& w);

/// sup_t t^{(sigma+eps)/2} ||w(t)||_{D^sigma} over recorded times (diagnostic only).
double xt_norm(const AndersonOperator& op, const Trajectory& w, double sigma, double eps);

}  // namespace asqe
