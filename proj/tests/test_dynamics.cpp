#include <doctest.h>

#include "asqe/dynamics.hpp"
#include "asqe/gibbs.hpp"
#include "asqe/noise.hpp"
#include "asqe/stats.hpp"

#include <algorithm>
#include <cmath>

using namespace asqe;

namespace {

const AndersonOperator& op() {
  static const AndersonOperator o =
      build_operator(sample_spatial_white_noise(TorusGrid(16), {2024, 0}), 4, Counterterm::automatic());
  return o;
}

SimConfig sim_config(WickPolynomial poly, double dt, double t_max, int record_every = 1) {
  SimConfig sim;
  sim.dt = dt;
  sim.t_max = t_max;
  sim.record_every = record_every;
  sim.cfg.poly = std::move(poly);
  sim.cfg.N = 4.0;
  return sim;
}

// Largest |z| over modes of (sample variance * lambda_n - 1) / stderr.
double worst_mode_z(const Eigen::MatrixXd& coeffs) {
  double worst = 0.0;
  for (Eigen::Index n = 0; n < coeffs.rows(); ++n) {
    const Eigen::VectorXd s = coeffs.row(n).transpose() * std::sqrt(op().eigenvalues()[n]);
    worst = std::max(worst, std::abs(stats::variance(s) - 1.0) / stats::variance_stderr(s));
  }
  return worst;
}

}  // namespace

TEST_CASE("stationary convolution law") {
  const int draws = 10000;
  Eigen::MatrixXd coeffs(op().dim(), draws);
  Rng rng({20, 0});
  for (int i = 0; i < draws; ++i) coeffs.col(i) = op().project(init_stationary_convolution(op(), rng));
  // 49 modes: a 4-sigma envelope keeps the family-wise error small.
  CHECK(worst_mode_z(coeffs) < 4.0);

  Rng a({21, 0}), b({21, 0});
  CHECK(init_stationary_convolution(op(), a).values() == init_stationary_convolution(op(), b).values());
}

TEST_CASE("OU step") {
  const SimConfig sim = sim_config(WickPolynomial::zero(), 0.01, 1.0);
  const Stepper ou(op(), sim, Scheme::ou);

  SUBCASE("zero noise gives pure decay") {
    Rng rng({22, 0});
    const Eigen::VectorXd a = sample_gff_coeffs(op(), rng);
    const Eigen::VectorXd next = ou.step(a, Eigen::VectorXd::Zero(op().dim()));
    for (Eigen::Index n = 0; n < op().dim(); ++n)
      CHECK(next[n] == doctest::Approx(std::exp(-op().eigenvalues()[n] * 0.01) * a[n]).epsilon(1e-14));
  }
  SUBCASE("two half steps equal one full step in variance") {
    SimConfig half = sim;
    half.dt = 0.005;
    const Stepper h(op(), half, Scheme::ou);
    const Eigen::VectorXd two = (h.decay().array().square() * h.noise_scale().array().square() +
                                 h.noise_scale().array().square())
                                    .matrix();
    CHECK((two - ou.noise_scale().cwiseAbs2()).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("a long step gives a fresh GFF draw") {
    Rng rng({23, 0});
    const Field start = Field::constant(op().grid(), 5.0);
    Eigen::MatrixXd coeffs(op().dim(), 10000);
    for (Eigen::Index i = 0; i < coeffs.cols(); ++i) coeffs.col(i) = op().project(step_ou(op(), start, 40.0, rng));
    CHECK(worst_mode_z(coeffs) < 4.0);
  }
}

TEST_CASE("full step with zero potential is the OU step") {
  const SimConfig sim = sim_config(WickPolynomial::zero(), 0.01, 1.0);
  Rng r1({24, 0}), r2({24, 0});
  const Field u = sample_gff(op(), {24, 1});
  CHECK(step_full(op(), u, sim, r1).values() == step_ou(op(), u, 0.01, r2).values());
}

TEST_CASE("deterministic linear evolution") {
  const SimConfig sim = sim_config(WickPolynomial::zero(), 0.01, 0.5, 10);
  const Stepper stepper(op(), sim, Scheme::full);
  Rng rng({25, 0});
  const Eigen::VectorXd a0 = sample_gff_coeffs(op(), rng);
  const Trajectory t = simulate(stepper, sim, a0, [] { return Eigen::VectorXd::Zero(op().dim()); });
  const Eigen::VectorXd exact = (-op().eigenvalues().array() * 0.5).exp().matrix().cwiseProduct(a0);
  CHECK((t.snapshots.col(t.snapshots.cols() - 1) - exact).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("trajectory bookkeeping") {
  const SimConfig sim = sim_config(WickPolynomial::quartic(), 0.001, 0.1, 7);
  const Stepper stepper(op(), sim, Scheme::full);
  Rng rng({26, 0});
  const Trajectory t = simulate(stepper, sim, sample_gff_coeffs(op(), rng), {26, 1});
  CHECK(t.times.size() == static_cast<std::size_t>(100 / 7 + 1));
  CHECK(t.snapshots.cols() == static_cast<Eigen::Index>(t.times.size()));
  for (std::size_t i = 1; i < t.times.size(); ++i) CHECK(t.times[i] > t.times[i - 1]);
  CHECK_FALSE(t.halted);
  CHECK(t.seed == RngSpec{26, 1});
}

TEST_CASE("configuration checks") {
  SimConfig sim = sim_config(WickPolynomial::quartic(), 0.0, 1.0);
  CHECK_THROWS_AS(sim.validate(op()), std::invalid_argument);
  sim.dt = 1e-8;
  sim.t_max = 1.0;
  CHECK_THROWS_AS(sim.validate(op()), std::invalid_argument);
  sim.dt = 0.01;
  sim.record_every = 0;
  CHECK_THROWS_AS(sim.validate(op()), std::invalid_argument);
  sim.record_every = 1;
  CHECK_FALSE(sim.validate(op()).empty());
  sim.dt = 1e-5;
  CHECK(sim.validate(op()).empty());
  CHECK_THROWS_AS(Stepper(op(), sim, Scheme::finite_dim), std::invalid_argument);
}

TEST_CASE("blow-up halts the trajectory") {
  const SimConfig sim = sim_config(WickPolynomial::quartic(), 0.1, 5.0);
  const Stepper stepper(op(), sim, Scheme::full);
  Eigen::VectorXd a0 = Eigen::VectorXd::Zero(op().dim());
  a0[0] = 200.0;
  const Trajectory t = simulate(stepper, sim, a0, {27, 0});
  CHECK(t.halted);
  CHECK(t.halt_time > 0.0);
  CHECK(t.halt_time <= 5.0);
  CHECK(t.times.back() == t.halt_time);
  CHECK((!std::isfinite(t.final_norm) || t.final_norm > kBlowUpNorm));
}

TEST_CASE("finite-dimensional scheme") {
  SimConfig sim = sim_config(WickPolynomial({0.0, 0.3, 0.5, 0.0, 0.25}), 0.001, 0.1);

  SUBCASE("M^2 below lambda_0 leaves only OU dynamics") {
    sim.cfg.M = 0.9;
    const Stepper stepper(op(), sim, Scheme::finite_dim);
    Rng rng({28, 0});
    const Eigen::VectorXd a = sample_gff_coeffs(op(), rng);
    CHECK(stepper.drift(a).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("drift is the gradient of the truncated energy") {
    sim.cfg.M = std::sqrt(op().eigenvalues()[20]);
    const Stepper stepper(op(), sim, Scheme::finite_dim);
    const WickPotential& pot = *stepper.potential();
    Rng rng({29, 0});
    const Eigen::VectorXd a = sample_gff_coeffs(op(), rng);
    const Eigen::VectorXd g = stepper.drift(a);
    const Eigen::Index d = pot.active_modes();
    CHECK(g.tail(op().dim() - d).cwiseAbs().maxCoeff() == 0.0);
    CHECK((g.head(d) - pot.gradient(a)).cwiseAbs().maxCoeff() <= 1e-12);
    const double h = 1e-5;
    for (Eigen::Index n = 0; n < d; ++n) {
      Eigen::VectorXd ap = a, am = a;
      ap[n] += h;
      am[n] -= h;
      CHECK(std::abs((pot.energy(ap) - pot.energy(am)) / (2 * h) - g[n]) <= 1e-8 * std::max(1.0, std::abs(g[n])));
    }
  }
  SUBCASE("high modes evolve as pure OU") {
    sim.cfg.M = std::sqrt(op().eigenvalues()[8]);
    sim.cfg.poly = WickPolynomial::quartic(2.0);
    const Stepper fd(op(), sim, Scheme::finite_dim);
    const Stepper ou(op(), sim, Scheme::ou);
    Rng rng({30, 0});
    const Eigen::VectorXd a = sample_gff_coeffs(op(), rng);
    Rng r1({30, 1}), r2({30, 1});
    const Eigen::VectorXd x = fd.step(a, r1), y = ou.step(a, r2);
    const Eigen::Index d = fd.potential()->active_modes();
    CHECK(x.tail(op().dim() - d) == y.tail(op().dim() - d));
  }
}

TEST_CASE("Da Prato-Debussche splitting") {
  SimConfig sim = sim_config(WickPolynomial::zero(), 0.005, 0.2, 5);

  SUBCASE("w stays zero without a potential") {
    const Stepper stepper(op(), sim, Scheme::full);
    Rng rng({31, 0});
    const Eigen::VectorXd loli0 = sample_gff_coeffs(op(), rng);
    const DpdResult r = solve_dpd(stepper, sim, loli0, loli0, {31, 1});
    CHECK(r.w.snapshots.cwiseAbs().maxCoeff() == 0.0);
    const std::vector<double> psi = energy_monitor(*stepper.potential(), r.w);
    for (double v : psi) CHECK(v == 0.0);
    CHECK(r.u.snapshots == r.loli.snapshots);
  }
  SUBCASE("expanded nonlinearity equals the Wick drift at w + loli") {
    const WickPotential pot(op(), WickPolynomial({0.0, 0.2, -0.4, 0.1, 0.3, 0.0, 0.05}), 4.0);
    Rng rng({32, 0});
    for (int trial = 0; trial < 5; ++trial) {
      const Eigen::VectorXd w = sample_gff_coeffs(op(), rng), loli = sample_gff_coeffs(op(), rng);
      const Eigen::VectorXd direct = pot.gradient(w + loli);
      CHECK((dpd_drift(pot, w, loli) - direct).cwiseAbs().maxCoeff() <= 1e-8 * std::max(1.0, direct.cwiseAbs().maxCoeff()));
    }
  }
  SUBCASE("same step size reproduces the full scheme") {
    sim.cfg.poly = WickPolynomial::quartic();
    const Stepper stepper(op(), sim, Scheme::full);
    Rng rng({33, 0});
    const Eigen::VectorXd u0 = sample_gff_coeffs(op(), rng);
    const DpdResult r = solve_dpd(stepper, sim, u0, sample_gff_coeffs(op(), rng), {33, 1});
    const Trajectory full = simulate(stepper, sim, u0, {33, 1});
    CHECK((r.u.snapshots - full.snapshots).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("energy monitor") {
  SimConfig sim = sim_config(WickPolynomial::quartic(), 0.002, 1.0, 10);
  sim.cfg.M = std::sqrt(op().eigenvalues()[16]);
  const Stepper stepper(op(), sim, Scheme::finite_dim);
  Rng rng({34, 0});
  const Eigen::VectorXd loli0 = sample_gff_coeffs(op(), rng);
  CoupledNoise coarse_path(op(), 0.001, 2, {34, 1});
  const DpdResult r = solve_dpd(stepper, sim, loli0, loli0, [&] { return coarse_path.next(); });
  const std::vector<double> psi = energy_monitor(*stepper.potential(), r.w);
  REQUIRE(psi.size() == r.w.times.size());
  const Eigen::VectorXd mask = sharp_mask(op(), *sim.cfg.M * *sim.cfg.M);
  double prev = -1.0;
  for (std::size_t i = 0; i < psi.size(); ++i) {
    const double accumulated = psi[i] - 0.5 * mask.cwiseProduct(r.w.snapshots.col(static_cast<Eigen::Index>(i))).squaredNorm();
    CHECK(accumulated >= prev - 1e-12);
    prev = accumulated;
  }

  SimConfig half = sim;
  half.dt = 0.001;
  half.record_every = 20;
  const Stepper fine(op(), half, Scheme::finite_dim);
  CoupledNoise fine_path(op(), 0.001, 1, {34, 1});
  const DpdResult r2 = solve_dpd(fine, half, loli0, loli0, [&] { return fine_path.next(); });
  const std::vector<double> psi2 = energy_monitor(*fine.potential(), r2.w);
  const double m1 = *std::max_element(psi.begin(), psi.end());
  const double m2 = *std::max_element(psi2.begin(), psi2.end());
  CHECK(std::isfinite(m1));
  CHECK(m1 / m2 >= 0.5);
  CHECK(m1 / m2 <= 2.0);
  CHECK(xt_norm(op(), r.w, 0.5, 0.1) >= 0.0);
}
