#include "asqe/dynamics.hpp"

#include "asqe/errors.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>

namespace asqe {

std::vector<std::string> SimConfig::validate(const AndersonOperator& op) const {
  if (!(dt > 0.0)) throw std::invalid_argument("dynamics.dt must be > 0");
  if (!(t_max > 0.0)) throw std::invalid_argument("dynamics.t_max must be > 0");
  if (record_every < 1) throw std::invalid_argument("dynamics.record_every must be >= 1");
  if (t_max / dt > 1e7) throw std::invalid_argument("dynamics: t_max/dt exceeds 1e7 steps");
  cfg.validate(op);
  std::vector<std::string> warnings;
  const double lmax = op.eigenvalues()[op.dim() - 1];
  if (dt > 0.1 / lmax) {
    warnings.push_back("dt = " + std::to_string(dt) + " exceeds 0.1/lambda_max = " + std::to_string(0.1 / lmax));
  }
  return warnings;
}

long SimConfig::steps() const { return static_cast<long>(std::floor(t_max / dt + 1e-9)); }

namespace {

Eigen::VectorXd ou_noise_scale(const Eigen::VectorXd& lambda, double dt) {
  return lambda.unaryExpr([dt](double l) { return std::sqrt(-std::expm1(-2.0 * l * dt) / l); });
}

}  // namespace

Stepper::Stepper(const AndersonOperator& op, const SimConfig& sim, Scheme scheme)
    : op_(&op), scheme_(scheme), dt_(sim.dt) {
  if (!(dt_ > 0.0)) throw std::invalid_argument("Stepper: dt must be > 0");
  const Eigen::VectorXd& lambda = op.eigenvalues();
  decay_ = (-lambda.array() * dt_).exp().matrix();
  phi1_ = lambda.unaryExpr([this](double l) { return -std::expm1(-l * dt_) / l; });
  noise_scale_ = ou_noise_scale(lambda, dt_);
  if (scheme == Scheme::finite_dim && !sim.cfg.M) {
    throw std::invalid_argument("Stepper: the finite-dimensional scheme requires measure.M");
  }
  if (scheme != Scheme::ou) {
    const std::optional<double> M = scheme == Scheme::finite_dim ? sim.cfg.M : std::nullopt;
    potential_.emplace(op, sim.cfg.poly, sim.cfg.N, M);
  }
}

Eigen::VectorXd Stepper::noise(Rng& rng) const { return rng.normals(op_->dim()).cwiseProduct(noise_scale_); }

Eigen::VectorXd Stepper::drift(const Eigen::VectorXd& a) const {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(op_->dim());
  if (!potential_ || potential_->poly().is_constant()) return g;
  g.head(potential_->active_modes()) = potential_->gradient(a);
  return g;
}

Eigen::VectorXd Stepper::advance(const Eigen::VectorXd& a, const Eigen::VectorXd& g) const {
  return decay_.cwiseProduct(a) - phi1_.cwiseProduct(g);
}

Eigen::VectorXd Stepper::step(const Eigen::VectorXd& a, const Eigen::VectorXd& eta) const {
  if (!potential_ || potential_->poly().is_constant()) return decay_.cwiseProduct(a) + eta;
  return advance(a, drift(a)) + eta;
}

Eigen::VectorXd aggregate_noise(const AndersonOperator& op, double fine_dt, const std::vector<Eigen::VectorXd>& fine) {
  const auto r = static_cast<int>(fine.size());
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(op.dim());
  for (int i = 0; i < r; ++i) {
    const double lag = fine_dt * (r - 1 - i);
    acc += (-op.eigenvalues().array() * lag).exp().matrix().cwiseProduct(fine[i]);
  }
  return acc;
}

CoupledNoise::CoupledNoise(const AndersonOperator& op, double fine_dt, int ratio, const RngSpec& spec)
    : op_(&op), fine_dt_(fine_dt), ratio_(ratio), rng_(spec), fine_scale_(ou_noise_scale(op.eigenvalues(), fine_dt)) {
  if (ratio < 1) throw std::invalid_argument("CoupledNoise: ratio must be >= 1");
}

Eigen::VectorXd CoupledNoise::next() {
  if (ratio_ == 1) return rng_.normals(op_->dim()).cwiseProduct(fine_scale_);
  std::vector<Eigen::VectorXd> fine;
  fine.reserve(static_cast<std::size_t>(ratio_));
  for (int i = 0; i < ratio_; ++i) fine.push_back(rng_.normals(op_->dim()).cwiseProduct(fine_scale_));
  return aggregate_noise(*op_, fine_dt_, fine);
}

Field init_stationary_convolution(const AndersonOperator& op, Rng& rng) {
  return op.synthesize(sample_gff_coeffs(op, rng));
}

Field step_ou(const AndersonOperator& op, const Field& state, double dt, Rng& rng) {
  SimConfig sim;
  sim.dt = dt;
  const Stepper stepper(op, sim, Scheme::ou);
  return op.synthesize(stepper.step(op.project(state), rng), state.grid());
}

Field step_full(const AndersonOperator& op, const Field& u, const SimConfig& sim, Rng& rng) {
  const Stepper stepper(op, sim, Scheme::full);
  return op.synthesize(stepper.step(op.project(u), rng), u.grid());
}

Field step_finite_dim(const AndersonOperator& op, const Field& u, const SimConfig& sim, Rng& rng) {
  const Stepper stepper(op, sim, Scheme::finite_dim);
  return op.synthesize(stepper.step(op.project(u), rng), u.grid());
}

namespace {

bool blown_up(const Eigen::VectorXd& a) { return !a.allFinite() || a.norm() > kBlowUpNorm; }

struct Recorder {
  Trajectory traj;
  std::vector<Eigen::VectorXd> cols;

  void record(double t, const Eigen::VectorXd& a) {
    traj.times.push_back(t);
    cols.push_back(a);
  }
  Trajectory finish(const Eigen::VectorXd& last) {
    traj.snapshots.resize(last.size(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < cols.size(); ++i) traj.snapshots.col(static_cast<Eigen::Index>(i)) = cols[i];
    traj.final_norm = last.norm();
    return std::move(traj);
  }
};

}  // namespace

Trajectory simulate(const Stepper& stepper, const SimConfig& sim, const Eigen::VectorXd& a0, const RngSpec& spec) {
  auto rng = std::make_shared<Rng>(spec);
  Trajectory t = simulate(stepper, sim, a0, [&stepper, rng] { return stepper.noise(*rng); });
  t.seed = spec;
  return t;
}

Trajectory simulate(const Stepper& stepper, const SimConfig& sim, const Eigen::VectorXd& a0, const NoiseSource& noise) {
  if (a0.size() != stepper.op().dim()) throw std::invalid_argument("simulate: initial state has the wrong length");
  Recorder rec;
  Eigen::VectorXd a = a0;
  rec.record(0.0, a);
  const long steps = sim.steps();
  for (long s = 1; s <= steps; ++s) {
    a = stepper.step(a, noise());
    if (blown_up(a)) {
      rec.traj.halted = true;
      rec.traj.halt_time = static_cast<double>(s) * stepper.dt();
      rec.record(rec.traj.halt_time, a);
      break;
    }
    if (s % sim.record_every == 0) rec.record(static_cast<double>(s) * stepper.dt(), a);
  }
  return rec.finish(a);
}

Eigen::VectorXd dpd_drift(const WickPotential& potential, const Eigen::VectorXd& w, const Eigen::VectorXd& loli) {
  const WickPolynomial& poly = potential.poly();
  const Eigen::Index d = potential.active_modes();
  if (poly.is_constant()) return Eigen::VectorXd::Zero(d);
  const Eigen::ArrayXd y = potential.smoothed_values(w).array();
  const Eigen::ArrayXd l = potential.smoothed_values(loli).array();
  const Eigen::ArrayXd s2 = potential.variance().sigma_sq.values().array();
  const std::vector<double> b = poly.b();
  const int top = static_cast<int>(b.size()) - 1;

  std::vector<Eigen::ArrayXd> wick(static_cast<std::size_t>(top) + 1);
  for (int j = 0; j <= top; ++j) wick[j] = hermite(j, l, s2);
  std::vector<Eigen::ArrayXd> ypow(static_cast<std::size_t>(top) + 1);
  ypow[0] = Eigen::ArrayXd::Ones(y.size());
  for (int j = 1; j <= top; ++j) ypow[j] = ypow[j - 1] * y;

  Eigen::ArrayXd f = Eigen::ArrayXd::Zero(y.size());
  for (int p = 0; p <= top; ++p) {
    if (b[p] == 0.0) continue;
    double binom = 1.0;
    for (int j = 0; j <= p; ++j) {
      f += (b[p] * binom) * ypow[p - j] * wick[j];
      binom = binom * (p - j) / (j + 1);
    }
  }
  return potential.pull_back(f.matrix());
}

DpdResult solve_dpd(const Stepper& stepper, const SimConfig& sim, const Eigen::VectorXd& u0,
                    const Eigen::VectorXd& loli0, const RngSpec& spec) {
  auto rng = std::make_shared<Rng>(spec);
  DpdResult r = solve_dpd(stepper, sim, u0, loli0, [&stepper, rng] { return stepper.noise(*rng); });
  r.u.seed = r.w.seed = r.loli.seed = spec;
  return r;
}

DpdResult solve_dpd(const Stepper& stepper, const SimConfig& sim, const Eigen::VectorXd& u0,
                    const Eigen::VectorXd& loli0, const NoiseSource& noise) {
  if (stepper.scheme() == Scheme::ou || !stepper.potential()) {
    throw std::invalid_argument("solve_dpd: requires the full or finite-dimensional scheme");
  }
  const Eigen::Index D = stepper.op().dim();
  if (u0.size() != D || loli0.size() != D) throw std::invalid_argument("solve_dpd: initial state has the wrong length");
  const WickPotential& potential = *stepper.potential();
  const Eigen::Index d = potential.active_modes();

  Recorder ru, rw, rl;
  Eigen::VectorXd loli = loli0;
  Eigen::VectorXd w = u0 - loli0;
  ru.record(0.0, u0);
  rw.record(0.0, w);
  rl.record(0.0, loli);
  const long steps = sim.steps();
  Eigen::VectorXd g = Eigen::VectorXd::Zero(D);
  for (long s = 1; s <= steps; ++s) {
    g.head(d) = dpd_drift(potential, w, loli);
    w = stepper.advance(w, g);
    loli = stepper.decay().cwiseProduct(loli) + noise();
    const double t = static_cast<double>(s) * stepper.dt();
    if (blown_up(w)) {
      for (auto* r : {&ru, &rw, &rl}) {
        r->traj.halted = true;
        r->traj.halt_time = t;
      }
      ru.record(t, loli + w);
      rw.record(t, w);
      rl.record(t, loli);
      break;
    }
    if (s % sim.record_every == 0) {
      ru.record(t, loli + w);
      rw.record(t, w);
      rl.record(t, loli);
    }
  }
  DpdResult out;
  out.u = ru.finish(loli + w);
  out.w = rw.finish(w);
  out.loli = rl.finish(loli);
  return out;
}

std::vector<double> energy_monitor(const WickPotential& potential, const Trajectory& w) {
  const AndersonOperator& op = potential.op();
  const int two_m = potential.poly().degree();
  std::vector<double> psi;
  psi.reserve(w.times.size());
  if (two_m == 0) {
    for (Eigen::Index i = 0; i < w.snapshots.cols(); ++i) psi.push_back(0.5 * w.snapshots.col(i).squaredNorm());
    return psi;
  }
  const double b_top = potential.poly().b().back();
  const Eigen::VectorXd mask =
      potential.M() ? sharp_mask(op, *potential.M() * *potential.M()) : Eigen::VectorXd::Ones(op.dim());
  const double cell = potential.padded_grid().cell_area();
  double integral = 0.0;
  double prev_rate = 0.0;
  for (Eigen::Index i = 0; i < w.snapshots.cols(); ++i) {
    const Eigen::VectorXd pw = mask.cwiseProduct(w.snapshots.col(i));
    const double rate = cell * potential.smoothed_values(pw).array().abs().pow(two_m).sum();
    if (i > 0) integral += 0.5 * (rate + prev_rate) * (w.times[i] - w.times[i - 1]);
    prev_rate = rate;
    psi.push_back(0.5 * pw.squaredNorm() + b_top * integral);
  }
  return psi;
}

double xt_norm(const AndersonOperator& op, const Trajectory& w, double sigma, double eps) {
  double sup = 0.0;
  for (Eigen::Index i = 0; i < w.snapshots.cols(); ++i) {
    const double t = w.times[i];
    const double weight = t > 0.0 ? std::pow(t, 0.5 * (sigma + eps)) : 0.0;
    sup = std::max(sup, weight * dH_norm_coeffs(op, w.snapshots.col(i), sigma));
  }
  return sup;
}

}  // namespace asqe
