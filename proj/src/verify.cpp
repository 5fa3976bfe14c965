#include "asqe/verify.hpp"

#include "asqe/parallel.hpp"
#include "asqe/potential.hpp"
#include "asqe/stats.hpp"
#include "asqe/wick.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace asqe {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

Eigen::VectorXd log_of(const std::vector<double>& v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = std::log(v[i]);
  return out;
}

Point random_point(Rng& rng) { return {kTwoPi * rng.uniform(), kTwoPi * rng.uniform()}; }

Point shifted(Point x, double d, double theta) {
  return {x.x1 + d * std::cos(theta), x.x2 + d * std::sin(theta)};
}

// Blocks of draws from independent child streams, so the result does not
// depend on the thread count.
constexpr Eigen::Index kBlock = 256;

template <typename Fn>
void for_blocks(Eigen::Index count, int threads, Fn&& fn) {
  const Eigen::Index blocks = (count + kBlock - 1) / kBlock;
  parallel_for(static_cast<std::size_t>(blocks), threads, [&](std::size_t b) {
    const Eigen::Index begin = static_cast<Eigen::Index>(b) * kBlock;
    fn(static_cast<std::uint64_t>(b), begin, std::min(count, begin + kBlock));
  });
}

// Columns gamma_n / sqrt(lambda_n), block b drawn from spec.child(b).
Eigen::MatrixXd gff_draws(const AndersonOperator& op, Eigen::Index count, const RngSpec& spec, int threads) {
  Eigen::MatrixXd out(op.dim(), count);
  for_blocks(count, threads, [&](std::uint64_t b, Eigen::Index begin, Eigen::Index end) {
    Rng rng(spec.child(b));
    for (Eigen::Index i = begin; i < end; ++i) out.col(i) = sample_gff_coeffs(op, rng);
  });
  return out;
}

}  // namespace

CheckCase make_case(std::string name, double measured, double expected, double tolerance, CheckCase::Bound bound) {
  CheckCase c{std::move(name), measured, expected, tolerance, bound, false, {}};
  switch (bound) {
    case CheckCase::Bound::two_sided:
      c.pass = std::abs(measured - expected) <= tolerance;
      break;
    case CheckCase::Bound::at_most:
      c.pass = measured <= expected + tolerance;
      break;
    case CheckCase::Bound::at_least:
      c.pass = measured >= expected - tolerance;
      break;
  }
  if (!std::isfinite(measured)) c.pass = false;
  return c;
}

bool CheckReport::passed() const {
  return std::all_of(cases.begin(), cases.end(), [](const CheckCase& c) { return c.pass; });
}

CheckCase& CheckReport::add(CheckCase c) {
  cases.push_back(std::move(c));
  return cases.back();
}

std::string CheckReport::to_json() const {
  using nlohmann::json;
  auto number = [](double v) -> json { return std::isfinite(v) ? json(v) : json(nullptr); };
  json j;
  j["suite"] = suite;
  j["pass"] = passed();
  j["wall_time_s"] = wall_time_s;
  j["cases"] = json::array();
  for (const auto& c : cases) {
    json jc;
    jc["name"] = c.name;
    jc["measured"] = number(c.measured);
    jc["expected"] = number(c.expected);
    jc["tolerance"] = number(c.tolerance);
    jc["bound"] = c.bound == CheckCase::Bound::two_sided ? "two_sided"
                  : c.bound == CheckCase::Bound::at_most ? "at_most"
                                                         : "at_least";
    jc["pass"] = c.pass;
    if (!c.note.empty()) jc["note"] = c.note;
    j["cases"].push_back(jc);
  }
  j["seeds"] = json::array();
  for (const auto& s : seeds) j["seeds"].push_back({{"master_seed", s.master_seed}, {"stream_id", s.stream_id}});
  j["info"] = json::object();
  for (const auto& [k, v] : info) j["info"][k] = number(v);
  return j.dump(2);
}

// ---------------------------------------------------------------------------

CheckReport check_algebra(const RngSpec& spec, const AlgebraSettings& settings) {
  const auto start = Clock::now();
  CheckReport report;
  report.suite = "algebra";
  report.seeds = {spec};
  const Eigen::Index n = settings.samples;
  if (n < 2) throw std::invalid_argument("check_algebra: need at least two samples");
  report.info["samples"] = static_cast<double>(n);

  Rng rng(spec.child(0));
  const Eigen::ArrayXd X = rng.normals(n).array();
  const Eigen::ArrayXd Z = rng.normals(n).array();
  constexpr int kMax = 4;
  std::vector<Eigen::ArrayXd> HX(kMax + 1);
  for (int k = 0; k <= kMax; ++k) HX[k] = hermite(k, X, 1.0);

  for (double rho : {0.0, 0.5, 1.0}) {
    const Eigen::ArrayXd Y = rho * X + std::sqrt(1.0 - rho * rho) * Z;
    for (int l = 0; l <= kMax; ++l) {
      const Eigen::ArrayXd HY = hermite(l, Y, 1.0);
      for (int k = 0; k <= kMax; ++k) {
        const Eigen::VectorXd prod = (HX[k] * HY).matrix();
        const double expected = k == l ? factorial(k) * std::pow(rho, k) : 0.0;
        report.add(make_case("orthogonality k=" + std::to_string(k) + " l=" + std::to_string(l) + " rho=" + fmt(rho),
                             stats::mean(prod), expected, 3.0 * stats::mean_stderr(prod)));
      }
    }
  }

  const auto gh = stats::gauss_hermite(60);
  for (int k = 1; k <= kMax; ++k) {
    const Eigen::ArrayXd h2 = HX[k].square();
    const Eigen::ArrayXd hq = hermite(k, Eigen::ArrayXd(gh.nodes), 1.0);
    const double exact2 = (gh.weights.array() * hq.square()).sum();
    for (int p : {4, 6}) {
      const Eigen::ArrayXd hp = HX[k].abs().pow(p);
      const double A = hp.mean(), B = h2.mean();
      const double ratio = std::pow(A, 1.0 / p) / std::sqrt(B);
      const double bound = std::pow(p - 1.0, k / 2.0);
      const std::string tag = "k=" + std::to_string(k) + " p=" + std::to_string(p);
      report.add(make_case("chaos bound " + tag, ratio, bound, 0.0, CheckCase::Bound::at_most));
      const double exactp = (gh.weights.array() * hq.abs().pow(p)).sum();
      const double exact_ratio = std::pow(exactp, 1.0 / p) / std::sqrt(exact2);
      report.info["chaos_exact_" + std::to_string(k) + "_" + std::to_string(p)] = exact_ratio;
      report.add(make_case("chaos exact bound " + tag, exact_ratio, bound, 0.0, CheckCase::Bound::at_most));
      report.info["chaos_measured_" + std::to_string(k) + "_" + std::to_string(p)] = ratio;
      // The sample stderr needs E H_k^{2p}; only trusted for low k.
      if (p == 4 && k <= 2) {
        // Delta method for A^{1/p} B^{-1/2}.
        const double gA = ratio / (p * A), gB = -ratio / (2.0 * B);
        const double vA = stats::variance(hp.matrix()), vB = stats::variance(h2.matrix());
        const double cAB = stats::covariance(hp.matrix(), h2.matrix());
        const double se = std::sqrt((gA * gA * vA + gB * gB * vB + 2.0 * gA * gB * cAB) / static_cast<double>(n));
        report.add(make_case("chaos ratio " + tag, ratio, exact_ratio, 3.0 * se));
      }
    }
  }

  Rng prng(spec.child(1));
  for (int k = 0; k <= 8; ++k) {
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const double x = 6.0 * prng.uniform() - 3.0, y = 6.0 * prng.uniform() - 3.0;
      const double direct = hermite(k, x + y, 1.0);
      worst = std::max(worst, std::abs(hermite_binomial(k, x, y) - direct) / std::max(1.0, std::abs(direct)));
    }
    report.add(make_case("binomial identity k=" + std::to_string(k), worst, 0.0, 1e-10, CheckCase::Bound::at_most));
  }
  report.wall_time_s = seconds_since(start);
  return report;
}

// ---------------------------------------------------------------------------

double weyl_slope(const AndersonOperator& op) {
  const Eigen::VectorXd& lam = op.eigenvalues();
  const double lmax = lam[lam.size() - 1];
  std::vector<double> xs, ys;
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    if (lam[i] >= lmax / 10.0 && lam[i] <= lmax / 2.0) {
      xs.push_back(static_cast<double>(i));
      ys.push_back(lam[i]);
    }
  }
  if (xs.size() < 2) throw std::invalid_argument("weyl_slope: spectrum window is too small");
  return stats::linear_fit(Eigen::Map<Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size())),
                           Eigen::Map<Eigen::VectorXd>(ys.data(), static_cast<Eigen::Index>(ys.size())))
      .slope;
}

CheckReport check_spectrum(const AndersonOperator& op_zero, const AndersonOperator& op_sampled) {
  const auto start = Clock::now();
  if (op_zero.xi().values().cwiseAbs().maxCoeff() != 0.0 || op_zero.counterterm() != 0.0) {
    throw std::invalid_argument("check_spectrum: op_zero must have xi = 0 and counterterm 0");
  }
  CheckReport report;
  report.suite = "spectrum";
  if (op_sampled.noise_ref()) report.seeds = {*op_sampled.noise_ref()};

  Eigen::VectorXd lattice = op_zero.basis().laplacian_eigenvalues().array() + 1.0;
  std::sort(lattice.begin(), lattice.end());
  report.add(make_case("zero-noise lattice spectrum max deviation",
                       (op_zero.eigenvalues() - lattice).cwiseAbs().maxCoeff(), 0.0, 1e-10,
                       CheckCase::Bound::at_most));

  const double oracle = 1.0 / std::numbers::pi;
  const double s0 = weyl_slope(op_zero), s1 = weyl_slope(op_sampled);
  report.add(make_case("weyl slope zero noise", s0, oracle, 0.10 * oracle));
  report.add(make_case("weyl slope sampled xi", s1, oracle, 0.15 * oracle));
  report.add(make_case("weyl slope sampled vs zero noise", s1, s0, 0.15 * s0));
  report.info["cutoff_K_zero"] = op_zero.cutoff();
  report.info["cutoff_K_sampled"] = op_sampled.cutoff();
  report.info["lambda_max_sampled"] = op_sampled.eigenvalues()[op_sampled.dim() - 1];
  report.wall_time_s = seconds_since(start);
  return report;
}

// ---------------------------------------------------------------------------

namespace {

// sum_n a_n(x) b_n(y) / lambda_n for matching rows.
Eigen::VectorXd paired_green(const AndersonOperator& op, const Eigen::MatrixXd& left, const Eigen::MatrixXd& right) {
  return ((left.array().rowwise() / op.eigenvalues().transpose().array()) * right.array()).rowwise().sum();
}

}  // namespace

CheckReport check_green(const AndersonOperator& op, const std::vector<double>& N_ladder, const RngSpec& spec,
                        const GreenSettings& settings) {
  const auto start = Clock::now();
  if (N_ladder.size() < 2) throw std::invalid_argument("check_green: need at least two ladder values");
  CheckReport report;
  report.suite = "green";
  report.seeds = {spec};
  Rng rng(spec.child(0));
  const double target = -1.0 / kTwoPi;

  // (a) Scale-adapted sweep: for each N, d = c / N.
  std::vector<double> xs, ys;
  std::vector<Point> bases;
  std::vector<double> thetas;
  for (int b = 0; b < settings.base_points; ++b) {
    bases.push_back(random_point(rng));
    thetas.push_back(kTwoPi * rng.uniform());
  }
  const int S = settings.sweep_points;
  for (double N : N_ladder) {
    std::vector<Point> px, py;
    std::vector<double> ds;
    for (std::size_t b = 0; b < bases.size(); ++b) {
      for (int s = 0; s < S; ++s) {
        const double c = settings.c_min * std::pow(settings.c_max / settings.c_min, S > 1 ? double(s) / (S - 1) : 0.0);
        px.push_back(bases[b]);
        py.push_back(shifted(bases[b], c / N, thetas[b]));
        ds.push_back(c / N);
      }
    }
    const Eigen::VectorXd g = paired_green(op, smoothed_eigenfunctions_at(op, Smoothing::p(N), px),
                                           smoothed_eigenfunctions_at(op, Smoothing::p(N), py));
    for (std::size_t i = 0; i < ds.size(); ++i) {
      xs.push_back(std::log(ds[i] + 1.0 / N));
      ys.push_back(g[static_cast<Eigen::Index>(i)]);
    }

    // Ungated diagnostic: fixed-N slope over an absolute distance sweep.
    std::vector<Point> wx, wy;
    std::vector<double> wl;
    for (std::size_t b = 0; b < bases.size(); ++b) {
      for (int s = 0; s < S; ++s) {
        const double d = 0.02 * std::pow(2.5 / 0.02, double(s) / std::max(S - 1, 1));
        wx.push_back(bases[b]);
        wy.push_back(shifted(bases[b], d, thetas[b]));
        wl.push_back(std::log(d + 1.0 / N));
      }
    }
    const Eigen::VectorXd wg = paired_green(op, smoothed_eigenfunctions_at(op, Smoothing::p(N), wx),
                                            smoothed_eigenfunctions_at(op, Smoothing::p(N), wy));
    report.info["wide_sweep_slope_N" + fmt(N)] =
        stats::linear_fit(Eigen::Map<Eigen::VectorXd>(wl.data(), static_cast<Eigen::Index>(wl.size())), wg).slope;
  }
  const auto fit = stats::linear_fit(Eigen::Map<Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size())),
                                     Eigen::Map<Eigen::VectorXd>(ys.data(), static_cast<Eigen::Index>(ys.size())));
  report.add(make_case("log divergence slope", fit.slope, target, 0.10 * std::abs(target)));
  report.info["log_fit_intercept"] = fit.intercept;
  report.info["log_fit_slope_stderr"] = fit.slope_stderr;
  const Point o{0.0, 0.0}, far{std::numbers::pi, 0.0};
  report.info["lattice_green_at_pi"] = lattice_green(op.cutoff(), o, far);
  report.info["green_at_pi"] = green_function(op, Smoothing::none(), Smoothing::none(), o, far);

  // (b) sup over well-separated pairs of |G_{N1,N1} - G_{N1,2N1}|.
  std::vector<Point> px, py, ax, ay;
  while (static_cast<int>(px.size()) < settings.pairs) {
    const Point x = random_point(rng), y = random_point(rng);
    if (torus_distance(x, y) >= settings.min_pair_distance) {
      px.push_back(x);
      py.push_back(y);
    }
  }
  for (int i = 0; i < settings.pairs; ++i) {
    const Point x = random_point(rng);
    ax.push_back(x);
    ay.push_back(i % 4 == 0 ? x : random_point(rng));
  }
  std::vector<double> sups;
  for (double N1 : N_ladder) {
    const Eigen::MatrixXd lx = smoothed_eigenfunctions_at(op, Smoothing::p(N1), px);
    const Eigen::MatrixXd ly = smoothed_eigenfunctions_at(op, Smoothing::p(N1), py);
    const Eigen::MatrixXd ry = smoothed_eigenfunctions_at(op, Smoothing::p(2.0 * N1), py);
    const double sup = (paired_green(op, lx, ly) - paired_green(op, lx, ry)).cwiseAbs().maxCoeff();
    sups.push_back(sup);
    report.info["cross_sup_N" + fmt(N1)] = sup;
    if (N1 == N_ladder.front()) {
      const double same = (paired_green(op, lx, ly) - paired_green(op, lx, ly)).cwiseAbs().maxCoeff();
      report.add(make_case("equal cutoffs give zero difference", same, 0.0, 0.0));
    }
  }
  const auto sup_fit = stats::linear_fit(log_of(N_ladder), log_of(sups));
  report.add(make_case("cross-cutoff sup log-log slope", sup_fit.slope, 0.0, 0.0, CheckCase::Bound::at_most));

  // (c) chi_M smoothing at fixed N, sup over all pairs.
  const double N = settings.N_fixed > 0.0 ? settings.N_fixed : *std::max_element(N_ladder.begin(), N_ladder.end());
  const double lmax = op.eigenvalues()[op.dim() - 1];
  std::vector<double> msups, mvals;
  for (double M1 : settings.M_ladder) {
    if (4.0 * M1 * M1 > lmax) throw std::invalid_argument("check_green: M ladder exceeds the spectrum");
    const Eigen::MatrixXd lx = smoothed_eigenfunctions_at(op, Smoothing::p_chi(N, M1), ax);
    const Eigen::MatrixXd ly = smoothed_eigenfunctions_at(op, Smoothing::p_chi(N, M1), ay);
    const Eigen::MatrixXd ry = smoothed_eigenfunctions_at(op, Smoothing::p_chi(N, 2.0 * M1), ay);
    const double sup = (paired_green(op, lx, ly) - paired_green(op, lx, ry)).cwiseAbs().maxCoeff();
    msups.push_back(sup);
    mvals.push_back(M1);
    report.info["chi_sup_M" + fmt(M1)] = sup;
  }
  const auto m_fit = stats::linear_fit(log_of(mvals), log_of(msups));
  report.add(make_case("chi_M cross sup log-log slope", m_fit.slope, 0.0, 0.0, CheckCase::Bound::at_most));
  report.info["chi_N"] = N;
  report.wall_time_s = seconds_since(start);
  return report;
}

// ---------------------------------------------------------------------------

double cauchy_k1_oracle(const AndersonOperator& op, double N, double epsilon) {
  const Eigen::VectorXd dw = laplacian_weights(op.basis(), N) - laplacian_weights(op.basis(), 2.0 * N);
  const Eigen::MatrixXd& V = op.eigenvectors();
  const Eigen::MatrixXd B = V.transpose() * dw.asDiagonal() * V;
  const Eigen::ArrayXd lam = op.eigenvalues().array();
  // sum_{n,m} lambda_n^{-eps} B_nm^2 / lambda_m
  return ((B.array().square().colwise() * lam.pow(-epsilon)).rowwise() / lam.transpose()).sum();
}

namespace {

// Wick square of (weighted synthesis of a) minus the variance, in eigen-coordinates.
struct WickSquare {
  const AndersonOperator* op;
  Eigen::MatrixXd W;  // D x D: basis coefficients of P_N chi_M phi_n
  Eigen::VectorXd s2;

  WickSquare(const AndersonOperator& o, double N, std::optional<double> M)
      : op(&o), s2(sigma_field(o, N, M).sigma_sq.values()) {
    Eigen::VectorXd chi = Eigen::VectorXd::Ones(o.dim());
    if (M) chi = spectral_weights(o, SpectralSymbol::chi(), *M);
    W = laplacian_weights(o.basis(), N).asDiagonal() * o.eigenvectors() * chi.asDiagonal();
  }

  Eigen::VectorXd grid_values(const Eigen::VectorXd& a) const {
    const Eigen::VectorXd v = op->basis().synthesize_values(W * a, op->grid().n());
    return (v.array().square() - s2.array()).matrix();
  }
};

double dminus_norm_sq(const AndersonOperator& op, const Eigen::VectorXd& grid_values, double eps) {
  const Eigen::VectorXd c = op.from_basis(op.basis().analyze_values(grid_values, op.grid().n()));
  return (op.eigenvalues().array().pow(-eps) * c.array().square()).sum();
}

}  // namespace

CheckReport check_fields(const AndersonOperator& op, const RngSpec& spec, const FieldSettings& settings,
                         int threads) {
  const auto start = Clock::now();
  CheckReport report;
  report.suite = "fields";
  report.seeds = {spec};
  const Eigen::Index D = op.dim();
  const Eigen::ArrayXd lam = op.eigenvalues().array();

  // (a) covariance of the stochastic convolution at fixed time.
  {
    const Point o{0.0, 0.0};
    const std::vector<Point> ys = {o, {0.5, 0.0}, {1.5, 2.0}, {std::numbers::pi, std::numbers::pi}};
    std::vector<Point> pts = ys;
    pts.push_back(o);
    const Eigen::MatrixXd rows = smoothed_eigenfunctions_at(op, Smoothing::none(), pts);
    const Eigen::MatrixXd A = gff_draws(op, settings.covariance_draws, spec.child(0), threads);
    const Eigen::MatrixXd vals = rows * A;  // points x draws
    const Eigen::Index ox = static_cast<Eigen::Index>(ys.size());
    for (std::size_t i = 0; i < ys.size(); ++i) {
      const Eigen::VectorXd prod =
          (vals.row(ox).array() * vals.row(static_cast<Eigen::Index>(i)).array()).matrix().transpose();
      const double g = green_function(op, Smoothing::none(), Smoothing::none(), o, ys[i]);
      report.add(make_case("covariance d=" + fmt(torus_distance(o, ys[i])), stats::mean(prod), g,
                           3.0 * stats::mean_stderr(prod)));
    }
    report.info["covariance_draws"] = static_cast<double>(settings.covariance_draws);
  }

  // OU stationarity: pooled per-mode statistics at every recorded time.
  {
    const Eigen::Index R = settings.ou_replicas;
    SimConfig sim;
    sim.dt = settings.ou_dt;
    sim.t_max = settings.ou_dt * settings.ou_steps;
    sim.record_every = settings.ou_record_every;
    sim.cfg.poly = WickPolynomial::zero();
    const Stepper stepper(op, sim, Scheme::ou);
    const Eigen::MatrixXd A0 = gff_draws(op, R, spec.child(1), threads);
    const int T = settings.ou_steps / settings.ou_record_every + 1;
    std::vector<Eigen::MatrixXd> at_time(static_cast<std::size_t>(T), Eigen::MatrixXd(D, R));
    parallel_for(static_cast<std::size_t>(R), threads, [&](std::size_t r) {
      const auto i = static_cast<Eigen::Index>(r);
      Rng rng(spec.child(2).child(r));
      Eigen::VectorXd a = A0.col(i);
      at_time[0].col(i) = a;
      for (int s = 1; s <= settings.ou_steps; ++s) {
        a = stepper.step(a, rng);
        if (s % settings.ou_record_every == 0) at_time[static_cast<std::size_t>(s / settings.ou_record_every)].col(i) = a;
      }
    });
    const double var_se = std::sqrt(2.0 / (static_cast<double>(R - 1) * static_cast<double>(D)));
    const double mean_se = 1.0 / std::sqrt(static_cast<double>(D));
    for (int t = 0; t < T; ++t) {
      const Eigen::MatrixXd& S = at_time[static_cast<std::size_t>(t)];
      const Eigen::ArrayXd m = S.rowwise().mean().array();
      const Eigen::ArrayXd v = ((S.colwise() - m.matrix()).array().square().rowwise().sum()) / double(R - 1);
      const double zv = (lam * v - 1.0).mean();
      const double zm = (m * (lam * double(R)).sqrt()).mean();
      const std::string tag = " t=" + fmt(t * settings.ou_record_every * settings.ou_dt);
      report.add(make_case("ou stationarity variance" + tag, zv, 0.0, 3.0 * var_se));
      report.add(make_case("ou stationarity mean" + tag, zm, 0.0, 3.0 * mean_se));
    }
    report.info["ou_replicas"] = static_cast<double>(R);
  }

  // (b) Cauchy statistics along the N ladder (k = 1 exact oracle, k = 2 trend).
  const double eps = settings.epsilon;
  const Eigen::Index C = settings.cauchy_draws;
  const Eigen::MatrixXd A = gff_draws(op, C, spec.child(3), threads);
  {
    std::vector<double> k2_means;
    for (double N : settings.N_ladder) {
      const WickSquare lo(op, N, std::nullopt), hi(op, 2.0 * N, std::nullopt);
      const Eigen::VectorXd dw = laplacian_weights(op.basis(), N) - laplacian_weights(op.basis(), 2.0 * N);
      const Eigen::MatrixXd B = op.eigenvectors().transpose() * dw.asDiagonal() * op.eigenvectors();
      Eigen::VectorXd k1(C), k2(C);
      parallel_for(static_cast<std::size_t>(C), threads, [&](std::size_t j) {
        const auto i = static_cast<Eigen::Index>(j);
        const Eigen::VectorXd c1 = B * A.col(i);
        k1[i] = (lam.pow(-eps) * c1.array().square()).sum();
        k2[i] = dminus_norm_sq(op, lo.grid_values(A.col(i)) - hi.grid_values(A.col(i)), eps);
      });
      const double oracle = cauchy_k1_oracle(op, N, eps);
      report.add(make_case("cauchy k=1 N=" + fmt(N), stats::mean(k1), oracle, 3.0 * stats::mean_stderr(k1)));
      k2_means.push_back(stats::mean(k2));
      report.info["cauchy_k2_N" + fmt(N)] = k2_means.back();
      report.info["cauchy_k2_stderr_N" + fmt(N)] = stats::mean_stderr(k2);
    }
    const auto fit = stats::linear_fit(log_of(settings.N_ladder), log_of(k2_means));
    report.add(make_case("cauchy k=2 log-log slope in N", fit.slope, 0.0, 0.0, CheckCase::Bound::at_most));
    report.info["cauchy_k2_slope_stderr"] = fit.slope_stderr;
  }

  // (c) chi_M-truncated Wick square against the untruncated one, along M.
  {
    const double N = settings.N_for_M;
    const WickSquare full(op, N, std::nullopt);
    std::vector<double> means;
    for (double M : settings.M_ladder) {
      const WickSquare cut(op, N, M);
      Eigen::VectorXd st(C);
      parallel_for(static_cast<std::size_t>(C), threads, [&](std::size_t j) {
        const auto i = static_cast<Eigen::Index>(j);
        st[i] = dminus_norm_sq(op, cut.grid_values(A.col(i)) - full.grid_values(A.col(i)), eps);
      });
      means.push_back(stats::mean(st));
      report.info["chi_wick2_M" + fmt(M)] = means.back();
    }
    const auto fit = stats::linear_fit(log_of(settings.M_ladder), log_of(means));
    report.add(make_case("chi_M wick square log-log slope in M", fit.slope, 0.0, 0.0, CheckCase::Bound::at_most));
  }
  report.info["cauchy_draws"] = static_cast<double>(C);
  report.info["epsilon"] = eps;
  report.wall_time_s = seconds_since(start);
  return report;
}

// ---------------------------------------------------------------------------

CheckReport check_semigroup(const AndersonOperator& op, const RngSpec& spec, const SemigroupSettings& settings) {
  const auto start = Clock::now();
  CheckReport report;
  report.suite = "semigroup";
  report.seeds = {spec};
  const Eigen::ArrayXd lam = op.eigenvalues().array();

  // Half of the fields are white (flat spectrum), half have GFF decay.
  Rng rng(spec.child(0));
  std::vector<Eigen::VectorXd> fields;
  for (int i = 0; i < settings.fields; ++i) {
    Eigen::VectorXd c = rng.normals(op.dim());
    if (i % 2 == 1) c = (c.array() / lam.sqrt()).matrix();
    fields.push_back(c);
  }
  const std::pair<double, double> pairs[] = {{1.0, 0.0}, {1.0, -1.0}, {0.0, -1.0}};
  for (auto [alpha, beta] : pairs) {
    const double a = (alpha - beta) / 2.0;
    const double C = std::pow(a / std::numbers::e, a);
    for (double t : {1e-3, 1e-2, 1e-1}) {
      double worst = 0.0;
      for (const auto& c : fields) {
        const Eigen::VectorXd evolved = ((-t * lam).exp() * c.array()).matrix();
        const double lhs = dH_norm_coeffs(op, evolved, alpha);
        const double rhs = C * std::pow(t, -a) * dH_norm_coeffs(op, c, beta);
        worst = std::max(worst, lhs / rhs);
      }
      report.add(make_case("schauder alpha=" + fmt(alpha) + " beta=" + fmt(beta) + " t=" + fmt(t), worst, 1.0, 0.0,
                           CheckCase::Bound::at_most));
    }
  }
  report.info["fields"] = settings.fields;

  const Field f = Field::from_function(op.grid(), [](Point x) { return std::cos(x.x1); });
  double previous = 0.0;
  for (double N : {2.0, 4.0, 8.0, 16.0}) {
    const Field diff =
        functional_calculus(op, SpectralSymbol::psi(), N, f) - apply_multiplier(f, SpectralSymbol::psi(), N);
    const double v = lp_norm(diff, 2.0);
    report.info["multiplier_difference_N" + fmt(N)] = v;
    if (N > 2.0) {
      report.add(make_case("multiplier difference nonincreasing N=" + fmt(N / 2) + "->" + fmt(N), v, previous,
                           1e-12 * std::max(previous, 1.0), CheckCase::Bound::at_most));
    }
    previous = v;
  }
  report.wall_time_s = seconds_since(start);
  return report;
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd invariance_observables(const WickPotential& potential, const Eigen::MatrixXd& coeffs) {
  const AndersonOperator& op = potential.op();
  const Eigen::Index d = potential.active_modes();
  const Eigen::VectorXd pw = laplacian_weights(op.basis(), potential.N());
  const Eigen::MatrixXd PV = pw.asDiagonal() * op.eigenvectors();
  // int sigma_N^2 = sum_n ||P_N phi_n||^2 / lambda_n; (P_N u)^2 integrates by Parseval.
  const double sigma_integral = (PV.colwise().squaredNorm().transpose().array() / op.eigenvalues().array()).sum();
  Eigen::MatrixXd out(5, coeffs.cols());
  for (Eigen::Index i = 0; i < coeffs.cols(); ++i) {
    const Eigen::VectorXd a = coeffs.col(i);
    out(0, i) = a[1];
    out(1, i) = a[3];
    out(2, i) = (potential.chi().array() * a.head(d).array()).square().sum();
    out(3, i) = (PV * a).squaredNorm() - sigma_integral;
    out(4, i) = potential.energy(a);
  }
  return out;
}

namespace {

// Mean, variance and KS comparisons per observable.
std::vector<CheckCase> compare_laws(const Eigen::MatrixXd& before, const Eigen::MatrixXd& after,
                                    const Eigen::VectorXd& mean_bias, const Eigen::VectorXd& var_bias,
                                    const std::string& prefix) {
  std::vector<CheckCase> out;
  const auto& names = invariance_observable_names();
  const double level = 0.01 / static_cast<double>(names.size());
  for (Eigen::Index j = 0; j < before.rows(); ++j) {
    const Eigen::VectorXd x = before.row(j).transpose(), y = after.row(j).transpose();
    const std::string name = prefix + names[static_cast<std::size_t>(j)];
    const double mse = std::hypot(stats::mean_stderr(x), stats::mean_stderr(y));
    out.push_back(make_case(name + " mean", stats::mean(y) - stats::mean(x), 0.0, 3.0 * mse + mean_bias[j]));
    const double vse = std::hypot(stats::variance_stderr(x), stats::variance_stderr(y));
    out.push_back(
        make_case(name + " variance", stats::variance(y) - stats::variance(x), 0.0, 3.0 * vse + var_bias[j]));
    out.push_back(make_case(name + " ks p-value", stats::ks_two_sample(x, y).p_value, level, 0.0,
                            CheckCase::Bound::at_least));
  }
  return out;
}

struct Evolved {
  Eigen::MatrixXd finals;
  std::vector<RngSpec> halted;
};

Evolved evolve_all(const Stepper& stepper, const SimConfig& sim, const Eigen::MatrixXd& initial,
                   const std::function<NoiseSource(Eigen::Index)>& noise_for, int threads) {
  SimConfig s = sim;
  s.record_every = static_cast<int>(std::max<long>(sim.steps(), 1));
  Evolved out{Eigen::MatrixXd(initial.rows(), initial.cols()), {}};
  std::vector<char> halted(static_cast<std::size_t>(initial.cols()), 0);
  parallel_for(static_cast<std::size_t>(initial.cols()), threads, [&](std::size_t r) {
    const auto i = static_cast<Eigen::Index>(r);
    const Trajectory t = simulate(stepper, s, initial.col(i), noise_for(i));
    out.finals.col(i) = t.snapshots.rightCols(1);
    halted[r] = t.halted;
  });
  for (std::size_t r = 0; r < halted.size(); ++r)
    if (halted[r]) out.halted.push_back({0, r});
  return out;
}

}  // namespace

CheckReport check_invariance(const AndersonOperator& op, const GibbsConfig& cfg, const SimConfig& sim,
                             Eigen::Index n_replicas, const RngSpec& spec, const InvarianceSettings& settings,
                             int threads) {
  const auto start = Clock::now();
  if (!cfg.M) throw std::invalid_argument("check_invariance: requires M (finite-dimensional regime)");
  if (n_replicas < 1000) throw std::invalid_argument("check_invariance: requires at least 1000 replicas");
  cfg.validate(op);
  CheckReport report;
  report.suite = "invariance";
  report.seeds = {spec};

  SimConfig run = sim;
  run.cfg = cfg;
  for (const auto& w : run.validate(op)) report.info["warning: " + w] = 1.0;
  const Stepper stepper(op, run, Scheme::finite_dim);
  const WickPotential& potential = *stepper.potential();

  GibbsConfig init = cfg;
  init.sampler = GibbsConfig::Sampler::pcn;
  init.pcn = settings.pcn;
  const SampleBatch batch = sample_gibbs(potential, init, n_replicas, spec.child(0), threads);
  for (const auto& w : batch.warnings) report.info["warning: " + w] = 1.0;
  if (batch.acceptance_rate) report.info["pcn_acceptance"] = *batch.acceptance_rate;
  report.info["pcn_ess"] = batch.effective_sample_size;

  const RngSpec run_spec = spec.child(1);
  const Evolved main = evolve_all(stepper, run, batch.coeffs, [&](Eigen::Index r) -> NoiseSource {
    auto rng = std::make_shared<Rng>(run_spec.child(static_cast<std::uint64_t>(r)));
    return [&stepper, rng] { return stepper.noise(*rng); };
  }, threads);
  std::string halted_note;
  for (const auto& h : main.halted) halted_note += "replica " + std::to_string(h.stream_id) + " seed " +
                                                    std::to_string(run_spec.child(h.stream_id).stream_id) + "; ";
  auto& blow = report.add(make_case("no blow-up", static_cast<double>(main.halted.size()), 0.0, 0.0));
  blow.note = halted_note;

  // dt bias: dt and dt/2 on shared paths, Richardson allowance 2|m_dt - m_dt/2|.
  const Eigen::Index B = std::min(settings.bias_replicas, n_replicas);
  Eigen::VectorXd mean_bias = Eigen::VectorXd::Zero(5), var_bias = Eigen::VectorXd::Zero(5);
  if (B >= 2) {
    SimConfig half = run;
    half.dt = run.dt / 2.0;
    const Stepper half_stepper(op, half, Scheme::finite_dim);
    const Eigen::MatrixXd start_states = batch.coeffs.leftCols(B);
    const RngSpec bias_spec = spec.child(2);
    auto coupled = [&](int ratio) {
      return [&, ratio](Eigen::Index r) -> NoiseSource {
        auto src = std::make_shared<CoupledNoise>(op, half.dt, ratio, bias_spec.child(static_cast<std::uint64_t>(r)));
        return [src] { return src->next(); };
      };
    };
    const Evolved coarse = evolve_all(stepper, run, start_states, coupled(2), threads);
    const Evolved fine = evolve_all(half_stepper, half, start_states, coupled(1), threads);
    const Eigen::MatrixXd oc = invariance_observables(potential, coarse.finals);
    const Eigen::MatrixXd of = invariance_observables(potential, fine.finals);
    for (Eigen::Index j = 0; j < 5; ++j) {
      mean_bias[j] = 2.0 * std::abs(oc.row(j).mean() - of.row(j).mean());
      var_bias[j] = 2.0 * std::abs(stats::variance(oc.row(j).transpose()) - stats::variance(of.row(j).transpose()));
      report.info["dt_bias_mean_" + invariance_observable_names()[static_cast<std::size_t>(j)]] = mean_bias[j];
      report.info["dt_bias_variance_" + invariance_observable_names()[static_cast<std::size_t>(j)]] = var_bias[j];
    }
  }
  report.info["bias_replicas"] = static_cast<double>(B);

  const Eigen::MatrixXd before = invariance_observables(potential, batch.coeffs);
  const Eigen::MatrixXd after = invariance_observables(potential, main.finals);
  for (auto& c : compare_laws(before, after, mean_bias, var_bias, "")) report.add(std::move(c));

  if (settings.run_control) {
    GibbsConfig strong = cfg;
    std::vector<double> a = cfg.poly.a();
    a.resize(std::max<std::size_t>(a.size(), 5), 0.0);
    a[4] = settings.control_a4;
    strong.poly = WickPolynomial(a);
    SimConfig crun = run;
    crun.cfg = strong;
    const Stepper cstepper(op, crun, Scheme::finite_dim);
    const Eigen::Index R = settings.control_replicas;
    const Eigen::MatrixXd gff = gff_draws(op, R, spec.child(3), threads);
    const RngSpec cspec = spec.child(4);
    const Evolved ctrl = evolve_all(cstepper, crun, gff, [&](Eigen::Index r) -> NoiseSource {
      auto rng = std::make_shared<Rng>(cspec.child(static_cast<std::uint64_t>(r)));
      return [&cstepper, rng] { return cstepper.noise(*rng); };
    }, threads);
    const auto cases = compare_laws(invariance_observables(*cstepper.potential(), gff),
                                    invariance_observables(*cstepper.potential(), ctrl.finals),
                                    Eigen::VectorXd::Zero(5), Eigen::VectorXd::Zero(5), "control ");
    const auto failures = std::count_if(cases.begin(), cases.end(), [](const CheckCase& c) { return !c.pass; });
    for (const auto& c : cases) report.info[c.name] = c.measured;
    report.add(make_case("mismatch control fails at least one test", static_cast<double>(failures), 1.0, 0.0,
                         CheckCase::Bound::at_least));
    report.info["control_replicas"] = static_cast<double>(R);
  }
  report.info["replicas"] = static_cast<double>(n_replicas);
  report.info["active_modes"] = static_cast<double>(potential.active_modes());
  report.info["dt"] = run.dt;
  report.info["t_max"] = run.t_max;
  report.wall_time_s = seconds_since(start);
  return report;
}

// ---------------------------------------------------------------------------

CheckReport check_partition(const AndersonOperator& op, const GibbsConfig& cfg, const RngSpec& spec,
                            const PartitionSettings& settings, int threads) {
  const auto start = Clock::now();
  CheckReport report;
  report.suite = "partition";
  report.seeds = {spec};
  std::vector<PartitionEstimate> est;
  for (std::size_t i = 0; i < settings.N_ladder.size(); ++i) {
    GibbsConfig c = cfg;
    c.N = settings.N_ladder[i];
    est.push_back(estimate_partition(op, c, settings.samples, spec.child(i), threads));
    report.info["Z_N" + fmt(c.N)] = est.back().Z;
    report.info["Z_stderr_N" + fmt(c.N)] = est.back().std_error;
  }
  for (std::size_t i = 0; i < est.size(); ++i) {
    for (std::size_t j = i + 1; j < est.size(); ++j) {
      report.add(make_case("Z bands overlap N=" + fmt(settings.N_ladder[i]) + "," + fmt(settings.N_ladder[j]),
                           std::abs(est[i].Z - est[j].Z), 0.0, 3.0 * (est[i].std_error + est[j].std_error),
                           CheckCase::Bound::at_most));
    }
  }
  report.info["samples"] = static_cast<double>(settings.samples);
  report.wall_time_s = seconds_since(start);
  return report;
}

// ---------------------------------------------------------------------------

CheckReport check_dpd(const AndersonOperator& op, const GibbsConfig& cfg, const RngSpec& spec,
                      const DpdSettings& settings, int threads) {
  const auto start = Clock::now();
  CheckReport report;
  report.suite = "dpd";
  report.seeds = {spec};
  if (settings.dt_ladder.size() < 2) throw std::invalid_argument("check_dpd: need at least two step sizes");
  const Scheme scheme = cfg.M ? Scheme::finite_dim : Scheme::full;
  const double finest = *std::min_element(settings.dt_ladder.begin(), settings.dt_ladder.end());
  const double ref_dt = finest / settings.reference_refinement;

  auto sim_at = [&](double dt) {
    SimConfig s;
    s.dt = dt;
    s.t_max = settings.T;
    s.cfg = cfg;
    s.record_every = static_cast<int>(std::max<long>(s.steps(), 1));
    return s;
  };
  auto ratio_of = [&](double dt) {
    const double r = dt / ref_dt;
    if (std::abs(r - std::round(r)) > 1e-9) throw std::invalid_argument("check_dpd: ladder steps must be multiples");
    return static_cast<int>(std::round(r));
  };

  const SimConfig ref_sim = sim_at(ref_dt);
  const Stepper ref_stepper(op, ref_sim, scheme);
  std::vector<SimConfig> sims;
  std::vector<Stepper> steppers;
  for (double dt : settings.dt_ladder) {
    sims.push_back(sim_at(dt));
    steppers.emplace_back(op, sims.back(), scheme);
  }
  const Eigen::Index L = static_cast<Eigen::Index>(settings.dt_ladder.size());
  Eigen::MatrixXd err(settings.replicas, L);
  Eigen::VectorXd same_dt(settings.replicas);
  parallel_for(static_cast<std::size_t>(settings.replicas), threads, [&](std::size_t r) {
    const auto i = static_cast<Eigen::Index>(r);
    Rng init(spec.child(0).child(r));
    const Eigen::VectorXd u0 = sample_gff_coeffs(op, init);
    const RngSpec path = spec.child(1).child(r);
    auto coupled = [&](int ratio) {
      auto src = std::make_shared<CoupledNoise>(op, ref_dt, ratio, path);
      return NoiseSource([src] { return src->next(); });
    };
    const Trajectory ref = simulate(ref_stepper, ref_sim, u0, coupled(1));
    const Eigen::VectorXd u_ref = ref.snapshots.rightCols(1);
    for (Eigen::Index l = 0; l < L; ++l) {
      const int ratio = ratio_of(settings.dt_ladder[static_cast<std::size_t>(l)]);
      const DpdResult d = solve_dpd(steppers[static_cast<std::size_t>(l)], sims[static_cast<std::size_t>(l)], u0, u0,
                                    coupled(ratio));
      err(i, l) = (d.u.snapshots.rightCols(1) - u_ref).norm();
      if (l == 0) {
        const Trajectory full = simulate(steppers[0], sims[0], u0, coupled(ratio));
        same_dt[i] = (d.u.snapshots.rightCols(1) - full.snapshots.rightCols(1)).norm();
      }
    }
  });
  std::vector<double> rms;
  for (Eigen::Index l = 0; l < L; ++l) {
    rms.push_back(std::sqrt(err.col(l).squaredNorm() / static_cast<double>(settings.replicas)));
    report.info["rms_error_dt" + fmt(settings.dt_ladder[static_cast<std::size_t>(l)])] = rms.back();
  }
  const auto fit = stats::linear_fit(log_of(settings.dt_ladder), log_of(rms));
  report.add(make_case("self-convergence order", fit.slope, 1.0, 0.3));
  report.info["order_stderr"] = fit.slope_stderr;
  report.info["same_dt_splitting_vs_full_max"] = same_dt.maxCoeff();
  report.info["reference_dt"] = ref_dt;
  report.info["replicas"] = settings.replicas;
  report.info["T"] = settings.T;
  report.wall_time_s = seconds_since(start);
  return report;
}

}  // namespace asqe
