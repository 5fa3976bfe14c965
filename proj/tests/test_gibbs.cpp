#include <doctest.h>

#include "asqe/gibbs.hpp"
#include "asqe/noise.hpp"
#include "asqe/potential.hpp"
#include "asqe/stats.hpp"

#include <cmath>
#include <numbers>

using namespace asqe;

namespace {

const AndersonOperator& op() {
  static const AndersonOperator o =
      build_operator(sample_spatial_white_noise(TorusGrid(16), {2024, 0}), 4, Counterterm::automatic());
  return o;
}

GibbsConfig config(WickPolynomial poly, double N = 4.0) {
  GibbsConfig cfg;
  cfg.poly = std::move(poly);
  cfg.N = N;
  return cfg;
}

struct Weighted {
  double mean;
  double se;
};

Weighted weighted_mean(const Eigen::VectorXd& x, const Eigen::VectorXd& w, double ess) {
  const double m = x.dot(w) / w.sum();
  const double v = (x.array() - m).square().matrix().dot(w) / w.sum();
  return {m, std::sqrt(v / ess)};
}

}  // namespace

TEST_CASE("GFF law") {
  const int draws = 10000;
  const double eps = 0.5;
  Eigen::VectorXd first(draws), norm(draws), two_point(draws);
  const Point x{0.3, 0.2}, y{1.4, 2.9};
  const Eigen::VectorXd bx = op().from_basis(op().basis().basis_at(x));
  const Eigen::VectorXd by = op().from_basis(op().basis().basis_at(y));
  Rng rng({17, 0});
  for (int i = 0; i < draws; ++i) {
    const Eigen::VectorXd a = sample_gff_coeffs(op(), rng);
    first[i] = a[0];
    norm[i] = dH_norm_coeffs(op(), a, -eps) * dH_norm_coeffs(op(), a, -eps);
    two_point[i] = a.dot(bx) * a.dot(by);
  }
  CHECK(std::abs(stats::variance(first) - 1.0) <= 3.0 * stats::variance_stderr(first));
  const double exact = op().eigenvalues().array().pow(-1.0 - eps).sum();
  CHECK(std::abs(stats::mean(norm) - exact) <= 3.0 * stats::mean_stderr(norm));
  const double g = green_function(op(), Smoothing::none(), Smoothing::none(), x, y);
  CHECK(std::abs(stats::mean(two_point) - g) <= 3.0 * stats::mean_stderr(two_point));

  const Field u = sample_gff(op(), {3, 3});
  CHECK(u.values() == sample_gff(op(), {3, 3}).values());
}

TEST_CASE("energy") {
  const Field u = sample_gff(op(), {1, 2});
  CHECK(energy(op(), config(WickPolynomial::zero()), u) == 0.0);
  CHECK(energy(op(), config(WickPolynomial({0.3})), u) == doctest::Approx(0.3 * kTorusArea).epsilon(1e-12));

  const WickPotential pot(op(), WickPolynomial::quartic(), 4.0);
  Rng rng({2, 0});
  Eigen::VectorXd e(5000);
  for (Eigen::Index i = 0; i < e.size(); ++i) e[i] = pot.energy(sample_gff_coeffs(op(), rng));
  CHECK(std::abs(stats::mean(e)) <= 3.0 * stats::mean_stderr(e));

  // The field-level helper agrees with the coefficient-level potential.
  const Eigen::VectorXd a = op().project(u);
  CHECK(energy(op(), config(WickPolynomial::quartic()), u) == doctest::Approx(pot.energy(a)).epsilon(1e-10));
}

TEST_CASE("energy gradient matches finite differences") {
  GibbsConfig cfg = config(WickPolynomial({0.0, 0.4, 0.5, 0.0, 0.25}), 4.0);
  cfg.M = std::sqrt(op().eigenvalues()[20]);
  const WickPotential pot(op(), cfg.poly, cfg.N, cfg.M);
  Rng rng({4, 4});
  const Eigen::VectorXd a = sample_gff_coeffs(op(), rng);
  const Eigen::VectorXd grad = pot.gradient(a);
  REQUIRE(grad.size() == pot.active_modes());
  const double h = 1e-5;
  for (Eigen::Index n = 0; n < pot.active_modes(); ++n) {
    Eigen::VectorXd ap = a, am = a;
    ap[n] += h;
    am[n] -= h;
    const double fd = (pot.energy(ap) - pot.energy(am)) / (2 * h);
    CHECK(std::abs(fd - grad[n]) <= 1e-6 * std::max(1.0, std::abs(grad[n])));
  }
}

TEST_CASE("energy ignores modes beyond M") {
  GibbsConfig cfg = config(WickPolynomial::quartic());
  cfg.M = std::sqrt(op().eigenvalues()[10]);
  const WickPotential pot(op(), cfg.poly, cfg.N, cfg.M);
  Rng rng({5, 5});
  Eigen::VectorXd a = sample_gff_coeffs(op(), rng);
  const double e0 = pot.energy(a);
  a.tail(op().dim() - pot.active_modes()).setRandom();
  CHECK(pot.energy(a) == e0);
  CHECK(pot.energy(a.head(pot.active_modes())) == e0);
}

TEST_CASE("partition function") {
  auto zero = estimate_partition(op(), config(WickPolynomial::zero()), 100, {1, 1});
  CHECK(zero.Z == 1.0);
  CHECK(zero.std_error == 0.0);
  auto c = estimate_partition(op(), config(WickPolynomial({0.05})), 100, {1, 1});
  CHECK(c.Z == doctest::Approx(std::exp(-0.05 * kTorusArea)).epsilon(1e-14));
  CHECK(c.std_error == 0.0);
  CHECK_THROWS_AS(estimate_partition(op(), config(WickPolynomial::zero()), 99, {1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(estimate_partition(op(), config(WickPolynomial({-20.0})), 100, {1, 1}), NumericalFailure);

  const auto q = estimate_partition(op(), config(WickPolynomial::quartic()), 2000, {1, 1}, 2);
  CHECK(q.Z > 0.0);
  CHECK(q.std_error > 0.0);
  CHECK(estimate_partition(op(), config(WickPolynomial::quartic()), 2000, {1, 1}, 1).Z == q.Z);
}

TEST_CASE("config validation") {
  GibbsConfig cfg;
  cfg.pcn.beta = 0.0;
  CHECK_THROWS_AS(cfg.validate(op()), std::invalid_argument);
  cfg.pcn.beta = 0.5;
  cfg.N = 0.5;
  CHECK_THROWS_AS(cfg.validate(op()), std::invalid_argument);
  cfg.N = 4.0;
  cfg.M = 100.0;
  CHECK_THROWS_AS(cfg.validate(op()), std::invalid_argument);
}

TEST_CASE("pCN with zero potential samples the GFF") {
  GibbsConfig cfg = config(WickPolynomial::zero());
  cfg.pcn = {0.5, 100, 5, 4};
  const SampleBatch batch = sample_gibbs(op(), cfg, 4000, {9, 0});
  REQUIRE(batch.acceptance_rate);
  CHECK(*batch.acceptance_rate == 1.0);
  CHECK(batch.size() == 4000);
  CHECK((batch.weights.array() == 1.0).all());
  for (Eigen::Index n : {Eigen::Index{0}, Eigen::Index{5}}) {
    const Eigen::VectorXd s = batch.coeffs.row(n).transpose() * std::sqrt(op().eigenvalues()[n]);
    CHECK(std::abs(stats::variance(s) - 1.0) <= 3.0 * stats::variance_stderr(s) * 2.0);
  }
}

TEST_CASE("importance weights") {
  GibbsConfig cfg = config(WickPolynomial::quartic());
  cfg.sampler = GibbsConfig::Sampler::importance;
  const SampleBatch batch = sample_gibbs(op(), cfg, 2000, {9, 1});
  CHECK(batch.weights.mean() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK((batch.weights.array() > 0.0).all());
  CHECK(batch.weights.allFinite());
  CHECK(batch.effective_sample_size > 0.0);
  CHECK(batch.effective_sample_size <= 2000.0 + 1e-9);
  CHECK_FALSE(batch.acceptance_rate);
}

TEST_CASE("pCN agrees with importance sampling") {
  GibbsConfig cfg = config(WickPolynomial::quartic(), 4.0);
  cfg.M = std::sqrt(op().eigenvalues()[16]);
  const WickPotential pot(op(), cfg.poly, cfg.N, cfg.M);

  cfg.sampler = GibbsConfig::Sampler::importance;
  const SampleBatch imp = sample_gibbs(pot, cfg, 20000, {10, 0}, 2);
  cfg.sampler = GibbsConfig::Sampler::pcn;
  cfg.pcn = {0.3, 500, 20, 8};
  const SampleBatch mc = sample_gibbs(pot, cfg, 4000, {10, 1}, 2);
  REQUIRE(mc.acceptance_rate);
  CHECK(*mc.acceptance_rate > 0.05);
  CHECK(*mc.acceptance_rate < 0.95);

  auto observable = [&](const SampleBatch& b, int which) {
    Eigen::VectorXd out(b.size());
    for (Eigen::Index i = 0; i < b.size(); ++i) {
      const Eigen::VectorXd a = b.coeffs.col(i);
      out[i] = which == 0 ? pot.energy(a) : which == 1 ? a[0] : a.head(pot.active_modes()).squaredNorm();
    }
    return out;
  };
  for (int which = 0; which < 3; ++which) {
    const Eigen::VectorXd xi = observable(imp, which);
    const Eigen::VectorXd xm = observable(mc, which);
    const Weighted w = weighted_mean(xi, imp.weights, imp.effective_sample_size);
    const double se = std::hypot(w.se, stats::mean_stderr(xm));
    CAPTURE(which);
    CHECK(std::abs(w.mean - stats::mean(xm)) <= 3.0 * se);
  }
}

TEST_CASE("energy differences shrink along the dyadic ladder") {
  const std::vector<double> ladder = {2.0, 4.0, 8.0, 16.0};
  std::vector<WickPotential> pots;
  for (double N : ladder) pots.emplace_back(op(), WickPolynomial::quartic(), N);
  Rng rng({12, 0});
  const int draws = 2000;
  Eigen::MatrixXd diffs(draws, ladder.size() - 1);
  for (int i = 0; i < draws; ++i) {
    const Eigen::VectorXd a = sample_gff_coeffs(op(), rng);
    for (std::size_t j = 0; j + 1 < ladder.size(); ++j) diffs(i, j) = pots[j].energy(a) - pots[j + 1].energy(a);
  }
  for (Eigen::Index j = 1; j < diffs.cols(); ++j) {
    const Eigen::VectorXd prev = diffs.col(j - 1), cur = diffs.col(j);
    CAPTURE(stats::variance(prev));
    CHECK(stats::variance(cur) <= stats::variance(prev) + 3.0 * stats::variance_stderr(prev));
  }
}

TEST_CASE("sampling is independent of the thread count") {
  GibbsConfig cfg = config(WickPolynomial::quartic());
  cfg.pcn = {0.3, 50, 2, 3};
  const SampleBatch a = sample_gibbs(op(), cfg, 300, {14, 0}, 1);
  const SampleBatch b = sample_gibbs(op(), cfg, 300, {14, 0}, 3);
  CHECK(a.coeffs == b.coeffs);
}
