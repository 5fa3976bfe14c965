#include <doctest.h>

#include "asqe/anderson.hpp"
#include "asqe/galerkin.hpp"
#include "asqe/noise.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

using namespace asqe;
using std::numbers::pi;

namespace {

const AndersonOperator& zero_op() {
  static const AndersonOperator op = build_operator(Field(TorusGrid(16)), 4, Counterterm::fixed(0.0));
  return op;
}

const AndersonOperator& noisy_op() {
  static const AndersonOperator op =
      build_operator(sample_spatial_white_noise(TorusGrid(16), {2024, 0}), 4, Counterterm::automatic(), RngSpec{2024, 0});
  return op;
}

Field random_field(const TorusGrid& g, std::uint64_t seed) {
  Rng rng({seed, 3});
  return Field(g, rng.normals(g.size()));
}

std::vector<double> shifted_lattice_spectrum(int K) {
  std::vector<double> out;
  for (int a = -K; a <= K; ++a)
    for (int b = -K; b <= K; ++b)
      if (a * a + b * b <= K * K) out.push_back(a * a + b * b + 1.0);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("Galerkin basis") {
  CHECK(lattice_count(2) == 13);
  CHECK(lattice_count(12) == 441);
  const GalerkinBasis basis(3);
  CHECK(basis.dim() == lattice_count(3));
  const TorusGrid g(16);
  Rng rng({1, 1});
  const Eigen::VectorXd c = rng.normals(basis.dim());
  CHECK((basis.analyze(basis.synthesize(c, g)) - c).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((basis.from_table(basis.to_table(c, 16)) - c).cwiseAbs().maxCoeff() < 1e-12);
  const Field s = basis.synthesize(c, g);
  for (Eigen::Index flat : {Eigen::Index{0}, Eigen::Index{77}}) CHECK(basis.basis_at(g.point(flat)).dot(c) == doctest::Approx(s[flat]));
  CHECK(basis.basis_at({0.0, 0.0})[0] == doctest::Approx(1.0 / (2 * pi)));
}

TEST_CASE("zero-noise spectrum is the shifted lattice spectrum") {
  const AndersonOperator op = build_operator(Field(TorusGrid(8)), 2, Counterterm::fixed(0.0));
  const std::vector<double> expected = {1, 2, 2, 2, 2, 3, 3, 3, 3, 5, 5, 5, 5};
  REQUIRE(op.dim() == 13);
  for (Eigen::Index i = 0; i < 13; ++i) CHECK(std::abs(op.eigenvalues()[i] - expected[i]) <= 1e-10);
  CHECK(op.raw_eigenvalues()[0] == doctest::Approx(0.0).epsilon(1e-12));

  const auto lattice = shifted_lattice_spectrum(4);
  REQUIRE(zero_op().dim() == static_cast<Eigen::Index>(lattice.size()));
  for (std::size_t i = 0; i < lattice.size(); ++i) CHECK(std::abs(zero_op().eigenvalues()[i] - lattice[i]) <= 1e-10);
}

TEST_CASE("automatic counterterm") {
  double direct = 0.0;
  for (int a = -10; a <= 10; ++a)
    for (int b = -10; b <= 10; ++b)
      if (a * a + b * b <= 100 && (a || b)) direct += 1.0 / (a * a + b * b);
  direct /= 4 * pi * pi;
  CHECK(lattice_counterterm(10) == doctest::Approx(direct).epsilon(1e-14));
  CHECK(lattice_counterterm(10) == doctest::Approx(0.4326165171).epsilon(1e-9));
  CHECK(noisy_op().counterterm() == doctest::Approx(lattice_counterterm(4)).epsilon(1e-15));
}

TEST_CASE("shift, reproducibility and eigen-residual") {
  const AndersonOperator& op = noisy_op();
  CHECK(op.eigenvalues()[0] == 1.0);
  for (Eigen::Index i = 1; i < op.dim(); ++i) CHECK(op.eigenvalues()[i] >= op.eigenvalues()[i - 1]);

  const AndersonOperator again =
      build_operator(sample_spatial_white_noise(TorusGrid(16), {2024, 0}), 4, Counterterm::automatic());
  CHECK(again.eigenvalues() == op.eigenvalues());
  CHECK(again.eigenvectors() == op.eigenvectors());

  const Eigen::MatrixXd A = assemble_galerkin_matrix(op.basis(), op.xi(), op.counterterm());
  CHECK((A - A.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
  for (Eigen::Index n = 0; n < op.dim(); ++n) {
    const Eigen::VectorXd v = op.eigenvectors().col(n);
    CHECK((A * v - op.raw_eigenvalues()[n] * v).norm() <= 1e-8 * v.norm());
  }
}

TEST_CASE("eigenfunctions are orthonormal on the grid") {
  const AndersonOperator& op = noisy_op();
  const Eigen::Index D = op.dim();
  Eigen::MatrixXd samples(op.grid().size(), D);
  for (Eigen::Index n = 0; n < D; ++n) samples.col(n) = op.eigenfunction(n).values();
  const Eigen::MatrixXd gram = op.grid().cell_area() * samples.transpose() * samples;
  CHECK((gram - Eigen::MatrixXd::Identity(D, D)).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("build_operator preconditions") {
  CHECK_THROWS_AS(build_operator(Field(TorusGrid(16)), 6), std::invalid_argument);
  CHECK_THROWS_AS(build_operator(Field(TorusGrid(16)), 0), std::invalid_argument);
}

TEST_CASE("functional calculus and projectors") {
  const AndersonOperator& op = noisy_op();
  const Field f = random_field(op.grid(), 1);
  const Field proj = functional_calculus(op, SpectralSymbol::identity(), 1.0, f);

  SUBCASE("heat(0) is the Galerkin projection") {
    const Field h0 = functional_calculus(op, SpectralSymbol::heat(0.0), 1.0, f);
    CHECK((h0.values() - proj.values()).cwiseAbs().maxCoeff() < 1e-12);
    const Eigen::VectorXd basis_proj = op.basis().analyze(f);
    CHECK((op.basis().analyze(proj) - basis_proj).cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("heat on an eigenfunction") {
    const double t = 0.2;
    const Field phi3 = op.eigenfunction(3);
    const Field out = functional_calculus(op, SpectralSymbol::heat(t), 1.0, phi3);
    CHECK((out.values() - std::exp(-t * op.eigenvalues()[3]) * phi3.values()).cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("chi_M vanishes when M^2 <= lambda_0") {
    const Field out = functional_calculus(op, SpectralSymbol::chi(), 1.0, f);
    CHECK(out.values().cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("sharp projector") {
    CHECK(sharp_projector(op, 0.5, f).values().cwiseAbs().maxCoeff() == 0.0);
    const Field full = sharp_projector(op, op.eigenvalues().maxCoeff(), f);
    CHECK((full.values() - proj.values()).cwiseAbs().maxCoeff() < 1e-12);
    const double thr = op.eigenvalues()[op.dim() / 2];
    const Field once = sharp_projector(op, thr, f);
    const Field twice = sharp_projector(op, thr, once);
    CHECK((once.values() - twice.values()).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("chi_M = Pi_{M^2} chi_M") {
    const double M = std::sqrt(op.eigenvalues()[op.dim() / 3]);
    const Field c = functional_calculus(op, SpectralSymbol::chi(), M, f);
    const Field pc = sharp_projector(op, M * M, c);
    CHECK((c.values() - pc.values()).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("Green function") {
  SUBCASE("zero noise matches the lattice sum") {
    const AndersonOperator& op = zero_op();
    const Point x{0.4, 1.1}, y{2.5, 5.9};
    double direct = 0.0;
    for (int a = -4; a <= 4; ++a)
      for (int b = -4; b <= 4; ++b)
        if (a * a + b * b <= 16) direct += std::cos(a * (x.x1 - y.x1) + b * (x.x2 - y.x2)) / (a * a + b * b + 1.0);
    direct /= 4 * pi * pi;
    CHECK(std::abs(green_function(op, Smoothing::none(), Smoothing::none(), x, y) - direct) < 1e-12);
    CHECK(std::abs(lattice_green(4, x, y) - direct) < 1e-12);
  }
  SUBCASE("symmetry") {
    const AndersonOperator& op = noisy_op();
    const Point x{0.4, 1.1}, y{2.5, 5.9};
    for (const Smoothing& s : {Smoothing::none(), Smoothing::p(3.0), Smoothing::chi(4.0), Smoothing::p_chi(3.0, 4.0)})
      CHECK(std::abs(green_function(op, s, s, x, y) - green_function(op, s, s, y, x)) <= 1e-12);
    const double gxy = green_function(op, Smoothing::p(2.0), Smoothing::chi(3.0), x, y);
    const double gyx = green_function(op, Smoothing::chi(3.0), Smoothing::p(2.0), y, x);
    CHECK(std::abs(gxy - gyx) <= 1e-12);
  }
}

TEST_CASE("variance field") {
  SUBCASE("zero noise is translation invariant") {
    const VarianceField v = sigma_field(zero_op(), 2.0);
    const double mean = v.sigma_sq.values().mean();
    CHECK((v.sigma_sq.values().array() - mean).abs().maxCoeff() <= 1e-8 * mean);
  }
  SUBCASE("agrees with the diagonal Green function and direct summation") {
    const AndersonOperator& op = noisy_op();
    const VarianceField v = sigma_field(op, 3.0);
    CHECK(v.sigma_sq.values().minCoeff() >= 0.0);
    const GalerkinBasis& basis = op.basis();
    const Eigen::VectorXd pw = laplacian_weights(basis, 3.0);
    for (Eigen::Index flat : {Eigen::Index{0}, Eigen::Index{37}, Eigen::Index{200}}) {
      const Point x = op.grid().point(flat);
      CHECK(std::abs(v.sigma_sq[flat] - green_function(op, Smoothing::p(3.0), Smoothing::p(3.0), x, x)) <= 1e-10);
      const Eigen::VectorXd bx = basis.basis_at(x).cwiseProduct(pw);
      double direct = 0.0;
      for (Eigen::Index n = 0; n < op.dim(); ++n) direct += std::pow(bx.dot(op.eigenvectors().col(n)), 2) / op.eigenvalues()[n];
      CHECK(std::abs(v.sigma_sq[flat] - direct) <= 1e-8);
    }
    CHECK_THROWS_AS(sigma_field(op, 0.5), std::invalid_argument);
  }
}

TEST_CASE("D^sigma norms") {
  const AndersonOperator& op = noisy_op();
  const Field proj = functional_calculus(op, SpectralSymbol::identity(), 1.0, random_field(op.grid(), 2));
  Field sq = proj;
  sq.values() = proj.values().cwiseAbs2();
  CHECK(std::abs(dH_norm(op, proj, 0.0) - std::sqrt(integrate(sq))) <= 1e-10);
  CHECK(dH_norm(op, op.eigenfunction(5), 2.0) == doctest::Approx(op.eigenvalues()[5]).epsilon(1e-10));
  CHECK(dH_norm(op, proj, -1.0) <= dH_norm(op, proj, 0.0));
  CHECK(dH_norm(op, proj, 0.0) <= dH_norm(op, proj, 1.0));
}

TEST_CASE("spectral Schauder inequality") {
  const AndersonOperator& op = noisy_op();
  const std::vector<std::pair<double, double>> pairs = {{1.0, 0.0}, {1.0, -1.0}, {0.0, -1.0}};
  for (auto [alpha, beta] : pairs) {
    const double h = 0.5 * (alpha - beta);
    const double C = std::pow(h / std::exp(1.0), h);
    for (int seed = 0; seed < 5; ++seed) {
      const Field f = random_field(op.grid(), 100 + seed);
      for (double t : {0.01, 0.1, 1.0}) {
        const Field heat = functional_calculus(op, SpectralSymbol::heat(t), 1.0, f);
        CHECK(dH_norm(op, heat, alpha) <= C * std::pow(t, -h) * dH_norm(op, f, beta) * (1 + 1e-12));
      }
    }
  }
}
