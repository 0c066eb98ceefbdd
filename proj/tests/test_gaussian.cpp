#include <guot/gaussian.hpp>
#include <guot/linalg.hpp>

#include "support/oracles.hpp"
#include "support/random_instances.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <numbers>

using guot::GaussianMeasure;
using guot::Matrix;
using guot::SymMatrix;
using guot::UotProblem;
using guot::Vector;

namespace {

GaussianMeasure scalar_measure(double mass, double mean, double var) {
  return GaussianMeasure(mass, Vector::Constant(1, mean), SymMatrix(Matrix::Constant(1, 1, var)));
}

SymMatrix diag2(double a, double b) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return SymMatrix(m);
}

}  // namespace

TEST_CASE("GaussianMeasure and UotProblem validate inputs", "[gaussian]") {
  REQUIRE_THROWS_AS(scalar_measure(0.0, 0.0, 1.0), std::domain_error);
  REQUIRE_THROWS_AS(scalar_measure(-1.0, 0.0, 1.0), std::domain_error);
  REQUIRE_THROWS_AS(scalar_measure(std::numeric_limits<double>::infinity(), 0.0, 1.0),
                    std::domain_error);
  REQUIRE_THROWS_AS(GaussianMeasure(1.0, Vector::Zero(2), SymMatrix(Matrix::Identity(3, 3))),
                    guot::DimensionError);
  REQUIRE_THROWS_AS(scalar_measure(1.0, 0.0, -1.0), guot::DefinitenessError);

  const GaussianMeasure g1 = scalar_measure(1.0, 0.0, 1.0);
  const GaussianMeasure g2(1.0, Vector::Zero(2), SymMatrix::identity(2));
  REQUIRE_THROWS_AS(UotProblem(g1, g2, 1.0, 1.0), guot::DimensionError);
  REQUIRE_THROWS_AS(UotProblem(g1, g1, 0.0, 1.0), std::domain_error);
  REQUIRE_THROWS_AS(UotProblem(g1, g1, 1.0, -2.0), std::domain_error);

  const GaussianMeasure heavy = scalar_measure(3.0, 1.0, 2.0);
  REQUIRE(heavy.normalized().mass() == 1.0);
  REQUIRE(heavy.normalized().mean() == heavy.mean());
}

TEST_CASE("gaussian_kl on reference pairs", "[gaussian]") {
  const GaussianMeasure g = scalar_measure(1.0, 0.3, 1.7);
  REQUIRE(guot::gaussian_kl(g, g) == 0.0);

  // KL(N(0,1) | N(0,e)) = (1/e - 1 + 1) / 2 = 1 / (2e).
  const double kl = guot::gaussian_kl(scalar_measure(1.0, 0.0, 1.0),
                                      scalar_measure(1.0, 0.0, std::numbers::e));
  REQUIRE(kl == Catch::Approx(0.5 / std::numbers::e).margin(1e-14));

  // Masses do not enter the probability-law divergence.
  REQUIRE(guot::gaussian_kl(scalar_measure(5.0, 0.0, 1.0),
                            scalar_measure(0.1, 0.0, std::numbers::e)) ==
          Catch::Approx(kl).margin(1e-15));
}

TEST_CASE("gaussian_kl matches direct quadrature", "[gaussian]") {
  for (std::uint64_t stream = 0; stream < 8; ++stream) {
    testing_support::SlotCounter rng(404, stream);
    const double pm = 4.0 * rng.uniform() - 2.0;
    const double pv = 0.3 + 2.0 * rng.uniform();
    const double mm = 4.0 * rng.uniform() - 2.0;
    const double mv = 0.3 + 2.0 * rng.uniform();
    const double expected = oracles::kl_gaussian_1d_quadrature(pm, pv, mm, mv);
    const double got =
        guot::gaussian_kl(scalar_measure(1.0, pm, pv), scalar_measure(1.0, mm, mv));
    REQUIRE(got == Catch::Approx(expected).margin(1e-8));
  }
}

TEST_CASE("bures_sq on reference pairs", "[gaussian]") {
  const SymMatrix p = diag2(1.3, 0.4);
  REQUIRE(guot::bures_sq(p, p) == 0.0);

  // Commuting case reduces to squared differences of singular values:
  // (1-2)^2 + (2-1)^2 = 2.
  REQUIRE(guot::bures_sq(diag2(1.0, 4.0), diag2(4.0, 1.0)) == Catch::Approx(2.0).margin(1e-12));
}

TEST_CASE("bures_sq matches the Procrustes SVD characterization", "[gaussian]") {
  for (std::uint64_t stream = 0; stream < 10; ++stream) {
    testing_support::SlotCounter rng(505, stream);
    const Eigen::Index d = 2 + static_cast<Eigen::Index>(stream % 3);
    const SymMatrix p = testing_support::random_spd(rng, d);
    const SymMatrix q = testing_support::random_spd(rng, d);
    const double expected = oracles::bures_sq_procrustes(p.mat(), q.mat());
    REQUIRE(guot::bures_sq(p, q) == Catch::Approx(expected).margin(1e-8));
  }
}

TEST_CASE("w2_sq_gaussian decomposes into mean shift plus Bures part", "[gaussian]") {
  const GaussianMeasure g = scalar_measure(1.0, 0.7, 0.9);
  REQUIRE(guot::w2_sq_gaussian(g, g) == 0.0);

  // Same covariance, shifted mean: the distance is the squared mean gap.
  const GaussianMeasure a(1.0, Vector::Zero(2), diag2(1.0, 2.0));
  Vector shifted(2);
  shifted << 3.0, 4.0;
  const GaussianMeasure b(1.0, shifted, diag2(1.0, 2.0));
  REQUIRE(guot::w2_sq_gaussian(a, b) == Catch::Approx(25.0).margin(1e-12));

  for (std::uint64_t stream = 0; stream < 6; ++stream) {
    testing_support::SlotCounter rng(606, stream);
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(stream % 3);
    const GaussianMeasure g0 = testing_support::random_measure(rng, d);
    const GaussianMeasure g1 = testing_support::random_measure(rng, d);
    const double expected =
        (g0.mean() - g1.mean()).squaredNorm() + guot::bures_sq(g0.cov(), g1.cov());
    REQUIRE(guot::w2_sq_gaussian(g0, g1) == Catch::Approx(expected).margin(1e-10));
  }
}

TEST_CASE("w2_sq_gaussian is invariant under rotations", "[gaussian]") {
  for (std::uint64_t stream = 0; stream < 6; ++stream) {
    testing_support::SlotCounter rng(707, stream);
    const Eigen::Index d = 2 + static_cast<Eigen::Index>(stream % 3);
    const GaussianMeasure g0 = testing_support::random_measure(rng, d);
    const GaussianMeasure g1 = testing_support::random_measure(rng, d);
    const Matrix r = testing_support::random_orthogonal(rng, d);

    const GaussianMeasure rg0(g0.mass(), r * g0.mean(),
                              guot::symmetrize(r * g0.cov().mat() * r.transpose()));
    const GaussianMeasure rg1(g1.mass(), r * g1.mean(),
                              guot::symmetrize(r * g1.cov().mat() * r.transpose()));
    const double base = guot::w2_sq_gaussian(g0, g1);
    REQUIRE(guot::w2_sq_gaussian(rg0, rg1) ==
            Catch::Approx(base).margin(1e-10 * (1.0 + base)));
  }
}

TEST_CASE("sqrt of bures_sq satisfies the triangle inequality", "[gaussian]") {
  for (std::uint64_t stream = 0; stream < 10; ++stream) {
    testing_support::SlotCounter rng(808, stream);
    const Eigen::Index d = 2 + static_cast<Eigen::Index>(stream % 3);
    const SymMatrix p = testing_support::random_spd(rng, d);
    const SymMatrix q = testing_support::random_spd(rng, d);
    const SymMatrix s = testing_support::random_spd(rng, d);
    const double dpq = std::sqrt(guot::bures_sq(p, q));
    const double dps = std::sqrt(guot::bures_sq(p, s));
    const double dsq = std::sqrt(guot::bures_sq(s, q));
    REQUIRE(dpq <= dps + dsq + 1e-10);
  }
}

TEST_CASE("gaussian_kl is nonnegative and vanishes only on equal laws", "[gaussian]") {
  for (std::uint64_t stream = 0; stream < 50; ++stream) {
    testing_support::SlotCounter rng(909, stream);
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(stream % 4);
    const GaussianMeasure g0 = testing_support::random_measure(rng, d);
    const GaussianMeasure g1 = testing_support::random_measure(rng, d);
    const double kl = guot::gaussian_kl(g0, g1);
    REQUIRE(kl >= 0.0);
    // Distinct random draws give distinct laws, so the divergence is positive.
    REQUIRE(kl > 1e-6);
    // Identical arguments cancel only to roundoff in the trace and logdet terms.
    REQUIRE(guot::gaussian_kl(g0, g0) <= 1e-12);
  }
}

TEST_CASE("monge_map on reference pairs", "[gaussian]") {
  const SymMatrix p = diag2(1.5, 0.6);
  REQUIRE((guot::monge_map(p, p).mat() - Matrix::Identity(2, 2)).norm() < 1e-12);

  const SymMatrix one(Matrix::Constant(1, 1, 1.0));
  const SymMatrix four(Matrix::Constant(1, 1, 4.0));
  REQUIRE(guot::monge_map(one, four)(0, 0) == Catch::Approx(2.0).margin(1e-14));

  for (std::uint64_t stream = 0; stream < 6; ++stream) {
    testing_support::SlotCounter rng(111, stream);
    const Eigen::Index d = 2 + static_cast<Eigen::Index>(stream % 3);
    const SymMatrix a = testing_support::random_spd(rng, d);
    const SymMatrix b = testing_support::random_spd(rng, d);
    const SymMatrix l = guot::monge_map(a, b);
    REQUIRE((l.mat() * a.mat() * l.mat() - b.mat()).norm() < 1e-10 * (1.0 + b.mat().norm()));
    REQUIRE((guot::monge_map(b, a).mat() * l.mat() - Matrix::Identity(d, d)).norm() < 1e-10);
  }
}

TEST_CASE("monge_map pushes samples onto the target law", "[gaussian]") {
  const Eigen::Index d = 2;
  testing_support::SlotCounter rng(222, 0);
  const GaussianMeasure src(1.0, testing_support::random_mean(rng, d),
                            testing_support::random_spd(rng, d));
  const GaussianMeasure dst(1.0, testing_support::random_mean(rng, d),
                            testing_support::random_spd(rng, d));
  const SymMatrix l = guot::monge_map(src.cov(), dst.cov());
  const SymMatrix src_root = guot::sqrt_spd(src.cov());

  const int n = 10000;
  Matrix samples(d, n);
  for (int k = 0; k < n; ++k) {
    Vector z = guot::rng::standard_normal(333, static_cast<std::uint64_t>(k), d);
    Vector x = src.mean() + src_root.mat() * z;
    samples.col(k) = dst.mean() + l.mat() * (x - src.mean());
  }
  const Vector sample_mean = samples.rowwise().mean();
  Matrix centered = samples.colwise() - sample_mean;
  const Matrix sample_cov = centered * centered.transpose() / static_cast<double>(n - 1);

  const Matrix& q = dst.cov().mat();
  for (Eigen::Index i = 0; i < d; ++i) {
    const double se_mean = std::sqrt(q(i, i) / n);
    REQUIRE(std::abs(sample_mean(i) - dst.mean()(i)) < 5.0 * se_mean);
    for (Eigen::Index j = 0; j < d; ++j) {
      const double se_cov = std::sqrt((q(i, i) * q(j, j) + q(i, j) * q(i, j)) / n);
      REQUIRE(std::abs(sample_cov(i, j) - q(i, j)) < 5.0 * se_cov);
    }
  }
}

TEST_CASE("mass_kl_split on reference values", "[gaussian]") {
  REQUIRE(guot::mass_kl_split(2.0, 0.0, 2.0) == Catch::Approx(0.0).margin(1e-15));
  REQUIRE_THROWS_AS(guot::mass_kl_split(0.0, 0.0, 1.0), std::domain_error);
  REQUIRE_THROWS_AS(guot::mass_kl_split(1.0, 0.0, -1.0), std::domain_error);

  // KL(0.5 N(0,1) | 2 N(0,1)) = 0.5 log(1/4) - 0.5 + 2 by the scalar formula;
  // the quadrature oracle integrates the generalized divergence directly.
  const double split = guot::mass_kl_split(0.5, 0.0, 2.0);
  REQUIRE(split == Catch::Approx(0.5 * std::log(0.25) - 0.5 + 2.0).margin(1e-14));
  const double quad = oracles::kl_generalized_1d_quadrature(0.5, 0.0, 1.0, 2.0, 0.0, 1.0);
  REQUIRE(split == Catch::Approx(quad).margin(1e-8));
}

TEST_CASE("mass_kl_split matches generalized quadrature with shape mismatch", "[gaussian]") {
  const double rho_mass = 0.7, rm = 0.4, rv = 1.3;
  const double eta_mass = 1.6, em = -0.2, ev = 0.8;
  const double unit_kl = guot::gaussian_kl(scalar_measure(1.0, rm, rv),
                                           scalar_measure(1.0, em, ev));
  const double split = guot::mass_kl_split(rho_mass, unit_kl, eta_mass);
  const double quad =
      oracles::kl_generalized_1d_quadrature(rho_mass, rm, rv, eta_mass, em, ev);
  REQUIRE(split == Catch::Approx(quad).margin(1e-8));
}

TEST_CASE("log_density normalization and mass scaling", "[gaussian]") {
  const GaussianMeasure std3(1.0, Vector::Zero(3), SymMatrix::identity(3));
  REQUIRE(guot::log_density(std3, Vector::Zero(3)) ==
          Catch::Approx(-1.5 * guot::kLogTwoPi).margin(1e-14));

  const GaussianMeasure g = scalar_measure(1.0, 0.4, 1.9);
  const GaussianMeasure g2 = scalar_measure(2.0, 0.4, 1.9);
  const Vector x = Vector::Constant(1, -0.3);
  REQUIRE(guot::log_density(g2, x) - guot::log_density(g, x) ==
          Catch::Approx(std::log(2.0)).margin(1e-14));

  const GaussianMeasure heavy = scalar_measure(1.7, -0.6, 2.4);
  const double mass = oracles::density_mass_quadrature(
      [&](double t) { return guot::log_density(heavy, Vector::Constant(1, t)); }, -0.6,
      std::sqrt(2.4));
  REQUIRE(mass == Catch::Approx(1.7).margin(1e-8));
}
