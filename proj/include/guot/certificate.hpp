#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <utility>

#include "guot/closed_form.hpp"
#include "guot/gaussian.hpp"
#include "guot/linalg.hpp"
#include "guot/rng.hpp"

namespace guot {

/// Quadratic function stored in centered form:
///   f(x) = (x - center)^T quad (x - center) + 2 lin . (x - center) + constant.
/// The centered form is kept throughout; expanding into monomial coefficients
/// loses accuracy at large ||x||.
struct QuadraticPotential {
  SymMatrix quad;
  Vector lin;
  double constant;
  Vector center;

  double operator()(const Vector& x) const {
    if (x.size() != center.size()) {
      throw DimensionError("QuadraticPotential: point has dimension " +
                           std::to_string(x.size()) + ", expected " +
                           std::to_string(center.size()));
    }
    Vector z = x - center;
    return z.dot(quad.mat() * z) + 2.0 * lin.dot(z) + constant;
  }
};

struct DualPotentials {
  QuadraticPotential phi;
  QuadraticPotential psi;
};

/// Optimality potentials: phi is centered at u* with quadratic part I - L*
/// and slope h*, psi at v* with quadratic part I - L*^{-1} and slope -h*.
/// The constants are fixed by the marginal identities
///   e^{-phi/tau0} alpha = M* p*   and   e^{-psi/tau1} beta = M* q*
/// evaluated at the respective centers; c_phi + c_psi = ||h*||^2 then holds
/// as an identity and is reported by certify as a residual.
inline DualPotentials build_potentials(const ClosedFormSolution& sol, const UotProblem& prob) {
  const Eigen::Index d = prob.dim();
  const double tau0 = prob.tau0();
  const double tau1 = prob.tau1();

  GaussianMeasure p_unit(1.0, sol.u_star, sol.P_star);
  GaussianMeasure q_unit(1.0, sol.v_star, sol.Q_star);
  GaussianMeasure mu0 = prob.alpha().normalized();
  GaussianMeasure mu1 = prob.beta().normalized();

  const double log_m = std::log(sol.M_star);
  const double c_phi =
      -tau0 * (log_m - std::log(prob.alpha().mass()) + log_density(p_unit, sol.u_star) -
               log_density(mu0, sol.u_star));
  const double c_psi =
      -tau1 * (log_m - std::log(prob.beta().mass()) + log_density(q_unit, sol.v_star) -
               log_density(mu1, sol.v_star));

  SymMatrix l_inv = inv_spd(sol.map_linear);
  QuadraticPotential phi{SymMatrix(Matrix::Identity(d, d) - sol.map_linear.mat()),
                         sol.h_star, c_phi, sol.u_star};
  QuadraticPotential psi{SymMatrix(Matrix::Identity(d, d) - l_inv.mat()), -sol.h_star,
                         c_psi, sol.v_star};
  return DualPotentials{std::move(phi), std::move(psi)};
}

/// Feasibility margin ||x - y||^2 - phi(x) - psi(y); nonnegative everywhere
/// for valid potentials and zero exactly on the graph y = v* + L*(x - u*).
inline double slack(const QuadraticPotential& phi, const QuadraticPotential& psi,
                    const Vector& x, const Vector& y) {
  if (x.size() != y.size()) {
    throw DimensionError("slack: x and y dimensions differ");
  }
  return (x - y).squaredNorm() - phi(x) - psi(y);
}

namespace detail {

// log of integral exp(-pot(x)/tau) d(measure), evaluated exactly for the
// quadratic exponent. Throws DefinitenessError when the combined exponent
// is not positive definite, i.e. the integral diverges.
inline double log_gaussian_integral(const QuadraticPotential& pot, double tau,
                                    const GaussianMeasure& g) {
  const Eigen::Index d = g.dim();
  SymMatrix prec = inv_spd(g.cov());
  SymMatrix combined = SymMatrix(prec.mat() + (2.0 / tau) * pot.quad.mat());
  const double logdet_combined = logdet_spd(combined);

  Vector b = prec.mat() * g.mean() +
             (2.0 / tau) * (pot.quad.mat() * pot.center - pot.lin);
  const double scalar =
      std::log(g.mass()) -
      0.5 * (static_cast<double>(d) * kLogTwoPi + logdet_spd(g.cov())) -
      0.5 * g.mean().dot(prec.mat() * g.mean()) -
      (1.0 / tau) * (pot.center.dot(pot.quad.mat() * pot.center) -
                     2.0 * pot.lin.dot(pot.center) + pot.constant);

  SymMatrix combined_inv = inv_spd(combined);
  return scalar + 0.5 * b.dot(combined_inv.mat() * b) +
         0.5 * static_cast<double>(d) * kLogTwoPi - 0.5 * logdet_combined;
}

// Precomputed log-density evaluator; avoids refactoring a matrix inverse per
// sample inside certify.
struct LogDensity {
  double log_norm;
  Matrix prec;
  Vector mean;

  explicit LogDensity(const GaussianMeasure& g)
      : log_norm(std::log(g.mass()) -
                 0.5 * (static_cast<double>(g.dim()) * kLogTwoPi + logdet_spd(g.cov()))),
        prec(inv_spd(g.cov()).mat()),
        mean(g.mean()) {}

  double operator()(const Vector& x) const {
    Vector dx = x - mean;
    return log_norm - 0.5 * dx.dot(prec * dx);
  }
};

}  // namespace detail

/// Dual objective tau0 INT (1 - e^{-phi/tau0}) d alpha + tau1 INT (1 -
/// e^{-psi/tau1}) d beta, with both integrals evaluated in closed form.
inline double dual_value(const QuadraticPotential& phi, const QuadraticPotential& psi,
                         const UotProblem& prob) {
  const double i0 = std::exp(detail::log_gaussian_integral(phi, prob.tau0(), prob.alpha()));
  const double i1 = std::exp(detail::log_gaussian_integral(psi, prob.tau1(), prob.beta()));
  return prob.tau0() * (prob.alpha().mass() - i0) + prob.tau1() * (prob.beta().mass() - i1);
}

/// Measured optimality evidence; every field is reported raw, and bound
/// comparisons live with the caller.
struct CertificateReport {
  double riccati_residual;
  double min_sampled_slack;
  double max_graph_equality_error;
  double constant_sum_residual;
  double marginal_density_residual;
  double dual_value;
  double primal_dual_gap;
  double min_eig_P_inv;
  std::int64_t sample_count;
  std::int64_t seed;
};

/// Verifies the solution against the dual certificate. Draws sample_count
/// off-graph pairs from p* x q* and sample_count on-graph pairs, using
/// counter-based randomness keyed by (seed, sample index), so the report is
/// deterministic and independent of evaluation order.
inline CertificateReport certify(const ClosedFormSolution& sol, const UotProblem& prob,
                                 std::int64_t sample_count, std::int64_t seed) {
  if (sample_count <= 0) {
    throw std::domain_error("certify: sample_count must be positive, got " +
                            std::to_string(sample_count));
  }
  const Eigen::Index d = prob.dim();
  const double tau0 = prob.tau0();
  const double tau1 = prob.tau1();
  const std::uint64_t useed = static_cast<std::uint64_t>(seed);

  DualPotentials pots = build_potentials(sol, prob);
  const QuadraticPotential& phi = pots.phi;
  const QuadraticPotential& psi = pots.psi;

  DerivedCoefficients c = derive_coefficients(prob);
  const Matrix& l = sol.map_linear.mat();
  const double riccati_residual =
      frobenius(l * c.C1.mat() * l - c.kappa * l - c.C0.mat());

  SymMatrix sqrt_p = sqrt_spd(sol.P_star);
  SymMatrix sqrt_q = sqrt_spd(sol.Q_star);

  detail::LogDensity log_alpha(prob.alpha());
  detail::LogDensity log_beta(prob.beta());
  detail::LogDensity log_p(GaussianMeasure(1.0, sol.u_star, sol.P_star));
  detail::LogDensity log_q(GaussianMeasure(1.0, sol.v_star, sol.Q_star));
  const double log_m = std::log(sol.M_star);

  double min_slack = std::numeric_limits<double>::infinity();
  double max_graph_error = 0.0;
  double max_marginal_residual = 0.0;

  for (std::int64_t k = 0; k < sample_count; ++k) {
    const std::uint64_t base = 4 * static_cast<std::uint64_t>(k);
    Vector x = sol.u_star + sqrt_p.mat() * rng::standard_normal(useed, base + 0, d);
    Vector y = sol.v_star + sqrt_q.mat() * rng::standard_normal(useed, base + 1, d);
    min_slack = std::min(min_slack, slack(phi, psi, x, y));

    Vector xg = sol.u_star + sqrt_p.mat() * rng::standard_normal(useed, base + 2, d);
    Vector yg = sol.v_star + l * (xg - sol.u_star);
    max_graph_error = std::max(max_graph_error, std::abs(slack(phi, psi, xg, yg)));

    const double res_phi =
        std::abs((-phi(x) / tau0 + log_alpha(x)) - (log_m + log_p(x)));
    const double res_psi =
        std::abs((-psi(y) / tau1 + log_beta(y)) - (log_m + log_q(y)));
    max_marginal_residual = std::max({max_marginal_residual, res_phi, res_psi});
  }

  const double constant_sum_residual =
      std::abs(phi.constant + psi.constant - sol.h_star.squaredNorm());
  const double dual = dual_value(phi, psi, prob);
  const double gap = std::abs(dual - sol.value);
  const double min_eig_p_inv = spd_check(inv_spd(sol.P_star)).min_eigenvalue;

  return CertificateReport{riccati_residual,
                           min_slack,
                           max_graph_error,
                           constant_sum_residual,
                           max_marginal_residual,
                           dual,
                           gap,
                           min_eig_p_inv,
                           sample_count,
                           seed};
}

}  // namespace guot
