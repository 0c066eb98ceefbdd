#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>

#include "guot/gaussian.hpp"
#include "guot/linalg.hpp"

namespace guot {

/// Problem data in precision form: r_i = 2 / tau_i, A_i = Sigma_i^{-1},
/// C_i = A_i + r_i I, kappa = r1 - r0.
struct DerivedCoefficients {
  double r0;
  double r1;
  double kappa;
  SymMatrix A0;
  SymMatrix A1;
  SymMatrix C0;
  SymMatrix C1;
};

inline DerivedCoefficients derive_coefficients(const UotProblem& prob) {
  const Eigen::Index d = prob.dim();
  const double r0 = 2.0 / prob.tau0();
  const double r1 = 2.0 / prob.tau1();
  SymMatrix a0 = inv_spd(prob.alpha().cov());
  SymMatrix a1 = inv_spd(prob.beta().cov());
  SymMatrix c0 = SymMatrix(a0.mat() + r0 * Matrix::Identity(d, d));
  SymMatrix c1 = SymMatrix(a1.mat() + r1 * Matrix::Identity(d, d));
  return DerivedCoefficients{r0, r1, r1 - r0, std::move(a0), std::move(a1), std::move(c0),
                             std::move(c1)};
}

struct RiccatiSolution {
  SymMatrix S_star;  // unique SPD root of S^2 - kappa S = C1^{1/2} C0 C1^{1/2}
  SymMatrix L_star;  // unique SPD root of L C1 L - kappa L = C0
  double residual;   // Frobenius norm of L* C1 L* - kappa L* - C0
};

/// Solves the covariance map equation L C1 L - kappa L = C0 through the
/// principal square root: S* = (kappa I + (kappa^2 I + 4 C1^{1/2} C0
/// C1^{1/2})^{1/2}) / 2 and L* = C1^{-1/2} S* C1^{-1/2}.
inline RiccatiSolution solve_riccati(const DerivedCoefficients& c) {
  const Eigen::Index d = c.C0.dim();
  if (c.C1.dim() != d) {
    throw DimensionError("solve_riccati: C0 and C1 dimensions differ");
  }
  SymMatrix rc1 = sqrt_spd(c.C1);
  SymMatrix rc1_inv = inv_spd(rc1);
  SymMatrix inner = SymMatrix(c.kappa * c.kappa * Matrix::Identity(d, d) +
                              4.0 * (rc1.mat() * c.C0.mat() * rc1.mat()));
  SymMatrix s = SymMatrix(0.5 * (c.kappa * Matrix::Identity(d, d) + sqrt_spd(inner).mat()));
  SymMatrix l = SymMatrix(rc1_inv.mat() * s.mat() * rc1_inv.mat());
  double residual =
      frobenius(l.mat() * c.C1.mat() * l.mat() - c.kappa * l.mat() - c.C0.mat());
  return RiccatiSolution{std::move(s), std::move(l), residual};
}

/// Covariances of the adjusted marginals: P* = (A0 + r0 (I - L*))^{-1} and
/// Q* = L* P* L*.
inline std::pair<SymMatrix, SymMatrix> adjusted_covariances(const DerivedCoefficients& c,
                                                            const RiccatiSolution& ric) {
  const Eigen::Index d = c.A0.dim();
  SymMatrix p = inv_spd(
      SymMatrix(c.A0.mat() + c.r0 * (Matrix::Identity(d, d) - ric.L_star.mat())));
  SymMatrix q = SymMatrix(ric.L_star.mat() * p.mat() * ric.L_star.mat());
  return {std::move(p), std::move(q)};
}

struct AdjustedMeans {
  Vector h_star;  // (I + r0 Sigma0 + r1 Sigma1)^{-1} (m0 - m1); equals u* - v*
  Vector u_star;  // m0 - r0 Sigma0 h*
  Vector v_star;  // m1 + r1 Sigma1 h*
};

inline AdjustedMeans adjusted_means(const UotProblem& prob, const DerivedCoefficients& c) {
  const Eigen::Index d = prob.dim();
  const Matrix& s0 = prob.alpha().cov().mat();
  const Matrix& s1 = prob.beta().cov().mat();
  SymMatrix shrink = SymMatrix(Matrix::Identity(d, d) + c.r0 * s0 + c.r1 * s1);
  Vector h = inv_spd(shrink).mat() * (prob.alpha().mean() - prob.beta().mean());
  Vector u = prob.alpha().mean() - c.r0 * (s0 * h);
  Vector v = prob.beta().mean() + c.r1 * (s1 * h);
  return AdjustedMeans{std::move(h), std::move(u), std::move(v)};
}

struct ClosedFormSolution {
  SymMatrix P_star;
  SymMatrix Q_star;
  Vector u_star;
  Vector v_star;
  Vector h_star;
  double A_star;       // W2^2(p*, q*) + tau0 KL(p*|mu0) + tau1 KL(q*|mu1)
  double M_star;       // transported mass
  double value;        // optimal objective: tau0 a + tau1 b - (tau0 + tau1) M*
  SymMatrix map_linear;  // L*; the optimal map is x -> map_offset + map_linear x
  Vector map_offset;     // v* - L* u*
};

/// Combines the Riccati root, adjusted covariances, and adjusted means into
/// the full solution. The transported mass is computed in log space as
/// M* = exp((tau0 log a + tau1 log b - A*) / (tau0 + tau1)).
inline ClosedFormSolution assemble(const UotProblem& prob, const RiccatiSolution& ric,
                                   const SymMatrix& p_star, const SymMatrix& q_star,
                                   const AdjustedMeans& means) {
  const double tau0 = prob.tau0();
  const double tau1 = prob.tau1();
  const double a = prob.alpha().mass();
  const double b = prob.beta().mass();

  GaussianMeasure p_unit(1.0, means.u_star, p_star);
  GaussianMeasure q_unit(1.0, means.v_star, q_star);
  const double a_star = w2_sq_gaussian(p_unit, q_unit) +
                        tau0 * gaussian_kl(p_unit, prob.alpha()) +
                        tau1 * gaussian_kl(q_unit, prob.beta());

  const double log_m =
      (tau0 * std::log(a) + tau1 * std::log(b) - a_star) / (tau0 + tau1);
  const double m_star = std::exp(log_m);
  const double value = tau0 * a + tau1 * b - (tau0 + tau1) * m_star;
  if (!(value < tau0 * a + tau1 * b)) {
    throw std::runtime_error(
        "assemble: transported mass underflowed to zero; solution invalid");
  }

  Vector offset = means.v_star - ric.L_star.mat() * means.u_star;
  return ClosedFormSolution{p_star,       q_star, means.u_star, means.v_star,
                            means.h_star, a_star, m_star,       value,
                            ric.L_star,   std::move(offset)};
}

inline ClosedFormSolution solve(const UotProblem& prob) {
  DerivedCoefficients c = derive_coefficients(prob);
  RiccatiSolution ric = solve_riccati(c);
  auto [p_star, q_star] = adjusted_covariances(c, ric);
  AdjustedMeans means = adjusted_means(prob, c);
  return assemble(prob, ric, p_star, q_star, means);
}

/// Scalar specialization; agrees with solve() on every field and serves as a
/// cross-check on the matrix path.
inline ClosedFormSolution solve_1d(const UotProblem& prob) {
  if (prob.dim() != 1) {
    throw DimensionError("solve_1d: problem has dimension " + std::to_string(prob.dim()) +
                         ", expected 1");
  }
  const double tau0 = prob.tau0();
  const double tau1 = prob.tau1();
  const double a = prob.alpha().mass();
  const double b = prob.beta().mass();
  const double m0 = prob.alpha().mean()(0);
  const double m1 = prob.beta().mean()(0);
  const double s0 = prob.alpha().cov()(0, 0);
  const double s1 = prob.beta().cov()(0, 0);

  const double r0 = 2.0 / tau0;
  const double r1 = 2.0 / tau1;
  const double kappa = r1 - r0;
  const double c0 = 1.0 / s0 + r0;
  const double c1 = 1.0 / s1 + r1;

  const double l = (kappa + std::sqrt(kappa * kappa + 4.0 * c0 * c1)) / (2.0 * c1);
  const double p = 1.0 / (1.0 / s0 + r0 * (1.0 - l));
  const double q = l * l * p;

  const double h = (m0 - m1) / (1.0 + r0 * s0 + r1 * s1);
  const double u = m0 - r0 * s0 * h;
  const double v = m1 + r1 * s1 * h;

  auto kl_scalar = [](double p_var, double p_mean, double m_var, double m_mean) {
    const double dm = p_mean - m_mean;
    return 0.5 * (p_var / m_var + dm * dm / m_var - 1.0 + std::log(m_var / p_var));
  };
  const double sqrt_p = std::sqrt(p);
  const double sqrt_q = std::sqrt(q);
  const double a_star = (u - v) * (u - v) + (sqrt_p - sqrt_q) * (sqrt_p - sqrt_q) +
                        tau0 * kl_scalar(p, u, s0, m0) + tau1 * kl_scalar(q, v, s1, m1);

  const double m_star =
      std::exp((tau0 * std::log(a) + tau1 * std::log(b) - a_star) / (tau0 + tau1));
  const double value = tau0 * a + tau1 * b - (tau0 + tau1) * m_star;
  if (!(value < tau0 * a + tau1 * b)) {
    throw std::runtime_error(
        "solve_1d: transported mass underflowed to zero; solution invalid");
  }

  auto scalar_mat = [](double x) { return SymMatrix(Matrix::Constant(1, 1, x)); };
  auto scalar_vec = [](double x) { return Vector::Constant(1, x); };
  return ClosedFormSolution{scalar_mat(p), scalar_mat(q),     scalar_vec(u),
                            scalar_vec(v), scalar_vec(h),     a_star,
                            m_star,        value,             scalar_mat(l),
                            scalar_vec(v - l * u)};
}

/// Objective value of the graph-supported candidate plan, evaluated from the
/// primal side: transport cost of (p*, q*) under the map plus both mass-split
/// KL penalties. Equals value for the optimal solution (strong duality).
inline double primal_objective(const ClosedFormSolution& sol, const UotProblem& prob) {
  const Eigen::Index d = prob.dim();
  const double tau0 = prob.tau0();
  const double tau1 = prob.tau1();

  Matrix i_minus_l = Matrix::Identity(d, d) - sol.map_linear.mat();
  const double transport_cost =
      sol.h_star.squaredNorm() +
      (i_minus_l * sol.P_star.mat() * i_minus_l.transpose()).trace();

  GaussianMeasure p_unit(1.0, sol.u_star, sol.P_star);
  GaussianMeasure q_unit(1.0, sol.v_star, sol.Q_star);
  const double kl0 = gaussian_kl(p_unit, prob.alpha());
  const double kl1 = gaussian_kl(q_unit, prob.beta());

  return sol.M_star * transport_cost +
         tau0 * mass_kl_split(sol.M_star, kl0, prob.alpha().mass()) +
         tau1 * mass_kl_split(sol.M_star, kl1, prob.beta().mass());
}

/// Covariance of the optimal plan on the product space, [[P*, P*L*], [L*P*,
/// Q*]]; derived from the map representation y = v* + L*(x - u*).
inline Matrix joint_covariance(const ClosedFormSolution& sol) {
  const Eigen::Index d = sol.P_star.dim();
  Matrix joint(2 * d, 2 * d);
  Matrix cross = sol.P_star.mat() * sol.map_linear.mat();
  joint.topLeftCorner(d, d) = sol.P_star.mat();
  joint.topRightCorner(d, d) = cross;
  joint.bottomLeftCorner(d, d) = cross.transpose();
  joint.bottomRightCorner(d, d) = sol.Q_star.mat();
  return joint;
}

}  // namespace guot
