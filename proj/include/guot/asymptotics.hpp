#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "guot/closed_form.hpp"
#include "guot/gaussian.hpp"

namespace guot {

/// Two-term expansion of the value as the penalties grow like lambda:
///   value(lambda) = lambda * leading_coeff + constant_term + o(1),
/// with theta_i the normalized penalty shares, geometric_mass the
/// mass-weighted geometric mean a^theta0 b^theta1, leading_coeff the weighted
/// AM-GM gap (zero exactly when the masses agree), and constant_term the
/// geometric mass times the balanced W2^2 between the normalized marginals.
struct LimitExpansion {
  double theta0;
  double theta1;
  double geometric_mass;
  double leading_coeff;
  double constant_term;
};

inline LimitExpansion limit_expansion(const UotProblem& prob, double bar_tau0,
                                      double bar_tau1) {
  if (!(bar_tau0 > 0.0) || !std::isfinite(bar_tau0) || !(bar_tau1 > 0.0) ||
      !std::isfinite(bar_tau1)) {
    throw std::domain_error("limit_expansion: bar_tau0 and bar_tau1 must be positive");
  }
  const double a = prob.alpha().mass();
  const double b = prob.beta().mass();
  const double theta0 = bar_tau0 / (bar_tau0 + bar_tau1);
  const double theta1 = bar_tau1 / (bar_tau0 + bar_tau1);
  const double g = std::exp(theta0 * std::log(a) + theta1 * std::log(b));

  double leading = bar_tau0 * a + bar_tau1 * b - (bar_tau0 + bar_tau1) * g;
  if (std::abs(a - b) <= 1e-12 * (a + b)) {
    leading = 0.0;  // AM-GM gap vanishes at equal masses; suppress roundoff
  } else {
    leading = std::max(0.0, leading);
  }

  const double w2 = w2_sq_gaussian(prob.alpha().normalized(), prob.beta().normalized());
  return LimitExpansion{theta0, theta1, g, leading, g * w2};
}

/// One solved instance of the scaled problem (tau_i = lambda * bar_tau_i)
/// plus its deviation from the two-term expansion and the distances of the
/// adjusted marginals from the inputs.
struct SweepRow {
  double lambda;
  double value;
  double m_star;
  double residual;   // value - lambda * leading_coeff - constant_term
  double mean0_gap;  // ||u* - m0||
  double mean1_gap;  // ||v* - m1||
  double cov0_gap;   // ||P* - Sigma0||_F
  double cov1_gap;   // ||Q* - Sigma1||_F
};

inline std::vector<SweepRow> sweep(const UotProblem& prob, double bar_tau0, double bar_tau1,
                                   const std::vector<double>& lambdas) {
  if (lambdas.empty()) {
    throw std::invalid_argument("sweep: lambdas must be nonempty");
  }
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (!(lambdas[i] > 0.0) || !std::isfinite(lambdas[i])) {
      throw std::invalid_argument("sweep: lambdas must be positive and finite");
    }
    if (i > 0 && !(lambdas[i] > lambdas[i - 1])) {
      throw std::invalid_argument("sweep: lambdas must be strictly increasing");
    }
  }

  LimitExpansion expansion = limit_expansion(prob, bar_tau0, bar_tau1);
  std::vector<SweepRow> rows;
  rows.reserve(lambdas.size());
  for (double lambda : lambdas) {
    UotProblem scaled(prob.alpha(), prob.beta(), lambda * bar_tau0, lambda * bar_tau1);
    ClosedFormSolution sol = solve(scaled);
    SweepRow row;
    row.lambda = lambda;
    row.value = sol.value;
    row.m_star = sol.M_star;
    row.residual =
        sol.value - lambda * expansion.leading_coeff - expansion.constant_term;
    row.mean0_gap = (sol.u_star - prob.alpha().mean()).norm();
    row.mean1_gap = (sol.v_star - prob.beta().mean()).norm();
    row.cov0_gap = frobenius(sol.P_star.mat() - prob.alpha().cov().mat());
    row.cov1_gap = frobenius(sol.Q_star.mat() - prob.beta().cov().mat());
    rows.push_back(row);
  }
  return rows;
}

}  // namespace guot
