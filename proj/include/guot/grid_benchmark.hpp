#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "guot/closed_form.hpp"
#include "guot/gaussian.hpp"
#include "guot/linalg.hpp"

namespace guot {

/// Uniform 1-D quadrature grid with unnormalized input weights
/// (mass x density x spacing at each node).
struct Grid1D {
  Vector points;
  double spacing;
  Vector alpha_weights;
  Vector beta_weights;
};

namespace detail {

inline double normal_pdf(double x, double mean, double sigma) {
  const double z = (x - mean) / sigma;
  return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

inline double normal_cdf(double x, double mean, double sigma) {
  return 0.5 * std::erfc(-(x - mean) / (sigma * std::sqrt(2.0)));
}

}  // namespace detail

/// n uniform points spanning six standard deviations around both input
/// Gaussians: from min_i(m_i - 6 sigma_i) to max_i(m_i + 6 sigma_i) inclusive.
inline Grid1D build_grid(const UotProblem& prob, int n) {
  if (prob.dim() != 1) {
    throw DimensionError("build_grid: problem has dimension " +
                         std::to_string(prob.dim()) + ", expected 1");
  }
  if (n < 2) {
    throw std::domain_error("build_grid: grid size must be at least 2, got " +
                            std::to_string(n));
  }
  const double m0 = prob.alpha().mean()(0);
  const double m1 = prob.beta().mean()(0);
  const double s0 = std::sqrt(prob.alpha().cov()(0, 0));
  const double s1 = std::sqrt(prob.beta().cov()(0, 0));
  const double lo = std::min(m0 - 6.0 * s0, m1 - 6.0 * s1);
  const double hi = std::max(m0 + 6.0 * s0, m1 + 6.0 * s1);
  const double spacing = (hi - lo) / (n - 1);

  Vector points(n), wa(n), wb(n);
  for (int i = 0; i < n; ++i) {
    points(i) = lo + i * spacing;
    wa(i) = prob.alpha().mass() * detail::normal_pdf(points(i), m0, s0) * spacing;
    wb(i) = prob.beta().mass() * detail::normal_pdf(points(i), m1, s1) * spacing;
  }
  return Grid1D{std::move(points), spacing, std::move(wa), std::move(wb)};
}

inline Matrix cost_matrix(const Grid1D& grid) {
  const Eigen::Index n = grid.points.size();
  Matrix c(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double diff = grid.points(i) - grid.points(j);
      c(i, j) = diff * diff;
    }
  }
  return c;
}

struct DiscreteDualConfig {
  double epsilon_start = 1.0;
  double epsilon_final = 1e-5;
  double value_tol = 1e-8;      // relative change of the projected dual value
  int max_iterations = 100000;  // total update sweeps across the continuation
};

struct DiscreteDualResult {
  Vector phi;
  Vector psi;
  double dual_value;
  double max_violation;  // max over (i, j) of phi_i + psi_j - cost_ij
  int iterations;
  double epsilon_final;
  Matrix plan;  // entropic plan at the final epsilon, for primal recovery
};

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, DiscreteDualResult last)
      : std::runtime_error(what), last_(std::move(last)) {}

  const DiscreteDualResult& last_iterate() const { return last_; }

 private:
  DiscreteDualResult last_;
};

namespace detail {

inline double log_sum_exp(const Vector& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;  // all -inf: empty sum
  double acc = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) acc += std::exp(v(i) - m);
  return m + std::log(acc);
}

struct ProjectedDual {
  Vector phi;
  Vector psi;
  double value;
};

// Tightest feasible pair reachable from the scaled potentials by
// c-transforms: psi <- f^c, phi <- psi^c, psi <- phi^c. The final pair
// satisfies phi_i + psi_j <= cost_ij up to roundoff.
inline ProjectedDual project_feasible(const Vector& f, const Matrix& cost,
                                      const Vector& wa, const Vector& wb, double tau0,
                                      double tau1) {
  const Eigen::Index n = f.size();
  Vector psi = (cost.colwise() - f).colwise().minCoeff().transpose();
  Vector phi = (cost.rowwise() - psi.transpose()).rowwise().minCoeff();
  for (Eigen::Index j = 0; j < n; ++j) {
    psi(j) = (cost.col(j) - phi).minCoeff();
  }
  double value = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    value += tau0 * wa(i) * (1.0 - std::exp(-phi(i) / tau0));
    value += tau1 * wb(i) * (1.0 - std::exp(-psi(i) / tau1));
  }
  return ProjectedDual{std::move(phi), std::move(psi), value};
}

}  // namespace detail

/// Maximizes the discrete relaxed dual
///   tau0 sum_i wa_i (1 - e^{-phi_i/tau0}) + tau1 sum_j wb_j (1 - e^{-psi_j/tau1})
/// subject to phi_i + psi_j <= (x_i - x_j)^2, via log-domain generalized
/// Sinkhorn iterations on an entropic surrogate whose regularization is
/// driven from epsilon_start down to epsilon_final (halving), followed by a
/// c-transform projection onto the feasible set. The reported value is the
/// exact unregularized dual objective of the projected pair.
inline DiscreteDualResult solve_discrete_dual(const Grid1D& grid, const UotProblem& prob,
                                              const DiscreteDualConfig& cfg = {}) {
  const Eigen::Index n = grid.points.size();
  const double tau0 = prob.tau0();
  const double tau1 = prob.tau1();
  const Matrix cost = cost_matrix(grid);

  Vector la(n), lb(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    la(i) = std::log(grid.alpha_weights(i));
    lb(i) = std::log(grid.beta_weights(i));
  }

  std::vector<double> schedule;
  for (double eps = cfg.epsilon_start; eps > cfg.epsilon_final; eps *= 0.5) {
    schedule.push_back(eps);
  }
  schedule.push_back(cfg.epsilon_final);

  Vector f = Vector::Zero(n);
  Vector g = Vector::Zero(n);
  int total_iterations = 0;

  auto make_result = [&](const detail::ProjectedDual& proj, double eps) {
    double violation = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        violation = std::max(violation, proj.phi(i) + proj.psi(j) - cost(i, j));
      }
    }
    Matrix plan(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        plan(i, j) = std::exp(la(i) + lb(j) + (f(i) + g(j) - cost(i, j)) / eps);
      }
    }
    return DiscreteDualResult{proj.phi,         proj.psi, proj.value, violation,
                              total_iterations, eps,      std::move(plan)};
  };

  for (double eps : schedule) {
    const bool final_stage = (eps == schedule.back());
    const double tol = final_stage ? cfg.value_tol : 10.0 * cfg.value_tol;
    double prev_value = std::numeric_limits<double>::quiet_NaN();

    while (true) {
      for (Eigen::Index i = 0; i < n; ++i) {
        Vector row = lb + (g - cost.row(i).transpose()) / eps;
        f(i) = -tau0 / (tau0 + eps) * eps * detail::log_sum_exp(row);
      }
      for (Eigen::Index j = 0; j < n; ++j) {
        Vector col = la + (f - cost.col(j)) / eps;
        g(j) = -tau1 / (tau1 + eps) * eps * detail::log_sum_exp(col);
      }
      ++total_iterations;

      detail::ProjectedDual proj =
          detail::project_feasible(f, cost, grid.alpha_weights, grid.beta_weights, tau0, tau1);
      if (std::isfinite(prev_value) &&
          std::abs(proj.value - prev_value) <= tol * (1.0 + std::abs(proj.value))) {
        break;
      }
      prev_value = proj.value;

      if (total_iterations >= cfg.max_iterations) {
        throw ConvergenceError(
            "solve_discrete_dual: no convergence within " +
                std::to_string(cfg.max_iterations) + " iterations (epsilon " +
                std::to_string(eps) + ")",
            make_result(proj, eps));
      }
    }
  }

  detail::ProjectedDual proj =
      detail::project_feasible(f, cost, grid.alpha_weights, grid.beta_weights, tau0, tau1);
  return make_result(proj, cfg.epsilon_final);
}

/// Exact discrete primal objective of a nonnegative plan: transport cost plus
/// both generalized KL penalties of the plan marginals against the grid
/// weights (0 log 0 = 0; infinite if mass sits where a weight is zero).
inline double discrete_primal_value(const Grid1D& grid, const UotProblem& prob,
                                    const Matrix& plan) {
  const Eigen::Index n = grid.points.size();
  if (plan.rows() != n || plan.cols() != n) {
    throw DimensionError("discrete_primal_value: plan must be " + std::to_string(n) + "x" +
                         std::to_string(n));
  }
  if ((plan.array() < 0.0).any()) {
    throw std::invalid_argument("discrete_primal_value: plan has negative entries");
  }

  auto kl_generalized = [](const Vector& x, const Vector& w) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      if (x(i) == 0.0) {
        acc += w(i);
      } else if (w(i) == 0.0) {
        return std::numeric_limits<double>::infinity();
      } else {
        acc += x(i) * std::log(x(i) / w(i)) - x(i) + w(i);
      }
    }
    return acc;
  };

  const Matrix cost = cost_matrix(grid);
  const double transport = (cost.array() * plan.array()).sum();
  Vector row_sums = plan.rowwise().sum();
  Vector col_sums = plan.colwise().sum().transpose();
  return transport + prob.tau0() * kl_generalized(row_sums, grid.alpha_weights) +
         prob.tau1() * kl_generalized(col_sums, grid.beta_weights);
}

/// Finite 1-D Gaussian mixture with probability weights.
struct GaussianMixture1D {
  std::vector<double> weights;
  std::vector<double> means;
  std::vector<double> sigmas;

  GaussianMixture1D(std::vector<double> w, std::vector<double> m, std::vector<double> s)
      : weights(std::move(w)), means(std::move(m)), sigmas(std::move(s)) {
    if (weights.empty() || weights.size() != means.size() ||
        weights.size() != sigmas.size()) {
      throw DimensionError("GaussianMixture1D: component lists must be nonempty and equal");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (!(weights[i] > 0.0) || !std::isfinite(weights[i])) {
        throw std::domain_error("GaussianMixture1D: weights must be positive");
      }
      if (!(sigmas[i] > 0.0) || !std::isfinite(sigmas[i])) {
        throw std::domain_error("GaussianMixture1D: sigmas must be positive");
      }
      if (!std::isfinite(means[i])) {
        throw std::domain_error("GaussianMixture1D: means must be finite");
      }
      total += weights[i];
    }
    if (std::abs(total - 1.0) > 1e-12) {
      throw std::domain_error("GaussianMixture1D: weights must sum to 1, got " +
                              std::to_string(total));
    }
  }

  double log_pdf(double x) const {
    double best = -std::numeric_limits<double>::infinity();
    std::vector<double> terms(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i) {
      const double z = (x - means[i]) / sigmas[i];
      terms[i] = std::log(weights[i]) - 0.5 * z * z - std::log(sigmas[i]) -
                 0.5 * std::log(2.0 * std::numbers::pi);
      best = std::max(best, terms[i]);
    }
    double acc = 0.0;
    for (double t : terms) acc += std::exp(t - best);
    return best + std::log(acc);
  }

  double cdf(double x) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      acc += weights[i] * detail::normal_cdf(x, means[i], sigmas[i]);
    }
    return acc;
  }

  // Inverse CDF by bisection; the bracket covers all component tails that the
  // +-12 sigma quadrature window can request.
  double quantile(double u) const {
    double lo = means[0] - 20.0 * sigmas[0];
    double hi = means[0] + 20.0 * sigmas[0];
    for (std::size_t i = 1; i < weights.size(); ++i) {
      lo = std::min(lo, means[i] - 20.0 * sigmas[i]);
      hi = std::max(hi, means[i] + 20.0 * sigmas[i]);
    }
    for (int it = 0; it < 200 && (hi - lo) > 1e-14 * std::max(1.0, std::abs(lo) + std::abs(hi));
         ++it) {
      const double mid = 0.5 * (lo + hi);
      (cdf(mid) < u ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  }

  double mean() const {
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) acc += weights[i] * means[i];
    return acc;
  }

  double variance() const {
    const double m = mean();
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      acc += weights[i] * (sigmas[i] * sigmas[i] + means[i] * means[i]);
    }
    return acc - m * m;
  }
};

struct ReductionReport {
  double mixture_cost;   // W2^2(p, q) + tau0 KL(p|mu0) + tau1 KL(q|mu1)
  double gaussian_cost;  // same objective at the moment-matched Gaussians
  double slack;          // mixture_cost - gaussian_cost; nonnegative in theory
};

namespace detail {

// W2^2 between 1-D distributions via the quantile representation, with the
// substitution u = Phi(z) so that uniform nodes in z weight the tails
// correctly: INT_0^1 (Fp^{-1}(u) - Fq^{-1}(u))^2 du
//          = INT (Fp^{-1}(Phi(z)) - Fq^{-1}(Phi(z)))^2 phi(z) dz.
inline double w2_sq_quantile(const GaussianMixture1D& p, const GaussianMixture1D& q,
                             int nodes) {
  const double z_lo = -12.0, z_hi = 12.0;
  const double h = (z_hi - z_lo) / nodes;
  double acc = 0.0;
  for (int k = 0; k < nodes; ++k) {
    const double z = z_lo + (k + 0.5) * h;
    const double u = normal_cdf(z, 0.0, 1.0);
    const double diff = p.quantile(u) - q.quantile(u);
    acc += diff * diff * normal_pdf(z, 0.0, 1.0) * h;
  }
  return acc;
}

// KL(p | mu) for a mixture p against the Gaussian mu, composite Simpson over
// the union of the +-12 sigma windows of every component and of mu.
inline double kl_mixture_vs_gaussian(const GaussianMixture1D& p, double mu_mean,
                                     double mu_sigma, int intervals) {
  double lo = mu_mean - 12.0 * mu_sigma;
  double hi = mu_mean + 12.0 * mu_sigma;
  for (std::size_t i = 0; i < p.weights.size(); ++i) {
    lo = std::min(lo, p.means[i] - 12.0 * p.sigmas[i]);
    hi = std::max(hi, p.means[i] + 12.0 * p.sigmas[i]);
  }
  if (intervals % 2 != 0) ++intervals;
  const double h = (hi - lo) / intervals;
  auto integrand = [&](double x) {
    const double lp = p.log_pdf(x);
    const double zm = (x - mu_mean) / mu_sigma;
    const double lm = -0.5 * zm * zm - std::log(mu_sigma) - 0.5 * std::log(2.0 * std::numbers::pi);
    return std::exp(lp) * (lp - lm);
  };
  double acc = integrand(lo) + integrand(hi);
  for (int k = 1; k < intervals; ++k) {
    acc += integrand(lo + k * h) * (k % 2 == 1 ? 4.0 : 2.0);
  }
  return acc * h / 3.0;
}

}  // namespace detail

/// Compares the relaxed objective at a pair of mixture marginals against the
/// same objective at their moment-matched Gaussians. Theory says the Gaussian
/// pair is never worse, so slack should be nonnegative up to quadrature error.
inline ReductionReport reduction_check(const UotProblem& prob, const GaussianMixture1D& p,
                                       const GaussianMixture1D& q) {
  if (prob.dim() != 1) {
    throw DimensionError("reduction_check: problem has dimension " +
                         std::to_string(prob.dim()) + ", expected 1");
  }
  const double mu0_mean = prob.alpha().mean()(0);
  const double mu0_sigma = std::sqrt(prob.alpha().cov()(0, 0));
  const double mu1_mean = prob.beta().mean()(0);
  const double mu1_sigma = std::sqrt(prob.beta().cov()(0, 0));

  auto evaluate_mixture_cost = [&](int w2_nodes, int kl_intervals) {
    return detail::w2_sq_quantile(p, q, w2_nodes) +
           prob.tau0() * detail::kl_mixture_vs_gaussian(p, mu0_mean, mu0_sigma, kl_intervals) +
           prob.tau1() * detail::kl_mixture_vs_gaussian(q, mu1_mean, mu1_sigma, kl_intervals);
  };

  double mixture_cost = evaluate_mixture_cost(10000, 20000);
  if (!std::isfinite(mixture_cost)) {
    mixture_cost = evaluate_mixture_cost(20000, 40000);  // refine once, then give up
    if (!std::isfinite(mixture_cost)) {
      throw std::runtime_error("reduction_check: quadrature overflow");
    }
  }

  auto scalar_gaussian = [](double mean, double var) {
    return GaussianMeasure(1.0, Vector::Constant(1, mean),
                           SymMatrix(Matrix::Constant(1, 1, var)));
  };
  GaussianMeasure g0 = scalar_gaussian(p.mean(), p.variance());
  GaussianMeasure g1 = scalar_gaussian(q.mean(), q.variance());
  const double gaussian_cost = w2_sq_gaussian(g0, g1) +
                               prob.tau0() * gaussian_kl(g0, prob.alpha()) +
                               prob.tau1() * gaussian_kl(g1, prob.beta());

  return ReductionReport{mixture_cost, gaussian_cost, mixture_cost - gaussian_cost};
}

}  // namespace guot
