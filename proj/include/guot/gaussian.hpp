#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "guot/linalg.hpp"

namespace guot {

inline constexpr double kLogTwoPi = 1.8378770664093454835606594728112353;

/// Unnormalized Gaussian measure mass * N(mean, cov). Construction validates
/// mass > 0, dimension agreement, and positive definiteness of cov.
class GaussianMeasure {
 public:
  GaussianMeasure(double mass, Vector mean, SymMatrix cov)
      : mass_(mass), mean_(std::move(mean)), cov_(std::move(cov)) {
    if (!(mass_ > 0.0) || !std::isfinite(mass_)) {
      throw std::domain_error("GaussianMeasure: mass must be positive and finite, got " +
                              std::to_string(mass_));
    }
    if (mean_.size() != cov_.dim()) {
      throw DimensionError("GaussianMeasure: mean has dimension " +
                           std::to_string(mean_.size()) + " but cov is " +
                           std::to_string(cov_.dim()) + "x" + std::to_string(cov_.dim()));
    }
    SpdCheck check = spd_check(cov_);
    if (!check.is_spd) {
      throw DefinitenessError("GaussianMeasure: cov is not positive definite" +
                                  std::string(" (min eigenvalue ") +
                                  std::to_string(check.min_eigenvalue) + ")",
                              check);
    }
  }

  double mass() const { return mass_; }
  const Vector& mean() const { return mean_; }
  const SymMatrix& cov() const { return cov_; }
  Eigen::Index dim() const { return mean_.size(); }

  GaussianMeasure normalized() const { return GaussianMeasure(1.0, mean_, cov_); }

 private:
  double mass_;
  Vector mean_;
  SymMatrix cov_;
};

/// Transport problem between two Gaussian measures of equal dimension with
/// positive marginal penalties tau0 (source) and tau1 (target).
class UotProblem {
 public:
  UotProblem(GaussianMeasure alpha, GaussianMeasure beta, double tau0, double tau1)
      : alpha_(std::move(alpha)), beta_(std::move(beta)), tau0_(tau0), tau1_(tau1) {
    if (alpha_.dim() != beta_.dim()) {
      throw DimensionError("UotProblem: alpha has dimension " + std::to_string(alpha_.dim()) +
                           " but beta has dimension " + std::to_string(beta_.dim()));
    }
    if (!(tau0_ > 0.0) || !std::isfinite(tau0_) || !(tau1_ > 0.0) || !std::isfinite(tau1_)) {
      throw std::domain_error("UotProblem: tau0 and tau1 must be positive and finite");
    }
  }

  const GaussianMeasure& alpha() const { return alpha_; }
  const GaussianMeasure& beta() const { return beta_; }
  double tau0() const { return tau0_; }
  double tau1() const { return tau1_; }
  Eigen::Index dim() const { return alpha_.dim(); }

 private:
  GaussianMeasure alpha_;
  GaussianMeasure beta_;
  double tau0_;
  double tau1_;
};

/// KL divergence between the probability laws N(p.mean, p.cov) and
/// N(m.mean, m.cov); masses are ignored (see mass_kl_split for the
/// unnormalized decomposition).
inline double gaussian_kl(const GaussianMeasure& p, const GaussianMeasure& m) {
  if (p.dim() != m.dim()) {
    throw DimensionError("gaussian_kl: dimensions differ (" + std::to_string(p.dim()) + " vs " +
                         std::to_string(m.dim()) + ")");
  }
  const Eigen::Index d = p.dim();
  SymMatrix m_inv = inv_spd(m.cov());
  Vector dm = p.mean() - m.mean();
  double trace_term = (m_inv.mat() * p.cov().mat()).trace();
  double quad_term = dm.dot(m_inv.mat() * dm);
  double val = 0.5 * (trace_term + quad_term - static_cast<double>(d) +
                      logdet_spd(m.cov()) - logdet_spd(p.cov()));
  return std::max(0.0, val);
}

/// Squared Bures distance tr(P + Q - 2 (P^{1/2} Q P^{1/2})^{1/2}).
inline double bures_sq(const SymMatrix& p, const SymMatrix& q) {
  if (p.dim() != q.dim()) {
    throw DimensionError("bures_sq: dimensions differ");
  }
  SymMatrix rp = sqrt_spd(p);
  SymMatrix cross = sqrt_spd(SymMatrix(rp.mat() * q.mat() * rp.mat()));
  double val = p.mat().trace() + q.mat().trace() - 2.0 * cross.mat().trace();
  return std::max(0.0, val);
}

/// Squared 2-Wasserstein distance between the probability laws of g0 and g1.
inline double w2_sq_gaussian(const GaussianMeasure& g0, const GaussianMeasure& g1) {
  if (g0.dim() != g1.dim()) {
    throw DimensionError("w2_sq_gaussian: dimensions differ");
  }
  return (g0.mean() - g1.mean()).squaredNorm() + bures_sq(g0.cov(), g1.cov());
}

/// Unique SPD matrix L with L p L = q (the linear part of the optimal map
/// from N(0, p) to N(0, q)).
inline SymMatrix monge_map(const SymMatrix& p, const SymMatrix& q) {
  if (p.dim() != q.dim()) {
    throw DimensionError("monge_map: dimensions differ");
  }
  SymMatrix rp = sqrt_spd(p);
  SymMatrix rp_inv = inv_spd(rp);
  SymMatrix mid = sqrt_spd(SymMatrix(rp.mat() * q.mat() * rp.mat()));
  return SymMatrix(rp_inv.mat() * mid.mat() * rp_inv.mat());
}

/// Generalized KL divergence of M * p against ref_mass * m when the
/// probability-law part KL(p | m) = unit_kl is already known:
///   KL(M p | ref m) = M * unit_kl + M log(M / ref) - M + ref.
inline double mass_kl_split(double total_mass, double unit_kl, double ref_mass) {
  if (!(total_mass > 0.0) || !std::isfinite(total_mass)) {
    throw std::domain_error("mass_kl_split: total_mass must be positive, got " +
                            std::to_string(total_mass));
  }
  if (!(ref_mass > 0.0) || !std::isfinite(ref_mass)) {
    throw std::domain_error("mass_kl_split: ref_mass must be positive, got " +
                            std::to_string(ref_mass));
  }
  return total_mass * unit_kl + total_mass * std::log(total_mass / ref_mass) - total_mass +
         ref_mass;
}

/// Log of the Lebesgue density of g at x (mass included).
inline double log_density(const GaussianMeasure& g, const Vector& x) {
  if (x.size() != g.dim()) {
    throw DimensionError("log_density: point has dimension " + std::to_string(x.size()) +
                         " but measure has dimension " + std::to_string(g.dim()));
  }
  const double d = static_cast<double>(g.dim());
  Vector dx = x - g.mean();
  SymMatrix cov_inv = inv_spd(g.cov());
  double quad = dx.dot(cov_inv.mat() * dx);
  return std::log(g.mass()) - 0.5 * (d * kLogTwoPi + logdet_spd(g.cov()) + quad);
}

}  // namespace guot
