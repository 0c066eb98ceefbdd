#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace guot {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Relative eigenvalue cutoff below which a symmetric matrix is rejected as
/// not positive definite.
inline constexpr double kSpdRelTol = 1e-12;

struct SpdCheck {
  double min_eigenvalue = 0.0;
  double max_eigenvalue = 0.0;
  bool is_spd = false;
};

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when an operation requires a positive definite input and the
/// eigenvalue check fails; carries the offending spectrum bounds.
class DefinitenessError : public std::runtime_error {
 public:
  DefinitenessError(const std::string& what, const SpdCheck& check)
      : std::runtime_error(what), check_(check) {}

  const SpdCheck& check() const noexcept { return check_; }

 private:
  SpdCheck check_;
};

/// Symmetric d x d matrix. Construction averages m with its transpose, so
/// entries(i, j) == entries(j, i) holds exactly.
class SymMatrix {
 public:
  explicit SymMatrix(const Eigen::Ref<const Matrix>& m) {
    if (m.rows() != m.cols()) {
      throw DimensionError("SymMatrix: input is " + std::to_string(m.rows()) +
                           "x" + std::to_string(m.cols()) + ", expected square");
    }
    if (m.rows() < 1) {
      throw DimensionError("SymMatrix: dimension must be at least 1");
    }
    m_ = 0.5 * (m + m.transpose());
  }

  static SymMatrix identity(Eigen::Index d) { return SymMatrix(Matrix::Identity(d, d)); }
  static SymMatrix zero(Eigen::Index d) { return SymMatrix(Matrix::Zero(d, d)); }

  Eigen::Index dim() const { return m_.rows(); }
  const Matrix& mat() const { return m_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

 private:
  Matrix m_;
};

inline SymMatrix symmetrize(const Eigen::Ref<const Matrix>& m) { return SymMatrix(m); }

/// Extreme eigenvalues of a symmetric matrix; is_spd applies the relative
/// cutoff kSpdRelTol against the largest eigenvalue.
inline SpdCheck spd_check(const SymMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m.mat(), Eigen::EigenvaluesOnly);
  SpdCheck check;
  check.min_eigenvalue = es.eigenvalues()(0);
  check.max_eigenvalue = es.eigenvalues()(m.dim() - 1);
  check.is_spd = check.min_eigenvalue > kSpdRelTol * check.max_eigenvalue;
  return check;
}

namespace detail {

// Applies f to the spectrum of an SPD matrix and re-symmetrizes the result.
template <typename F>
SymMatrix spectral_apply(const SymMatrix& m, F&& f, const char* op) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m.mat());
  const Vector& w = es.eigenvalues();
  SpdCheck check{w(0), w(m.dim() - 1), w(0) > kSpdRelTol * w(m.dim() - 1)};
  if (!check.is_spd) {
    throw DefinitenessError(std::string(op) + ": matrix is not positive definite" +
                                " (min eigenvalue " + std::to_string(check.min_eigenvalue) +
                                ", max " + std::to_string(check.max_eigenvalue) + ")",
                            check);
  }
  Vector fw(w.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) fw(i) = f(w(i));
  return SymMatrix(es.eigenvectors() * fw.asDiagonal() * es.eigenvectors().transpose());
}

}  // namespace detail

/// Principal square root of an SPD matrix.
inline SymMatrix sqrt_spd(const SymMatrix& m) {
  return detail::spectral_apply(m, [](double x) { return std::sqrt(x); }, "sqrt_spd");
}

inline SymMatrix inv_spd(const SymMatrix& m) {
  return detail::spectral_apply(m, [](double x) { return 1.0 / x; }, "inv_spd");
}

inline double logdet_spd(const SymMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m.mat(), Eigen::EigenvaluesOnly);
  const Vector& w = es.eigenvalues();
  SpdCheck check{w(0), w(m.dim() - 1), w(0) > kSpdRelTol * w(m.dim() - 1)};
  if (!check.is_spd) {
    throw DefinitenessError("logdet_spd: matrix is not positive definite", check);
  }
  double acc = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) acc += std::log(w(i));
  return acc;
}

inline double frobenius(const Eigen::Ref<const Matrix>& m) { return m.norm(); }

}  // namespace guot
