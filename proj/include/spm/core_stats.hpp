#pragma once

#include <Eigen/Dense>

#include "spm/errors.hpp"

namespace spm::stats {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Mean and covariance of a p-dimensional Gaussian. The covariance must be
/// symmetric and positive definite.
struct GaussianParams {
  Vector mean;
  Matrix covariance;
};

/// Lower-triangular Cholesky factor of an SPD matrix plus the derived
/// quantities every density evaluation needs. Factorization is attempted
/// once as given; on failure a ridge of eps * trace(S)/p * I (eps = 1e-8)
/// is added and the factorization retried before giving up. EM with few
/// effective samples per state routinely produces near-singular pooled
/// covariances, and the ridge keeps those fits alive.
class CholeskyFactor {
 public:
  /// Throws EstimationError if S is not SPD even after the ridge retry.
  static CholeskyFactor compute(const Matrix& S);

  int dim() const { return static_cast<int>(lower_.rows()); }
  double log_det() const { return log_det_; }
  const Matrix& lower() const { return lower_; }

  /// (x - mean)' S^-1 (x - mean) through one triangular solve.
  double mahalanobis_sq(const Vector& x, const Vector& mean) const;

  /// log N(x; mean, S).
  double log_density(const Vector& x, const Vector& mean) const;

  /// Log-densities of every row of X (n x p) against one mean; returns n values.
  Vector log_density_rows(const Matrix& X, const Vector& mean) const;

  /// Squared Mahalanobis distances of every row of X against one mean.
  Vector mahalanobis_sq_rows(const Matrix& X, const Vector& mean) const;

  /// mean + L z for a standard normal vector z: one Gaussian draw.
  Vector affine(const Vector& mean, const Vector& z) const;

 private:
  Matrix lower_;
  double log_det_ = 0.0;
};

/// log of the p-dimensional Gaussian density at x. Computed via Cholesky
/// factorization, never through an explicit inverse.
double gaussian_logpdf(const Vector& x, const GaussianParams& g);

/// (x - mean)' Sigma^-1 (x - mean), via triangular solves. Non-negative.
double mahalanobis_sq(const Vector& x, const GaussianParams& g);

/// Robust multivariate location/scatter with per-sample inlier weights.
struct RobustEstimate {
  Vector location;
  Matrix scatter;
  Vector weights;  // 1 for rows kept by the final trimming pass, else 0
};

/// Iteratively reweighted trimming estimate of location and scatter.
/// Starts from coordinatewise medians and a diagonal scatter of squared
/// MADs, then alternates {rank rows by Mahalanobis distance, keep the
/// ceil(0.75 n) closest, recompute mean/covariance of the kept rows}
/// until the kept set stabilizes (at most 50 rounds). The scatter is
/// rescaled by the standard consistency factor for 75% trimming so it is
/// unbiased for Gaussian data. Resistant to a minority of arbitrarily
/// placed outliers.
///
/// Requires n > p + 1 rows; throws EstimationError on degenerate data.
RobustEstimate robust_location_scatter(const Matrix& X);

/// Trailing moving average with window k: output row t is the mean of
/// input rows max(0, t-k+1)..t. The window is truncated at the start of
/// the stream. Requires 1 <= k <= rows.
Matrix moving_average(const Matrix& X, int k);

/// Regularized lower incomplete gamma P(a, x); series/continued-fraction.
double gamma_p(double a, double x);

/// Upper tail P(X > x) for X ~ chi-square with dof degrees of freedom.
double chi_square_survival(double x, double dof);

/// CDF of the chi-square distribution.
double chi_square_cdf(double x, double dof);

/// Quantile x with P(X <= x) = prob, prob in (0, 1).
double chi_square_quantile(double prob, double dof);

/// Consistency factor for a scatter matrix estimated from the fraction
/// `kept` of Gaussian samples closest in Mahalanobis distance:
/// kept / F_{chi2_{p+2}}(chi2_p quantile at `kept`).
double trimming_consistency_factor(double kept, int p);

}  // namespace spm::stats
