#include "spm/core_stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace spm::stats {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kRidgeEps = 1e-8;

double median_of(std::vector<double> v) {
  const auto n = v.size();
  auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (n % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(v.begin(), mid);
  return 0.5 * (lo + hi);
}

}  // namespace

CholeskyFactor CholeskyFactor::compute(const Matrix& S) {
  if (S.rows() != S.cols()) {
    throw EstimationError("covariance matrix is not square");
  }
  const auto p = S.rows();
  Eigen::LLT<Matrix> llt(S);
  if (llt.info() != Eigen::Success) {
    // Ridge retry: scale with the matrix so the perturbation is relative.
    const double ridge = kRidgeEps * S.trace() / static_cast<double>(p);
    Matrix patched = S + ridge * Matrix::Identity(p, p);
    llt.compute(patched);
    if (ridge <= 0.0 || llt.info() != Eigen::Success) {
      throw EstimationError("covariance matrix is not positive definite");
    }
  }
  CholeskyFactor f;
  f.lower_ = llt.matrixL();
  f.log_det_ = 2.0 * f.lower_.diagonal().array().log().sum();
  return f;
}

double CholeskyFactor::mahalanobis_sq(const Vector& x, const Vector& mean) const {
  const Vector w = lower_.triangularView<Eigen::Lower>().solve(x - mean);
  return w.squaredNorm();
}

double CholeskyFactor::log_density(const Vector& x, const Vector& mean) const {
  return -0.5 * (dim() * kLog2Pi + log_det_ + mahalanobis_sq(x, mean));
}

Vector CholeskyFactor::mahalanobis_sq_rows(const Matrix& X, const Vector& mean) const {
  Matrix centered = X.transpose();
  centered.colwise() -= mean;
  lower_.triangularView<Eigen::Lower>().solveInPlace(centered);
  return centered.colwise().squaredNorm().transpose();
}

Vector CholeskyFactor::log_density_rows(const Matrix& X, const Vector& mean) const {
  const double c = -0.5 * (dim() * kLog2Pi + log_det_);
  return (c - 0.5 * mahalanobis_sq_rows(X, mean).array()).matrix();
}

Vector CholeskyFactor::affine(const Vector& mean, const Vector& z) const {
  return mean + lower_ * z;
}

double gaussian_logpdf(const Vector& x, const GaussianParams& g) {
  if (x.size() != g.mean.size()) {
    throw std::invalid_argument("gaussian_logpdf: dimension mismatch");
  }
  return CholeskyFactor::compute(g.covariance).log_density(x, g.mean);
}

double mahalanobis_sq(const Vector& x, const GaussianParams& g) {
  if (x.size() != g.mean.size()) {
    throw std::invalid_argument("mahalanobis_sq: dimension mismatch");
  }
  return CholeskyFactor::compute(g.covariance).mahalanobis_sq(x, g.mean);
}

RobustEstimate robust_location_scatter(const Matrix& X) {
  const auto n = X.rows();
  const auto p = X.cols();
  if (n <= p + 1) {
    throw EstimationError("robust_location_scatter: need n > p + 1 rows");
  }

  // Coordinatewise median start with a diagonal squared-MAD scatter. The
  // MAD scale factor cancels in the ranking, so raw MADs are fine here.
  Vector loc(p);
  Vector mad2(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    std::vector<double> col(X.col(j).data(), X.col(j).data() + n);
    const double med = median_of(col);
    loc[j] = med;
    for (auto& v : col) v = std::abs(v - med);
    double m = median_of(col);
    if (m == 0.0) {
      // Fall back to the coordinate's standard deviation; a coordinate
      // that is constant in more than half the rows still needs a scale.
      m = std::sqrt((X.col(j).array() - X.col(j).mean()).square().sum() /
                    static_cast<double>(n));
    }
    mad2[j] = m * m;
  }
  if (mad2.maxCoeff() <= 0.0) {
    throw EstimationError("robust_location_scatter: zero scatter (all rows identical?)");
  }
  const double floor = 1e-12 * mad2.maxCoeff();
  Matrix scatter = mad2.cwiseMax(floor).asDiagonal();

  const auto h = static_cast<Eigen::Index>(
      std::ceil(0.75 * static_cast<double>(n)));
  std::vector<Eigen::Index> kept, prev_kept;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));

  for (int round = 0; round < 50; ++round) {
    const CholeskyFactor chol = CholeskyFactor::compute(scatter);
    const Vector d2 = chol.mahalanobis_sq_rows(X, loc);

    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
      if (d2[a] != d2[b]) return d2[a] < d2[b];
      return a < b;  // deterministic tie-break
    });
    prev_kept = std::move(kept);
    kept.assign(order.begin(), order.begin() + h);
    std::sort(kept.begin(), kept.end());
    if (kept == prev_kept) break;

    loc.setZero();
    for (auto idx : kept) loc += X.row(idx).transpose();
    loc /= static_cast<double>(h);
    scatter.setZero();
    for (auto idx : kept) {
      const Vector r = X.row(idx).transpose() - loc;
      scatter.noalias() += r * r.transpose();
    }
    scatter /= static_cast<double>(h);
  }

  const double kept_frac = static_cast<double>(h) / static_cast<double>(n);
  scatter *= trimming_consistency_factor(kept_frac, static_cast<int>(p));

  // Reweighting pass: the raw trimmed scatter is too inefficient at
  // moderate n (its noise alone breaks downstream control-limit
  // calibration), so points within the 97.5% chi-square radius of the
  // trimmed estimate are pooled back in, with the matching consistency
  // factor. This is the standard refinement for trimming estimators.
  {
    const CholeskyFactor chol = CholeskyFactor::compute(scatter);
    const Vector d2 = chol.mahalanobis_sq_rows(X, loc);
    const double cutoff = chi_square_quantile(0.975, static_cast<double>(p));
    kept.clear();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (d2[i] <= cutoff) kept.push_back(i);
    }
    if (static_cast<Eigen::Index>(kept.size()) > p + 1) {
      loc.setZero();
      for (auto idx : kept) loc += X.row(idx).transpose();
      loc /= static_cast<double>(kept.size());
      scatter.setZero();
      for (auto idx : kept) {
        const Vector r = X.row(idx).transpose() - loc;
        scatter.noalias() += r * r.transpose();
      }
      scatter *= trimming_consistency_factor(0.975, static_cast<int>(p)) /
                 static_cast<double>(kept.size());
    }
  }
  CholeskyFactor::compute(scatter);  // validates SPD, throws otherwise

  RobustEstimate est;
  est.location = loc;
  est.scatter = scatter;
  est.weights = Vector::Zero(n);
  for (auto idx : kept) est.weights[idx] = 1.0;
  return est;
}

Matrix moving_average(const Matrix& X, int k) {
  const auto rows = X.rows();
  if (k < 1 || k > rows) {
    throw std::invalid_argument("moving_average: window must be in [1, rows]");
  }
  // Each window is summed afresh: a running sum would leak rounding
  // error across steps and break the exact identities (k=1 passthrough,
  // linearity on exactly representable data).
  Matrix out(rows, X.cols());
  for (Eigen::Index t = 0; t < rows; ++t) {
    const Eigen::Index lo = std::max<Eigen::Index>(0, t - k + 1);
    const Eigen::Index len = t - lo + 1;
    if (len == 1) {
      out.row(t) = X.row(t);
      continue;
    }
    Eigen::RowVectorXd acc = X.row(lo);
    for (Eigen::Index s = lo + 1; s <= t; ++s) acc += X.row(s);
    out.row(t) = acc / static_cast<double>(len);
  }
  return out;
}

double gamma_p(double a, double x) {
  if (x < 0.0 || a <= 0.0) {
    throw std::invalid_argument("gamma_p: domain error");
  }
  if (x == 0.0) return 0.0;
  const double lg = std::lgamma(a);
  if (x < a + 1.0) {
    // Series representation.
    double ap = a;
    double term = 1.0 / a;
    double sum = term;
    for (int i = 0; i < 500; ++i) {
      ap += 1.0;
      term *= x / ap;
      sum += term;
      if (std::abs(term) < std::abs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - lg);
  }
  // Continued fraction for Q(a, x), modified Lentz.
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double frac = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    frac *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  const double q = std::exp(-x + a * std::log(x) - lg) * frac;
  return 1.0 - q;
}

double chi_square_cdf(double x, double dof) {
  if (x <= 0.0) return 0.0;
  return gamma_p(0.5 * dof, 0.5 * x);
}

double chi_square_survival(double x, double dof) {
  if (x <= 0.0) return 1.0;
  return 1.0 - chi_square_cdf(x, dof);
}

double chi_square_quantile(double prob, double dof) {
  if (prob <= 0.0 || prob >= 1.0) {
    throw std::invalid_argument("chi_square_quantile: prob must be in (0,1)");
  }
  double lo = 0.0;
  double hi = dof + 10.0;
  while (chi_square_cdf(hi, dof) < prob) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (chi_square_cdf(mid, dof) < prob) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo < 1e-12 * (1.0 + hi)) break;
  }
  return 0.5 * (lo + hi);
}

double trimming_consistency_factor(double kept, int p) {
  const double q = chi_square_quantile(kept, static_cast<double>(p));
  return kept / chi_square_cdf(q, static_cast<double>(p + 2));
}

}  // namespace spm::stats
