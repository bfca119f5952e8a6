#include "spm/phmm.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace spm::phmm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kStarvationTol = 1e-8;
// Transition probabilities are floored at this value after each M-step.
// An exact zero would make any later label that needs the transition
// permanently impossible; a subnormal floor keeps it reachable while
// perturbing the likelihood far below every tolerance in use.
constexpr double kTransitionFloor = 1e-300;

double log_sum_exp(const Vector& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;  // all -inf (or a NaN already present)
  return m + std::log((v.array() - m).exp().sum());
}

void check_inputs(const ObservationStream& stream, const ModelParams& model) {
  const int n = model.n_states();
  if (stream.dim() != model.dim()) {
    throw std::invalid_argument("forward_backward: observation dimension " +
                                std::to_string(stream.dim()) +
                                " does not match model dimension " +
                                std::to_string(model.dim()));
  }
  if (stream.labels.size() != static_cast<std::size_t>(stream.length())) {
    throw std::invalid_argument("forward_backward: label track length mismatch");
  }
  for (int label : stream.labels) {
    if (label < 0 || label > n) {
      throw std::invalid_argument("forward_backward: label " +
                                  std::to_string(label) +
                                  " outside 1.." + std::to_string(n));
    }
  }
}

}  // namespace

void ModelParams::validate() const {
  const int n = n_states();
  if (n < 1) throw std::invalid_argument("model must have at least one state");
  if (transition.rows() != n || transition.cols() != n) {
    throw std::invalid_argument("transition matrix shape mismatch");
  }
  if (static_cast<int>(means.size()) != n) {
    throw std::invalid_argument("means count does not match state count");
  }
  if (std::abs(initial.sum() - 1.0) > 1e-10 || initial.minCoeff() < 0.0) {
    throw std::invalid_argument("initial distribution is not a simplex vector");
  }
  for (int i = 0; i < n; ++i) {
    if (std::abs(transition.row(i).sum() - 1.0) > 1e-10 ||
        transition.row(i).minCoeff() < 0.0) {
      throw std::invalid_argument("transition row " + std::to_string(i + 1) +
                                  " is not a probability vector");
    }
    if (means[static_cast<std::size_t>(i)].size() != covariance.rows()) {
      throw std::invalid_argument("mean dimension mismatch");
    }
  }
  stats::CholeskyFactor::compute(covariance);  // throws if not SPD
}

PosteriorSummary forward_backward(const ObservationStream& stream,
                                  const ModelParams& model) {
  check_inputs(stream, model);
  const int T = stream.length();
  const int N = model.n_states();
  if (T == 0) throw std::invalid_argument("forward_backward: empty stream");

  const stats::CholeskyFactor chol =
      stats::CholeskyFactor::compute(model.covariance);

  // Emission log-densities for every (t, state) pair; shared covariance
  // means one factorization serves all states.
  Matrix log_b(T, N);
  for (int i = 0; i < N; ++i) {
    log_b.col(i) = chol.log_density_rows(stream.observations,
                                         model.means[static_cast<std::size_t>(i)]);
  }

  const auto allowed = [&](int t, int i) {
    const int label = stream.labels[static_cast<std::size_t>(t)];
    return label == 0 || label == i + 1;
  };

  // Scaled forward pass. alpha_hat rows are normalized to sum 1; the sum
  // of the per-step log normalizers recovers the log-likelihood.
  Matrix alpha_hat(T, N);
  Vector log_scale(T);
  Vector u(N);
  for (int i = 0; i < N; ++i) {
    u[i] = allowed(0, i) ? std::log(model.initial[i]) + log_b(0, i) : kNegInf;
  }
  log_scale[0] = log_sum_exp(u);
  if (!std::isfinite(log_scale[0])) {
    throw ImpossibleLabelingError("labeling leaves no admissible state at t=1", 1);
  }
  alpha_hat.row(0) = (u.array() - log_scale[0]).exp();

  for (int t = 1; t < T; ++t) {
    const Vector mass = model.transition.transpose() * alpha_hat.row(t - 1).transpose();
    for (int i = 0; i < N; ++i) {
      u[i] = allowed(t, i) ? log_b(t, i) + std::log(mass[i]) : kNegInf;
    }
    log_scale[t] = log_sum_exp(u);
    if (!std::isfinite(log_scale[t])) {
      throw ImpossibleLabelingError(
          "labeling leaves no admissible state at t=" + std::to_string(t + 1),
          t + 1);
    }
    alpha_hat.row(t) = (u.array() - log_scale[t]).exp();
  }

  // Scaled backward pass, in log space. The label mask applies at every
  // step including T; without it the smoothed posteriors before a labeled
  // endpoint would ignore that label.
  Matrix log_beta(T, N);
  for (int i = 0; i < N; ++i) {
    log_beta(T - 1, i) = allowed(T - 1, i) ? 0.0 : kNegInf;
  }
  Matrix log_a = model.transition.array().log();
  Vector terms(N);
  for (int t = T - 2; t >= 0; --t) {
    for (int i = 0; i < N; ++i) {
      if (!allowed(t, i)) {
        log_beta(t, i) = kNegInf;
        continue;
      }
      for (int j = 0; j < N; ++j) {
        terms[j] = log_a(i, j) + log_b(t + 1, j) + log_beta(t + 1, j);
      }
      log_beta(t, i) = log_sum_exp(terms) - log_scale[t + 1];
    }
  }

  PosteriorSummary out;
  out.log_likelihood = log_scale.sum();
  out.scale_factors = log_scale.array().exp();

  out.gamma.resize(T, N);
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < N; ++i) {
      const double a = alpha_hat(t, i);
      u[i] = a > 0.0 ? std::log(a) + log_beta(t, i) : kNegInf;
    }
    const double z = log_sum_exp(u);
    out.gamma.row(t) = (u.array() - z).exp();
  }

  out.xi_sums = Matrix::Zero(N, N);
  Matrix log_xi(N, N);
  for (int t = 0; t + 1 < T; ++t) {
    for (int i = 0; i < N; ++i) {
      const double a = alpha_hat(t, i);
      const double la = a > 0.0 ? std::log(a) : kNegInf;
      for (int j = 0; j < N; ++j) {
        log_xi(i, j) = la + log_a(i, j) + log_b(t + 1, j) + log_beta(t + 1, j);
      }
    }
    const double m = log_xi.maxCoeff();
    Matrix w = (log_xi.array() - m).exp();
    out.xi_sums += w / w.sum();
  }
  return out;
}

namespace {

ModelParams m_step(const ObservationStream& stream, const ModelParams& model,
                   const PosteriorSummary& post) {
  const int T = stream.length();
  const int N = model.n_states();
  const int p = model.dim();

  const Vector occupancy = post.gamma.colwise().sum();
  for (int i = 0; i < N; ++i) {
    if (occupancy[i] < kStarvationTol) {
      throw StarvedStateError("state " + std::to_string(i + 1) +
                                  " received no posterior mass",
                              i + 1);
    }
  }

  ModelParams next;
  next.initial = post.gamma.row(0);

  next.transition.resize(N, N);
  const Vector occupancy_to_Tm1 =
      occupancy - post.gamma.row(T - 1).transpose();
  for (int i = 0; i < N; ++i) {
    if (T > 1 && occupancy_to_Tm1[i] > 1e-12) {
      next.transition.row(i) = post.xi_sums.row(i) / occupancy_to_Tm1[i];
    } else {
      // No transitions out of this state are observed; keep the old row.
      next.transition.row(i) = model.transition.row(i);
    }
    next.transition.row(i) = next.transition.row(i).cwiseMax(kTransitionFloor);
    next.transition.row(i) /= next.transition.row(i).sum();
  }

  next.means.resize(static_cast<std::size_t>(N));
  for (int i = 0; i < N; ++i) {
    next.means[static_cast<std::size_t>(i)] =
        (stream.observations.transpose() * post.gamma.col(i)) / occupancy[i];
  }

  // Pooled covariance shared by all states.
  Matrix sigma = Matrix::Zero(p, p);
  for (int i = 0; i < N; ++i) {
    Matrix centered = stream.observations;
    centered.rowwise() -= next.means[static_cast<std::size_t>(i)].transpose();
    sigma.noalias() +=
        centered.transpose() * post.gamma.col(i).asDiagonal() * centered;
  }
  sigma /= static_cast<double>(T);
  next.covariance = 0.5 * (sigma + sigma.transpose());

  return next;
}

}  // namespace

std::pair<ModelParams, double> em_step(const ObservationStream& stream,
                                       const ModelParams& model) {
  PosteriorSummary post = forward_backward(stream, model);
  ModelParams next = m_step(stream, model, post);
  return {std::move(next), post.log_likelihood};
}

FitResult fit(const ObservationStream& stream, const ModelParams& init,
              const FitOptions& options) {
  FitResult result;
  result.model = init;
  result.posterior = forward_backward(stream, result.model);
  result.likelihood_trace.push_back(result.posterior.log_likelihood);

  for (int iter = 0; iter < options.max_iter; ++iter) {
    ModelParams next = m_step(stream, result.model, result.posterior);
    PosteriorSummary next_post = forward_backward(stream, next);
    const double improvement =
        next_post.log_likelihood - result.posterior.log_likelihood;
    result.model = std::move(next);
    result.posterior = std::move(next_post);
    result.likelihood_trace.push_back(result.posterior.log_likelihood);
    if (std::abs(improvement) < options.tol) break;
  }
  return result;
}

StatePrediction predict_state(const PosteriorSummary& summary, int t) {
  const int T = static_cast<int>(summary.gamma.rows());
  if (t < 1 || t > T) {
    throw std::invalid_argument("predict_state: t outside 1..T");
  }
  StatePrediction pred;
  pred.probabilities = summary.gamma.row(t - 1);
  int best = 0;
  for (int i = 1; i < pred.probabilities.size(); ++i) {
    if (pred.probabilities[i] > pred.probabilities[best]) best = i;
  }
  pred.state = best + 1;
  return pred;
}

double aic(const ModelParams& model, double log_likelihood) {
  const double n = model.n_states();
  const double p = model.dim();
  const double k = (n - 1) + n * (n - 1) + n * p + p * (p + 1) / 2.0;
  return -2.0 * log_likelihood + 2.0 * k;
}

}  // namespace spm::phmm
