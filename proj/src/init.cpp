#include "spm/init.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace spm::init {

void InitSearchConfig::validate() const {
  if (window_k < 1) throw ConfigError("window_k must be >= 1");
  if (n_try < 1) throw ConfigError("n_try must be >= 1");
  if (diag_init <= 0.0 || diag_init >= 1.0) {
    throw ConfigError("diag_init must lie in (0, 1)");
  }
}

ModelParams init_one_state(const ObservationStream& stream) {
  const stats::RobustEstimate est =
      stats::robust_location_scatter(stream.observations);
  ModelParams model;
  model.initial = Vector::Ones(1);
  model.transition = Matrix::Ones(1, 1);
  model.means = {est.location};
  model.covariance = est.scatter;
  return model;
}

std::vector<ModelParams> init_candidates(const ObservationStream& stream,
                                         const std::vector<ModelParams>& prev_models,
                                         int n, const InitSearchConfig& cfg) {
  cfg.validate();
  if (n < 2) throw std::invalid_argument("init_candidates: n must be >= 2");
  if (prev_models.size() < static_cast<std::size_t>(n - 1)) {
    throw std::invalid_argument(
        "init_candidates: need fitted models with 1.." + std::to_string(n - 1) +
        " states");
  }
  for (int k = 0; k < n - 1; ++k) {
    if (prev_models[static_cast<std::size_t>(k)].n_states() != k + 1) {
      throw std::invalid_argument("init_candidates: prev_models out of order");
    }
  }

  const ModelParams& one_state = prev_models.front();
  const ModelParams& parent = prev_models[static_cast<std::size_t>(n - 2)];
  const stats::CholeskyFactor base_chol =
      stats::CholeskyFactor::compute(one_state.covariance);

  const int window = std::min(cfg.window_k, stream.length());
  const Matrix smoothed = stats::moving_average(stream.observations, window);

  // Rank smoothed rows by how far they sit from everything already
  // explained: the new state's mean should land on the least explained
  // stretch of the stream.
  const auto T = smoothed.rows();
  Vector score = Vector::Constant(T, std::numeric_limits<double>::infinity());
  for (const Vector& mean : parent.means) {
    score = score.cwiseMin(base_chol.mahalanobis_sq_rows(smoothed, mean));
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(T));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    if (score[a] != score[b]) return score[a] > score[b];
    return a < b;
  });

  // Thin near-duplicates: consecutive moving-average rows are nearly
  // equal by construction and would burn n_try on identical starts.
  constexpr double kMinSeparation = 0.5;
  std::vector<Eigen::Index> picked;
  for (const auto idx : order) {
    if (static_cast<int>(picked.size()) >= cfg.n_try) break;
    bool distinct = true;
    for (const auto prev : picked) {
      const double d2 = base_chol.mahalanobis_sq(smoothed.row(idx).transpose(),
                                                 smoothed.row(prev).transpose());
      if (std::sqrt(d2) < kMinSeparation) {
        distinct = false;
        break;
      }
    }
    if (distinct) picked.push_back(idx);
  }

  const double off_diag = (1.0 - cfg.diag_init) / static_cast<double>(n - 1);
  Matrix transition = Matrix::Constant(n, n, off_diag);
  transition.diagonal().setConstant(cfg.diag_init);
  Vector initial = Vector::Zero(n);
  initial[0] = 1.0;

  std::vector<ModelParams> candidates;
  candidates.reserve(picked.size());
  for (const auto idx : picked) {
    ModelParams cand;
    cand.initial = initial;
    cand.transition = transition;
    cand.means = parent.means;
    cand.means.push_back(smoothed.row(idx).transpose());
    cand.covariance = one_state.covariance;
    candidates.push_back(std::move(cand));
  }
  return candidates;
}

phmm::FitResult init_search(const ObservationStream& stream,
                            const std::vector<ModelParams>& prev_models,
                            int n, const InitSearchConfig& cfg,
                            const phmm::FitOptions& fit_options) {
  const auto candidates = init_candidates(stream, prev_models, n, cfg);
  bool have_best = false;
  phmm::FitResult best;
  for (const auto& candidate : candidates) {
    try {
      phmm::FitResult result = phmm::fit(stream, candidate, fit_options);
      if (!have_best ||
          result.posterior.log_likelihood > best.posterior.log_likelihood) {
        best = std::move(result);
        have_best = true;
      }
    } catch (const Error&) {
      // Candidate collapsed (starved state, impossible labeling, singular
      // covariance); the remaining starts still compete.
    }
  }
  if (!have_best) {
    throw ModelSelectionError("init_search: every candidate fit failed for n=" +
                              std::to_string(n));
  }
  return best;
}

}  // namespace spm::init
