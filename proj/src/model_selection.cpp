#include "spm/model_selection.hpp"

#include <set>
#include <string>

namespace spm::phmm {

ModelChoice select_model(const ObservationStream& stream, int n_min, int n_max,
                         const init::InitSearchConfig& cfg,
                         const FitOptions& fit_options) {
  std::set<int> distinct;
  int max_label = 0;
  for (int label : stream.labels) {
    if (label > 0) {
      distinct.insert(label);
      max_label = std::max(max_label, label);
    }
  }
  const int floor = std::max({1, static_cast<int>(distinct.size()), max_label});
  if (n_min < floor) {
    throw std::invalid_argument("select_model: n_min=" + std::to_string(n_min) +
                                " below the observed-label floor " +
                                std::to_string(floor));
  }
  if (n_max < n_min) {
    throw std::invalid_argument("select_model: n_max < n_min");
  }

  // The candidate search for n states needs fitted models with fewer
  // states, so the ladder is built from 1 upward even when n_min > 1.
  // Ladder-only fits (n below n_min) mask out labels above n: they only
  // supply starting means and a small model cannot honor those labels.
  const auto masked = [&stream](int n) {
    ObservationStream copy = stream;
    for (auto& label : copy.labels) {
      if (label > n) label = 0;
    }
    return copy;
  };

  std::vector<ModelParams> ladder;
  bool have_best = false;
  ModelChoice best;
  std::string last_error = "no candidates attempted";

  for (int n = 1; n <= n_max; ++n) {
    FitResult result;
    bool ok = false;
    try {
      if (n == 1) {
        // The robust estimate anchors every candidate search: its scatter
        // is the Mahalanobis metric and the candidates' covariance. The
        // EM-fitted one-state model only competes in the AIC sweep; its
        // maximum-likelihood covariance absorbs out-of-control segments
        // and must not weaken the ranking.
        ladder.push_back(init::init_one_state(stream));
        if (max_label <= 1) {
          result = fit(stream, ladder.front(), fit_options);
          ok = true;
        }
      } else if (n < n_min) {
        result = init::init_search(masked(n), ladder, n, cfg, fit_options);
        ok = true;
      } else {
        result = init::init_search(stream, ladder, n, cfg, fit_options);
        ok = true;
      }
    } catch (const Error& e) {
      last_error = e.what();
    }
    if (!ok) {
      if (static_cast<int>(ladder.size()) < n) break;  // cannot seed larger n
      continue;
    }

    if (n > 1) ladder.push_back(result.model);
    if (n < n_min) continue;

    const double score = aic(result.model, result.posterior.log_likelihood);
    if (!have_best || score < best.aic) {
      best.model = std::move(result.model);
      best.posterior = std::move(result.posterior);
      best.aic = score;
      have_best = true;
    }
  }

  if (!have_best) {
    throw ModelSelectionError("select_model: all candidates failed (" +
                              last_error + ")");
  }
  return best;
}

}  // namespace spm::phmm
