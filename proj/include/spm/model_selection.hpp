#pragma once

#include "spm/init.hpp"
#include "spm/phmm.hpp"

namespace spm::phmm {

struct ModelChoice {
  ModelParams model;
  PosteriorSummary posterior;
  double aic = 0.0;
};

/// Fits candidate state counts n_min..n_max, each initialized through the
/// init module (robust one-state estimate, then the candidate search for
/// larger counts), and returns the fit with the minimum AIC. Candidates
/// whose fit fails are skipped; throws ModelSelectionError when none
/// survive. n_min must be at least the number of distinct observed labels
/// and at least the largest labeled state index.
ModelChoice select_model(const ObservationStream& stream, int n_min, int n_max,
                         const init::InitSearchConfig& cfg,
                         const FitOptions& fit_options = {});

}  // namespace spm::phmm
