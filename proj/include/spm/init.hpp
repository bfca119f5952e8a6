#pragma once

#include <vector>

#include "spm/phmm.hpp"

namespace spm::init {

using phmm::Matrix;
using phmm::ModelParams;
using phmm::ObservationStream;
using phmm::Vector;

/// Knobs of the initialization search. window_k is the moving-average
/// window used to locate candidate out-of-control segments, n_try caps
/// how many candidate starting means are fitted, diag_init is the
/// self-transition probability of fresh transition matrices.
struct InitSearchConfig {
  int window_k = 5;
  int n_try = 10;
  double diag_init = 0.99;

  void validate() const;
};

/// One-state model from a robust location/scatter estimate of the whole
/// stream: the bulk of the data is assumed in-control, so a trimming
/// estimator recovers the in-control parameters even in the presence of
/// out-of-control segments. Requires T > p + 1.
ModelParams init_one_state(const ObservationStream& stream);

/// Candidate n-state starting points (n >= 2). The stream's moving
/// average is ranked by Mahalanobis distance from the already-estimated
/// means (for n = 2, distance from the one-state location; for n > 2,
/// each row's smallest distance to the (n-1)-state model's means), both
/// measured under the one-state scatter. The top rows, thinned so that
/// candidates are at least 0.5 apart in Mahalanobis distance, each seed
/// one candidate: previous means carried over, the new state's mean set
/// to the row, covariance reset to the one-state scatter, initial
/// distribution on state 1, transition diagonal diag_init.
///
/// prev_models must hold fitted models with 1..n-1 states in order.
std::vector<ModelParams> init_candidates(const ObservationStream& stream,
                                         const std::vector<ModelParams>& prev_models,
                                         int n, const InitSearchConfig& cfg);

/// Fits every candidate from init_candidates and returns the fit with the
/// maximum log-likelihood (first index wins ties). Candidates whose fit
/// fails are skipped; throws ModelSelectionError if none survive.
phmm::FitResult init_search(const ObservationStream& stream,
                            const std::vector<ModelParams>& prev_models,
                            int n, const InitSearchConfig& cfg,
                            const phmm::FitOptions& fit_options = {});

}  // namespace spm::init
