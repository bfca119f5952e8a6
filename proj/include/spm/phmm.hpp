#pragma once

#include <utility>
#include <vector>

#include "spm/core_stats.hpp"

namespace spm::phmm {

using stats::Matrix;
using stats::Vector;

/// Parameters of a Gaussian hidden Markov model with a shared covariance
/// matrix across states. State indices are 1-based throughout the public
/// API (state 1 is the in-control state); matrix row/column i-1 holds
/// state i.
struct ModelParams {
  Vector initial;              // length N, sums to 1
  Matrix transition;           // N x N, row-stochastic
  std::vector<Vector> means;   // N vectors of length p
  Matrix covariance;           // p x p SPD, shared by all states

  int n_states() const { return static_cast<int>(initial.size()); }
  int dim() const { return static_cast<int>(covariance.rows()); }

  /// Throws on broken simplex/stochasticity/SPD invariants.
  void validate() const;
};

/// A measurement stream with a partial label track. labels[t] is 0 when
/// the state at t is unknown and the 1-based state index otherwise.
/// The first t_init rows are the initial in-control block when the stream
/// is used to start a monitoring run.
struct ObservationStream {
  Matrix observations;      // T x p
  std::vector<int> labels;  // length T, 0 = unlabeled
  int t_init = 0;

  int length() const { return static_cast<int>(observations.rows()); }
  int dim() const { return static_cast<int>(observations.cols()); }
};

/// Smoothed posterior quantities for one stream under one model.
struct PosteriorSummary {
  Matrix gamma;           // T x N, rows sum to 1; one-hot at labeled t
  Matrix xi_sums;         // N x N, sum over t of transition posteriors
  double log_likelihood;  // equals sum of log scale factors
  Vector scale_factors;   // length T, per-step normalizers
};

/// Constrained forward-backward pass with per-step scaling. Labeled
/// positions contribute probability mass only to their labeled state;
/// their gamma rows come out exactly one-hot. Throws
/// ImpossibleLabelingError when the labeling leaves zero mass at a step.
PosteriorSummary forward_backward(const ObservationStream& stream,
                                  const ModelParams& model);

/// One EM iteration: E-step via forward_backward, then the M-step
/// re-estimates pi from gamma(1), the transition rows from xi/gamma
/// ratios, per-state means from gamma-weighted averages, and the shared
/// covariance by pooling the weighted scatters over all states. Returns
/// the updated model and the log-likelihood of the *input* model. Throws
/// StarvedStateError when a state's total posterior mass vanishes.
std::pair<ModelParams, double> em_step(const ObservationStream& stream,
                                       const ModelParams& model);

struct FitOptions {
  int max_iter = 100;
  double tol = 1e-6;  // absolute log-likelihood change
};

struct FitResult {
  ModelParams model;
  PosteriorSummary posterior;           // of the returned model
  std::vector<double> likelihood_trace; // log-likelihood per iterate
};

/// Iterates em_step until the log-likelihood change drops below tol or
/// max_iter iterations have run.
FitResult fit(const ObservationStream& stream, const ModelParams& init,
              const FitOptions& options = {});

struct StatePrediction {
  Vector probabilities;  // gamma row
  int state;             // 1-based argmax, ties to the smallest index
};

/// Posterior of the state at position t (1-based).
StatePrediction predict_state(const PosteriorSummary& summary, int t);

/// Akaike information criterion with the shared-covariance parameter
/// count: -2 ll + 2 [N-1 + N(N-1) + N p + p(p+1)/2].
double aic(const ModelParams& model, double log_likelihood);

}  // namespace spm::phmm
