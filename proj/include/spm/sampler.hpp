#pragma once

#include <optional>
#include <vector>

#include "spm/phmm.hpp"
#include "spm/rng.hpp"

namespace spm::sampler {

using phmm::Matrix;
using phmm::ModelParams;
using phmm::Vector;

/// Sequence length plus optionally pinned first and/or last states
/// (1-based indices).
struct EndpointConstraint {
  std::optional<int> start;
  std::optional<int> end;
  int length = 1;
};

/// Distribution of the state at position t (1-based) given the state at
/// t-1 (`current`, required for t >= 2) and the endpoint constraint:
///   - free start, free end, t=1: the initial distribution;
///   - known current, free end: the current state's transition row;
///   - fixed end: the bridge posterior built from one forward step and a
///     backward indicator recursion through the transition matrix.
/// Throws InfeasibleConstraintError when the fixed end is unreachable.
Vector conditional_step_probs(const ModelParams& model, int t,
                              std::optional<int> current,
                              const EndpointConstraint& constraint);

struct SimulatedSequence {
  std::vector<int> states;  // 1-based
  Matrix observations;      // length x p
};

/// Draws a state path honoring the endpoint constraint, then draws each
/// observation from its state's Gaussian. Deterministic given the seed.
SimulatedSequence simulate_sequence(const ModelParams& model,
                                    const EndpointConstraint& constraint,
                                    std::uint64_t seed);

/// Re-usable sampler: the backward indicator table for a fixed endpoint
/// is computed once per (model, constraint) and shared by every draw,
/// which matters when thousands of bootstrap sequences come from the
/// same fitted model.
class SequenceSampler {
 public:
  SequenceSampler(const ModelParams& model, EndpointConstraint constraint);

  /// Per-step conditional used for position t given the previous state.
  Vector step_probs(int t, std::optional<int> current) const;

  SimulatedSequence draw(Rng& rng) const;

  /// States only; skips the Gaussian emissions.
  std::vector<int> draw_states(Rng& rng) const;

 private:
  ModelParams model_;
  EndpointConstraint constraint_;
  Matrix backward_;  // backward_(t-1, h) = p(x_T = end | x_t = h+1)
  stats::CholeskyFactor chol_;
};

}  // namespace spm::sampler
