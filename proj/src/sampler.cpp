#include "spm/sampler.hpp"

#include <cmath>
#include <string>

namespace spm::sampler {

namespace {

void check_constraint(const ModelParams& model,
                      const EndpointConstraint& constraint) {
  const int n = model.n_states();
  if (constraint.length < 1) {
    throw std::invalid_argument("constraint length must be >= 1");
  }
  for (const auto& endpoint : {constraint.start, constraint.end}) {
    if (endpoint && (*endpoint < 1 || *endpoint > n)) {
      throw std::invalid_argument("endpoint state " + std::to_string(*endpoint) +
                                  " outside 1.." + std::to_string(n));
    }
  }
  if (constraint.length == 1 && constraint.start && constraint.end &&
      *constraint.start != *constraint.end) {
    throw InfeasibleConstraintError(
        "length-1 sequence cannot start and end in different states");
  }
}

int sample_index(const Vector& probs, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<int>(i) + 1;
  }
  // Rounding left u just above the accumulated mass; return the last
  // state with positive probability.
  for (Eigen::Index i = probs.size(); i-- > 0;) {
    if (probs[i] > 0.0) return static_cast<int>(i) + 1;
  }
  throw InfeasibleConstraintError("degenerate step distribution: all mass zero");
}

Vector normalized_or_throw(Vector v, int t) {
  const double total = v.sum();
  if (!(total > 0.0)) {
    throw InfeasibleConstraintError(
        "endpoint constraint unreachable from step " + std::to_string(t));
  }
  return v / total;
}

}  // namespace

SequenceSampler::SequenceSampler(const ModelParams& model,
                                 EndpointConstraint constraint)
    : model_(model),
      constraint_(constraint),
      chol_(stats::CholeskyFactor::compute(model.covariance)) {
  check_constraint(model, constraint_);
  if (constraint_.end) {
    const int n = model_.n_states();
    const int T = constraint_.length;
    backward_.resize(T, n);
    backward_.row(T - 1).setZero();
    backward_(T - 1, *constraint_.end - 1) = 1.0;
    for (int t = T - 2; t >= 0; --t) {
      backward_.row(t) =
          (model_.transition * backward_.row(t + 1).transpose()).transpose();
    }
  }
}

Vector SequenceSampler::step_probs(int t, std::optional<int> current) const {
  const int n = model_.n_states();
  if (t < 1 || t > constraint_.length) {
    throw std::invalid_argument("step index outside the sequence");
  }
  if (t == 1) {
    if (constraint_.start) {
      Vector v = Vector::Zero(n);
      v[*constraint_.start - 1] = 1.0;
      return v;
    }
    if (constraint_.end) {
      const Vector v =
          model_.initial.cwiseProduct(backward_.row(0).transpose());
      return normalized_or_throw(v, t);
    }
    return model_.initial;
  }
  if (!current) {
    throw std::invalid_argument("steps beyond the first need the current state");
  }
  const Vector row = model_.transition.row(*current - 1).transpose();
  if (!constraint_.end) return row;
  const Vector v = row.cwiseProduct(backward_.row(t - 1).transpose());
  return normalized_or_throw(v, t);
}

std::vector<int> SequenceSampler::draw_states(Rng& rng) const {
  std::vector<int> states(static_cast<std::size_t>(constraint_.length));
  std::optional<int> current;
  for (int t = 1; t <= constraint_.length; ++t) {
    const Vector probs = step_probs(t, current);
    current = sample_index(probs, rng);
    states[static_cast<std::size_t>(t - 1)] = *current;
  }
  return states;
}

SimulatedSequence SequenceSampler::draw(Rng& rng) const {
  SimulatedSequence seq;
  seq.states = draw_states(rng);
  const int p = model_.dim();
  seq.observations.resize(constraint_.length, p);
  Vector z(p);
  for (int t = 0; t < constraint_.length; ++t) {
    for (int j = 0; j < p; ++j) z[j] = rng.normal();
    seq.observations.row(t) =
        chol_
            .affine(model_.means[static_cast<std::size_t>(seq.states[static_cast<std::size_t>(t)] - 1)],
                    z)
            .transpose();
  }
  return seq;
}

Vector conditional_step_probs(const ModelParams& model, int t,
                              std::optional<int> current,
                              const EndpointConstraint& constraint) {
  return SequenceSampler(model, constraint).step_probs(t, current);
}

SimulatedSequence simulate_sequence(const ModelParams& model,
                                    const EndpointConstraint& constraint,
                                    std::uint64_t seed) {
  Rng rng(seed);
  return SequenceSampler(model, constraint).draw(rng);
}

}  // namespace spm::sampler
