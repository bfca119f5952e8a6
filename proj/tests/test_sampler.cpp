#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "oracles.hpp"
#include "spm/rng.hpp"
#include "spm/sampler.hpp"

using namespace spm;
using phmm::Matrix;
using phmm::ModelParams;
using phmm::Vector;
using sampler::EndpointConstraint;

TEST_CASE("unconstrained first step is the initial distribution") {
  Rng rng(200);
  const ModelParams model = oracles::random_model(3, 2, rng);
  const Vector probs = sampler::conditional_step_probs(
      model, 1, std::nullopt, EndpointConstraint{std::nullopt, std::nullopt, 6});
  CHECK((probs - model.initial).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("free-end steps follow the transition rows") {
  Rng rng(201);
  const ModelParams model = oracles::random_model(3, 2, rng);
  for (int current = 1; current <= 3; ++current) {
    const Vector probs = sampler::conditional_step_probs(
        model, 4, current, EndpointConstraint{std::nullopt, std::nullopt, 8});
    CHECK((probs - model.transition.row(current - 1).transpose())
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }
}

TEST_CASE("bridge distributions match path enumeration") {
  Rng rng(202);
  for (int rep = 0; rep < 20; ++rep) {
    const int n = 2 + rng.uniform_int(0, 1);
    const ModelParams model = oracles::random_model(n, 1, rng);
    const int T = 4 + rng.uniform_int(0, 1);
    const int start = 1 + rng.uniform_int(0, n - 1);
    const int end = 1 + rng.uniform_int(0, n - 1);
    const EndpointConstraint constraint{start, end, T};

    // Chain the per-step conditionals into marginals and compare against
    // brute-force enumeration over all n^T paths.
    Matrix marginals = Matrix::Zero(T, n);
    const Vector first = sampler::conditional_step_probs(model, 1, std::nullopt, constraint);
    marginals.row(0) = first.transpose();
    for (int t = 2; t <= T; ++t) {
      for (int i = 1; i <= n; ++i) {
        if (marginals(t - 2, i - 1) == 0.0) continue;
        const Vector step = sampler::conditional_step_probs(model, t, i, constraint);
        marginals.row(t - 1) += marginals(t - 2, i - 1) * step.transpose();
      }
    }
    const Matrix expected = oracles::enumerate_bridge_marginals(model, T, start, end);
    CHECK((marginals - expected).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("conditional distributions are simplex vectors") {
  Rng rng(203);
  for (int rep = 0; rep < 30; ++rep) {
    const int n = 1 + rng.uniform_int(0, 3);
    const ModelParams model = oracles::random_model(n, 1, rng);
    const int T = 2 + rng.uniform_int(0, 5);
    EndpointConstraint constraint{std::nullopt, std::nullopt, T};
    if (rng.uniform() < 0.5) constraint.start = 1 + rng.uniform_int(0, n - 1);
    if (rng.uniform() < 0.5) constraint.end = 1 + rng.uniform_int(0, n - 1);
    const sampler::SequenceSampler seq(model, constraint);
    for (int t = 1; t <= T; ++t) {
      const std::optional<int> current =
          t == 1 ? std::nullopt : std::optional<int>(1 + rng.uniform_int(0, n - 1));
      const Vector probs = seq.step_probs(t, current);
      CHECK(probs.minCoeff() >= 0.0);
      CHECK(std::abs(probs.sum() - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("simulated sequences honor both endpoints") {
  Rng rng(204);
  const ModelParams model = oracles::random_model(3, 2, rng);
  for (int rep = 0; rep < 100; ++rep) {
    const int start = 1 + rng.uniform_int(0, 2);
    const int end = 1 + rng.uniform_int(0, 2);
    const auto seq = sampler::simulate_sequence(
        model, EndpointConstraint{start, end, 7}, derive_seed(204, {static_cast<std::uint64_t>(rep)}));
    CHECK(seq.states.front() == start);
    CHECK(seq.states.back() == end);
    CHECK(seq.observations.rows() == 7);
  }
}

TEST_CASE("one-state models emit constant state one") {
  Rng rng(205);
  const ModelParams model = oracles::random_model(1, 3, rng);
  const auto seq = sampler::simulate_sequence(
      model, EndpointConstraint{std::nullopt, std::nullopt, 20}, 42);
  for (int s : seq.states) CHECK(s == 1);
}

TEST_CASE("empirical bridge frequencies match the conditional distributions") {
  Rng rng(206);
  const ModelParams model = oracles::random_model(2, 1, rng);
  const int T = 5;
  const EndpointConstraint constraint{std::nullopt, 2, T};
  const sampler::SequenceSampler seq(model, constraint);

  const int draws = 100000;
  Matrix counts = Matrix::Zero(T, 2);
  Rng draw_rng(777);
  for (int k = 0; k < draws; ++k) {
    const auto states = seq.draw_states(draw_rng);
    for (int t = 0; t < T; ++t) {
      counts(t, states[static_cast<std::size_t>(t)] - 1) += 1.0;
    }
  }
  counts /= static_cast<double>(draws);

  const Matrix expected = oracles::enumerate_bridge_marginals(model, T, 0, 2);
  CHECK((counts - expected).cwiseAbs().maxCoeff() < 0.01);
}

TEST_CASE("unconstrained state frequencies follow the chain marginals") {
  Rng rng(207);
  const ModelParams model = oracles::random_model(2, 1, rng);
  const int T = 6;
  const sampler::SequenceSampler seq(
      model, EndpointConstraint{std::nullopt, std::nullopt, T});
  const int draws = 50000;
  Vector freq_state1 = Vector::Zero(T);
  Rng draw_rng(778);
  for (int k = 0; k < draws; ++k) {
    const auto states = seq.draw_states(draw_rng);
    for (int t = 0; t < T; ++t) {
      if (states[static_cast<std::size_t>(t)] == 1) freq_state1[t] += 1.0;
    }
  }
  freq_state1 /= static_cast<double>(draws);

  Vector marginal = model.initial;
  for (int t = 0; t < T; ++t) {
    CHECK(std::abs(freq_state1[t] - marginal[0]) < 0.01);
    marginal = model.transition.transpose() * marginal;
  }
}

TEST_CASE("identical seeds reproduce sequences bit for bit") {
  Rng rng(208);
  const ModelParams model = oracles::random_model(3, 4, rng);
  const EndpointConstraint constraint{1, 2, 25};
  const auto a = sampler::simulate_sequence(model, constraint, 90210);
  const auto b = sampler::simulate_sequence(model, constraint, 90210);
  CHECK(a.states == b.states);
  CHECK((a.observations.array() == b.observations.array()).all());
  const auto c = sampler::simulate_sequence(model, constraint, 90211);
  CHECK(a.states != c.states);  // different seed, different path (w.h.p.)
}

TEST_CASE("unreachable endpoints raise an infeasible-constraint error") {
  ModelParams model;
  model.initial = Vector::Zero(2);
  model.initial[0] = 1.0;
  model.transition.resize(2, 2);
  model.transition << 1.0, 0.0, 0.0, 1.0;  // absorbing states
  model.means = {Vector::Zero(1), Vector::Ones(1)};
  model.covariance = Matrix::Identity(1, 1);
  CHECK_THROWS_AS(
      sampler::simulate_sequence(model, EndpointConstraint{1, 2, 4}, 5),
      InfeasibleConstraintError);
  CHECK_THROWS_AS(
      sampler::simulate_sequence(model, EndpointConstraint{1, 2, 1}, 5),
      InfeasibleConstraintError);
}
