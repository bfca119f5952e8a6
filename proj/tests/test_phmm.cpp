#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "oracles.hpp"
#include "spm/model_io.hpp"
#include "spm/model_selection.hpp"
#include "spm/phmm.hpp"
#include "spm/rng.hpp"

using namespace spm;
using phmm::Matrix;
using phmm::ModelParams;
using phmm::ObservationStream;
using phmm::Vector;

namespace {

bool close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

ModelParams single_state_model(const Vector& mean, const Matrix& cov) {
  ModelParams m;
  m.initial = Vector::Ones(1);
  m.transition = Matrix::Ones(1, 1);
  m.means = {mean};
  m.covariance = cov;
  return m;
}

ObservationStream two_cluster_stream(int T, double separation, double label_prob,
                                     Rng& rng) {
  ModelParams truth;
  truth.initial = Vector::Constant(2, 0.5);
  truth.transition.resize(2, 2);
  truth.transition << 0.95, 0.05, 0.1, 0.9;
  truth.means = {Vector::Zero(2), Vector::Constant(2, separation / std::sqrt(2.0))};
  truth.covariance = Matrix::Identity(2, 2);
  return oracles::random_stream(truth, T, label_prob, rng);
}

}  // namespace

TEST_CASE("forward_backward on a single-state model") {
  Rng rng(1);
  const int T = 12;
  const Matrix cov = oracles::random_spd(2, rng);
  const ModelParams model = single_state_model(Vector::Zero(2), cov);
  ObservationStream stream;
  stream.observations.resize(T, 2);
  for (Eigen::Index i = 0; i < stream.observations.size(); ++i) {
    stream.observations.reshaped()[i] = rng.normal();
  }
  stream.labels.assign(T, 0);

  const auto post = phmm::forward_backward(stream, model);
  double expected_ll = 0.0;
  for (int t = 0; t < T; ++t) {
    expected_ll += stats::gaussian_logpdf(stream.observations.row(t).transpose(),
                                          {model.means[0], cov});
  }
  CHECK((post.gamma.array() == 1.0).all());
  CHECK(post.log_likelihood == doctest::Approx(expected_ll).epsilon(1e-12));
  // log-likelihood must equal the sum of the log scale factors.
  CHECK(post.scale_factors.array().log().sum() ==
        doctest::Approx(post.log_likelihood).epsilon(1e-12));
}

TEST_CASE("forward_backward with a fully labeled stream is one-hot") {
  Rng rng(2);
  const ModelParams model = oracles::random_model(3, 2, rng);
  ObservationStream stream = oracles::random_stream(model, 9, 1.0, rng);
  const auto post = phmm::forward_backward(stream, model);
  for (int t = 0; t < stream.length(); ++t) {
    for (int i = 0; i < 3; ++i) {
      const double expected = stream.labels[static_cast<std::size_t>(t)] == i + 1 ? 1.0 : 0.0;
      CHECK(post.gamma(t, i) == expected);  // exact by construction
    }
  }
}

TEST_CASE("forward_backward matches exhaustive path enumeration") {
  Rng rng(3);
  int checked = 0;
  for (int rep = 0; rep < 60; ++rep) {
    const int n = 1 + rng.uniform_int(0, 2);
    const int p = 1 + rng.uniform_int(0, 1);
    const int T = 4 + rng.uniform_int(0, 4);
    const ModelParams model = oracles::random_model(n, p, rng);
    const double label_prob = rep % 3 == 0 ? 0.0 : 0.4;
    ObservationStream stream = oracles::random_stream(model, T, label_prob, rng);

    const auto expected = oracles::enumerate_posterior(stream, model);
    const auto actual = phmm::forward_backward(stream, model);
    CHECK(close(actual.log_likelihood, expected.log_likelihood, 1e-9));
    for (int t = 0; t < T; ++t) {
      for (int i = 0; i < n; ++i) {
        CHECK(close(actual.gamma(t, i), expected.gamma(t, i), 1e-9));
      }
    }
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        CHECK(close(actual.xi_sums(i, j), expected.xi_sums(i, j), 1e-9));
      }
    }
    ++checked;
  }
  CHECK(checked == 60);
}

TEST_CASE("forward_backward reports impossible labelings with the time index") {
  ModelParams model;
  model.initial = Vector::Zero(2);
  model.initial[0] = 1.0;  // state 2 unreachable at t=1
  model.transition.resize(2, 2);
  model.transition << 1.0, 0.0, 0.5, 0.5;
  model.means = {Vector::Zero(1), Vector::Ones(1)};
  model.covariance = Matrix::Identity(1, 1);

  ObservationStream stream;
  stream.observations = Matrix::Zero(3, 1);
  stream.labels = {2, 0, 0};
  try {
    phmm::forward_backward(stream, model);
    FAIL("expected ImpossibleLabelingError");
  } catch (const ImpossibleLabelingError& e) {
    CHECK(e.time_index() == 1);
  }

  stream.labels = {1, 0, 2};  // transition 1->...->2 has zero probability
  try {
    phmm::forward_backward(stream, model);
    FAIL("expected ImpossibleLabelingError");
  } catch (const ImpossibleLabelingError& e) {
    CHECK(e.time_index() == 3);
  }
}

TEST_CASE("em_step keeps a degenerate single-state model fixed") {
  Rng rng(4);
  ObservationStream stream;
  stream.observations.resize(30, 2);
  for (Eigen::Index i = 0; i < stream.observations.size(); ++i) {
    stream.observations.reshaped()[i] = rng.normal();
  }
  stream.labels.assign(30, 0);

  // The exact EM fixed point for one state: sample mean and (biased)
  // sample covariance.
  Vector mean = stream.observations.colwise().mean();
  Matrix centered = stream.observations.rowwise() - mean.transpose();
  Matrix cov = centered.transpose() * centered / 30.0;
  const ModelParams model = single_state_model(mean, cov);

  const auto [updated, ll] = phmm::em_step(stream, model);
  CHECK((updated.initial - model.initial).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((updated.transition - model.transition).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((updated.means[0] - model.means[0]).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((updated.covariance - model.covariance).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(std::isfinite(ll));
}

TEST_CASE("em_step on a fully labeled stream recovers per-label means") {
  Rng rng(5);
  const ModelParams truth = oracles::random_model(2, 2, rng);
  ObservationStream stream = oracles::random_stream(truth, 40, 1.0, rng);

  const auto [updated, ll] = phmm::em_step(stream, truth);
  (void)ll;
  for (int i = 0; i < 2; ++i) {
    Vector sum = Vector::Zero(2);
    int count = 0;
    for (int t = 0; t < stream.length(); ++t) {
      if (stream.labels[static_cast<std::size_t>(t)] == i + 1) {
        sum += stream.observations.row(t).transpose();
        ++count;
      }
    }
    REQUIRE(count > 0);
    CHECK((updated.means[static_cast<std::size_t>(i)] - sum / count)
              .cwiseAbs()
              .maxCoeff() < 1e-12);
  }
}

TEST_CASE("em_step raises the likelihood") {
  Rng rng(6);
  for (int rep = 0; rep < 10; ++rep) {
    const ModelParams truth = oracles::random_model(2, 2, rng);
    ObservationStream stream = oracles::random_stream(truth, 50, 0.1, rng);
    ModelParams start = oracles::random_model(2, 2, rng);
    start.covariance = Matrix::Identity(2, 2) * 2.0;

    const auto [updated, ll_before] = phmm::em_step(stream, start);
    const auto post_after = phmm::forward_backward(stream, updated);
    CHECK(post_after.log_likelihood >= ll_before - 1e-9);
  }
}

TEST_CASE("em_step preserves simplex structure") {
  Rng rng(7);
  for (int rep = 0; rep < 10; ++rep) {
    const ModelParams truth = oracles::random_model(3, 2, rng);
    ObservationStream stream = oracles::random_stream(truth, 60, 0.2, rng);
    const auto [updated, ll] = phmm::em_step(stream, truth);
    (void)ll;
    CHECK(std::abs(updated.initial.sum() - 1.0) < 1e-10);
    CHECK(updated.initial.minCoeff() >= 0.0);
    for (int i = 0; i < 3; ++i) {
      CHECK(std::abs(updated.transition.row(i).sum() - 1.0) < 1e-10);
      CHECK(updated.transition.row(i).minCoeff() >= 0.0);
    }
  }
}

TEST_CASE("em_step names the starved state") {
  // Two identical far-away states but the data sits at zero and state 2
  // starts from an absurd mean with no labels: its mass underflows.
  ModelParams model;
  model.initial = Vector::Zero(2);
  model.initial[0] = 1.0;
  model.transition.resize(2, 2);
  model.transition << 1.0 - 1e-12, 1e-12, 0.5, 0.5;
  model.means = {Vector::Zero(1), Vector::Constant(1, 1e4)};
  model.covariance = Matrix::Identity(1, 1);
  ObservationStream stream;
  stream.observations = Matrix::Zero(20, 1);
  stream.labels.assign(20, 0);
  try {
    phmm::em_step(stream, model);
    FAIL("expected StarvedStateError");
  } catch (const StarvedStateError& e) {
    CHECK(e.state() == 2);
  }
}

TEST_CASE("fit stops fast on an already converged input") {
  Rng rng(8);
  const ModelParams truth = oracles::random_model(1, 2, rng);
  ObservationStream stream = oracles::random_stream(truth, 50, 0.0, rng);
  const auto first = phmm::fit(stream, truth);
  const auto again = phmm::fit(stream, first.model);
  CHECK(again.likelihood_trace.size() <= 3);  // initial value + <= 2 iterations
  const auto& trace = again.likelihood_trace;
  CHECK(std::abs(trace.back() - trace.front()) < 1e-6);
}

TEST_CASE("fit recovers well-separated means with sparse labels") {
  // Generator is the oracle; the tolerance held with margin over 50
  // seeded repetitions before freezing.
  Rng rng(9);
  int ok = 0;
  const int reps = 10;
  for (int rep = 0; rep < reps; ++rep) {
    ObservationStream stream = two_cluster_stream(400, 5.0, 0.1, rng);
    ModelParams start;
    start.initial = Vector::Constant(2, 0.5);
    start.transition = Matrix::Constant(2, 2, 0.5);
    start.means = {Vector::Zero(2), Vector::Constant(2, 1.0)};
    start.covariance = Matrix::Identity(2, 2) * 4.0;
    const auto result = phmm::fit(stream, start);

    const Vector truth1 = Vector::Zero(2);
    const Vector truth2 = Vector::Constant(2, 5.0 / std::sqrt(2.0));
    const double err1 = (result.model.means[0] - truth1).cwiseAbs().maxCoeff();
    const double err2 = (result.model.means[1] - truth2).cwiseAbs().maxCoeff();
    if (err1 < 0.3 && err2 < 0.3) ++ok;
  }
  CHECK(ok == reps);
}

TEST_CASE("fit trace is non-decreasing") {
  Rng rng(10);
  for (int rep = 0; rep < 10; ++rep) {
    const ModelParams truth = oracles::random_model(2, 2, rng);
    ObservationStream stream = oracles::random_stream(truth, 80, 0.15, rng);
    ModelParams start = oracles::random_model(2, 2, rng);
    const auto result = phmm::fit(stream, start);
    for (std::size_t k = 1; k < result.likelihood_trace.size(); ++k) {
      CHECK(result.likelihood_trace[k] >= result.likelihood_trace[k - 1] - 1e-9);
    }
  }
}

TEST_CASE("predict_state reads gamma rows with deterministic ties") {
  phmm::PosteriorSummary summary;
  summary.gamma.resize(3, 2);
  summary.gamma << 1.0, 0.0, 0.2, 0.8, 0.5, 0.5;
  CHECK(phmm::predict_state(summary, 1).state == 1);
  CHECK(phmm::predict_state(summary, 2).state == 2);
  CHECK(phmm::predict_state(summary, 3).state == 1);  // tie to the smaller index
  CHECK_THROWS_AS(phmm::predict_state(summary, 0), std::invalid_argument);
  CHECK_THROWS_AS(phmm::predict_state(summary, 4), std::invalid_argument);
}

TEST_CASE("predict_state is permutation-equivariant") {
  Rng rng(11);
  for (int rep = 0; rep < 10; ++rep) {
    const ModelParams model = oracles::random_model(3, 2, rng);
    ObservationStream stream = oracles::random_stream(model, 8, 0.3, rng);

    // Swap states 1 and 3 everywhere.
    const int perm[3] = {2, 1, 0};
    ModelParams permuted;
    permuted.initial.resize(3);
    permuted.transition.resize(3, 3);
    permuted.means.resize(3);
    permuted.covariance = model.covariance;
    for (int i = 0; i < 3; ++i) {
      permuted.initial[perm[i]] = model.initial[i];
      permuted.means[static_cast<std::size_t>(perm[i])] = model.means[static_cast<std::size_t>(i)];
      for (int j = 0; j < 3; ++j) {
        permuted.transition(perm[i], perm[j]) = model.transition(i, j);
      }
    }
    ObservationStream permuted_stream = stream;
    for (auto& label : permuted_stream.labels) {
      if (label > 0) label = perm[label - 1] + 1;
    }

    const auto post = phmm::forward_backward(stream, model);
    const auto post_perm = phmm::forward_backward(permuted_stream, permuted);
    for (int t = 1; t <= stream.length(); ++t) {
      const auto a = phmm::predict_state(post, t);
      const auto b = phmm::predict_state(post_perm, t);
      CHECK(b.state == perm[a.state - 1] + 1);
    }
  }
}

TEST_CASE("aic parameter counts") {
  Rng rng(12);
  const auto model_np = [&rng](int n, int p) {
    ModelParams m = oracles::random_model(n, p, rng);
    return m;
  };
  CHECK(phmm::aic(model_np(2, 10), 0.0) == doctest::Approx(156.0));
  CHECK(phmm::aic(model_np(1, 10), 0.0) == doctest::Approx(130.0));
  CHECK(phmm::aic(model_np(3, 20), -100.0) == doctest::Approx(756.0));
}

TEST_CASE("aic offsets cancel in model selection") {
  // Adding a constant c to every log-density adds c*T to every
  // candidate's log-likelihood, so the AIC ranking cannot move.
  Rng rng(13);
  for (int rep = 0; rep < 20; ++rep) {
    const int T = 50;
    const double offset = 40.0 * (rng.uniform() - 0.5);
    std::vector<double> lls;
    std::vector<ModelParams> models;
    for (int n = 1; n <= 3; ++n) {
      models.push_back(oracles::random_model(n, 4, rng));
      lls.push_back(-200.0 + 100.0 * rng.uniform());
    }
    int best_plain = 0, best_shifted = 0;
    for (int n = 0; n < 3; ++n) {
      if (phmm::aic(models[static_cast<std::size_t>(n)], lls[static_cast<std::size_t>(n)]) <
          phmm::aic(models[static_cast<std::size_t>(best_plain)], lls[static_cast<std::size_t>(best_plain)])) {
        best_plain = n;
      }
      if (phmm::aic(models[static_cast<std::size_t>(n)], lls[static_cast<std::size_t>(n)] + offset * T) <
          phmm::aic(models[static_cast<std::size_t>(best_shifted)],
                    lls[static_cast<std::size_t>(best_shifted)] + offset * T)) {
        best_shifted = n;
      }
    }
    CHECK(best_plain == best_shifted);
  }
}

TEST_CASE("select_model prefers one state for homogeneous data") {
  // Rate calibrated over 50 seeded runs before freezing.
  Rng rng(14);
  int picked_one = 0;
  const int reps = 50;
  for (int rep = 0; rep < reps; ++rep) {
    ObservationStream stream;
    stream.observations.resize(150, 2);
    for (Eigen::Index i = 0; i < stream.observations.size(); ++i) {
      stream.observations.reshaped()[i] = rng.normal();
    }
    stream.labels.assign(150, 0);
    const auto choice = phmm::select_model(stream, 1, 2, {});
    if (choice.model.n_states() == 1) ++picked_one;
  }
  CHECK(picked_one >= 45);
}

TEST_CASE("select_model separates two far clusters") {
  Rng rng(15);
  int picked_two = 0;
  const int reps = 50;
  for (int rep = 0; rep < reps; ++rep) {
    ObservationStream stream = two_cluster_stream(200, 5.0, 0.0, rng);
    const auto choice = phmm::select_model(stream, 1, 2, {});
    if (choice.model.n_states() == 2) ++picked_two;
  }
  CHECK(picked_two >= 45);
}

TEST_CASE("select_model honors the label floor") {
  Rng rng(16);
  const ModelParams truth = oracles::random_model(3, 2, rng);
  ObservationStream stream = oracles::random_stream(truth, 60, 0.5, rng);
  bool saw_all_three = true;
  for (int s = 1; s <= 3; ++s) {
    saw_all_three &= std::count(stream.labels.begin(), stream.labels.end(), s) > 0;
  }
  REQUIRE(saw_all_three);
  CHECK_THROWS_AS(phmm::select_model(stream, 2, 4, {}), std::invalid_argument);
  const auto choice = phmm::select_model(stream, 3, 4, {});
  CHECK(choice.model.n_states() >= 3);
}

TEST_CASE("model JSON round trip is bit-faithful") {
  Rng rng(17);
  for (int rep = 0; rep < 10; ++rep) {
    const ModelParams model = oracles::random_model(1 + rng.uniform_int(0, 2),
                                                    1 + rng.uniform_int(0, 3), rng);
    const auto doc = phmm::model_to_json(model);
    const ModelParams back = phmm::model_from_json(
        nlohmann::json::parse(doc.dump()));
    CHECK(back.n_states() == model.n_states());
    CHECK((back.initial.array() == model.initial.array()).all());
    CHECK((back.transition.array() == model.transition.array()).all());
    CHECK((back.covariance.array() == model.covariance.array()).all());
    for (int i = 0; i < model.n_states(); ++i) {
      CHECK((back.means[static_cast<std::size_t>(i)].array() ==
             model.means[static_cast<std::size_t>(i)].array())
                .all());
    }
  }
}
