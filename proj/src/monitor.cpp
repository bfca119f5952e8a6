#include "spm/monitor.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "spm/csv.hpp"
#include "spm/rng.hpp"
#include "spm/sampler.hpp"

namespace spm::monitor {

void MonitorConfig::validate() const {
  if (budget_B <= 0.0 || budget_B >= 1.0) {
    throw ConfigError("budget must lie in (0, 1)");
  }
  if (w_exr < 0.0 || w_exr > 1.0) {
    throw ConfigError("exploration weight must lie in [0, 1]");
  }
  if (lambda <= 0.0 || lambda > 1.0) {
    throw ConfigError("lambda must lie in (0, 1]");
  }
  if (bootstrap_m < 1 || bootstrap_len < 1) {
    throw ConfigError("bootstrap settings must be positive");
  }
  init_cfg.validate();
}

double entropy(const Vector& posterior) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < posterior.size(); ++i) {
    const double g = posterior[i];
    if (g > 0.0) h -= g * std::log(g);
  }
  return h;
}

namespace {

/// Entropy of the filtered posterior at the final position of an
/// unlabeled sequence: a forward pass is enough because the smoothed and
/// filtered posteriors coincide at the last step.
double final_filter_entropy(const Matrix& observations,
                            const ModelParams& model,
                            const stats::CholeskyFactor& chol) {
  const int T = static_cast<int>(observations.rows());
  const int N = model.n_states();
  Matrix log_b(T, N);
  for (int i = 0; i < N; ++i) {
    log_b.col(i) =
        chol.log_density_rows(observations, model.means[static_cast<std::size_t>(i)]);
  }
  Vector u(N);
  Vector alpha(N);
  for (int i = 0; i < N; ++i) {
    u[i] = model.initial[i] > 0.0
               ? std::log(model.initial[i]) + log_b(0, i)
               : -std::numeric_limits<double>::infinity();
  }
  double m = u.maxCoeff();
  alpha = (u.array() - m).exp();
  alpha /= alpha.sum();
  for (int t = 1; t < T; ++t) {
    const Vector mass = model.transition.transpose() * alpha;
    for (int i = 0; i < N; ++i) {
      u[i] = mass[i] > 0.0 ? log_b(t, i) + std::log(mass[i])
                           : -std::numeric_limits<double>::infinity();
    }
    m = u.maxCoeff();
    alpha = (u.array() - m).exp();
    alpha /= alpha.sum();
  }
  return entropy(alpha);
}

std::vector<double> bootstrap_entropies(const ModelParams& model,
                                        int m, int len, std::uint64_t seed) {
  const sampler::EndpointConstraint free_run{std::nullopt, std::nullopt, len};
  const sampler::SequenceSampler seq_sampler(model, free_run);
  const stats::CholeskyFactor chol =
      stats::CholeskyFactor::compute(model.covariance);
  std::vector<double> entropies(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(k)}));
    const sampler::SimulatedSequence seq = seq_sampler.draw(rng);
    entropies[static_cast<std::size_t>(k)] =
        final_filter_entropy(seq.observations, model, chol);
  }
  std::sort(entropies.begin(), entropies.end());
  return entropies;
}

double pvalue_from_sorted(const std::vector<double>& sorted, double observed) {
  const auto first = std::lower_bound(sorted.begin(), sorted.end(), observed);
  const auto count = static_cast<double>(sorted.end() - first);
  return (1.0 + count) / (1.0 + static_cast<double>(sorted.size()));
}

}  // namespace

double exploitation_pvalue(const ModelParams& model, double observed_entropy,
                           const MonitorConfig& cfg, std::uint64_t seed) {
  if (model.n_states() < 2) {
    throw std::invalid_argument(
        "exploitation_pvalue: a one-state model has no prediction uncertainty");
  }
  const auto sims =
      bootstrap_entropies(model, cfg.bootstrap_m, cfg.bootstrap_len, seed);
  return pvalue_from_sorted(sims, observed_entropy);
}

void MewmaState::resize(int n_states, int dim) {
  const auto n = static_cast<std::size_t>(n_states);
  if (z.size() > n) z.resize(n);
  while (z.size() < n) z.push_back(Vector::Zero(dim));
}

double exploration_statistic(MewmaState& state, const Vector& y,
                             const ModelParams& model, double lambda) {
  state.resize(model.n_states(), model.dim());
  const stats::CholeskyFactor chol =
      stats::CholeskyFactor::compute(model.covariance);
  const double scale = (2.0 - lambda) / lambda;
  double v2 = std::numeric_limits<double>::infinity();
  for (int i = 0; i < model.n_states(); ++i) {
    Vector& zi = state.z[static_cast<std::size_t>(i)];
    zi = lambda * (y - model.means[static_cast<std::size_t>(i)]) +
         (1.0 - lambda) * zi;
    const Vector w = chol.lower().triangularView<Eigen::Lower>().solve(zi);
    v2 = std::min(v2, scale * w.squaredNorm());
  }
  return v2;
}

double exploration_pvalue(double v2, int p) {
  if (v2 < 0.0) throw std::invalid_argument("exploration_pvalue: v2 < 0");
  return stats::chi_square_survival(v2, static_cast<double>(p));
}

const char* to_string(LabelSource source) {
  switch (source) {
    case LabelSource::none: return "none";
    case LabelSource::exploitation: return "exploitation";
    case LabelSource::exploration: return "exploration";
    case LabelSource::scheduled: return "scheduled";
  }
  return "none";
}

namespace {

/// Model-selection state threaded through the stream: warm starts per
/// state count, the candidate-construction ladder, and the currently
/// selected model. The ladder keeps the robust one-state estimate at its
/// base; fitted models fill the higher rungs.
class StreamClassifier {
 public:
  StreamClassifier(const MonitorConfig& cfg, const Initializer& init)
      : cfg_(cfg), initializer_(init) {}

  /// Drops all warm starts; called when a label reveals an unseen state.
  void invalidate() {
    warm_.clear();
    ladder_.clear();
  }

  bool has_selection() const { return has_selection_; }
  const phmm::ModelChoice& selection() const { return selection_; }

  /// Refits candidate state counts on the stream prefix and selects by
  /// AIC. Throws ModelSelectionError when nothing fits; the previous
  /// selection (if any) stays intact so the caller can fall back on it.
  const phmm::ModelChoice& refit(const ObservationStream& data, bool full_effort) {
    int max_label = 0;
    std::set<int> distinct;
    for (int label : data.labels) {
      if (label > 0) {
        distinct.insert(label);
        max_label = std::max(max_label, label);
      }
    }
    const int n_min =
        std::max({1, static_cast<int>(distinct.size()), max_label});
    const int n_max = std::max(n_min, static_cast<int>(distinct.size()) + 1);

    const phmm::FitOptions effort{full_effort ? cfg_.full_iters : cfg_.warm_iters,
                                  cfg_.fit_tol};
    bool have_best = false;
    phmm::ModelChoice best;
    std::string last_error = "no candidates attempted";

    for (int n = n_min; n <= n_max; ++n) {
      phmm::FitResult result;
      bool ok = false;
      const auto warm = warm_.find(n);
      if (warm != warm_.end()) {
        try {
          result = phmm::fit(data, warm->second, effort);
          ok = true;
        } catch (const Error& e) {
          last_error = e.what();
          warm_.erase(n);
        }
      }
      if (!ok) {
        try {
          result = cold_fit(data, n);
          ok = true;
        } catch (const Error& e) {
          last_error = e.what();
        }
      }
      if (!ok) continue;

      warm_[n] = result.model;
      store_ladder(n, result.model);
      const double score = phmm::aic(result.model, result.posterior.log_likelihood);
      if (!have_best || score < best.aic) {
        best.model = std::move(result.model);
        best.posterior = std::move(result.posterior);
        best.aic = score;
        have_best = true;
      }
    }

    if (!have_best) {
      throw ModelSelectionError("stream refit: all candidates failed (" +
                                last_error + ")");
    }
    selection_ = std::move(best);
    has_selection_ = true;
    return selection_;
  }

 private:
  ModelParams one_state_start(const ObservationStream& data) const {
    if (initializer_.one_state) return initializer_.one_state(data);
    return init::init_one_state(data);
  }

  std::vector<ModelParams> candidate_starts(const ObservationStream& data,
                                            int n) const {
    if (initializer_.candidates) {
      auto provided = initializer_.candidates(data, ladder_, n);
      if (!provided.empty()) return provided;
    }
    return init::init_candidates(data, ladder_, n, cfg_.init_cfg);
  }

  void store_ladder(int n, const ModelParams& model) {
    // Rung 0 stays the robust estimate; see cold_fit.
    if (n < 2) return;
    if (static_cast<int>(ladder_.size()) >= n) {
      ladder_[static_cast<std::size_t>(n - 1)] = model;
    } else if (static_cast<int>(ladder_.size()) == n - 1) {
      ladder_.push_back(model);
    }
  }

  /// Labels above the rung count would make a smaller model infeasible;
  /// the ladder fits only supply starting means, so those labels are
  /// masked out rather than respected.
  static ObservationStream masked(const ObservationStream& data, int n) {
    ObservationStream copy = data;
    for (auto& label : copy.labels) {
      if (label > n) label = 0;
    }
    return copy;
  }

  void ensure_ladder(const ObservationStream& data, int up_to) {
    const phmm::FitOptions full{cfg_.full_iters, cfg_.fit_tol};
    if (ladder_.empty()) ladder_.push_back(one_state_start(data));
    for (int k = 2; k <= up_to; ++k) {
      if (static_cast<int>(ladder_.size()) >= k) continue;
      const ObservationStream sub = masked(data, k);
      const auto starts = candidate_starts(sub, k);
      bool fitted = false;
      phmm::FitResult best;
      for (const auto& start : starts) {
        try {
          phmm::FitResult r = phmm::fit(sub, start, full);
          if (!fitted ||
              r.posterior.log_likelihood > best.posterior.log_likelihood) {
            best = std::move(r);
            fitted = true;
          }
        } catch (const Error&) {
        }
      }
      if (fitted) {
        warm_[k] = best.model;
        ladder_.push_back(std::move(best.model));
      } else if (!starts.empty()) {
        // Every start collapsed; carry the raw candidate so higher rungs
        // can still be constructed.
        ladder_.push_back(starts.front());
      } else {
        throw ModelSelectionError("no candidates for " + std::to_string(k) +
                                  " states");
      }
    }
  }

  phmm::FitResult cold_fit(const ObservationStream& data, int n) {
    const phmm::FitOptions full{cfg_.full_iters, cfg_.fit_tol};
    ensure_ladder(data, n - 1);
    if (n == 1) {
      return phmm::fit(data, ladder_.front(), full);
    }
    const auto starts = candidate_starts(data, n);
    bool fitted = false;
    phmm::FitResult best;
    std::string last_error = "no candidates";
    for (const auto& start : starts) {
      try {
        phmm::FitResult r = phmm::fit(data, start, full);
        if (!fitted ||
            r.posterior.log_likelihood > best.posterior.log_likelihood) {
          best = std::move(r);
          fitted = true;
        }
      } catch (const Error& e) {
        last_error = e.what();
      }
    }
    if (!fitted) {
      throw ModelSelectionError("cold fit failed for n=" + std::to_string(n) +
                                " (" + last_error + ")");
    }
    return best;
  }

  const MonitorConfig& cfg_;
  const Initializer& initializer_;
  std::map<int, ModelParams> warm_;
  std::vector<ModelParams> ladder_;
  phmm::ModelChoice selection_;
  bool has_selection_ = false;
};

/// Cached bootstrap entropy distribution, refreshed when the selected
/// model drifts beyond the configured tolerance or changes state count.
class BootstrapCache {
 public:
  BootstrapCache(const MonitorConfig& cfg, std::uint64_t seed)
      : cfg_(cfg), seed_(seed) {}

  double pvalue(const ModelParams& model, double observed_entropy) {
    if (!fresh(model)) {
      entropies_ = bootstrap_entropies(
          model, cfg_.bootstrap_m, cfg_.bootstrap_len,
          derive_seed(seed_, {0xB007u, static_cast<std::uint64_t>(refreshes_++)}));
      snapshot_ = flatten(model);
    }
    return pvalue_from_sorted(entropies_, observed_entropy);
  }

 private:
  static std::vector<double> flatten(const ModelParams& model) {
    std::vector<double> flat;
    flat.push_back(static_cast<double>(model.n_states()));
    const auto append = [&flat](const auto& m) {
      for (Eigen::Index i = 0; i < m.size(); ++i) {
        flat.push_back(m.reshaped()[i]);
      }
    };
    append(model.initial);
    append(model.transition);
    for (const auto& mu : model.means) append(mu);
    append(model.covariance);
    return flat;
  }

  bool fresh(const ModelParams& model) const {
    if (snapshot_.empty()) return false;
    const auto flat = flatten(model);
    if (flat.size() != snapshot_.size()) return false;
    for (std::size_t i = 0; i < flat.size(); ++i) {
      if (std::abs(flat[i] - snapshot_[i]) > cfg_.model_drift_tol) return false;
    }
    return true;
  }

  const MonitorConfig& cfg_;
  std::uint64_t seed_;
  std::vector<double> entropies_;
  std::vector<double> snapshot_;
  int refreshes_ = 0;
};

/// Algorithm state: remaining label allowance, acquired labels, MEWMA
/// accumulators, current classifier selection, decision log.
struct MonitorState {
  int b = 0;
  std::vector<int> labeled_times;
  MewmaState mewma;
  StreamClassifier classifier;
  std::vector<DecisionRecord> log;

  MonitorState(const MonitorConfig& cfg, const Initializer& init)
      : classifier(cfg, init) {}
};

}  // namespace

RunResult run_stream_policy(const ObservationStream& init_stream,
                            const Matrix& stream, const LabelOracle& oracle,
                            const DriverOptions& options, std::uint64_t seed) {
  const MonitorConfig& cfg = options.config;
  if (options.policy != Policy::unsupervised) cfg.validate();
  const int t_init = init_stream.length();
  const int T = static_cast<int>(stream.rows());
  if (stream.cols() != init_stream.dim()) {
    throw std::invalid_argument("stream dimension differs from the initial block");
  }
  for (int label : init_stream.labels) {
    if (label != 1) {
      throw std::invalid_argument("initial stream must be fully labeled in-control");
    }
  }
  if (!options.pre_labels.empty() &&
      options.pre_labels.size() != static_cast<std::size_t>(T)) {
    throw std::invalid_argument("pre-label track length mismatch");
  }

  const int budget_cap =
      options.policy == Policy::unsupervised
          ? 0
          : static_cast<int>(std::floor(cfg.budget_B * static_cast<double>(T)));

  // Equispaced schedule: one label every 1/B samples.
  std::set<int> schedule;
  if (options.policy == Policy::equispaced) {
    for (int j = 1; j <= budget_cap; ++j) {
      schedule.insert(t_init + static_cast<int>(std::lround(
                                   static_cast<double>(j) / cfg.budget_B)));
    }
  }

  Rng policy_rng(derive_seed(seed, {1}));
  BootstrapCache bootstrap(cfg, derive_seed(seed, {2}));

  // Combined data buffer: the initial block plus the stream seen so far.
  ObservationStream data;
  data.observations.resize(t_init + T, stream.cols());
  data.observations.topRows(t_init) = init_stream.observations;
  data.labels.assign(static_cast<std::size_t>(t_init + T), 0);
  std::fill(data.labels.begin(), data.labels.begin() + t_init, 1);
  data.t_init = t_init;

  MonitorState state(cfg, options.initializer);
  state.b = budget_cap;

  RunResult result;
  result.budget_cap = budget_cap;
  result.predictions.assign(static_cast<std::size_t>(T), 0);

  // Initial one-state fit on the in-control block.
  {
    ObservationStream prefix = data;
    prefix.observations.conservativeResize(t_init, Eigen::NoChange);
    prefix.labels.resize(static_cast<std::size_t>(t_init));
    state.classifier.refit(prefix, /*full_effort=*/true);
  }

  std::set<int> observed_states = {1};

  for (int j = 1; j <= T; ++j) {
    const int t = t_init + j;
    const Vector y = stream.row(j - 1).transpose();
    data.observations.row(t - 1) = y.transpose();

    const double remaining = static_cast<double>(T + t_init - t + 1);
    const double B_t = static_cast<double>(state.b) / remaining;

    const int pre_label =
        options.pre_labels.empty() ? 0 : options.pre_labels[static_cast<std::size_t>(j - 1)];
    if (pre_label > 0) data.labels[static_cast<std::size_t>(t - 1)] = pre_label;

    ObservationStream prefix = data;
    prefix.observations.conservativeResize(t, Eigen::NoChange);
    prefix.labels.resize(static_cast<std::size_t>(t));

    if (pre_label > 0 && observed_states.insert(pre_label).second) {
      state.classifier.invalidate();
    }

    try {
      state.classifier.refit(prefix, /*full_effort=*/pre_label > 0);
    } catch (const Error&) {
      if (!state.classifier.has_selection()) throw;
      // Keep predicting from the previous selection; the next step refits.
    }
    const phmm::ModelChoice* choice = &state.classifier.selection();

    DecisionRecord record;
    record.t = t;
    record.B_t = B_t;
    record.n_states = choice->model.n_states();

    const phmm::StatePrediction pred =
        phmm::predict_state(choice->posterior, prefix.length());
    int predicted = pred.state;
    record.posterior = pred.probabilities;
    record.entropy = entropy(pred.probabilities);

    // The MEWMA recursion runs every step so its memory tracks the whole
    // stream, whichever criterion ends up looking at it.
    record.v2 = exploration_statistic(state.mewma, y, choice->model, cfg.lambda);
    record.p_exr = exploration_pvalue(record.v2, static_cast<int>(stream.cols()));

    bool label_now = false;
    LabelSource source = LabelSource::none;

    if (pre_label > 0) {
      predicted = pre_label;  // state already known, no decision to make
    } else {
      switch (options.policy) {
        case Policy::proposed: {
          if (state.b > 0) {
            const double b_exp = cfg.w_exp() * B_t;
            const double b_exr = cfg.w_exr * B_t;
            if (choice->model.n_states() >= 2) {
              record.p_exp = bootstrap.pvalue(choice->model, record.entropy);
              if (record.p_exp < b_exp && B_t < cfg.budget_B) {
                label_now = true;
                source = LabelSource::exploitation;
              }
            }
            if (!label_now && record.p_exr < b_exr && B_t < cfg.budget_B &&
                (predicted > 1 || !cfg.gate_exploration_on_oc)) {
              label_now = true;
              source = LabelSource::exploration;
            }
          }
          break;
        }
        case Policy::unsupervised:
          break;
        case Policy::random: {
          if (state.b > 0 &&
              policy_rng.uniform() < static_cast<double>(state.b) / remaining) {
            label_now = true;
            source = LabelSource::scheduled;
          }
          break;
        }
        case Policy::equispaced: {
          if (state.b > 0 && schedule.count(t) > 0) {
            label_now = true;
            source = LabelSource::scheduled;
          }
          break;
        }
      }
    }

    if (label_now) {
      int truth = 0;
      try {
        truth = oracle(t);
      } catch (const std::exception& e) {
        result.aborted = true;
        result.abort_reason = "oracle failed at t=" + std::to_string(t) + ": " + e.what();
        record.predicted = predicted;
        result.predictions[static_cast<std::size_t>(j - 1)] = predicted;
        result.log.push_back(std::move(record));
        result.labeled_times = state.labeled_times;
        return result;
      }
      if (truth < 1) {
        throw std::invalid_argument("oracle returned an invalid state " +
                                    std::to_string(truth));
      }
      data.labels[static_cast<std::size_t>(t - 1)] = truth;
      prefix.labels[static_cast<std::size_t>(t - 1)] = truth;
      predicted = truth;
      record.labeled = true;
      record.label_source = source;
      record.true_state = truth;
      state.labeled_times.push_back(t);
      state.b -= 1;

      if (observed_states.insert(truth).second) {
        state.classifier.invalidate();
      }
      try {
        state.classifier.refit(prefix, /*full_effort=*/true);
        choice = &state.classifier.selection();
      } catch (const Error&) {
        // Next step's refit retries from scratch.
      }
      result.snapshots.emplace_back(t, choice->model);
    }

    // Budget safety is a hard guarantee, not a soft convention.
    if (state.b < 0 ||
        static_cast<int>(state.labeled_times.size()) + state.b != budget_cap) {
      throw std::logic_error("budget accounting violated");
    }

    record.predicted = predicted;
    result.predictions[static_cast<std::size_t>(j - 1)] = predicted;
    result.log.push_back(std::move(record));
  }

  result.labeled_times = state.labeled_times;
  return result;
}

RunResult run_stream(const ObservationStream& init_stream, const Matrix& stream,
                     const LabelOracle& oracle, const MonitorConfig& cfg,
                     std::uint64_t seed) {
  DriverOptions options;
  options.config = cfg;
  options.policy = Policy::proposed;
  return run_stream_policy(init_stream, stream, oracle, options, seed);
}

void write_decision_log(const std::filesystem::path& path,
                        const std::vector<DecisionRecord>& log) {
  csv::Writer w(path);
  for (const char* name : {"t", "predicted", "labeled", "label_source",
                           "true_state_if_labeled", "entropy", "p_exp", "v2",
                           "p_exr", "B_t", "n_states"}) {
    w.field(name);
  }
  w.end_row();
  for (const auto& r : log) {
    w.field(r.t);
    w.field(r.predicted);
    w.field(r.labeled ? 1 : 0);
    w.field(to_string(r.label_source));
    w.field(r.labeled ? std::to_string(r.true_state) : "");
    w.field(r.entropy);
    w.field(r.p_exp);
    w.field(r.v2);
    w.field(r.p_exr);
    w.field(r.B_t);
    w.field(r.n_states);
    w.end_row();
  }
  w.close();
}

}  // namespace spm::monitor
