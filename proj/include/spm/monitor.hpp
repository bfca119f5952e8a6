#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "spm/init.hpp"
#include "spm/model_selection.hpp"
#include "spm/phmm.hpp"

namespace spm::monitor {

using phmm::Matrix;
using phmm::ModelParams;
using phmm::ObservationStream;
using phmm::Vector;

/// Inputs of the active-learning loop.
struct MonitorConfig {
  double budget_B = 0.1;    // fraction of stream samples that may be labeled
  double w_exr = 0.5;       // exploration weight; exploitation gets 1 - w_exr
  double lambda = 0.3;      // MEWMA memory
  int bootstrap_m = 199;    // simulated sequences per entropy calibration
  int bootstrap_len = 50;   // length of each simulated sequence
  init::InitSearchConfig init_cfg;

  /// Exploration may only request a label while the point prediction is
  /// out-of-control. Matches the printed algorithm; switchable because
  /// the gate works against discovering states the model cannot predict
  /// yet, which is worth probing in sensitivity runs.
  bool gate_exploration_on_oc = true;

  /// Effort policy of the per-step refits: warm restarts get at most
  /// warm_iters EM iterations, a freshly labeled stream gets full_iters.
  int warm_iters = 10;
  int full_iters = 100;
  double fit_tol = 1e-6;

  /// The simulated entropy distribution is reused until the selected
  /// model drifts by more than this amount in any parameter (or changes
  /// its state count).
  double model_drift_tol = 1e-3;

  double w_exp() const { return 1.0 - w_exr; }
  void validate() const;
};

/// Shannon entropy (natural log) of a posterior vector; zero entries
/// contribute zero.
double entropy(const Vector& posterior);

/// Parametric bootstrap p-value of an observed posterior entropy:
/// simulates bootstrap_m unconstrained sequences of length bootstrap_len
/// from the model, records the entropy of each final filtered posterior,
/// and returns (1 + #{simulated >= observed}) / (1 + bootstrap_m). The
/// add-one form keeps the p-value away from zero at finite m. Requires a
/// model with at least two states; a one-state model has no uncertainty
/// and the caller should not request labels at all.
double exploitation_pvalue(const ModelParams& model, double observed_entropy,
                           const MonitorConfig& cfg, std::uint64_t seed);

/// Per-state MEWMA accumulators z_i. A state discovered at time t starts
/// with a zero accumulator at t.
struct MewmaState {
  std::vector<Vector> z;

  /// Drops accumulators beyond n_states, zero-initializes new ones.
  void resize(int n_states, int dim);
};

/// Updates every accumulator with the new observation
/// (z_i <- lambda (y - mu_i) + (1-lambda) z_i) and returns the monitoring
/// statistic min_i (2-lambda)/lambda z_i' Sigma^-1 z_i under the model's
/// shared covariance.
double exploration_statistic(MewmaState& state, const Vector& y,
                             const ModelParams& model, double lambda);

/// Upper-tail chi-square probability of v2 with p degrees of freedom.
double exploration_pvalue(double v2, int p);

enum class LabelSource { none, exploitation, exploration, scheduled };

const char* to_string(LabelSource source);

/// One row of the decision log, written for every stream step.
struct DecisionRecord {
  int t = 0;          // 1-based position in the combined sequence
  int predicted = 0;  // final prediction (the true state when labeled)
  Vector posterior;
  double entropy = 0.0;
  double p_exp = std::numeric_limits<double>::quiet_NaN();
  double v2 = std::numeric_limits<double>::quiet_NaN();
  double p_exr = std::numeric_limits<double>::quiet_NaN();
  bool labeled = false;
  LabelSource label_source = LabelSource::none;
  int true_state = 0;  // oracle answer when labeled, else 0
  double B_t = 0.0;
  int n_states = 0;
};

/// Answers a queried time index with the true state; throws IoError when
/// it cannot.
using LabelOracle = std::function<int(int t)>;

struct RunResult {
  std::vector<int> predictions;    // one per stream step
  std::vector<int> labeled_times;  // 1-based combined-sequence indices
  std::vector<DecisionRecord> log;
  std::vector<std::pair<int, ModelParams>> snapshots;  // model at each label
  int budget_cap = 0;  // floor(B * T)
  bool aborted = false;
  std::string abort_reason;
};

/// Which labeling rule drives the loop. All policies share the identical
/// model pipeline, so a zero budget collapses every one of them to the
/// unsupervised predictions.
enum class Policy { proposed, unsupervised, random, equispaced };

/// Overrides candidate construction; used to start fits from externally known
/// parameters instead of the moving-average search.
struct Initializer {
  std::function<ModelParams(const ObservationStream&)> one_state;
  std::function<std::vector<ModelParams>(const ObservationStream&,
                                         const std::vector<ModelParams>&, int)>
      candidates;
};

struct DriverOptions {
  MonitorConfig config;
  Policy policy = Policy::proposed;
  Initializer initializer;      // empty members = Appendix-style defaults
  std::vector<int> pre_labels;  // known states per stream step, 0 = unknown
};

/// Core loop shared by the proposed method and the label-schedule
/// competitors: per-step budget update, warm model refit and AIC
/// selection, prediction, label decision per policy, full refit after
/// every acquired label.
RunResult run_stream_policy(const ObservationStream& init_stream,
                            const Matrix& stream, const LabelOracle& oracle,
                            const DriverOptions& options, std::uint64_t seed);

/// The proposed stream-based active learning method: exploitation
/// (entropy bootstrap) first, exploration (MEWMA) second, both spending
/// from the same budget.
RunResult run_stream(const ObservationStream& init_stream, const Matrix& stream,
                     const LabelOracle& oracle, const MonitorConfig& cfg,
                     std::uint64_t seed);

/// Decision log as CSV: t, predicted, labeled, label_source,
/// true_state_if_labeled, entropy, p_exp, v2, p_exr, B_t, n_states.
/// Unavailable values (never computed at that step) are left blank.
void write_decision_log(const std::filesystem::path& path,
                        const std::vector<DecisionRecord>& log);

}  // namespace spm::monitor
