#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spm/monitor.hpp"

namespace spm::bench {

using phmm::Matrix;
using phmm::ObservationStream;
using phmm::Vector;

/// Simulation scenario: an initial in-control block followed by a stream
/// alternating long in-control runs with short out-of-control bursts.
/// Bursts in the first half of the stream come from state 2 (mean shift
/// delta on the first coordinate), later ones from state 3 (shift on the
/// second coordinate). All states share the covariance
/// sigma_ij = 0.75^|i-j|.
struct ScenarioConfig {
  int p = 10;
  double delta = 3.0;
  int t_init = 100;
  int t_stream = 500;
  int ic_run_min = 60;
  int ic_run_max = 85;
  int oc_run_len = 5;

  void validate() const;
  Matrix covariance() const;
  Vector state_mean(int state) const;  // 1 -> 0, 2 -> d1, 3 -> d2
};

struct GeneratedStream {
  std::vector<int> states;  // length t_init + t_stream
  Matrix observations;
};

GeneratedStream generate_scenario(const ScenarioConfig& cfg, std::uint64_t seed);

/// Classification quality with the out-of-control states collapsed into
/// one positive class: precision = TP/(TP+FP), recall = TP/(TP+FN),
/// F1 their harmonic mean, all zero when undefined. The multiclass
/// confusion matrix and a macro-averaged F1 ride along as diagnostics.
struct MetricsEntry {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double macro_f1 = 0.0;
  long tp = 0, fp = 0, fn = 0, tn = 0;
  Eigen::MatrixXi confusion;  // row = true state, column = predicted
};

MetricsEntry compute_metrics(const std::vector<int>& truth,
                             const std::vector<int>& predictions);

enum class Method {
  proposed,
  proposed_true_init,
  mewma,
  unsupervised,
  random_sampling,
  equispaced,
};

const char* to_string(Method method);
std::optional<Method> method_from_string(const std::string& name);

/// Classical MEWMA chart settings: the control limit sits at the
/// chi-square quantile 1 - alpha of the statistic's steady-state
/// approximation.
struct MewmaChartConfig {
  double lambda = 0.3;
  double alpha = 0.01;
};

/// Binary in-control/out-of-control classifier: robust location/scatter
/// from the initial block, then the MEWMA statistic against the fixed
/// control limit. Predictions are 1 or 2.
std::vector<int> competitor_mewma(const ObservationStream& init_stream,
                                  const Matrix& stream,
                                  const MewmaChartConfig& cfg);

struct RunOutcome {
  std::vector<int> predictions;  // one per stream step
  MetricsEntry metrics;
  int labels_used = 0;
  int budget_cap = 0;
  double runtime_ms = 0.0;
};

/// Everything one replicate needs. The same stream seed must be handed
/// to every method so that differences are attributable to the labeling
/// strategy alone.
struct CellSettings {
  ScenarioConfig scenario;
  Method method = Method::proposed;
  monitor::MonitorConfig monitor_cfg;  // budget_B and w_exr set per cell
  MewmaChartConfig mewma;
};

RunOutcome run_replicate(const CellSettings& settings, std::uint64_t stream_seed,
                         std::uint64_t run_seed);

struct GridConfig {
  std::vector<int> p_values{10};
  std::vector<double> deltas{3.0};
  std::vector<double> budgets{0.105};
  std::vector<double> w_exp_values{0.5};
  std::vector<Method> methods{Method::proposed};
  int replicates = 16;
  std::uint64_t root_seed = 1;
  ScenarioConfig scenario;             // p/delta overridden per cell
  monitor::MonitorConfig monitor_cfg;  // budget/weights overridden per cell
  MewmaChartConfig mewma;
};

struct ResultRow {
  Method method = Method::proposed;
  int p = 0;
  double delta = 0.0;
  double budget = 0.0;
  double w_exp = 0.0;
  int replicate = 0;
  double f1 = 0.0, precision = 0.0, recall = 0.0, macro_f1 = 0.0;
  int labels_used = 0;
  int budget_cap = 0;
  double runtime_ms = 0.0;
  bool failed = false;
  std::string error;
};

struct SummaryRow {
  Method method = Method::proposed;
  int p = 0;
  double delta = 0.0;
  double budget = 0.0;
  double w_exp = 0.0;
  int replicates = 0;
  double f1_mean = 0.0, f1_se = 0.0;
  double precision_mean = 0.0, precision_se = 0.0;
  double recall_mean = 0.0, recall_se = 0.0;
  double labels_mean = 0.0;
};

struct GridResults {
  std::vector<ResultRow> rows;
  std::vector<SummaryRow> summary;
};

/// Runs every (p, delta, budget, w_exp, method, replicate) combination.
/// The stream seed is derived from the cell coordinates without the
/// method or weight, so competing strategies see identical data. Failed
/// cells are recorded on their rows, never aborting the sweep.
GridResults run_grid(const GridConfig& cfg, int workers);

/// Recomputes the per-group summary from raw rows (used when reloading).
void summarize(GridResults& results);

void write_results_csv(const std::filesystem::path& path, const GridResults& results);
void write_summary_csv(const std::filesystem::path& path, const GridResults& results);
GridResults read_results_csv(const std::filesystem::path& path);

/// SVG panel grids: F1 against shift size (one file per p, panel per
/// budget), F1 against budget (panel per shift), and the weight-sweep
/// panels (metric rows by budget columns) when several weights were run.
std::vector<std::filesystem::path> emit_figures(
    const std::filesystem::path& out_dir, const GridResults& results);

}  // namespace spm::bench
