#include "spm/bench.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <map>
#include <thread>
#include <tuple>

#include "spm/csv.hpp"
#include "spm/rng.hpp"
#include "spm/svg.hpp"

namespace spm::bench {

void ScenarioConfig::validate() const {
  if (p < 1) throw ConfigError("scenario: p must be >= 1");
  if (delta < 0.0) throw ConfigError("scenario: delta must be >= 0");
  if (t_init < 1 || t_stream < 1) {
    throw ConfigError("scenario: stream lengths must be positive");
  }
  if (ic_run_min < 1 || ic_run_max < ic_run_min) {
    throw ConfigError("scenario: in-control run range is invalid");
  }
  if (oc_run_len < 1) throw ConfigError("scenario: oc_run_len must be >= 1");
}

Matrix ScenarioConfig::covariance() const {
  Matrix sigma(p, p);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) {
      sigma(i, j) = std::pow(0.75, std::abs(i - j));
    }
  }
  return sigma;
}

Vector ScenarioConfig::state_mean(int state) const {
  Vector mean = Vector::Zero(p);
  if (state == 2) {
    mean[0] = delta;
  } else if (state == 3) {
    if (p < 2) throw ConfigError("scenario: state 3 needs p >= 2");
    mean[1] = delta;
  } else if (state != 1) {
    throw std::invalid_argument("scenario defines states 1..3 only");
  }
  return mean;
}

GeneratedStream generate_scenario(const ScenarioConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);

  GeneratedStream out;
  const int total = cfg.t_init + cfg.t_stream;
  out.states.assign(static_cast<std::size_t>(total), 1);

  // Alternating in-control runs and short out-of-control bursts; the
  // burst state flips from 2 to 3 halfway through the stream.
  int pos = cfg.t_init;
  bool ic_phase = true;
  while (pos < total) {
    if (ic_phase) {
      pos += rng.uniform_int(cfg.ic_run_min, cfg.ic_run_max);  // stays state 1
      pos = std::min(pos, total);
    } else {
      for (int k = 0; k < cfg.oc_run_len && pos < total; ++k, ++pos) {
        const int stream_pos = pos - cfg.t_init + 1;
        out.states[static_cast<std::size_t>(pos)] =
            stream_pos <= cfg.t_stream / 2 ? 2 : 3;
      }
    }
    ic_phase = !ic_phase;
  }

  const stats::CholeskyFactor chol =
      stats::CholeskyFactor::compute(cfg.covariance());
  out.observations.resize(total, cfg.p);
  Vector z(cfg.p);
  for (int t = 0; t < total; ++t) {
    for (int j = 0; j < cfg.p; ++j) z[j] = rng.normal();
    out.observations.row(t) =
        chol.affine(cfg.state_mean(out.states[static_cast<std::size_t>(t)]), z)
            .transpose();
  }
  return out;
}

MetricsEntry compute_metrics(const std::vector<int>& truth,
                             const std::vector<int>& predictions) {
  if (truth.size() != predictions.size()) {
    throw std::invalid_argument("compute_metrics: length mismatch");
  }
  MetricsEntry m;
  int max_state = 1;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    max_state = std::max({max_state, truth[i], predictions[i]});
    const bool pos_true = truth[i] >= 2;
    const bool pos_pred = predictions[i] >= 2;
    if (pos_true && pos_pred) ++m.tp;
    else if (!pos_true && pos_pred) ++m.fp;
    else if (pos_true && !pos_pred) ++m.fn;
    else ++m.tn;
  }
  m.precision = (m.tp + m.fp) > 0
                    ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp)
                    : 0.0;
  m.recall = (m.tp + m.fn) > 0
                 ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn)
                 : 0.0;
  m.f1 = (m.precision + m.recall) > 0.0
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;

  m.confusion = Eigen::MatrixXi::Zero(max_state, max_state);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] >= 1 && predictions[i] >= 1) {
      m.confusion(truth[i] - 1, predictions[i] - 1) += 1;
    }
  }
  double macro_sum = 0.0;
  for (int c = 1; c <= max_state; ++c) {
    long tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      const bool t_c = truth[i] == c;
      const bool p_c = predictions[i] == c;
      if (t_c && p_c) ++tp;
      else if (!t_c && p_c) ++fp;
      else if (t_c && !p_c) ++fn;
    }
    const double prec = (tp + fp) > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
    const double rec = (tp + fn) > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
    macro_sum += (prec + rec) > 0.0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
  }
  m.macro_f1 = macro_sum / static_cast<double>(max_state);
  return m;
}

const char* to_string(Method method) {
  switch (method) {
    case Method::proposed: return "proposed";
    case Method::proposed_true_init: return "proposed_true_init";
    case Method::mewma: return "mewma";
    case Method::unsupervised: return "unsupervised";
    case Method::random_sampling: return "random";
    case Method::equispaced: return "equispaced";
  }
  return "unknown";
}

std::optional<Method> method_from_string(const std::string& name) {
  for (Method m : {Method::proposed, Method::proposed_true_init, Method::mewma,
                   Method::unsupervised, Method::random_sampling,
                   Method::equispaced}) {
    if (name == to_string(m)) return m;
  }
  return std::nullopt;
}

std::vector<int> competitor_mewma(const ObservationStream& init_stream,
                                  const Matrix& stream,
                                  const MewmaChartConfig& cfg) {
  if (cfg.lambda <= 0.0 || cfg.lambda > 1.0) {
    throw ConfigError("mewma: lambda must lie in (0, 1]");
  }
  if (cfg.alpha <= 0.0 || cfg.alpha >= 1.0) {
    throw ConfigError("mewma: alpha must lie in (0, 1)");
  }
  const stats::RobustEstimate est =
      stats::robust_location_scatter(init_stream.observations);
  const stats::CholeskyFactor chol = stats::CholeskyFactor::compute(est.scatter);
  const int p = static_cast<int>(stream.cols());
  const double limit =
      stats::chi_square_quantile(1.0 - cfg.alpha, static_cast<double>(p));
  const double scale = (2.0 - cfg.lambda) / cfg.lambda;

  std::vector<int> predictions(static_cast<std::size_t>(stream.rows()), 1);
  Vector z = Vector::Zero(p);
  for (Eigen::Index t = 0; t < stream.rows(); ++t) {
    z = cfg.lambda * (stream.row(t).transpose() - est.location) +
        (1.0 - cfg.lambda) * z;
    const Vector w = chol.lower().triangularView<Eigen::Lower>().solve(z);
    const double v2 = scale * w.squaredNorm();
    predictions[static_cast<std::size_t>(t)] = v2 > limit ? 2 : 1;
  }
  return predictions;
}

namespace {

monitor::Initializer true_param_initializer(const ScenarioConfig& scenario) {
  monitor::Initializer init;
  const Matrix sigma = scenario.covariance();
  init.one_state = [sigma, scenario](const ObservationStream&) {
    phmm::ModelParams model;
    model.initial = Vector::Ones(1);
    model.transition = Matrix::Ones(1, 1);
    model.means = {scenario.state_mean(1)};
    model.covariance = sigma;
    return model;
  };
  init.candidates = [sigma, scenario](const ObservationStream&,
                                      const std::vector<phmm::ModelParams>&,
                                      int n) {
    std::vector<phmm::ModelParams> out;
    if (n < 2 || n > 3) return out;  // beyond the generator's states: fall back
    phmm::ModelParams model;
    model.initial = Vector::Zero(n);
    model.initial[0] = 1.0;
    model.transition = Matrix::Constant(n, n, 0.01 / static_cast<double>(n - 1));
    model.transition.diagonal().setConstant(0.99);
    for (int s = 1; s <= n; ++s) model.means.push_back(scenario.state_mean(s));
    model.covariance = sigma;
    out.push_back(std::move(model));
    return out;
  };
  return init;
}

}  // namespace

RunOutcome run_replicate(const CellSettings& settings, std::uint64_t stream_seed,
                         std::uint64_t run_seed) {
  const auto started = std::chrono::steady_clock::now();
  const GeneratedStream generated = generate_scenario(settings.scenario, stream_seed);
  const int t_init = settings.scenario.t_init;
  const int t_stream = settings.scenario.t_stream;

  ObservationStream init_stream;
  init_stream.observations = generated.observations.topRows(t_init);
  init_stream.labels.assign(static_cast<std::size_t>(t_init), 1);
  init_stream.t_init = t_init;
  const Matrix stream = generated.observations.bottomRows(t_stream);

  const monitor::LabelOracle oracle = [&generated](int t) {
    return generated.states.at(static_cast<std::size_t>(t - 1));
  };

  RunOutcome outcome;
  if (settings.method == Method::mewma) {
    outcome.predictions = competitor_mewma(init_stream, stream, settings.mewma);
  } else {
    monitor::DriverOptions options;
    options.config = settings.monitor_cfg;
    switch (settings.method) {
      case Method::proposed:
        options.policy = monitor::Policy::proposed;
        break;
      case Method::proposed_true_init:
        options.policy = monitor::Policy::proposed;
        options.initializer = true_param_initializer(settings.scenario);
        break;
      case Method::unsupervised:
        options.policy = monitor::Policy::unsupervised;
        break;
      case Method::random_sampling:
        options.policy = monitor::Policy::random;
        break;
      case Method::equispaced:
        options.policy = monitor::Policy::equispaced;
        break;
      case Method::mewma:
        break;  // handled above
    }
    const monitor::RunResult run =
        monitor::run_stream_policy(init_stream, stream, oracle, options, run_seed);
    if (run.aborted) throw Error("monitor run aborted: " + run.abort_reason);
    outcome.predictions = run.predictions;
    outcome.labels_used = static_cast<int>(run.labeled_times.size());
    outcome.budget_cap = run.budget_cap;
    if (outcome.labels_used > run.budget_cap) {
      throw std::logic_error("budget violated by " + std::string(to_string(settings.method)));
    }
  }

  const std::vector<int> truth(generated.states.begin() + t_init,
                               generated.states.end());
  outcome.metrics = compute_metrics(truth, outcome.predictions);
  outcome.runtime_ms = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - started)
                           .count();
  return outcome;
}

namespace {

std::uint64_t bits(double v) { return std::bit_cast<std::uint64_t>(v); }

struct WorkItem {
  std::size_t slot;
  CellSettings settings;
  std::uint64_t stream_seed;
  std::uint64_t run_seed;
  ResultRow row;  // pre-filled coordinates
};

}  // namespace

GridResults run_grid(const GridConfig& cfg, int workers) {
  if (cfg.replicates < 1) throw ConfigError("grid: replicates must be >= 1");
  if (cfg.p_values.empty() || cfg.deltas.empty() || cfg.budgets.empty() ||
      cfg.w_exp_values.empty() || cfg.methods.empty()) {
    throw ConfigError("grid: every axis needs at least one value");
  }

  std::vector<WorkItem> items;
  for (int p : cfg.p_values) {
    for (double delta : cfg.deltas) {
      for (double budget : cfg.budgets) {
        for (double w_exp : cfg.w_exp_values) {
          for (Method method : cfg.methods) {
            for (int rep = 0; rep < cfg.replicates; ++rep) {
              WorkItem item;
              item.slot = items.size();
              item.settings.scenario = cfg.scenario;
              item.settings.scenario.p = p;
              item.settings.scenario.delta = delta;
              item.settings.method = method;
              item.settings.monitor_cfg = cfg.monitor_cfg;
              item.settings.monitor_cfg.budget_B = budget;
              item.settings.monitor_cfg.w_exr = 1.0 - w_exp;
              item.settings.mewma = cfg.mewma;
              // Stream seed: cell coordinates without method or weight,
              // so all strategies compete on the same data.
              item.stream_seed = derive_seed(
                  cfg.root_seed, {0x57u, static_cast<std::uint64_t>(p),
                                  bits(delta), bits(budget),
                                  static_cast<std::uint64_t>(rep)});
              item.run_seed = derive_seed(
                  cfg.root_seed,
                  {0xA1u, static_cast<std::uint64_t>(p), bits(delta),
                   bits(budget), bits(w_exp),
                   static_cast<std::uint64_t>(method),
                   static_cast<std::uint64_t>(rep)});
              item.row.method = method;
              item.row.p = p;
              item.row.delta = delta;
              item.row.budget = budget;
              item.row.w_exp = w_exp;
              item.row.replicate = rep;
              items.push_back(std::move(item));
            }
          }
        }
      }
    }
  }

  if (workers < 1) {
    workers = static_cast<int>(std::thread::hardware_concurrency());
    if (workers < 1) workers = 1;
  }
  workers = std::min<int>(workers, static_cast<int>(items.size()));

  std::atomic<std::size_t> next{0};
  const auto worker = [&items, &next]() {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= items.size()) return;
      WorkItem& item = items[k];
      try {
        const RunOutcome outcome =
            run_replicate(item.settings, item.stream_seed, item.run_seed);
        item.row.f1 = outcome.metrics.f1;
        item.row.precision = outcome.metrics.precision;
        item.row.recall = outcome.metrics.recall;
        item.row.macro_f1 = outcome.metrics.macro_f1;
        item.row.labels_used = outcome.labels_used;
        item.row.budget_cap = outcome.budget_cap;
        item.row.runtime_ms = outcome.runtime_ms;
      } catch (const std::exception& e) {
        item.row.failed = true;
        item.row.error = e.what();
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  GridResults results;
  results.rows.reserve(items.size());
  for (auto& item : items) results.rows.push_back(std::move(item.row));
  summarize(results);
  return results;
}

void summarize(GridResults& results) {
  struct Key {
    int method;
    int p;
    double delta, budget, w_exp;
    bool operator<(const Key& o) const {
      return std::tie(method, p, delta, budget, w_exp) <
             std::tie(o.method, o.p, o.delta, o.budget, o.w_exp);
    }
  };
  struct Acc {
    std::vector<double> f1, precision, recall;
    double labels = 0.0;
  };
  std::map<Key, Acc> groups;
  for (const auto& row : results.rows) {
    if (row.failed) continue;
    Key key{static_cast<int>(row.method), row.p, row.delta, row.budget, row.w_exp};
    Acc& acc = groups[key];
    acc.f1.push_back(row.f1);
    acc.precision.push_back(row.precision);
    acc.recall.push_back(row.recall);
    acc.labels += row.labels_used;
  }

  const auto mean_of = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
  };
  const auto se_of = [&mean_of](const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    const double sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    return sd / std::sqrt(static_cast<double>(v.size()));
  };

  results.summary.clear();
  for (const auto& [key, acc] : groups) {
    SummaryRow s;
    s.method = static_cast<Method>(key.method);
    s.p = key.p;
    s.delta = key.delta;
    s.budget = key.budget;
    s.w_exp = key.w_exp;
    s.replicates = static_cast<int>(acc.f1.size());
    s.f1_mean = mean_of(acc.f1);
    s.f1_se = se_of(acc.f1);
    s.precision_mean = mean_of(acc.precision);
    s.precision_se = se_of(acc.precision);
    s.recall_mean = mean_of(acc.recall);
    s.recall_se = se_of(acc.recall);
    s.labels_mean = acc.f1.empty() ? 0.0 : acc.labels / static_cast<double>(acc.f1.size());
    results.summary.push_back(s);
  }
}

void write_results_csv(const std::filesystem::path& path,
                       const GridResults& results) {
  csv::Writer w(path);
  for (const char* name :
       {"method", "p", "delta", "budget", "w_exp", "replicate", "f1",
        "precision", "recall", "macro_f1", "labels_used", "runtime_ms",
        "error"}) {
    w.field(name);
  }
  w.end_row();
  for (const auto& row : results.rows) {
    w.field(to_string(row.method));
    w.field(row.p);
    w.field(row.delta);
    w.field(row.budget);
    w.field(row.w_exp);
    w.field(row.replicate);
    if (row.failed) {
      for (int k = 0; k < 5; ++k) w.field("");
      w.field(csv::format_double_fixed(row.runtime_ms, 3));
      w.field(row.error);
    } else {
      w.field(row.f1);
      w.field(row.precision);
      w.field(row.recall);
      w.field(row.macro_f1);
      w.field(row.labels_used);
      w.field(csv::format_double_fixed(row.runtime_ms, 3));
      w.field("");
    }
    w.end_row();
  }
  w.close();
}

void write_summary_csv(const std::filesystem::path& path,
                       const GridResults& results) {
  csv::Writer w(path);
  for (const char* name :
       {"method", "p", "delta", "budget", "w_exp", "replicates", "f1_mean",
        "f1_se", "precision_mean", "precision_se", "recall_mean", "recall_se",
        "labels_mean"}) {
    w.field(name);
  }
  w.end_row();
  for (const auto& s : results.summary) {
    w.field(to_string(s.method));
    w.field(s.p);
    w.field(s.delta);
    w.field(s.budget);
    w.field(s.w_exp);
    w.field(s.replicates);
    w.field(s.f1_mean);
    w.field(s.f1_se);
    w.field(s.precision_mean);
    w.field(s.precision_se);
    w.field(s.recall_mean);
    w.field(s.recall_se);
    w.field(s.labels_mean);
    w.end_row();
  }
  w.close();
}

GridResults read_results_csv(const std::filesystem::path& path) {
  const csv::Table table = csv::read_table(path);
  const int c_method = table.column("method");
  const int c_p = table.column("p");
  const int c_delta = table.column("delta");
  const int c_budget = table.column("budget");
  const int c_w = table.column("w_exp");
  const int c_rep = table.column("replicate");
  const int c_f1 = table.column("f1");
  const int c_prec = table.column("precision");
  const int c_rec = table.column("recall");
  const int c_macro = table.column("macro_f1");
  const int c_labels = table.column("labels_used");

  GridResults results;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& fields = table.rows[r];
    ResultRow row;
    const auto method = method_from_string(fields[static_cast<std::size_t>(c_method)]);
    if (!method) {
      throw IoError(path.string() + ": unknown method '" +
                    fields[static_cast<std::size_t>(c_method)] + "'");
    }
    row.method = *method;
    row.p = std::stoi(fields[static_cast<std::size_t>(c_p)]);
    row.delta = std::stod(fields[static_cast<std::size_t>(c_delta)]);
    row.budget = std::stod(fields[static_cast<std::size_t>(c_budget)]);
    row.w_exp = std::stod(fields[static_cast<std::size_t>(c_w)]);
    row.replicate = std::stoi(fields[static_cast<std::size_t>(c_rep)]);
    if (fields[static_cast<std::size_t>(c_f1)].empty()) {
      row.failed = true;
    } else {
      row.f1 = std::stod(fields[static_cast<std::size_t>(c_f1)]);
      row.precision = std::stod(fields[static_cast<std::size_t>(c_prec)]);
      row.recall = std::stod(fields[static_cast<std::size_t>(c_rec)]);
      row.macro_f1 = std::stod(fields[static_cast<std::size_t>(c_macro)]);
      row.labels_used = std::stoi(fields[static_cast<std::size_t>(c_labels)]);
    }
    results.rows.push_back(std::move(row));
  }
  summarize(results);
  return results;
}

namespace {

const SummaryRow* find_summary(const GridResults& results, Method method, int p,
                               double delta, double budget, double w_exp) {
  for (const auto& s : results.summary) {
    if (s.method == method && s.p == p && s.delta == delta &&
        s.budget == budget && s.w_exp == w_exp) {
      return &s;
    }
  }
  return nullptr;
}

template <typename T>
std::vector<T> sorted_unique(std::vector<T> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

std::vector<std::filesystem::path> emit_figures(
    const std::filesystem::path& out_dir, const GridResults& results) {
  std::vector<std::filesystem::path> written;
  if (results.summary.empty()) return written;

  std::vector<int> ps;
  std::vector<double> deltas, budgets, weights;
  std::vector<Method> methods;
  for (const auto& s : results.summary) {
    ps.push_back(s.p);
    deltas.push_back(s.delta);
    budgets.push_back(s.budget);
    weights.push_back(s.w_exp);
    if (std::find(methods.begin(), methods.end(), s.method) == methods.end()) {
      methods.push_back(s.method);
    }
  }
  ps = sorted_unique(ps);
  deltas = sorted_unique(deltas);
  budgets = sorted_unique(budgets);
  weights = sorted_unique(weights);

  const double w_main = weights.front();

  for (int p : ps) {
    // F1 against shift size, one panel per budget.
    {
      std::vector<svg::Panel> row;
      for (double budget : budgets) {
        svg::Panel panel;
        panel.title = "B = " + csv::format_double(budget);
        panel.x_label = "shift size";
        panel.y_label = "F1";
        for (Method method : methods) {
          svg::Series series;
          series.label = to_string(method);
          for (double delta : deltas) {
            const SummaryRow* s =
                find_summary(results, method, p, delta, budget, w_main);
            if (s == nullptr) continue;
            series.x.push_back(delta);
            series.y.push_back(s->f1_mean);
            series.err.push_back(s->f1_se);
          }
          if (!series.x.empty()) panel.series.push_back(std::move(series));
        }
        if (!panel.series.empty()) row.push_back(std::move(panel));
      }
      if (!row.empty()) {
        const auto path = out_dir / ("fig_shift_p" + std::to_string(p) + ".svg");
        svg::write_panel_grid(path, {row}, "F1 by shift size, p = " + std::to_string(p));
        written.push_back(path);
      }
    }

    // F1 against budget, one panel per shift size.
    {
      std::vector<svg::Panel> row;
      for (double delta : deltas) {
        svg::Panel panel;
        panel.title = "shift = " + csv::format_double(delta);
        panel.x_label = "budget";
        panel.y_label = "F1";
        for (Method method : methods) {
          svg::Series series;
          series.label = to_string(method);
          for (double budget : budgets) {
            const SummaryRow* s =
                find_summary(results, method, p, delta, budget, w_main);
            if (s == nullptr) continue;
            series.x.push_back(budget);
            series.y.push_back(s->f1_mean);
            series.err.push_back(s->f1_se);
          }
          if (!series.x.empty()) panel.series.push_back(std::move(series));
        }
        if (!panel.series.empty()) row.push_back(std::move(panel));
      }
      if (!row.empty()) {
        const auto path = out_dir / ("fig_budget_p" + std::to_string(p) + ".svg");
        svg::write_panel_grid(path, {row}, "F1 by budget, p = " + std::to_string(p));
        written.push_back(path);
      }
    }

    // Weight sweep: metric rows by budget columns, a line per weight.
    if (weights.size() > 1) {
      std::vector<std::vector<svg::Panel>> grid;
      const char* metric_names[] = {"F1", "precision", "recall"};
      for (int metric = 0; metric < 3; ++metric) {
        std::vector<svg::Panel> row;
        for (double budget : budgets) {
          svg::Panel panel;
          panel.title = std::string(metric_names[metric]) +
                        ", B = " + csv::format_double(budget);
          panel.x_label = "shift size";
          panel.y_label = metric_names[metric];
          for (double w : weights) {
            svg::Series series;
            series.label = "w_exp = " + csv::format_double(w);
            for (double delta : deltas) {
              const SummaryRow* s = find_summary(results, Method::proposed, p,
                                                 delta, budget, w);
              if (s == nullptr) continue;
              series.x.push_back(delta);
              switch (metric) {
                case 0:
                  series.y.push_back(s->f1_mean);
                  series.err.push_back(s->f1_se);
                  break;
                case 1:
                  series.y.push_back(s->precision_mean);
                  series.err.push_back(s->precision_se);
                  break;
                default:
                  series.y.push_back(s->recall_mean);
                  series.err.push_back(s->recall_se);
              }
            }
            if (!series.x.empty()) panel.series.push_back(std::move(series));
          }
          if (!panel.series.empty()) row.push_back(std::move(panel));
        }
        if (!row.empty()) grid.push_back(std::move(row));
      }
      if (!grid.empty()) {
        const auto path = out_dir / ("fig_weights_p" + std::to_string(p) + ".svg");
        svg::write_panel_grid(path, grid,
                              "Exploitation weight sweep, p = " + std::to_string(p));
        written.push_back(path);
      }
    }
  }
  return written;
}

}  // namespace spm::bench
