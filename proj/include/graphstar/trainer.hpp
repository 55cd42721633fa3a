#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "graphstar/metrics.hpp"
#include "graphstar/run_config.hpp"

namespace graphstar {

inline constexpr const char* kVersion = "0.1.0";

struct EpochRow {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_metric = 0.0;
  double test_metric_at_best = std::numeric_limits<double>::quiet_NaN();
  double seconds = 0.0;
};

/// Per-run training record. The reported test value is the one measured at
/// the best-validation checkpoint; the test set never drives selection.
struct MetricsRecord {
  std::vector<EpochRow> rows;
  MetricKind metric = MetricKind::Accuracy;
  double best_val = -std::numeric_limits<double>::infinity();
  double test_at_best = std::numeric_limits<double>::quiet_NaN();
  std::size_t best_epoch = 0;
  bool diverged = false;
};

struct TrainResult {
  MetricsRecord record;
  RunConfig config;  // echo with resolved fractions
};

/// Full training run: early stopping on the validation metric with the
/// configured patience, best parameters retained. Writes metrics.csv,
/// summary.json and checkpoint.bin under config.out_dir when set.
TrainResult run_training(const RunConfig& config);

struct CvResult {
  std::vector<MetricsRecord> folds;
  MetricKind metric = MetricKind::Accuracy;
  double mean_test = std::numeric_limits<double>::quiet_NaN();
  double stddev_test = std::numeric_limits<double>::quiet_NaN();  // sample std dev
  double stderr_test = std::numeric_limits<double>::quiet_NaN();
};

/// k-fold cross-validation for graph-classification tasks; per-fold curves
/// land in <out_dir>/fold_<i>/metrics.csv.
CvResult run_cv(const RunConfig& config);

struct SweepRow {
  double fraction = 1.0;
  double test_metric = std::numeric_limits<double>::quiet_NaN();
  double val_metric = std::numeric_limits<double>::quiet_NaN();
};

/// Training-size reduction study: for each fraction, the removed training
/// portion moves into the validation and test pools (half each) and the
/// model retrains from scratch under the same seed policy.
std::vector<SweepRow> run_size_sweep(const RunConfig& config,
                                     const std::vector<double>& fractions);

struct EvalResult {
  MetricKind metric = MetricKind::Accuracy;
  double test_metric = std::numeric_limits<double>::quiet_NaN();
};

/// Rebuilds the model for the config, loads a checkpoint, and evaluates the
/// test metric on the config's dataset split.
EvalResult run_eval(const RunConfig& config, const std::string& checkpoint_path);

/// Loads the dataset named by the config and returns a JSON summary
/// (counts, dimensions, split sizes).
std::string dataset_summary(const RunConfig& config);

void write_metrics_csv(const std::string& path, const MetricsRecord& record);

}  // namespace graphstar
