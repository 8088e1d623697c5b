#pragma once

#include <limits>
#include <string>
#include <vector>

#include "irlab/config.hpp"

namespace irlab {

struct MetricsReport {
  std::string method;
  std::uint64_t seed = 0;
  double pearson = std::numeric_limits<double>::quiet_NaN();
  double spearman = std::numeric_limits<double>::quiet_NaN();
  double evd = std::numeric_limits<double>::quiet_NaN();
  double mean_signed_error = std::numeric_limits<double>::quiet_NaN();
  double seconds = 0.0;
};

/// Header `method,seed,pearson,spearman,evd,mean_signed_error,seconds`, one
/// row, 9 significant digits, nan spelled "nan".
void metrics_save(const MetricsReport& report, const std::string& path);
MetricsReport metrics_load(const std::string& path);

/// Mean per method over a seed sweep (nan entries skipped per column).
/// Returns CSV text with header `method,runs,pearson,spearman,evd,
/// mean_signed_error,seconds`, methods in sorted order.
std::string aggregate_metrics_csv(const std::vector<MetricsReport>& rows);

/// Pipeline stages. Each writes its artifacts into config.out_dir and loads
/// what earlier stages left there, so the stages can run in separate
/// processes. The global seed fans out to per-stage seeds internally. A
/// failing stage leaves a FAILED marker file naming the stage and rethrows.
///
/// Artifacts: dataset.csv (+ placement.txt / eval_dataset.csv, dqn.ckpt),
/// cwae.ckpt + curves.csv or reward_<method>.csv, error_series.csv,
/// metrics.csv.
void run_generate(const ExperimentConfig& config);
void run_train(const ExperimentConfig& config);
void run_baseline(const ExperimentConfig& config);
MetricsReport run_evaluate(const ExperimentConfig& config);

/// generate, then train or baseline, then evaluate.
MetricsReport run_experiment(const ExperimentConfig& config);

}  // namespace irlab
