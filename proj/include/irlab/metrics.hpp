#pragma once

#include <string>
#include <vector>

#include "irlab/cwae.hpp"
#include "irlab/mdp.hpp"

namespace irlab {

/// Sample Pearson correlation; throws for constant inputs (undefined).
double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Pearson correlation of average ranks (ties share the mean rank).
double spearman(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Expected value difference: optimal value under the true reward minus the
/// true value of the policy that is greedy for the learned reward, averaged
/// over a uniform start distribution. Nonnegative up to solver tolerance.
double evd(const MdpModel& mdp, const RewardTable& true_reward,
           const RewardTable& learned_reward, double tol = 1e-9);

/// Per-step (predicted minus true) reward errors along held-out pendulum
/// trajectories, with a centered moving average and a matching per-window
/// standard-deviation band. `sign` pre-multiplies the predictions (latent
/// orientation). window = 1 leaves the series unsmoothed.
struct ErrorSeries {
  std::vector<Eigen::VectorXd> raw;
  std::vector<Eigen::VectorXd> smoothed;
  std::vector<Eigen::VectorXd> band;
  double mean_signed_error = 0.0;
};

ErrorSeries reward_error_series(const CwaeModel& model, const Dataset& dataset,
                                const PendulumSpec& spec, int window = 25,
                                double sign = 1.0);

/// Grid reward as N lines of N comma-separated values, six decimal places,
/// grid row 0 first.
void heatmap_export(const RewardTable& reward, int grid_size, const std::string& path);
Eigen::VectorXd heatmap_load(const std::string& path);

/// One smoothed error series per CSV: `trajectory,t,error,smoothed,band`.
void error_series_save(const ErrorSeries& series, const std::string& path);

}  // namespace irlab
