#include "irlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "irlab/text.hpp"

namespace irlab {

double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) throw std::invalid_argument("pearson: length mismatch");
  if (a.size() < 2) throw std::invalid_argument("pearson: need at least two samples");
  const Eigen::VectorXd da = a.array() - a.mean();
  const Eigen::VectorXd db = b.array() - b.mean();
  const double ssa = da.squaredNorm();
  const double ssb = db.squaredNorm();
  if (ssa == 0.0 || ssb == 0.0)
    throw std::runtime_error("pearson: undefined for a constant series");
  return da.dot(db) / std::sqrt(ssa * ssb);
}

namespace {

Eigen::VectorXd average_ranks(const Eigen::VectorXd& v) {
  const int n = static_cast<int>(v.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int i, int j) { return v[i] < v[j]; });
  Eigen::VectorXd ranks(n);
  int i = 0;
  while (i < n) {
    int j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double shared = 0.5 * (i + j) + 1.0;
    for (int k = i; k <= j; ++k) ranks[order[k]] = shared;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) throw std::invalid_argument("spearman: length mismatch");
  return pearson(average_ranks(a), average_ranks(b));
}

double evd(const MdpModel& mdp, const RewardTable& true_reward,
           const RewardTable& learned_reward, double tol) {
  const auto on_true = value_iteration(mdp, true_reward, tol);
  const auto on_learned = value_iteration(mdp, learned_reward, tol);
  const Policy pi = greedy_policy(on_learned.second);
  const ValueFunction v_pi = policy_evaluation(mdp, true_reward, pi, tol);
  return on_true.first.v.mean() - v_pi.v.mean();
}

ErrorSeries reward_error_series(const CwaeModel& model, const Dataset& dataset,
                                const PendulumSpec& spec, int window, double sign) {
  if (window < 1) throw std::invalid_argument("reward_error_series: window must be >= 1");
  const PerStepRewards predicted = per_step_rewards(model, dataset, spec);

  ErrorSeries series;
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t traj = 0; traj < predicted.mean.size(); ++traj) {
    const auto len = predicted.mean[traj].size();
    Eigen::VectorXd err(len);
    for (Eigen::Index t = 0; t < len; ++t) {
      const ContinuousStep& step = dataset.continuous[traj][t];
      const double truth = pendulum_reward(step.state, step.action, spec);
      err[t] = sign * predicted.mean[traj][t] - truth;
    }
    total += err.sum();
    count += static_cast<std::size_t>(len);

    const Eigen::Index half = window / 2;
    Eigen::VectorXd smooth(len), band(len);
    for (Eigen::Index t = 0; t < len; ++t) {
      const Eigen::Index lo = std::max<Eigen::Index>(0, t - half);
      const Eigen::Index hi = std::min<Eigen::Index>(len - 1, t + half);
      const auto seg = err.segment(lo, hi - lo + 1);
      smooth[t] = seg.mean();
      band[t] = std::sqrt((seg.array() - smooth[t]).square().mean());
    }
    series.raw.push_back(std::move(err));
    series.smoothed.push_back(std::move(smooth));
    series.band.push_back(std::move(band));
  }
  if (count == 0) throw std::invalid_argument("reward_error_series: empty dataset");
  series.mean_signed_error = total / static_cast<double>(count);
  return series;
}

void heatmap_export(const RewardTable& reward, int grid_size, const std::string& path) {
  const Eigen::VectorXd& values = reward.state_values();
  if (values.size() != static_cast<Eigen::Index>(grid_size) * grid_size)
    throw std::invalid_argument("heatmap_export: reward size does not match grid");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("heatmap_export: cannot open " + path);
  for (int y = 0; y < grid_size; ++y) {
    for (int x = 0; x < grid_size; ++x) {
      if (x > 0) out << ',';
      out << format_fixed6(values[y * grid_size + x]);
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("heatmap_export: write failed for " + path);
}

Eigen::VectorXd heatmap_load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("heatmap_load: cannot open " + path);
  std::vector<double> values;
  std::string line;
  int rows = 0;
  Eigen::Index cols = -1;
  while (std::getline(in, line)) {
    ++rows;
    const auto cells = split(line, ',');
    if (cols < 0) cols = static_cast<Eigen::Index>(cells.size());
    if (static_cast<Eigen::Index>(cells.size()) != cols)
      throw std::runtime_error("heatmap_load: ragged row at " + path + ":" +
                               std::to_string(rows));
    for (const auto& cell : cells)
      values.push_back(parse_double(cell, path + ":" + std::to_string(rows)));
  }
  if (rows != cols)
    throw std::runtime_error("heatmap_load: expected a square grid in " + path);
  return Eigen::Map<Eigen::VectorXd>(values.data(),
                                     static_cast<Eigen::Index>(values.size()));
}

void error_series_save(const ErrorSeries& series, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("error_series_save: cannot open " + path);
  out << "trajectory,t,error,smoothed,band\n";
  for (std::size_t traj = 0; traj < series.raw.size(); ++traj) {
    for (Eigen::Index t = 0; t < series.raw[traj].size(); ++t) {
      out << traj << ',' << t << ',' << format_sig9(series.raw[traj][t]) << ','
          << format_sig9(series.smoothed[traj][t]) << ','
          << format_sig9(series.band[traj][t]) << '\n';
    }
  }
  if (!out) throw std::runtime_error("error_series_save: write failed for " + path);
}

}  // namespace irlab
