#include "irlab/experiment.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>

#include "irlab/metrics.hpp"
#include "irlab/text.hpp"

namespace irlab {

namespace {

namespace fs = std::filesystem;

std::string artifact(const ExperimentConfig& config, const std::string& name) {
  return (fs::path(config.out_dir) / name).string();
}

void clear_failure_marker(const ExperimentConfig& config) {
  fs::create_directories(config.out_dir);
  fs::remove(fs::path(config.out_dir) / "FAILED");
}

template <typename F>
auto stage(const ExperimentConfig& config, const std::string& name, F&& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    std::ofstream marker(artifact(config, "FAILED"));
    marker << name << ": " << e.what() << '\n';
    throw std::runtime_error("stage " + name + ": " + e.what());
  }
}

int resolved_expert_length(const ExperimentConfig& config) {
  if (config.expert_length > 0) return config.expert_length;
  return config.env == EnvTag::Pendulum ? config.pendulum.episode_len : 16;
}

Objectworld rebuild_world(const ExperimentConfig& config) {
  ObjectworldSpec spec = config.objectworld;
  spec.placement_seed = sub_seed(config.seed, 1);
  return build_objectworld(spec);
}

void write_seconds(const ExperimentConfig& config, double seconds) {
  std::ofstream out(artifact(config, "seconds.txt"));
  out << format_sig9(seconds) << '\n';
}

double read_seconds(const ExperimentConfig& config) {
  std::ifstream in(artifact(config, "seconds.txt"));
  std::string line;
  if (!in || !std::getline(in, line)) return 0.0;
  return parse_double(strip(line), artifact(config, "seconds.txt"));
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

Dataset load_dataset(const ExperimentConfig& config, const std::string& name) {
  const std::string path = artifact(config, name);
  if (!fs::exists(path)) {
    throw std::runtime_error(name + " not found in " + config.out_dir +
                             "; run the gen stage first");
  }
  return dataset_load(path);
}

CwaeCheckpoint load_checkpoint(const ExperimentConfig& config) {
  const std::string path = artifact(config, "cwae.ckpt");
  if (!fs::exists(path)) {
    throw std::runtime_error("cwae.ckpt not found in " + config.out_dir +
                             "; run the train stage first");
  }
  return cwae_load(path);
}

std::string field(double v) { return format_sig9(v); }

double nan_skipping_mean(const std::vector<double>& values) {
  double sum = 0.0;
  int n = 0;
  for (double v : values) {
    if (std::isfinite(v)) {
      sum += v;
      ++n;
    }
  }
  return n == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / n;
}

}  // namespace

void metrics_save(const MetricsReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("metrics_save: cannot open " + path);
  out << "method,seed,pearson,spearman,evd,mean_signed_error,seconds\n";
  out << report.method << ',' << report.seed << ',' << field(report.pearson) << ','
      << field(report.spearman) << ',' << field(report.evd) << ','
      << field(report.mean_signed_error) << ',' << field(report.seconds) << '\n';
  if (!out) throw std::runtime_error("metrics_save: write failed for " + path);
}

MetricsReport metrics_load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("metrics_load: cannot open " + path);
  std::string header, row;
  if (!std::getline(in, header) ||
      header != "method,seed,pearson,spearman,evd,mean_signed_error,seconds") {
    throw std::runtime_error("metrics_load: unexpected header in " + path);
  }
  if (!std::getline(in, row)) throw std::runtime_error("metrics_load: missing row in " + path);
  const auto cells = split(strip(row), ',');
  if (cells.size() != 7) throw std::runtime_error("metrics_load: malformed row in " + path);
  MetricsReport report;
  report.method = cells[0];
  report.seed = static_cast<std::uint64_t>(parse_u64(cells[1], path));
  report.pearson = parse_double(cells[2], path);
  report.spearman = parse_double(cells[3], path);
  report.evd = parse_double(cells[4], path);
  report.mean_signed_error = parse_double(cells[5], path);
  report.seconds = parse_double(cells[6], path);
  return report;
}

std::string aggregate_metrics_csv(const std::vector<MetricsReport>& rows) {
  std::map<std::string, std::vector<MetricsReport>> by_method;
  for (const auto& row : rows) by_method[row.method].push_back(row);

  std::string out = "method,runs,pearson,spearman,evd,mean_signed_error,seconds\n";
  for (const auto& [method, group] : by_method) {
    std::vector<double> pearsons, spearmans, evds, errors, seconds;
    for (const auto& row : group) {
      pearsons.push_back(row.pearson);
      spearmans.push_back(row.spearman);
      evds.push_back(row.evd);
      errors.push_back(row.mean_signed_error);
      seconds.push_back(row.seconds);
    }
    out += method + ',' + std::to_string(group.size()) + ',' +
           field(nan_skipping_mean(pearsons)) + ',' + field(nan_skipping_mean(spearmans)) +
           ',' + field(nan_skipping_mean(evds)) + ',' + field(nan_skipping_mean(errors)) +
           ',' + field(nan_skipping_mean(seconds)) + '\n';
  }
  return out;
}

void run_generate(const ExperimentConfig& config) {
  config.validate();
  clear_failure_marker(config);

  if (config.env == EnvTag::Objectworld) {
    const Objectworld world = stage(config, "build-env", [&] {
      Objectworld w = rebuild_world(config);
      placement_save(w.placement, artifact(config, "placement.txt"));
      return w;
    });
    const Policy policy = stage(config, "expert", [&] {
      return expert_policy_objectworld(world.mdp, RewardTable::per_state(world.true_reward),
                                       config.expert_temperature);
    });
    stage(config, "dataset", [&] {
      const Dataset dataset = sample_objectworld_trajectories(
          world, policy, config.expert_count, resolved_expert_length(config),
          sub_seed(config.seed, 2));
      dataset_save(dataset, artifact(config, "dataset.csv"));
      return 0;
    });
    return;
  }

  stage(config, "build-env", [&] {
    config.pendulum.validate();
    return 0;
  });
  const PendulumPolicy policy = stage(config, "expert", [&] {
    DqnConfig dqn = config.dqn;
    dqn.seed = sub_seed(config.seed, 4);
    DqnResult result = train_dqn_pendulum(config.pendulum, dqn);
    mlp_save(result.q_net, artifact(config, "dqn.ckpt"));
    std::ofstream returns(artifact(config, "dqn_returns.csv"));
    returns << "episode,return\n";
    for (std::size_t i = 0; i < result.episode_returns.size(); ++i) {
      returns << i << ',' << format_sig9(result.episode_returns[i]) << '\n';
    }
    return dqn_greedy_policy(std::move(result.q_net), config.pendulum);
  });
  stage(config, "dataset", [&] {
    const int length = resolved_expert_length(config);
    const Dataset train = sample_pendulum_trajectories(
        config.pendulum, policy, config.expert_count, length, sub_seed(config.seed, 2));
    dataset_save(train, artifact(config, "dataset.csv"));
    if (config.eval_count > 0) {
      const Dataset held_out = sample_pendulum_trajectories(
          config.pendulum, policy, config.eval_count, length, sub_seed(config.seed, 6));
      dataset_save(held_out, artifact(config, "eval_dataset.csv"));
    }
    return 0;
  });
}

void run_train(const ExperimentConfig& config) {
  config.validate();
  if (config.method != "cwae") {
    throw std::runtime_error("run_train: method is '" + config.method +
                             "'; baselines go through run_baseline");
  }
  clear_failure_marker(config);

  const Dataset dataset = stage(config, "dataset", [&] { return load_dataset(config, "dataset.csv"); });
  stage(config, "method", [&] {
    CwaeTrainConfig cwae = config.cwae;
    cwae.seed = sub_seed(config.seed, 3);
    Stopwatch timer;
    CwaeTrainResult result =
        config.env == EnvTag::Objectworld
            ? train_cwae(dataset, rebuild_world(config), cwae)
            : train_cwae(dataset, config.pendulum, cwae);
    write_seconds(config, timer.seconds());
    cwae_save(result.model, cwae, artifact(config, "cwae.ckpt"));
    cwae_curves_save(result.curves, artifact(config, "curves.csv"));
    return 0;
  });
}

void run_baseline(const ExperimentConfig& config) {
  config.validate();
  if (config.method == "cwae") {
    throw std::runtime_error("run_baseline: method is 'cwae'; use run_train");
  }
  clear_failure_marker(config);

  const Dataset dataset = stage(config, "dataset", [&] { return load_dataset(config, "dataset.csv"); });
  stage(config, "method", [&] {
    const Objectworld world = rebuild_world(config);
    Stopwatch timer;
    RewardTable learned = RewardTable::per_state(Eigen::VectorXd::Zero(world.num_states()));
    if (config.method == "maxent") {
      learned = maxent_irl(world.features, world.mdp, dataset, config.maxent);
    } else if (config.method == "deep-maxent") {
      DeepMaxEntConfig deep = config.deep_maxent;
      deep.seed = sub_seed(config.seed, 7);
      learned = deep_maxent_irl(world.features, world.mdp, dataset, deep);
    } else {
      BirlConfig birl = config.birl;
      birl.seed = sub_seed(config.seed, 5);
      learned = birl_policywalk(world.mdp, dataset, birl);
    }
    write_seconds(config, timer.seconds());
    heatmap_export(learned, world.spec.grid_size,
                   artifact(config, "reward_" + config.method + ".csv"));
    return 0;
  });
}

MetricsReport run_evaluate(const ExperimentConfig& config) {
  config.validate();
  clear_failure_marker(config);

  MetricsReport report;
  report.method = config.method;
  report.seed = config.seed;
  report.seconds = read_seconds(config);

  stage(config, "metrics", [&] {
    if (config.env == EnvTag::Objectworld) {
      const Objectworld world = rebuild_world(config);
      Eigen::VectorXd learned;
      if (config.method == "cwae") {
        const Dataset dataset = load_dataset(config, "dataset.csv");
        const CwaeCheckpoint ckpt = load_checkpoint(config);
        const RewardEstimate estimate =
            extract_reward_map(ckpt.model, world, config.extraction, &dataset);
        const double sign =
            config.orient ? latent_sign(ckpt.model, world, dataset) : 1.0;
        learned = sign * estimate.mean;
        heatmap_export(RewardTable::per_state(learned), world.spec.grid_size,
                       artifact(config, "reward_cwae.csv"));
      } else {
        learned = heatmap_load(artifact(config, "reward_" + config.method + ".csv"));
      }
      report.pearson = pearson(learned, world.true_reward);
      report.spearman = spearman(learned, world.true_reward);
      report.evd = evd(world.mdp, RewardTable::per_state(world.true_reward),
                       RewardTable::per_state(learned));
      report.mean_signed_error = (learned - world.true_reward).mean();
    } else {
      const Dataset train_set = load_dataset(config, "dataset.csv");
      const Dataset held_out = load_dataset(config, "eval_dataset.csv");
      const CwaeCheckpoint ckpt = load_checkpoint(config);
      const double sign =
          config.orient ? latent_sign(ckpt.model, config.pendulum, train_set) : 1.0;
      const ErrorSeries series =
          reward_error_series(ckpt.model, held_out, config.pendulum, config.window, sign);
      error_series_save(series, artifact(config, "error_series.csv"));

      std::size_t total = 0;
      for (const auto& traj : series.raw) total += static_cast<std::size_t>(traj.size());
      Eigen::VectorXd predicted(total), truth(total);
      std::size_t row = 0;
      const PerStepRewards per_step = per_step_rewards(ckpt.model, held_out, config.pendulum);
      for (std::size_t traj = 0; traj < series.raw.size(); ++traj) {
        for (Eigen::Index t = 0; t < series.raw[traj].size(); ++t, ++row) {
          predicted(row) = sign * per_step.mean[traj][t];
          truth(row) = predicted(row) - series.raw[traj][t];
        }
      }
      report.pearson = pearson(predicted, truth);
      report.spearman = spearman(predicted, truth);
      report.mean_signed_error = series.mean_signed_error;
    }
    metrics_save(report, artifact(config, "metrics.csv"));
    return 0;
  });
  return report;
}

MetricsReport run_experiment(const ExperimentConfig& config) {
  run_generate(config);
  if (config.method == "cwae") {
    run_train(config);
  } else {
    run_baseline(config);
  }
  return run_evaluate(config);
}

}  // namespace irlab
