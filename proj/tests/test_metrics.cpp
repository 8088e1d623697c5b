#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "irlab/experiment.hpp"
#include "irlab/metrics.hpp"

using namespace irlab;

namespace {

std::filesystem::path temp_dir(const std::string& tag) {
  const auto dir = std::filesystem::temp_directory_path() / ("irlab_test_" + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void spit(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

Eigen::VectorXd vec(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (const double x : values) v[i++] = x;
  return v;
}

MdpModel stay_or_switch(double discount = 0.9) {
  MdpModel mdp;
  mdp.num_states = 2;
  mdp.num_actions = 2;
  mdp.discount = discount;
  mdp.transition = {Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Zero(2, 2)};
  mdp.transition[1] << 0, 1, 1, 0;
  return mdp;
}

MdpModel random_mdp(Rng& rng, int num_states, int num_actions) {
  MdpModel mdp;
  mdp.num_states = num_states;
  mdp.num_actions = num_actions;
  mdp.discount = 0.9;
  for (int a = 0; a < num_actions; ++a) {
    Eigen::MatrixXd t(num_states, num_states);
    for (int s = 0; s < num_states; ++s) {
      for (int j = 0; j < num_states; ++j) t(s, j) = rand_uniform(rng) + 0.05;
      t.row(s) /= t.row(s).sum();
    }
    mdp.transition.push_back(std::move(t));
  }
  return mdp;
}

}  // namespace

TEST_SUITE("correlations") {

TEST_CASE("pearson matches the hand-computed value") {
  const double r = pearson(vec({1, 2, 3}), vec({1, 2, 4}));
  CHECK(r == doctest::Approx(9.0 / std::sqrt(84.0)).epsilon(1e-12));
}

TEST_CASE("pearson endpoints and affine invariance") {
  const Eigen::VectorXd a = vec({0.3, -1.2, 2.5, 0.9, -0.4});
  CHECK(pearson(a, a) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pearson(a, -a) == doctest::Approx(-1.0).epsilon(1e-12));

  const Eigen::VectorXd b = vec({1.0, 0.0, -2.0, 0.5, 3.0});
  const double base = pearson(a, b);
  CHECK(pearson(a, (3.0 * b).array() - 7.0) == doctest::Approx(base).epsilon(1e-12));
  CHECK(pearson((0.1 * a).array() + 2.0, b) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("pearson rejects degenerate input") {
  CHECK_THROWS_AS(pearson(vec({1, 2}), vec({1, 2, 3})), std::invalid_argument);
  CHECK_THROWS_AS(pearson(vec({1}), vec({2})), std::invalid_argument);
  CHECK_THROWS_WITH_AS(pearson(vec({2, 2, 2}), vec({1, 2, 3})),
                       doctest::Contains("constant"), std::runtime_error);
}

TEST_CASE("spearman ranks with ties") {
  const double rho = spearman(vec({1, 1, 2}), vec({3, 5, 10}));
  CHECK(rho == doctest::Approx(std::sqrt(3.0) / 2.0).epsilon(1e-12));
}

TEST_CASE("spearman sees only the ordering") {
  const Eigen::VectorXd a = vec({0.2, -1.5, 3.0, 0.7, 2.1});
  const Eigen::VectorXd b = vec({5.0, 1.0, 2.0, -3.0, 4.0});
  const double base = spearman(a, b);
  const Eigen::VectorXd cubed = a.array().cube();
  CHECK(spearman(cubed, b) == doctest::Approx(base).epsilon(1e-12));
  CHECK(spearman(a, b.array().exp()) == doctest::Approx(base).epsilon(1e-12));

  const Eigen::VectorXd sorted = vec({1, 2, 3, 4});
  CHECK(spearman(sorted, vec({10, 20, 30, 40})) == doctest::Approx(1.0));
  CHECK(spearman(sorted, vec({40, 30, 20, 10})) == doctest::Approx(-1.0));
}

}  // TEST_SUITE

TEST_SUITE("value difference") {

TEST_CASE("matching rewards have zero difference") {
  Rng rng(51);
  const MdpModel mdp = random_mdp(rng, 5, 3);
  Eigen::VectorXd r(5);
  for (int s = 0; s < 5; ++s) r[s] = rand_normal(rng);
  const RewardTable truth = RewardTable::per_state(r);
  CHECK(std::abs(evd(mdp, truth, truth)) < 2e-9);
  CHECK(std::abs(evd(mdp, truth, RewardTable::per_state(r.array() + 3.5))) < 2e-9);
}

TEST_CASE("a reversed reward pays the full value gap") {
  const MdpModel mdp = stay_or_switch();
  const RewardTable truth = RewardTable::per_state(vec({1, 0}));
  const RewardTable reversed = RewardTable::per_state(vec({0, 1}));
  CHECK(evd(mdp, truth, reversed) == doctest::Approx(10.0).epsilon(1e-6));
}

TEST_CASE("never negative beyond solver tolerance") {
  Rng rng(52);
  for (int trial = 0; trial < 10; ++trial) {
    const MdpModel mdp = random_mdp(rng, 4, 2);
    Eigen::VectorXd truth(4), learned(4);
    for (int s = 0; s < 4; ++s) {
      truth[s] = rand_normal(rng);
      learned[s] = rand_normal(rng);
    }
    CHECK(evd(mdp, RewardTable::per_state(truth), RewardTable::per_state(learned)) > -1e-6);
  }
}

}  // TEST_SUITE

TEST_SUITE("error series") {

namespace {

struct SeriesFixture {
  PendulumSpec spec;
  Dataset dataset;
  CwaeModel model;

  SeriesFixture()
      : spec(make_spec()),
        dataset(make_dataset(spec)),
        model(make_cwae_model(EnvTag::Pendulum, kPendulumReprDim, spec.action_count,
                              tiny_config())) {}

  static PendulumSpec make_spec() {
    PendulumSpec spec;
    spec.episode_len = 12;
    return spec;
  }

  static Dataset make_dataset(const PendulumSpec& spec) {
    Rng rng(61);
    const PendulumPolicy policy = [&](const PendulumState&) {
      return static_cast<int>(rand_int(rng, 0, spec.action_count - 1));
    };
    return sample_pendulum_trajectories(spec, policy, 2, 12, 62);
  }

  static CwaeTrainConfig tiny_config() {
    CwaeTrainConfig config;
    config.hidden = {6};
    config.seed = 63;
    return config;
  }
};

}  // namespace

TEST_CASE_FIXTURE(SeriesFixture, "shapes follow the dataset and window one is raw") {
  const ErrorSeries series = reward_error_series(model, dataset, spec, 1);
  REQUIRE(series.raw.size() == 2);
  for (std::size_t traj = 0; traj < 2; ++traj) {
    CHECK(series.raw[traj].size() == 12);
    CHECK(series.smoothed[traj] == series.raw[traj]);
    CHECK(series.band[traj].cwiseAbs().maxCoeff() == 0.0);
  }

  double total = 0.0;
  for (const auto& err : series.raw) total += err.sum();
  CHECK(series.mean_signed_error == doctest::Approx(total / 24.0).epsilon(1e-12));
}

TEST_CASE_FIXTURE(SeriesFixture, "raw errors are oriented predictions minus true reward") {
  const ErrorSeries plus = reward_error_series(model, dataset, spec, 1, 1.0);
  const ErrorSeries minus = reward_error_series(model, dataset, spec, 1, -1.0);
  const PerStepRewards predicted = per_step_rewards(model, dataset, spec);

  for (std::size_t traj = 0; traj < 2; ++traj) {
    const Eigen::VectorXd two_mu = plus.raw[traj] - minus.raw[traj];
    CHECK((two_mu - 2.0 * predicted.mean[traj]).cwiseAbs().maxCoeff() < 1e-12);
    for (Eigen::Index t = 0; t < 12; ++t) {
      const ContinuousStep& step = dataset.continuous[traj][t];
      const double truth = pendulum_reward(step.state, step.action, spec);
      CHECK(plus.raw[traj][t] ==
            doctest::Approx(predicted.mean[traj][t] - truth).epsilon(1e-12));
    }
  }
}

TEST_CASE_FIXTURE(SeriesFixture, "window three averages the clipped neighborhood") {
  const ErrorSeries series = reward_error_series(model, dataset, spec, 3);
  const ErrorSeries raw = reward_error_series(model, dataset, spec, 1);
  for (std::size_t traj = 0; traj < 2; ++traj) {
    const Eigen::VectorXd& err = raw.raw[traj];
    CHECK(series.smoothed[traj][0] ==
          doctest::Approx(err.head(2).mean()).epsilon(1e-12));
    CHECK(series.smoothed[traj][5] ==
          doctest::Approx(err.segment(4, 3).mean()).epsilon(1e-12));
    CHECK(series.smoothed[traj][11] ==
          doctest::Approx(err.tail(2).mean()).epsilon(1e-12));
    CHECK(series.band[traj][5] >= 0.0);
  }
}

TEST_CASE_FIXTURE(SeriesFixture, "window must be positive") {
  CHECK_THROWS_AS(reward_error_series(model, dataset, spec, 0), std::invalid_argument);
}

TEST_CASE("save writes one row per step") {
  ErrorSeries series;
  series.raw = {vec({0.5, -1.25})};
  series.smoothed = {vec({0.5, -0.375})};
  series.band = {vec({0.0, 0.875})};
  series.mean_signed_error = -0.375;

  const auto dir = temp_dir("error_series");
  const auto path = (dir / "series.csv").string();
  error_series_save(series, path);
  CHECK(slurp(path) ==
        "trajectory,t,error,smoothed,band\n"
        "0,0,0.5,0.5,0\n"
        "0,1,-1.25,-0.375,0.875\n");
}

}  // TEST_SUITE

TEST_SUITE("heatmaps") {

TEST_CASE("export writes fixed six decimal rows in grid order") {
  const auto dir = temp_dir("heatmap");
  const auto path = (dir / "reward.csv").string();
  heatmap_export(RewardTable::per_state(vec({0.0, 1.0, -1.0, 0.5})), 2, path);
  CHECK(slurp(path) == "0.000000,1.000000\n-1.000000,0.500000\n");

  const Eigen::VectorXd loaded = heatmap_load(path);
  CHECK(loaded == vec({0.0, 1.0, -1.0, 0.5}));
}

TEST_CASE("round trip quantizes to half a millionth") {
  const auto dir = temp_dir("heatmap_rt");
  const auto path = (dir / "reward.csv").string();
  Rng rng(71);
  Eigen::VectorXd values(9);
  for (int i = 0; i < 9; ++i) values[i] = rand_normal(rng);
  heatmap_export(RewardTable::per_state(values), 3, path);
  const Eigen::VectorXd loaded = heatmap_load(path);
  CHECK((loaded - values).cwiseAbs().maxCoeff() <= 5e-7);
}

TEST_CASE("export rejects a reward that does not tile the grid") {
  const auto dir = temp_dir("heatmap_bad");
  CHECK_THROWS_AS(
      heatmap_export(RewardTable::per_state(vec({1, 2, 3})), 2, (dir / "r.csv").string()),
      std::invalid_argument);
}

TEST_CASE("load rejects ragged and malformed files") {
  const auto dir = temp_dir("heatmap_load");
  const auto ragged = dir / "ragged.csv";
  spit(ragged, "1.0,2.0\n3.0,4.0,5.0\n");
  CHECK_THROWS_WITH_AS((void)heatmap_load(ragged.string()), doctest::Contains(":2"),
                       std::runtime_error);

  const auto garbage = dir / "garbage.csv";
  spit(garbage, "1.0,two\n");
  CHECK_THROWS_AS((void)heatmap_load(garbage.string()), std::runtime_error);

  const auto rectangular = dir / "rect.csv";
  spit(rectangular, "1.0,2.0,3.0\n4.0,5.0,6.0\n");
  CHECK_THROWS_WITH_AS((void)heatmap_load(rectangular.string()),
                       doctest::Contains("square"), std::runtime_error);
}

}  // TEST_SUITE

TEST_SUITE("experiment config") {

TEST_CASE("a full config file materializes every section") {
  const auto dir = temp_dir("config_full");
  const auto path = dir / "run.cfg";
  spit(path,
       "# comparison run\n"
       "[env]\n"
       "name = objectworld\n"
       "grid_size = 6\n"
       "num_objects = 4\n"
       "wind = 0.2\n"
       "\n"
       "[expert]\n"
       "count = 48\n"
       "length = 12\n"
       "temperature = 0.5\n"
       "\n"
       "[method]\n"
       "name = cwae\n"
       "divergence = kl\n"
       "lambda = 5.0\n"
       "extraction = dataset-average\n"
       "orient = false\n"
       "\n"
       "[train]\n"
       "epochs = 17\n"
       "batch_size = 16\n"
       "learning_rate = 0.002\n"
       "hidden = 24,24\n");

  ExperimentConfig config = load_experiment_config(path.string());
  CHECK(config.env == EnvTag::Objectworld);
  CHECK(config.objectworld.grid_size == 6);
  CHECK(config.objectworld.num_objects == 4);
  CHECK(config.objectworld.wind == 0.2);
  CHECK(config.expert_count == 48);
  CHECK(config.expert_length == 12);
  CHECK(config.expert_temperature == 0.5);
  CHECK(config.method == "cwae");
  CHECK(config.cwae.divergence == DivergenceMode::Kl);
  CHECK(config.cwae.lambda == 5.0);
  CHECK(config.extraction == ExtractMode::DatasetAverage);
  CHECK_FALSE(config.orient);
  CHECK(config.cwae.epochs == 17);
  CHECK(config.cwae.batch_size == 16);
  CHECK(config.cwae.learning_rate == 0.002);
  CHECK(config.cwae.hidden == std::vector<int>{24, 24});
  config.validate();
}

TEST_CASE("unmentioned fields keep their defaults") {
  const auto dir = temp_dir("config_defaults");
  const auto path = dir / "run.cfg";
  spit(path, "[method]\nname = maxent\n");

  const ExperimentConfig config = load_experiment_config(path.string());
  CHECK(config.env == EnvTag::Objectworld);
  CHECK(config.objectworld.grid_size == 10);
  CHECK(config.expert_count == 128);
  CHECK(config.expert_length == -1);
  CHECK(config.method == "maxent");
  CHECK(config.maxent.iterations == 200);
}

TEST_CASE("malformed files fail with the offending line") {
  const auto dir = temp_dir("config_bad");
  const auto check_error = [&](const std::string& tag, const std::string& text,
                               const std::string& needle) {
    const auto path = dir / (tag + ".cfg");
    spit(path, text);
    CHECK_THROWS_WITH_AS((void)load_experiment_config(path.string()),
                         doctest::Contains(needle.c_str()), std::runtime_error);
  };

  check_error("section", "[turbo]\n", "unknown section");
  check_error("key", "[env]\nturbo = 9\n", "turbo");
  check_error("dup", "[env]\ngrid_size = 5\ngrid_size = 6\n", "duplicate");
  check_error("orphan", "grid_size = 5\n[env]\n", ":1");
  check_error("value", "[env]\ngrid_size = five\n", "grid_size");
  check_error("scope", "[method]\nname = maxent\nlambda = 2\n",
              "does not apply to method");
}

TEST_CASE("validation catches unsupported combinations") {
  const auto dir = temp_dir("config_combo");
  const auto path = dir / "run.cfg";
  spit(path, "[env]\nname = pendulum\n[method]\nname = maxent\n");
  CHECK_THROWS_AS((void)load_experiment_config(path.string()), std::exception);
}

}  // TEST_SUITE

TEST_SUITE("experiment pipeline") {

TEST_CASE("metrics survive a save and load round trip") {
  const auto dir = temp_dir("metrics_rt");
  const auto path = (dir / "metrics.csv").string();

  MetricsReport report;
  report.method = "cwae";
  report.seed = 16753576447339095367ull;
  report.pearson = 0.625;
  report.spearman = 0.5;
  report.mean_signed_error = -0.25;
  report.seconds = 12.5;
  metrics_save(report, path);

  CHECK(slurp(path) ==
        "method,seed,pearson,spearman,evd,mean_signed_error,seconds\n"
        "cwae,16753576447339095367,0.625,0.5,nan,-0.25,12.5\n");

  const MetricsReport loaded = metrics_load(path);
  CHECK(loaded.method == "cwae");
  CHECK(loaded.seed == report.seed);
  CHECK(loaded.pearson == 0.625);
  CHECK(loaded.spearman == 0.5);
  CHECK(std::isnan(loaded.evd));
  CHECK(loaded.mean_signed_error == -0.25);
  CHECK(loaded.seconds == 12.5);
}

TEST_CASE("aggregation averages per method and skips nan cells") {
  MetricsReport a;
  a.method = "maxent";
  a.seed = 1;
  a.pearson = 0.5;
  a.evd = 2.0;
  a.seconds = 10.0;
  MetricsReport b = a;
  b.seed = 2;
  b.pearson = 0.7;
  b.evd = std::numeric_limits<double>::quiet_NaN();
  b.seconds = 20.0;
  MetricsReport c;
  c.method = "cwae";
  c.seed = 1;
  c.pearson = 0.9;
  c.seconds = 40.0;

  const std::string csv = aggregate_metrics_csv({a, b, c});
  CHECK(csv ==
        "method,runs,pearson,spearman,evd,mean_signed_error,seconds\n"
        "cwae,1,0.9,nan,nan,nan,40\n"
        "maxent,2,0.6,nan,2,nan,15\n");
}

TEST_CASE("a tiny objectworld run is reproducible end to end") {
  ExperimentConfig config;
  config.seed = 77;
  config.env = EnvTag::Objectworld;
  config.objectworld.grid_size = 5;
  config.objectworld.num_objects = 3;
  config.expert_count = 12;
  config.expert_length = 8;
  config.method = "cwae";
  config.cwae.epochs = 4;
  config.cwae.batch_size = 16;
  config.cwae.hidden = {8};

  const auto dir_a = temp_dir("pipeline_a");
  const auto dir_b = temp_dir("pipeline_b");
  config.out_dir = dir_a.string();
  const MetricsReport first = run_experiment(config);
  config.out_dir = dir_b.string();
  const MetricsReport second = run_experiment(config);

  for (const char* name : {"dataset.csv", "placement.txt", "curves.csv", "reward_cwae.csv"}) {
    CHECK(slurp(dir_a / name) == slurp(dir_b / name));
  }
  CHECK(first.pearson == second.pearson);
  CHECK(first.spearman == second.spearman);
  CHECK(first.evd == second.evd);
  CHECK(std::isfinite(first.pearson));
  CHECK(first.evd >= 0.0);
  CHECK(std::isfinite(first.mean_signed_error));
  CHECK(metrics_load((dir_a / "metrics.csv").string()).method == "cwae");
}

TEST_CASE("a baseline run writes its reward grid and metrics") {
  ExperimentConfig config;
  config.seed = 78;
  config.env = EnvTag::Objectworld;
  config.objectworld.grid_size = 5;
  config.objectworld.num_objects = 3;
  config.expert_count = 12;
  config.expert_length = 8;
  config.method = "maxent";
  config.maxent.iterations = 40;

  const auto dir = temp_dir("pipeline_maxent");
  config.out_dir = dir.string();
  const MetricsReport report = run_experiment(config);

  CHECK(report.method == "maxent");
  const Eigen::VectorXd grid = heatmap_load((dir / "reward_maxent.csv").string());
  CHECK(grid.size() == 25);
  CHECK(std::isfinite(report.pearson));
  CHECK(report.evd >= 0.0);
}

TEST_CASE("evaluating before generating leaves a named failure marker") {
  ExperimentConfig config;
  config.seed = 79;
  config.objectworld.grid_size = 5;
  config.objectworld.num_objects = 3;

  const auto dir = temp_dir("pipeline_fail");
  config.out_dir = dir.string();
  CHECK_THROWS_WITH_AS((void)run_evaluate(config), doctest::Contains("gen"),
                       std::runtime_error);
  CHECK(std::filesystem::exists(dir / "FAILED"));
  CHECK(slurp(dir / "FAILED").find("dataset") != std::string::npos);
}

}  // TEST_SUITE
