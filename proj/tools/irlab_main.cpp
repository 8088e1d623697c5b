#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "irlab/experiment.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  std::string env_override;
};

void add_common_options(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "experiment config file")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", args.seed, "global seed (drives every stage)");
  cmd->add_option("--out", args.out_dir, "artifact directory");
  cmd->add_option("--env", args.env_override, "environment override")
      ->check(CLI::IsMember({"objectworld", "pendulum"}));
}

irlab::ExperimentConfig materialize(const CommonArgs& args) {
  irlab::ExperimentConfig config = irlab::load_experiment_config(args.config_path);
  config.seed = args.seed;
  config.out_dir = args.out_dir;
  if (!args.env_override.empty()) config.env = irlab::env_tag_from_name(args.env_override);
  config.validate();
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"latent-reward benchmark lab"};
  app.require_subcommand(1);

  CommonArgs gen_args, train_args, baseline_args, eval_args;
  auto* gen = app.add_subcommand("gen", "build the environment and sample expert trajectories");
  add_common_options(gen, gen_args);
  auto* train = app.add_subcommand("train", "fit the conditional auto-encoder on a dataset");
  add_common_options(train, train_args);
  auto* baseline =
      app.add_subcommand("baseline", "run maxent, deep-maxent or birl on a dataset");
  add_common_options(baseline, baseline_args);
  auto* eval = app.add_subcommand("eval", "score saved artifacts and write metrics.csv");
  add_common_options(eval, eval_args);

  std::vector<std::string> metric_files;
  std::string report_out;
  auto* report = app.add_subcommand("report", "aggregate metrics CSVs from a seed sweep");
  report->add_option("files", metric_files, "metrics.csv paths")->required()->expected(-1);
  report->add_option("--out", report_out, "also write the aggregate CSV here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      irlab::run_generate(materialize(gen_args));
    } else if (train->parsed()) {
      irlab::run_train(materialize(train_args));
    } else if (baseline->parsed()) {
      irlab::run_baseline(materialize(baseline_args));
    } else if (eval->parsed()) {
      const irlab::MetricsReport metrics = irlab::run_evaluate(materialize(eval_args));
      std::cout << "method=" << metrics.method << " seed=" << metrics.seed
                << " pearson=" << metrics.pearson << " spearman=" << metrics.spearman
                << " evd=" << metrics.evd
                << " mean_signed_error=" << metrics.mean_signed_error
                << " seconds=" << metrics.seconds << '\n';
    } else if (report->parsed()) {
      std::vector<irlab::MetricsReport> rows;
      rows.reserve(metric_files.size());
      for (const auto& path : metric_files) rows.push_back(irlab::metrics_load(path));
      const std::string csv = irlab::aggregate_metrics_csv(rows);
      std::cout << csv;
      if (!report_out.empty()) {
        std::filesystem::create_directories(
            std::filesystem::path(report_out).parent_path().string().empty()
                ? "."
                : std::filesystem::path(report_out).parent_path().string());
        std::ofstream out(report_out);
        out << csv;
        if (!out) throw std::runtime_error("report: write failed for " + report_out);
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
