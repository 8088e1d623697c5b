#include "irlab/config.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

#include "irlab/text.hpp"

namespace irlab {

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> table = {
      {"env", {"name", "grid_size", "num_objects", "wind", "metric", "episode_len"}},
      {"expert",
       {"count", "length", "temperature", "eval_count", "dqn_episodes",
        "dqn_learning_rate", "dqn_batch_size", "dqn_target_sync",
        "dqn_eps_decay_steps", "dqn_update_every", "dqn_replay_capacity"}},
      {"method",
       {"name", "divergence", "lambda", "bandwidth", "fixed_bandwidth", "extraction",
        "orient", "window", "learning_rate", "iterations", "l2", "horizon", "hidden",
        "alpha", "prior", "r_max", "sigma_prior", "step", "burn_in"}},
      {"train",
       {"epochs", "batch_size", "learning_rate", "dropout", "latent_dim", "hidden",
        "activation"}},
  };
  return table;
}

const std::map<std::string, std::set<std::string>>& method_keys() {
  static const std::map<std::string, std::set<std::string>> table = {
      {"cwae",
       {"name", "divergence", "lambda", "bandwidth", "fixed_bandwidth", "extraction",
        "orient", "window"}},
      {"maxent", {"name", "learning_rate", "iterations", "l2", "horizon"}},
      {"deep-maxent", {"name", "learning_rate", "iterations", "horizon", "hidden"}},
      {"birl",
       {"name", "alpha", "prior", "r_max", "sigma_prior", "step", "iterations",
        "burn_in"}},
  };
  return table;
}

int to_int(const std::string& v, const std::string& where) {
  return static_cast<int>(parse_long(v, where));
}

bool to_bool(const std::string& v, const std::string& where) {
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  throw std::runtime_error(where + ": expected a boolean, got '" + v + "'");
}

std::vector<int> to_int_list(const std::string& v, const std::string& where) {
  std::vector<int> out;
  for (const auto& cell : split(v, ',')) out.push_back(to_int(strip(cell), where));
  return out;
}

}  // namespace

std::map<std::string, ConfigSection> parse_config_sections(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);

  std::map<std::string, ConfigSection> sections;
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = path + ":" + std::to_string(line_no);
    std::string text = strip(line);
    if (const auto hash = text.find('#'); hash != std::string::npos) {
      text = strip(text.substr(0, hash));
    }
    if (text.empty()) continue;

    if (text.front() == '[') {
      if (text.back() != ']') throw std::runtime_error(where + ": unterminated section header");
      section = strip(text.substr(1, text.size() - 2));
      if (!known_keys().count(section)) {
        throw std::runtime_error(where + ": unknown section [" + section + "]");
      }
      sections.try_emplace(section);
      continue;
    }

    const auto eq = text.find('=');
    if (eq == std::string::npos) throw std::runtime_error(where + ": expected key=value");
    if (section.empty()) throw std::runtime_error(where + ": key before any [section]");
    const std::string key = strip(text.substr(0, eq));
    const std::string value = strip(text.substr(eq + 1));
    if (key.empty()) throw std::runtime_error(where + ": empty key");
    if (!known_keys().at(section).count(key)) {
      throw std::runtime_error(where + ": unknown key '" + key + "' in [" + section + "]");
    }
    if (!sections[section].emplace(key, value).second) {
      throw std::runtime_error(where + ": duplicate key '" + key + "'");
    }
  }
  return sections;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  const auto sections = parse_config_sections(path);
  ExperimentConfig config;

  const auto get = [&](const std::string& section) -> const ConfigSection* {
    const auto it = sections.find(section);
    return it == sections.end() ? nullptr : &it->second;
  };
  const auto where = [&](const std::string& section, const std::string& key) {
    return path + ": [" + section + "] " + key;
  };

  if (const ConfigSection* env = get("env")) {
    for (const auto& [key, value] : *env) {
      const std::string w = where("env", key);
      if (key == "name") config.env = env_tag_from_name(value);
      else if (key == "grid_size") config.objectworld.grid_size = to_int(value, w);
      else if (key == "num_objects") config.objectworld.num_objects = to_int(value, w);
      else if (key == "wind") config.objectworld.wind = parse_double(value, w);
      else if (key == "metric") {
        if (value == "euclidean") config.objectworld.metric = CellMetric::Euclidean;
        else if (value == "chebyshev") config.objectworld.metric = CellMetric::Chebyshev;
        else throw std::runtime_error(w + ": unknown metric '" + value + "'");
      } else if (key == "episode_len") config.pendulum.episode_len = to_int(value, w);
    }
  }

  if (const ConfigSection* expert = get("expert")) {
    for (const auto& [key, value] : *expert) {
      const std::string w = where("expert", key);
      if (key == "count") config.expert_count = to_int(value, w);
      else if (key == "length") config.expert_length = to_int(value, w);
      else if (key == "temperature") config.expert_temperature = parse_double(value, w);
      else if (key == "eval_count") config.eval_count = to_int(value, w);
      else if (key == "dqn_episodes") config.dqn.episodes = to_int(value, w);
      else if (key == "dqn_learning_rate") config.dqn.learning_rate = parse_double(value, w);
      else if (key == "dqn_batch_size") config.dqn.batch_size = to_int(value, w);
      else if (key == "dqn_target_sync") config.dqn.target_sync_interval = to_int(value, w);
      else if (key == "dqn_eps_decay_steps") config.dqn.eps_decay_steps = to_int(value, w);
      else if (key == "dqn_update_every") config.dqn.update_every = to_int(value, w);
      else if (key == "dqn_replay_capacity") config.dqn.replay_capacity = to_int(value, w);
    }
  }

  if (const ConfigSection* method = get("method")) {
    if (const auto it = method->find("name"); it != method->end()) {
      config.method = it->second;
    }
    const auto allowed = method_keys().find(config.method);
    if (allowed == method_keys().end()) {
      throw std::runtime_error(path + ": unknown method '" + config.method + "'");
    }
    for (const auto& [key, value] : *method) {
      const std::string w = where("method", key);
      if (!allowed->second.count(key)) {
        throw std::runtime_error(w + ": key does not apply to method " + config.method);
      }
      if (key == "name") continue;
      if (key == "divergence") {
        if (value == "mmd") config.cwae.divergence = DivergenceMode::Mmd;
        else if (value == "kl") config.cwae.divergence = DivergenceMode::Kl;
        else throw std::runtime_error(w + ": unknown divergence '" + value + "'");
      } else if (key == "lambda") config.cwae.lambda = parse_double(value, w);
      else if (key == "bandwidth") {
        if (value == "median") config.cwae.bandwidth = BandwidthMode::Median;
        else if (value == "fixed") config.cwae.bandwidth = BandwidthMode::Fixed;
        else throw std::runtime_error(w + ": unknown bandwidth mode '" + value + "'");
      } else if (key == "fixed_bandwidth") config.cwae.fixed_bandwidth = parse_double(value, w);
      else if (key == "extraction") {
        if (value == "probe") config.extraction = ExtractMode::Probe;
        else if (value == "dataset-average") config.extraction = ExtractMode::DatasetAverage;
        else throw std::runtime_error(w + ": unknown extraction mode '" + value + "'");
      } else if (key == "orient") config.orient = to_bool(value, w);
      else if (key == "window") config.window = to_int(value, w);
      else if (key == "learning_rate") {
        config.maxent.learning_rate = parse_double(value, w);
        config.deep_maxent.learning_rate = config.maxent.learning_rate;
      } else if (key == "iterations") {
        config.maxent.iterations = to_int(value, w);
        config.deep_maxent.iterations = config.maxent.iterations;
        config.birl.iterations = config.maxent.iterations;
      } else if (key == "l2") config.maxent.l2 = parse_double(value, w);
      else if (key == "horizon") {
        config.maxent.horizon = to_int(value, w);
        config.deep_maxent.horizon = config.maxent.horizon;
      } else if (key == "hidden") config.deep_maxent.hidden = to_int_list(value, w);
      else if (key == "alpha") config.birl.alpha = parse_double(value, w);
      else if (key == "prior") {
        if (value == "uniform") config.birl.prior = BirlPrior::Uniform;
        else if (value == "gaussian") config.birl.prior = BirlPrior::Gaussian;
        else throw std::runtime_error(w + ": unknown prior '" + value + "'");
      } else if (key == "r_max") config.birl.r_max = parse_double(value, w);
      else if (key == "sigma_prior") config.birl.sigma_prior = parse_double(value, w);
      else if (key == "step") config.birl.step = parse_double(value, w);
      else if (key == "burn_in") config.birl.burn_in = to_int(value, w);
    }
  }

  if (const ConfigSection* train = get("train")) {
    for (const auto& [key, value] : *train) {
      const std::string w = where("train", key);
      if (key == "epochs") config.cwae.epochs = to_int(value, w);
      else if (key == "batch_size") config.cwae.batch_size = to_int(value, w);
      else if (key == "learning_rate") config.cwae.learning_rate = parse_double(value, w);
      else if (key == "dropout") config.cwae.dropout = parse_double(value, w);
      else if (key == "latent_dim") config.cwae.latent_dim = to_int(value, w);
      else if (key == "hidden") config.cwae.hidden = to_int_list(value, w);
      else if (key == "activation") {
        if (value == "relu") config.cwae.activation = Activation::ReLU;
        else if (value == "tanh") config.cwae.activation = Activation::Tanh;
        else throw std::runtime_error(w + ": unknown activation '" + value + "'");
      }
    }
  }

  config.validate();
  return config;
}

void ExperimentConfig::validate() const {
  if (!method_keys().count(method)) {
    throw std::invalid_argument("ExperimentConfig: unknown method '" + method + "'");
  }
  if (expert_count < 1) throw std::invalid_argument("ExperimentConfig: expert count must be >= 1");
  if (expert_length < 1 && expert_length != -1) {
    throw std::invalid_argument("ExperimentConfig: expert length must be >= 1 (or -1 for the episode length)");
  }
  if (eval_count < 0) throw std::invalid_argument("ExperimentConfig: eval_count must be >= 0");
  if (window < 1) throw std::invalid_argument("ExperimentConfig: window must be >= 1");

  if (env == EnvTag::Pendulum) {
    pendulum.validate();
    if (method != "cwae") {
      throw std::invalid_argument(
          "ExperimentConfig: the pendulum task has no tabular state space; only the "
          "cwae method applies");
    }
  }
  if (method == "cwae") cwae.validate();
  else if (method == "maxent") maxent.validate();
  else if (method == "deep-maxent") deep_maxent.validate();
  else if (method == "birl") birl.validate();
}

}  // namespace irlab
