#include "irlab/trajectory.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "irlab/text.hpp"

namespace irlab {

namespace {

constexpr double kChainTol = 1e-6;

bool states_close(const PendulumState& a, const PendulumState& b) {
  return std::abs(a.cos_th - b.cos_th) <= kChainTol &&
         std::abs(a.sin_th - b.sin_th) <= kChainTol &&
         std::abs(a.thdot - b.thdot) <= kChainTol;
}

}  // namespace

std::string env_tag_name(EnvTag tag) {
  return tag == EnvTag::Objectworld ? "objectworld" : "pendulum";
}

EnvTag env_tag_from_name(const std::string& name) {
  if (name == "objectworld") return EnvTag::Objectworld;
  if (name == "pendulum") return EnvTag::Pendulum;
  throw std::runtime_error("unknown environment tag '" + name + "'");
}

void Dataset::validate() const {
  if (env == EnvTag::Objectworld) {
    if (!continuous.empty()) throw std::runtime_error("Dataset: objectworld tag with pendulum steps");
    if (discrete.empty()) throw std::runtime_error("Dataset: no trajectories");
    for (const auto& traj : discrete) {
      if (traj.empty()) throw std::runtime_error("Dataset: empty trajectory");
      for (std::size_t t = 0; t + 1 < traj.size(); ++t) {
        if (traj[t].next_state != traj[t + 1].state) {
          throw std::runtime_error("Dataset: broken chaining at step " + std::to_string(t));
        }
      }
    }
  } else {
    if (!discrete.empty()) throw std::runtime_error("Dataset: pendulum tag with objectworld steps");
    if (continuous.empty()) throw std::runtime_error("Dataset: no trajectories");
    for (const auto& traj : continuous) {
      if (traj.empty()) throw std::runtime_error("Dataset: empty trajectory");
      for (std::size_t t = 0; t + 1 < traj.size(); ++t) {
        if (!states_close(traj[t].next, traj[t + 1].state)) {
          throw std::runtime_error("Dataset: broken chaining at step " + std::to_string(t));
        }
      }
    }
  }
}

int sample_index(Rng& rng, const Eigen::Ref<const Eigen::RowVectorXd>& probs) {
  const double u = rand_uniform(rng);
  double acc = 0.0;
  for (int i = 0; i < probs.size(); ++i) {
    acc += probs(i);
    if (u < acc) return i;
  }
  return static_cast<int>(probs.size()) - 1;
}

Policy expert_policy_objectworld(const MdpModel& mdp, const RewardTable& reward,
                                 double boltzmann_temperature) {
  auto [vf, qf] = value_iteration(mdp, reward);
  if (boltzmann_temperature > 0.0) return boltzmann_policy(qf, boltzmann_temperature);
  return greedy_policy(qf);
}

Dataset sample_objectworld_trajectories(const Objectworld& world, const Policy& policy,
                                        int count, int length, std::uint64_t seed) {
  if (count < 1 || length < 1) {
    throw std::invalid_argument("sample_objectworld_trajectories: count and length must be >= 1");
  }
  policy.validate(world.mdp);

  Dataset ds;
  ds.env = EnvTag::Objectworld;
  ds.seed = seed;
  for (int i = 0; i < count; ++i) {
    Rng rng(sub_seed(seed, static_cast<std::uint64_t>(i)));
    DiscreteTrajectory traj;
    int s = rand_int(rng, 0, world.mdp.num_states - 1);
    for (int t = 0; t < length; ++t) {
      int a = policy.deterministic() ? policy.actions[s]
                                     : sample_index(rng, policy.probs.row(s));
      int s_next = sample_index(rng, world.mdp.transition[a].row(s));
      traj.push_back({s, a, s_next});
      s = s_next;
    }
    ds.discrete.push_back(std::move(traj));
  }
  ds.validate();
  return ds;
}

Dataset sample_pendulum_trajectories(const PendulumSpec& spec, const PendulumPolicy& policy,
                                     int count, int length, std::uint64_t seed) {
  if (count < 1 || length < 1) {
    throw std::invalid_argument("sample_pendulum_trajectories: count and length must be >= 1");
  }
  spec.validate();

  Dataset ds;
  ds.env = EnvTag::Pendulum;
  ds.seed = seed;
  for (int i = 0; i < count; ++i) {
    Rng rng(sub_seed(seed, static_cast<std::uint64_t>(i)));
    ContinuousTrajectory traj;
    PendulumState s = pendulum_random_start(spec, rng);
    for (int t = 0; t < length; ++t) {
      int a = policy(s);
      if (a < 0 || a >= spec.action_count) {
        throw std::runtime_error("sample_pendulum_trajectories: policy returned invalid action");
      }
      PendulumState next = pendulum_step(spec, s, a);
      traj.push_back({s, a, next});
      s = next;
    }
    ds.continuous.push_back(std::move(traj));
  }
  ds.validate();
  return ds;
}

void dataset_save(const Dataset& dataset, const std::string& path) {
  dataset.validate();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("dataset_save: cannot open " + path);

  out << "# env=" << env_tag_name(dataset.env) << " seed=" << dataset.seed;
  for (const auto& [key, value] : dataset.metadata) {
    if (key == "env" || key == "seed") continue;
    out << ' ' << key << '=' << value;
  }
  out << '\n';

  if (dataset.env == EnvTag::Objectworld) {
    for (std::size_t ep = 0; ep < dataset.discrete.size(); ++ep) {
      const auto& traj = dataset.discrete[ep];
      for (std::size_t t = 0; t < traj.size(); ++t) {
        out << ep << ',' << t << ',' << traj[t].state << ',' << traj[t].action
            << ',' << traj[t].next_state << '\n';
      }
    }
  } else {
    for (std::size_t ep = 0; ep < dataset.continuous.size(); ++ep) {
      const auto& traj = dataset.continuous[ep];
      for (std::size_t t = 0; t < traj.size(); ++t) {
        const auto& st = traj[t];
        out << ep << ',' << t << ','
            << format_sig9(st.state.cos_th) << ',' << format_sig9(st.state.sin_th) << ','
            << format_sig9(st.state.thdot) << ',' << st.action << ','
            << format_sig9(st.next.cos_th) << ',' << format_sig9(st.next.sin_th) << ','
            << format_sig9(st.next.thdot) << '\n';
      }
    }
  }
  if (!out) throw std::runtime_error("dataset_save: write failed for " + path);
}

Dataset dataset_load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("dataset_load: cannot open " + path);

  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0) {
    throw std::runtime_error(path + ":1: missing '# env=... seed=...' header");
  }

  Dataset ds;
  bool have_env = false, have_seed = false;
  for (const std::string& token : split(strip(line.substr(2)), ' ')) {
    if (token.empty()) continue;
    auto eq = token.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error(path + ":1: malformed header token '" + token + "'");
    }
    std::string key = token.substr(0, eq), value = token.substr(eq + 1);
    if (key == "env") {
      ds.env = env_tag_from_name(value);
      have_env = true;
    } else if (key == "seed") {
      ds.seed = static_cast<std::uint64_t>(parse_u64(value, path + ":1"));
      have_seed = true;
    } else {
      ds.metadata[key] = value;
    }
  }
  if (!have_env || !have_seed) {
    throw std::runtime_error(path + ":1: header must carry env= and seed=");
  }

  int line_no = 1;
  long expected_episode = 0, expected_t = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string row = strip(line);
    if (row.empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    auto parts = split(row, ',');

    const std::size_t want = ds.env == EnvTag::Objectworld ? 5u : 9u;
    if (parts.size() != want) {
      throw std::runtime_error(where + ": expected " + std::to_string(want) + " fields");
    }
    const long ep = parse_long(parts[0], where);
    const long t = parse_long(parts[1], where);
    if (ep == expected_episode + 1 && t == 0) {
      ++expected_episode;
      expected_t = 0;
    }
    if (ep != expected_episode || t != expected_t) {
      throw std::runtime_error(where + ": rows out of order (episode " + std::to_string(ep) +
                               ", step " + std::to_string(t) + ")");
    }
    ++expected_t;

    if (ds.env == EnvTag::Objectworld) {
      DiscreteStep step;
      step.state = static_cast<int>(parse_long(parts[2], where));
      step.action = static_cast<int>(parse_long(parts[3], where));
      step.next_state = static_cast<int>(parse_long(parts[4], where));
      if (ds.discrete.size() <= static_cast<std::size_t>(ep)) ds.discrete.emplace_back();
      auto& traj = ds.discrete.back();
      if (!traj.empty() && traj.back().next_state != step.state) {
        throw std::runtime_error(where + ": broken chaining");
      }
      traj.push_back(step);
    } else {
      ContinuousStep step;
      step.state.cos_th = parse_double(parts[2], where);
      step.state.sin_th = parse_double(parts[3], where);
      step.state.thdot = parse_double(parts[4], where);
      step.action = static_cast<int>(parse_long(parts[5], where));
      step.next.cos_th = parse_double(parts[6], where);
      step.next.sin_th = parse_double(parts[7], where);
      step.next.thdot = parse_double(parts[8], where);
      if (ds.continuous.size() <= static_cast<std::size_t>(ep)) ds.continuous.emplace_back();
      auto& traj = ds.continuous.back();
      if (!traj.empty() && !states_close(traj.back().next, step.state)) {
        throw std::runtime_error(where + ": broken chaining");
      }
      traj.push_back(step);
    }
  }
  ds.validate();
  return ds;
}

}  // namespace irlab
