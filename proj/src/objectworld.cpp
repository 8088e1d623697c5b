#include "irlab/objectworld.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "irlab/rng.hpp"
#include "irlab/text.hpp"

namespace irlab {

namespace {

constexpr int kDx[kObjectworldActions] = {0, 0, -1, 1, 0};
constexpr int kDy[kObjectworldActions] = {-1, 1, 0, 0, 0};

double cell_distance(int x0, int y0, int x1, int y1, CellMetric metric) {
  double dx = std::abs(x1 - x0);
  double dy = std::abs(y1 - y0);
  if (metric == CellMetric::Chebyshev) return std::max(dx, dy);
  return std::hypot(dx, dy);
}

bool covers_all_colors(const ObjectPlacement& placement) {
  bool outer_red = false, outer_green = false, inner_red = false, inner_green = false;
  for (const auto& o : placement) {
    (o.outer == Color::Red ? outer_red : outer_green) = true;
    (o.inner == Color::Red ? inner_red : inner_green) = true;
  }
  return outer_red && outer_green && inner_red && inner_green;
}

ObjectPlacement draw_placement(const ObjectworldSpec& spec) {
  const int n = spec.grid_size;
  const int count = spec.resolved_num_objects();
  Rng rng(sub_seed(spec.placement_seed, 0x0b7ec7));
  for (int attempt = 0; attempt < 10000; ++attempt) {
    ObjectPlacement placement;
    std::vector<int> cells(static_cast<std::size_t>(n) * n);
    for (std::size_t i = 0; i < cells.size(); ++i) cells[i] = static_cast<int>(i);
    // partial Fisher-Yates for `count` distinct cells
    for (int i = 0; i < count; ++i) {
      int j = rand_int(rng, i, static_cast<int>(cells.size()) - 1);
      std::swap(cells[i], cells[j]);
      PlacedObject obj;
      obj.x = cells[i] % n;
      obj.y = cells[i] / n;
      obj.outer = rand_int(rng, 0, 1) == 0 ? Color::Red : Color::Green;
      obj.inner = rand_int(rng, 0, 1) == 0 ? Color::Red : Color::Green;
      placement.push_back(obj);
    }
    if (covers_all_colors(placement)) return placement;
  }
  throw std::runtime_error("build_objectworld: could not draw a placement covering "
                           "all colors; increase num_objects");
}

}  // namespace

Eigen::Vector4d objectworld_features(const ObjectPlacement& placement, int x, int y) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  Eigen::Vector4d f(inf, inf, inf, inf);
  for (const auto& o : placement) {
    double d = std::hypot(double(o.x - x), double(o.y - y));
    int outer_idx = o.outer == Color::Red ? 0 : 1;
    int inner_idx = o.inner == Color::Red ? 2 : 3;
    f[outer_idx] = std::min(f[outer_idx], d);
    f[inner_idx] = std::min(f[inner_idx], d);
  }
  return f;
}

double objectworld_true_reward(const ObjectPlacement& placement, int x, int y,
                               CellMetric metric) {
  double d_red = std::numeric_limits<double>::infinity();
  double d_green = std::numeric_limits<double>::infinity();
  for (const auto& o : placement) {
    double d = cell_distance(x, y, o.x, o.y, metric);
    if (o.outer == Color::Red) d_red = std::min(d_red, d);
    else d_green = std::min(d_green, d);
  }
  if (d_red <= 3.0 && d_green <= 2.0) return 1.0;
  if (d_red <= 3.0) return -1.0;
  return 0.0;
}

Objectworld build_objectworld(const ObjectworldSpec& spec) {
  const int n = spec.grid_size;
  if (n <= 0) throw std::invalid_argument("ObjectworldSpec: grid_size must be positive");
  if (spec.resolved_num_objects() < 1 || spec.resolved_num_objects() > n * n) {
    throw std::invalid_argument("ObjectworldSpec: num_objects must lie in [1, N^2]");
  }
  if (!(spec.wind >= 0.0 && spec.wind < 1.0)) {
    throw std::invalid_argument("ObjectworldSpec: wind must lie in [0, 1)");
  }

  Objectworld world;
  world.spec = spec;
  world.placement = draw_placement(spec);

  const int num_states = n * n;
  world.mdp.num_states = num_states;
  world.mdp.num_actions = kObjectworldActions;
  world.mdp.discount = 0.9;
  world.mdp.transition.assign(kObjectworldActions,
                              Eigen::MatrixXd::Zero(num_states, num_states));
  for (int s = 0; s < num_states; ++s) {
    const int x = world.x_of(s), y = world.y_of(s);
    for (int a = 0; a < kObjectworldActions; ++a) {
      for (int dir = 0; dir < kObjectworldActions; ++dir) {
        double p = dir == a ? 1.0 - spec.wind : spec.wind / 4.0;
        int nx = x + kDx[dir], ny = y + kDy[dir];
        int target = (nx < 0 || nx >= n || ny < 0 || ny >= n) ? s : world.state_of(nx, ny);
        world.mdp.transition[a](s, target) += p;
      }
    }
  }
  world.mdp.validate();

  world.features.resize(num_states, 4);
  world.true_reward.resize(num_states);
  for (int s = 0; s < num_states; ++s) {
    world.features.row(s) = objectworld_features(world.placement, world.x_of(s),
                                                 world.y_of(s)).transpose();
    world.true_reward[s] = objectworld_true_reward(world.placement, world.x_of(s),
                                                   world.y_of(s), spec.metric);
  }
  return world;
}

void placement_save(const ObjectPlacement& placement, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("placement_save: cannot open " + path);
  for (const auto& o : placement) {
    out << o.x << ',' << o.y << ','
        << (o.outer == Color::Red ? "red" : "green") << ','
        << (o.inner == Color::Red ? "red" : "green") << '\n';
  }
}

ObjectPlacement placement_load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("placement_load: cannot open " + path);
  ObjectPlacement placement;
  std::string line;
  int line_no = 0;
  auto parse_color = [&](const std::string& s) {
    if (s == "red") return Color::Red;
    if (s == "green") return Color::Green;
    throw std::runtime_error(path + ":" + std::to_string(line_no) +
                             ": unknown color '" + s + "'");
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (strip(line).empty()) continue;
    auto parts = split(strip(line), ',');
    if (parts.size() != 4) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected x,y,outer,inner");
    }
    const std::string where = path + ":" + std::to_string(line_no);
    PlacedObject o;
    o.x = static_cast<int>(parse_long(parts[0], where));
    o.y = static_cast<int>(parse_long(parts[1], where));
    o.outer = parse_color(parts[2]);
    o.inner = parse_color(parts[3]);
    placement.push_back(o);
  }
  return placement;
}

}  // namespace irlab
