#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "irlab/mdp.hpp"

namespace irlab {

// Action order is fixed project-wide: up, down, left, right, stay.
enum ObjectworldAction { kUp = 0, kDown = 1, kLeft = 2, kRight = 3, kStay = 4 };
inline constexpr int kObjectworldActions = 5;

enum class Color { Red, Green };

/// How "within k cells" is measured for the true reward.
enum class CellMetric { Euclidean, Chebyshev };

struct ObjectworldSpec {
  int grid_size = 10;
  int num_objects = -1;  // -1 means floor(N^2 / 8)
  double wind = 0.3;
  std::uint64_t placement_seed = 0;
  CellMetric metric = CellMetric::Euclidean;

  int resolved_num_objects() const {
    return num_objects >= 0 ? num_objects : (grid_size * grid_size) / 8;
  }
};

struct PlacedObject {
  int x = 0;  // column
  int y = 0;  // row
  Color outer = Color::Red;
  Color inner = Color::Red;
};

using ObjectPlacement = std::vector<PlacedObject>;

struct Objectworld {
  ObjectworldSpec spec;
  MdpModel mdp;
  Eigen::MatrixXd features;     // (S x 4): distance to nearest outer-red,
                                // outer-green, inner-red, inner-green object
  Eigen::VectorXd true_reward;  // per state, values in {-1, 0, +1}
  ObjectPlacement placement;

  int num_states() const { return spec.grid_size * spec.grid_size; }
  int state_of(int x, int y) const { return y * spec.grid_size + x; }
  int x_of(int state) const { return state % spec.grid_size; }
  int y_of(int state) const { return state / spec.grid_size; }
};

/// Distances to the nearest object carrying each of the four color attributes
/// (outer red, outer green, inner red, inner green), in that order.
Eigen::Vector4d objectworld_features(const ObjectPlacement& placement, int x, int y);

/// +1 within 3 cells of an outer-red object and 2 cells of an outer-green one,
/// -1 within 3 cells of outer red only, 0 otherwise.
double objectworld_true_reward(const ObjectPlacement& placement, int x, int y,
                               CellMetric metric = CellMetric::Euclidean);

/// Builds the grid MDP (intended move with probability 1-wind, each other
/// direction wind/4, off-grid mass folded into staying), the feature map, the
/// true reward and a placement drawn from placement_seed. The placement is
/// re-drawn until every outer and inner color is present at least once.
Objectworld build_objectworld(const ObjectworldSpec& spec);

/// One object per line: `x,y,outer,inner` with colors spelled red/green.
void placement_save(const ObjectPlacement& placement, const std::string& path);
ObjectPlacement placement_load(const std::string& path);

}  // namespace irlab
