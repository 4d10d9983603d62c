#include "occprior/gridmap.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

namespace occprior {

ClassTable::ClassTable(std::vector<std::string> names, std::vector<bool> walkable)
    : names_(std::move(names)), walkable_(std::move(walkable)) {
  if (names_.empty()) throw Error("class table must contain at least one class");
  if (names_.size() != walkable_.size())
    throw Error("class table has " + std::to_string(names_.size()) + " names but " +
                std::to_string(walkable_.size()) + " walkability flags");
  std::set<std::string> seen;
  for (const auto& n : names_) {
    if (n.empty()) throw Error("class names must be non-empty");
    if (std::any_of(n.begin(), n.end(), [](unsigned char ch) { return std::isspace(ch); }))
      throw Error("class name '" + n + "' contains whitespace");
    if (!seen.insert(n).second) throw Error("duplicate class name '" + n + "'");
  }
  if (std::none_of(walkable_.begin(), walkable_.end(), [](bool w) { return w; }))
    throw Error("at least one class must be walkable");
}

int ClassTable::find(const std::string& name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  return it == names_.end() ? -1 : static_cast<int>(it - names_.begin());
}

ClassTable urban_classes() {
  return ClassTable({"sidewalk", "grass", "road", "obstacle"}, {true, true, false, false});
}

SemanticMap::SemanticMap(int width, int height, ClassTable classes, std::vector<int> cells)
    : width_(width), height_(height), classes_(std::move(classes)), cells_(std::move(cells)) {
  if (width_ <= 0 || height_ <= 0) throw Error("map dimensions must be positive");
  if (cells_.size() != static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_))
    throw Error("map has " + std::to_string(cells_.size()) + " cells, expected " +
                std::to_string(width_) + "x" + std::to_string(height_));
  const int k = static_cast<int>(classes_.size());
  for (int id : cells_)
    if (id < 0 || id >= k)
      throw Error("class id " + std::to_string(id) + " outside [0, " + std::to_string(k - 1) + "]");
}

std::vector<double> SemanticMap::features(Cell c) const {
  std::vector<double> f(classes_.size(), 0.0);
  f[static_cast<std::size_t>(class_at(c))] = 1.0;
  return f;
}

Trajectory::Trajectory(std::vector<Cell> states) : states_(std::move(states)) {
  if (states_.size() < 2)
    throw Error("trajectory needs at least 2 states, got " + std::to_string(states_.size()));
  for (std::size_t i = 1; i < states_.size(); ++i)
    if (chebyshev(states_[i - 1], states_[i]) != 1)
      throw Error("non-adjacent step at index " + std::to_string(i));
}

OccupancyGrid::OccupancyGrid(int width, int height, std::vector<double> values)
    : width_(width), height_(height), values_(std::move(values)) {
  if (width_ <= 0 || height_ <= 0) throw Error("occupancy dimensions must be positive");
  if (values_.size() != static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_))
    throw Error("occupancy has " + std::to_string(values_.size()) + " values, expected " +
                std::to_string(width_) + "x" + std::to_string(height_));
  for (double v : values_)
    if (!std::isfinite(v) || v < 0.0) throw Error("occupancy values must be finite and >= 0");
}

OccupancyGrid OccupancyGrid::from_weights(int width, int height, std::vector<double> weights) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0)) throw Error("cannot normalize occupancy with zero total mass");
  for (auto& w : weights) w /= total;
  return OccupancyGrid(width, height, std::move(weights));
}

double OccupancyGrid::mass() const { return std::accumulate(values_.begin(), values_.end(), 0.0); }

void check_on_map(const SemanticMap& map, const Trajectory& traj, std::size_t which) {
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const Cell c = traj.states()[i];
    if (!map.in_bounds(c))
      throw Error("trajectory " + std::to_string(which) + ": state " + std::to_string(i) + " (" +
                  std::to_string(c.x) + ", " + std::to_string(c.y) + ") outside " +
                  std::to_string(map.width()) + "x" + std::to_string(map.height()) + " map");
  }
}

OccupancyGrid occupancy_from_trajectories(const SemanticMap& map,
                                          const std::vector<Trajectory>& trajs) {
  if (trajs.empty()) throw Error("no trajectories");
  std::vector<double> visits(map.size(), 0.0);
  for (std::size_t t = 0; t < trajs.size(); ++t) {
    check_on_map(map, trajs[t], t);
    for (Cell c : trajs[t].states()) visits[map.index(c)] += 1.0;
  }
  return OccupancyGrid::from_weights(map.width(), map.height(), std::move(visits));
}

std::vector<bool> walkable_mask(const SemanticMap& map) {
  std::vector<bool> mask(map.size());
  for (std::size_t i = 0; i < map.size(); ++i)
    mask[i] = map.classes().walkable(static_cast<std::size_t>(map.class_at(i)));
  return mask;
}

}  // namespace occprior
