#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace occprior {

/// Domain error raised for invalid inputs, malformed files, and failed
/// generation. Messages are meant for end users.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Cell {
  int x = 0;
  int y = 0;

  friend bool operator==(const Cell&, const Cell&) = default;
};

inline int chebyshev(Cell a, Cell b) {
  const int dx = a.x > b.x ? a.x - b.x : b.x - a.x;
  const int dy = a.y > b.y ? a.y - b.y : b.y - a.y;
  return dx > dy ? dx : dy;
}

/// Semantic class vocabulary of a map. Class ids index into `names`.
class ClassTable {
 public:
  ClassTable() = default;
  ClassTable(std::vector<std::string> names, std::vector<bool> walkable);

  std::size_t size() const { return names_.size(); }
  const std::string& name(std::size_t k) const { return names_.at(k); }
  bool walkable(std::size_t k) const { return walkable_.at(k); }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<bool>& walkable_flags() const { return walkable_; }

  /// Index of `name`, or -1 when absent.
  int find(const std::string& name) const;

  friend bool operator==(const ClassTable&, const ClassTable&) = default;

 private:
  std::vector<std::string> names_;
  std::vector<bool> walkable_;
};

/// The four-class vocabulary used by the synthetic urban maps.
ClassTable urban_classes();

/// Row-major grid of class ids; row 0 is the top of the map.
class SemanticMap {
 public:
  SemanticMap() = default;
  SemanticMap(int width, int height, ClassTable classes, std::vector<int> cells);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return cells_.size(); }
  const ClassTable& classes() const { return classes_; }
  const std::vector<int>& cells() const { return cells_; }

  bool in_bounds(Cell c) const {
    return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_;
  }
  std::size_t index(Cell c) const {
    return static_cast<std::size_t>(c.y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(c.x);
  }
  Cell cell(std::size_t index) const {
    return {static_cast<int>(index % static_cast<std::size_t>(width_)),
            static_cast<int>(index / static_cast<std::size_t>(width_))};
  }

  int class_at(Cell c) const { return cells_[index(c)]; }
  int class_at(std::size_t index) const { return cells_[index]; }
  bool walkable(Cell c) const { return classes_.walkable(static_cast<std::size_t>(class_at(c))); }

  /// One-hot feature response f(s).
  std::vector<double> features(Cell c) const;

  friend bool operator==(const SemanticMap&, const SemanticMap&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  ClassTable classes_;
  std::vector<int> cells_;
};

/// Ordered sequence of 8-connected grid states, at least two long.
class Trajectory {
 public:
  Trajectory() = default;
  explicit Trajectory(std::vector<Cell> states);

  const std::vector<Cell>& states() const { return states_; }
  std::size_t size() const { return states_.size(); }
  Cell front() const { return states_.front(); }
  Cell back() const { return states_.back(); }

  friend bool operator==(const Trajectory&, const Trajectory&) = default;

 private:
  std::vector<Cell> states_;
};

/// Probability mass per grid state. Values are non-negative; producers in
/// this library normalize to 1, loaders accept a looser tolerance.
class OccupancyGrid {
 public:
  OccupancyGrid() = default;
  OccupancyGrid(int width, int height, std::vector<double> values);

  /// Normalizes non-negative weights (e.g. visitation counts) to sum 1.
  static OccupancyGrid from_weights(int width, int height, std::vector<double> weights);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return values_.size(); }
  const std::vector<double>& values() const { return values_; }
  double at(Cell c) const {
    return values_[static_cast<std::size_t>(c.y) * static_cast<std::size_t>(width_) +
                   static_cast<std::size_t>(c.x)];
  }
  double mass() const;

  friend bool operator==(const OccupancyGrid&, const OccupancyGrid&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> values_;
};

/// Throws unless every state of `traj` lies inside `map`. `which` is used in
/// the error message to name the offending trajectory.
void check_on_map(const SemanticMap& map, const Trajectory& traj, std::size_t which);

OccupancyGrid occupancy_from_trajectories(const SemanticMap& map,
                                          const std::vector<Trajectory>& trajs);

std::vector<bool> walkable_mask(const SemanticMap& map);

// File formats (.smap, .occ, .traj). Loaders report `<path>:<line>: <reason>`.

void save_map(const SemanticMap& map, const std::filesystem::path& path);
SemanticMap load_map(const std::filesystem::path& path);

void save_occupancy(const OccupancyGrid& occ, const std::filesystem::path& path);
OccupancyGrid load_occupancy(const std::filesystem::path& path);

void save_trajectories(const std::vector<Trajectory>& trajs, const std::filesystem::path& path);
std::vector<Trajectory> load_trajectories(const std::filesystem::path& path);

/// One map of a dataset: semantic map, demonstrations, ground-truth occupancy.
struct DatasetEntry {
  std::string name;
  SemanticMap map;
  std::vector<Trajectory> trajectories;
  OccupancyGrid ground_truth;
};

using Dataset = std::vector<DatasetEntry>;

struct ManifestRow {
  std::filesystem::path map;
  std::filesystem::path trajectories;
  std::filesystem::path occupancy;
};

/// Manifest lines are `<map.smap> <trajs.traj> <gt.occ>`, paths relative to
/// the manifest's directory.
void save_manifest(const std::vector<ManifestRow>& rows, const std::filesystem::path& path);
std::vector<ManifestRow> load_manifest(const std::filesystem::path& path);

Dataset load_dataset(const std::filesystem::path& manifest);

}  // namespace occprior
