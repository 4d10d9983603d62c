#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <vector>

#include "occprior/gridmap.hpp"

namespace occprior {

/// Parameters of the procedural urban-map generator and its trajectory
/// oracle. Maps use the `urban_classes()` vocabulary:
/// sidewalk, grass, road, obstacle.
struct GeneratorSpec {
  int width = 32;
  int height = 32;
  std::uint64_t seed = 0;
  int road_count = 2;
  double obstacle_density = 0.25;
  int trajectories_per_map = 30;
  /// Per-class step cost used by the oracle; infinity marks impassable.
  std::vector<double> oracle_costs = {0.1, 0.6, 1.0, std::numeric_limits<double>::infinity()};
  /// Each trajectory adds U[0, oracle_noise] to every passable cell's cost.
  double oracle_noise = 0.2;
};

void validate(const GeneratorSpec& spec);

/// Deterministic in `spec.seed`. Straight road bands flanked by sidewalks
/// and cut by up to two sidewalk crosswalks each, optional footpaths, and
/// rectangular obstacles on the grass background, half of them ringed by a
/// paved apron.
/// Regenerates internally until every boundary sidewalk cell is reachable
/// from every other through passable cells.
SemanticMap generate_map(const GeneratorSpec& spec);

/// Sidewalk cells on the outermost ring of the map.
std::vector<Cell> boundary_sidewalks(const SemanticMap& map);

/// True when all boundary sidewalk cells share one component of the
/// 8-connected graph over cells with finite cost in `costs`.
bool boundary_sidewalks_connected(const SemanticMap& map, const std::vector<double>& class_costs);

/// Least-cost 8-connected path. `enter_cost[i]` is the cost of stepping
/// into cell i (infinite = impassable); diagonal steps cost sqrt(2) times
/// as much. Returns an empty vector when `to` is unreachable. Ties are
/// broken deterministically.
std::vector<Cell> least_cost_path(const SemanticMap& map, const std::vector<double>& enter_cost,
                                  Cell from, Cell to);

/// Ground-truth demonstrations: least-cost paths between boundary sidewalk
/// cells at least width/2 apart (Chebyshev), with per-trajectory cost noise.
std::vector<Trajectory> oracle_trajectories(const SemanticMap& map, const GeneratorSpec& spec);

/// Writes `map_NNN.{smap,traj,occ}` for each map plus `manifest` into
/// `out_dir` and returns the manifest path.
std::filesystem::path build_dataset(int n_maps, const GeneratorSpec& spec,
                                    const std::filesystem::path& out_dir);

}  // namespace occprior
