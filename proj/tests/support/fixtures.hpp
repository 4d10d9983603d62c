#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "occprior/gridmap.hpp"
#include "occprior/maxent_irl.hpp"
#include "occprior/rng.hpp"

namespace occprior::testing {

/// Map from rows of class letters over urban_classes():
/// 's' sidewalk, 'g' grass, 'r' road, '#' obstacle.
SemanticMap ascii_map(const std::vector<std::string>& rows);

/// Uniformly random class ids over `classes`.
SemanticMap random_map(Rng& rng, int width, int height, const ClassTable& classes);

/// Random class table with 1..max_k classes, at least one walkable.
ClassTable random_classes(Rng& rng, std::size_t max_k);

/// Random 8-connected walks of length 2..max_len that stay on the map.
std::vector<Trajectory> random_walks(Rng& rng, const SemanticMap& map, std::size_t count, std::size_t max_len);

/// Random occupancy; roughly `zero_fraction` of the cells get no mass.
OccupancyGrid random_occupancy(Rng& rng, int width, int height, double zero_fraction);

/// theta and endpoint prior drawn from a Dirichlet(1) over `classes`.
ThetaModel random_model(Rng& rng, const ClassTable& classes, double r0);

/// Unique directory under the system temp path, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Demonstrations sampled from the planner's own policy under a known
/// theta over a 3-class table (sidewalk, grass, road).
struct SelfConsistencyFixture {
  Dataset data;
  ThetaModel truth;
  IocmmHyper hyper;  // full batches, ready for train_iocmm
};

SelfConsistencyFixture self_consistency_fixture(std::uint64_t seed);

/// A small planning problem with a known start and goal.
struct PlanningFixture {
  std::string name;
  SemanticMap map;
  Cell start;
  Cell goal;
  ThetaModel model;
  IocmmHyper hyper;  // tight value-iteration tolerance
};

/// The 1x3 and 2x3 corridors, each under a sharp and a soft temperature.
std::vector<PlanningFixture> corridor_fixtures();

/// Every fixture of at most 5x5 cells: the corridors plus a pillar, an open
/// field and a mixed-class map.
std::vector<PlanningFixture> small_fixtures();

/// Classes of `model` ordered by increasing theta.
std::vector<std::string> cost_order(const ThetaModel& model);

}  // namespace occprior::testing
