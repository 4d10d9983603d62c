#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "occprior/gridmap.hpp"
#include "occprior/maxent_irl.hpp"

namespace occprior {

struct InferOptions {
  EndpointStrategy strategy = EndpointStrategy::learned;
  int n_traj = 500;
  double tau = 0.01;
  std::uint64_t seed = 0;
};

struct InferResult {
  OccupancyGrid occupancy;
  std::size_t truncated = 0;
  /// Endpoint pairs redrawn because the goal was unreachable from the start.
  std::size_t redrawn = 0;
};

/// Occupancy prior by simulation: n_traj times draw (s0, sg), run the
/// backward pass to sg and a single rollout from s0, accumulate visits,
/// normalize. Trajectory i uses the stream derive_seed(seed, {i}), so the
/// result does not depend on the worker count.
InferResult iocmm_infer(const SemanticMap& map, const ThetaModel& model, const InferOptions& options,
                        const IocmmHyper& hyper);

OccupancyGrid baseline_uniform(const SemanticMap& map);

OccupancyGrid baseline_uniform_walkable(const SemanticMap& map);

/// Share of ground-truth occupancy mass per class name, averaged over maps.
struct ClassPrior {
  std::vector<std::string> classes;
  std::vector<double> share;
};

ClassPrior learn_class_prior(const Dataset& train);

/// Each class's share spread uniformly over that class's cells; shares of
/// classes absent from `map` are renormalized away.
OccupancyGrid baseline_class_prior(const ClassPrior& prior, const SemanticMap& map);

}  // namespace occprior
