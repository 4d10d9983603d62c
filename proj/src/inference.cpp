#include "occprior/inference.hpp"

#include <algorithm>
#include <cmath>

namespace occprior {
namespace {

constexpr int kMaxRedraws = 100;

}  // namespace

InferResult iocmm_infer(const SemanticMap& map, const ThetaModel& model, const InferOptions& options,
                        const IocmmHyper& hyper) {
  validate(model);
  validate(hyper);
  if (options.n_traj < 1) throw Error("n_traj must be positive");
  class_mapping(map.classes(), model);  // throws on incompatible class tables

  const EndpointSampler sampler(map, model, options.strategy, options.tau, hyper.impassable);
  const std::size_t cap = hyper.cap_for(map);
  const auto n = static_cast<std::size_t>(options.n_traj);

  std::vector<double> visits(map.size(), 0.0);
  std::size_t truncated = 0;
  std::size_t redrawn = 0;
  bool failed = false;
#pragma omp parallel reduction(+ : truncated, redrawn) reduction(|| : failed)
  {
    std::vector<double> local(map.size(), 0.0);
#pragma omp for schedule(dynamic, 4)
    for (std::size_t i = 0; i < n; ++i) {
      Rng rng(derive_seed(options.seed, {i}));
      bool done = false;
      for (int attempt = 0; attempt < kMaxRedraws && !done; ++attempt) {
        const auto [start, goal] = sampler.sample(rng);
        const Policy policy = backward_pass(map, model, goal, hyper);
        if (std::isinf(policy.value(start))) {
          ++redrawn;
          continue;
        }
        bool cut = false;
        for (std::size_t s : sample_path(policy.grid(), policy.probs(), map.index(start), policy.goal_index(), cap, rng, &cut))
          local[s] += 1.0;
        if (cut) ++truncated;
        done = true;
      }
      if (!done) failed = true;
    }
#pragma omp critical
    for (std::size_t s = 0; s < local.size(); ++s) visits[s] += local[s];
  }
  if (failed) throw Error("could not draw a connected start/goal pair in " + std::to_string(kMaxRedraws) + " attempts");

  InferResult out;
  out.occupancy = OccupancyGrid::from_weights(map.width(), map.height(), std::move(visits));
  out.truncated = truncated;
  out.redrawn = redrawn;
  return out;
}

OccupancyGrid baseline_uniform(const SemanticMap& map) {
  return OccupancyGrid::from_weights(map.width(), map.height(), std::vector<double>(map.size(), 1.0));
}

OccupancyGrid baseline_uniform_walkable(const SemanticMap& map) {
  const auto mask = walkable_mask(map);
  if (std::none_of(mask.begin(), mask.end(), [](bool b) { return b; })) throw Error("map has no walkable cells");
  std::vector<double> w(map.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = mask[i] ? 1.0 : 0.0;
  return OccupancyGrid::from_weights(map.width(), map.height(), std::move(w));
}

ClassPrior learn_class_prior(const Dataset& train) {
  if (train.empty()) throw Error("class prior needs a non-empty training set");
  ClassPrior prior;
  for (const auto& entry : train) {
    const auto& classes = entry.map.classes();
    std::vector<double> mass(classes.size(), 0.0);
    const auto& gt = entry.ground_truth.values();
    for (std::size_t i = 0; i < gt.size(); ++i) mass[static_cast<std::size_t>(entry.map.class_at(i))] += gt[i];
    const double total = entry.ground_truth.mass();
    for (std::size_t k = 0; k < classes.size(); ++k) {
      auto it = std::find(prior.classes.begin(), prior.classes.end(), classes.name(k));
      if (it == prior.classes.end()) {
        prior.classes.push_back(classes.name(k));
        prior.share.push_back(0.0);
        it = prior.classes.end() - 1;
      }
      prior.share[static_cast<std::size_t>(it - prior.classes.begin())] += mass[k] / total;
    }
  }
  for (auto& s : prior.share) s /= static_cast<double>(train.size());
  return prior;
}

OccupancyGrid baseline_class_prior(const ClassPrior& prior, const SemanticMap& map) {
  const auto& classes = map.classes();
  std::vector<double> count(classes.size(), 0.0);
  for (int id : map.cells()) count[static_cast<std::size_t>(id)] += 1.0;
  std::vector<double> per_cell(classes.size(), 0.0);
  for (std::size_t k = 0; k < classes.size(); ++k) {
    const auto it = std::find(prior.classes.begin(), prior.classes.end(), classes.name(k));
    if (it == prior.classes.end() || count[k] == 0.0) continue;
    per_cell[k] = prior.share[static_cast<std::size_t>(it - prior.classes.begin())] / count[k];
  }
  std::vector<double> w(map.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = per_cell[static_cast<std::size_t>(map.class_at(i))];
  if (std::none_of(w.begin(), w.end(), [](double x) { return x > 0.0; }))
    throw Error("class prior assigns no mass to any class present on the map");
  return OccupancyGrid::from_weights(map.width(), map.height(), std::move(w));
}

}  // namespace occprior
