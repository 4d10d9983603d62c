#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "occprior/gridmap.hpp"
#include "occprior/kernels.hpp"
#include "occprior/rng.hpp"

namespace occprior {

/// Base step cost. The backward pass converges when alpha * r0 > log 8.
inline constexpr double kDefaultR0 = 0.1;

/// Learned parameters: per-class cost weights theta (on the simplex), the
/// base step cost r0, and the per-class endpoint prior p(s0,g | f(s)).
struct ThetaModel {
  std::vector<std::string> classes;
  std::vector<double> theta;
  double r0 = kDefaultR0;
  std::vector<double> endpoint_prior;

  std::size_t size() const { return classes.size(); }
};

/// theta = 1/K, endpoint prior uniform.
ThetaModel uniform_model(const ClassTable& classes, double r0 = kDefaultR0);

void validate(const ThetaModel& model);

void save_theta(const ThetaModel& model, const std::filesystem::path& path);
ThetaModel load_theta(const std::filesystem::path& path);

struct IocmmHyper {
  int traj_batch = 10;  // B_t
  int map_batch = 7;    // B_m
  double alpha = 25.0;  // inverse temperature of the soft backup and of pi ~ exp(alpha (Q - V))
  double learning_rate = 1.0;
  double epsilon = 1e-3;
  int max_iters = 300;
  double vi_tolerance = 1e-6;
  int vi_max_sweeps = 0;      // 0: 4 (width + height)
  int rollout_cap = 0;        // 0: 8 (width + height)
  int rollouts_per_traj = 10;
  std::uint64_t seed = 0;
  /// Classes that planning never enters, whatever their cost.
  std::vector<std::string> impassable = {"obstacle"};

  std::size_t sweeps_for(const SemanticMap& map) const;
  std::size_t cap_for(const SemanticMap& map) const;
};

void validate(const IocmmHyper& hyper);

/// Model index for every class id of `map_classes`. Throws, listing the
/// names, when the map uses classes the model does not know.
std::vector<std::size_t> class_mapping(const ClassTable& map_classes, const ThetaModel& model);

/// Per-step cost c(s) = r0 + theta . f(s).
double state_cost(const SemanticMap& map, const ThetaModel& model, Cell s);

/// The MDP the backward pass solves: reward R(s) = -c(s); impassable
/// classes are closed.
PlanningGrid planning_grid(const SemanticMap& map, const ThetaModel& model, const IocmmHyper& hyper);

/// Goal-conditioned stochastic policy from the backward pass.
class Policy {
 public:
  Policy(PlanningGrid grid, Cell goal, std::vector<double> q, std::vector<double> v,
         std::vector<double> probs, std::size_t sweeps, bool converged);

  const PlanningGrid& grid() const { return grid_; }
  Cell goal() const { return goal_; }
  std::size_t goal_index() const;
  const std::vector<double>& q() const { return q_; }
  const std::vector<double>& v() const { return v_; }
  const std::vector<double>& probs() const { return probs_; }
  double prob(Cell s, std::size_t action) const;
  double value(Cell s) const;
  std::size_t sweeps() const { return sweeps_; }
  bool converged() const { return converged_; }

 private:
  PlanningGrid grid_;
  Cell goal_;
  std::vector<double> q_;
  std::vector<double> v_;
  std::vector<double> probs_;
  std::size_t sweeps_;
  bool converged_;
};

Policy backward_pass(const SemanticMap& map, const ThetaModel& model, Cell goal, const IocmmHyper& hyper);

struct Visitation {
  std::vector<double> counts;  // raw visit counts D(s)
  std::size_t rollouts = 0;
  std::size_t truncated = 0;
};

/// `n` rollouts from `start` under `policy`; see simulate_rollouts.
Visitation forward_pass(const SemanticMap& map, const Policy& policy, Cell start, std::size_t n,
                        const IocmmHyper& hyper, std::uint64_t seed);

/// Mean per-trajectory class visit counts (map class order).
std::vector<double> empirical_feature_count(const SemanticMap& map, const std::vector<Trajectory>& trajs);

/// Per-class sum of a visitation grid (map class order).
std::vector<double> expected_feature_count(const SemanticMap& map, const std::vector<double>& visits);

struct TrainLogEntry {
  int iteration = 0;
  std::vector<double> theta;  // after the update
  double grad_norm = 0.0;
  std::vector<double> empirical;  // normalized f_bar
  std::vector<double> expected;   // normalized f_hat
  std::size_t trajectories = 0;
  std::size_t truncated = 0;
};

struct TrainResult {
  ThetaModel model;
  std::vector<TrainLogEntry> log;
  bool converged = false;
  std::vector<std::string> warnings;
};

/// Multi-map exponentiated-gradient training. Each iteration samples up to
/// B_m maps and B_t trajectories per map without replacement, matches
/// normalized empirical and expected class visitation, and updates
/// theta <- theta * exp(lambda * grad), renormalized. The log-likelihood
/// gradient with respect to the costs is f_expected - f_empirical. Stops when
/// ||grad|| < epsilon or after max_iters. The returned model also carries the
/// endpoint prior learned from the same dataset.
TrainResult train_iocmm(const Dataset& data, const IocmmHyper& hyper, ThetaModel model0);

/// Exponentiated update on its own: theta * exp(lambda * grad), renormalized.
std::vector<double> exponentiated_update(const std::vector<double>& theta, const std::vector<double>& grad,
                                         double learning_rate);

/// Add-one smoothed class frequency of trajectory first and last states,
/// in the order of `classes`.
std::vector<double> learn_endpoint_prior(const Dataset& data, const std::vector<std::string>& classes);

enum class EndpointStrategy { learned, softmax_cost };

/// Precomputed start/goal distribution for one map:
/// w(s) = base(s) (1 + d(s, center) / d_max), base from the learned prior or
/// exp(-c(s) / tau); impassable states get no weight.
class EndpointSampler {
 public:
  EndpointSampler(const SemanticMap& map, const ThetaModel& model, EndpointStrategy strategy, double tau,
                  const std::vector<std::string>& impassable = {"obstacle"});

  const std::vector<double>& weights() const { return weights_; }
  /// Independent draws of (s0, sg), redrawing sg until distinct.
  std::pair<Cell, Cell> sample(Rng& rng) const;

 private:
  std::size_t draw(Rng& rng) const;

  int width_;
  std::vector<double> weights_;
  std::vector<double> cumulative_;
};

std::pair<Cell, Cell> sample_endpoints(const SemanticMap& map, const ThetaModel& model, EndpointStrategy strategy,
                                       double tau, Rng& rng);

}  // namespace occprior
