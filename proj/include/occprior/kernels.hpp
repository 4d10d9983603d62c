#pragma once

// Data-parallel inner loops of the IOC pipeline. Each OpenMP kernel has a
// serial `_reference` twin that follows the textbook formulation literally;
// tests hold the two against each other and the benchmark target times them.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "occprior/rng.hpp"

namespace occprior {

inline constexpr std::size_t kActionCount = 8;

struct Offset {
  int dx;
  int dy;
};

/// 8-connected moves; y grows downwards.
inline constexpr std::array<Offset, kActionCount> kActions{
    {{-1, -1}, {0, -1}, {1, -1}, {-1, 0}, {1, 0}, {-1, 1}, {0, 1}, {1, 1}}};

/// Deterministic grid MDP: per-state reward R(s) collected when leaving s,
/// and passability. Moves off the grid or into impassable states are invalid.
struct PlanningGrid {
  int width = 0;
  int height = 0;
  std::vector<double> reward;
  std::vector<std::uint8_t> passable;

  std::size_t size() const { return reward.size(); }

  /// Successor index, or `size()` when the move is invalid.
  std::size_t successor(std::size_t s, std::size_t a) const {
    const int x = static_cast<int>(s % static_cast<std::size_t>(width)) + kActions[a].dx;
    const int y = static_cast<int>(s / static_cast<std::size_t>(width)) + kActions[a].dy;
    if (x < 0 || y < 0 || x >= width || y >= height) return size();
    const auto n = static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x);
    return passable[n] ? n : size();
  }
};

struct SoftValueResult {
  std::vector<double> value;  // V(s); -inf where the goal is unreachable
  std::size_t sweeps = 0;
  bool converged = false;
};

/// Soft (log-sum-exp) value iteration towards an absorbing goal at inverse
/// temperature alpha:
///   V(goal) = 0,  V(s) = R(s) + (1/alpha) log sum_a exp(alpha V(succ(s, a))).
/// Synchronous sweeps from V = -inf until the largest per-state change is
/// below `tolerance` or `max_sweeps` is reached. Runs in the exp domain
/// (W = e^{alpha V}, a linear recurrence) and falls back to log-domain sweeps
/// if W under- or overflows. With every R(s) <= -c the iteration converges
/// when alpha c > log 8.
SoftValueResult soft_value_iteration(const PlanningGrid& grid, std::size_t goal, double alpha, double tolerance,
                                     std::size_t max_sweeps);

/// Serial log-domain version of the same recurrence.
SoftValueResult soft_value_iteration_reference(const PlanningGrid& grid, std::size_t goal, double alpha,
                                               double tolerance, std::size_t max_sweeps);

/// Q(s,a) = R(s) + V(succ) and pi(a|s) proportional to exp(alpha (Q - V)),
/// renormalized per state (a no-op up to rounding when V came from
/// soft_value_iteration at the same alpha). Invalid actions get Q = -inf and probability 0.
/// States that cannot reach the goal get a uniform distribution over their
/// valid actions; the goal itself gets none.
void extract_policy(const PlanningGrid& grid, std::span<const double> value, std::size_t goal,
                    double alpha, std::vector<double>& q, std::vector<double>& probs);

struct RolloutCounts {
  std::vector<std::uint64_t> visits;
  std::size_t truncated = 0;
};

/// Simulates `n` rollouts from `start` under `probs` (kActionCount per
/// state) until the goal or `cap` moves. Every visited state is counted,
/// including the start and the goal. Rollout i draws from the stream
/// derive_seed(seed, {i}), so counts do not depend on the thread count.
RolloutCounts simulate_rollouts(const PlanningGrid& grid, std::span<const double> probs,
                                std::size_t start, std::size_t goal, std::size_t n,
                                std::size_t cap, std::uint64_t seed);

RolloutCounts simulate_rollouts_reference(const PlanningGrid& grid, std::span<const double> probs,
                                          std::size_t start, std::size_t goal, std::size_t n,
                                          std::size_t cap, std::uint64_t seed);

/// One rollout, returned as the visited state sequence. `truncated` is set
/// when the cap was hit before reaching the goal.
std::vector<std::size_t> sample_path(const PlanningGrid& grid, std::span<const double> probs,
                                     std::size_t start, std::size_t goal, std::size_t cap, Rng& rng,
                                     bool* truncated = nullptr);

/// Number of OpenMP worker threads available (1 without OpenMP).
int worker_count();

}  // namespace occprior
