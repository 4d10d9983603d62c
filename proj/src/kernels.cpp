#include "occprior/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace occprior {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// (1/alpha) log sum_a exp(alpha V(succ(s, a))) over valid actions.
double soft_max_successors(const PlanningGrid& grid, std::span<const double> v, std::size_t s, double alpha) {
  double m = kNegInf;
  std::array<double, kActionCount> terms{};
  std::size_t count = 0;
  for (std::size_t a = 0; a < kActionCount; ++a) {
    const std::size_t n = grid.successor(s, a);
    if (n == grid.size()) continue;
    terms[count++] = v[n];
    m = std::max(m, v[n]);
  }
  if (m == kNegInf) return kNegInf;
  double sum = 0.0;
  for (std::size_t i = 0; i < count; ++i) sum += std::exp(alpha * (terms[i] - m));
  return m + std::log(sum) / alpha;
}

double value_change(double before, double after) {
  if (before == after) return 0.0;  // also covers -inf == -inf
  if (std::isinf(before) || std::isinf(after)) return std::numeric_limits<double>::infinity();
  return std::abs(after - before);
}

SoftValueResult log_domain_iteration(const PlanningGrid& grid, std::size_t goal, double alpha,
                                     double tolerance, std::size_t max_sweeps, bool parallel) {
  const std::size_t n = grid.size();
  std::vector<double> v(n, kNegInf);
  std::vector<double> next(n, kNegInf);
  v[goal] = 0.0;
  SoftValueResult result;
  for (std::size_t sweep = 1; sweep <= max_sweeps; ++sweep) {
    double change = 0.0;
#pragma omp parallel for if (parallel) reduction(max : change) schedule(static)
    for (std::size_t s = 0; s < n; ++s) {
      double value = kNegInf;
      if (s == goal) {
        value = 0.0;
      } else if (grid.passable[s]) {
        const double lse = soft_max_successors(grid, v, s, alpha);
        value = lse == kNegInf ? kNegInf : grid.reward[s] + lse;
      }
      next[s] = value;
      change = std::max(change, value_change(v[s], value));
    }
    v.swap(next);
    result.sweeps = sweep;
    if (change < tolerance) {
      result.converged = true;
      break;
    }
  }
  result.value = std::move(v);
  return result;
}

}  // namespace

int worker_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

SoftValueResult soft_value_iteration_reference(const PlanningGrid& grid, std::size_t goal, double alpha,
                                               double tolerance, std::size_t max_sweeps) {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  return log_domain_iteration(grid, goal, alpha, tolerance, max_sweeps, false);
}

SoftValueResult soft_value_iteration(const PlanningGrid& grid, std::size_t goal, double alpha, double tolerance,
                                     std::size_t max_sweeps) {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  const std::size_t n = grid.size();
  std::vector<double> step(n);
  for (std::size_t s = 0; s < n; ++s) step[s] = std::exp(alpha * grid.reward[s]);

  // W = exp(alpha V); |dV| < tolerance  <=>  W moves by less than a factor exp(alpha tolerance).
  const double hi = std::exp(alpha * tolerance);
  const double lo = std::exp(-alpha * tolerance);

  std::vector<double> w(n, 0.0);
  std::vector<double> next(n, 0.0);
  w[goal] = 1.0;
  SoftValueResult result;
  int bad_range = 0;
  for (std::size_t sweep = 1; sweep <= max_sweeps; ++sweep) {
    int moving = 0;
#pragma omp parallel for reduction(max : moving, bad_range) schedule(static)
    for (std::size_t s = 0; s < n; ++s) {
      double value = 0.0;
      if (s == goal) {
        value = 1.0;
      } else if (grid.passable[s]) {
        double sum = 0.0;
        for (std::size_t a = 0; a < kActionCount; ++a) {
          const std::size_t nb = grid.successor(s, a);
          if (nb != n) sum += w[nb];
        }
        value = step[s] * sum;
        if ((sum > 0.0 && value == 0.0) || !std::isfinite(value)) bad_range = 1;
      }
      next[s] = value;
      const double before = w[s];
      if (before != value && (before == 0.0 || value == 0.0 || value > before * hi || value < before * lo))
        moving = 1;
    }
    if (bad_range) break;
    w.swap(next);
    result.sweeps = sweep;
    if (!moving) {
      result.converged = true;
      break;
    }
  }
  if (bad_range) return log_domain_iteration(grid, goal, alpha, tolerance, max_sweeps, true);

  result.value.resize(n);
  for (std::size_t s = 0; s < n; ++s) result.value[s] = w[s] > 0.0 ? std::log(w[s]) / alpha : kNegInf;
  return result;
}

void extract_policy(const PlanningGrid& grid, std::span<const double> value, std::size_t goal,
                    double alpha, std::vector<double>& q, std::vector<double>& probs) {
  const std::size_t n = grid.size();
  q.assign(n * kActionCount, kNegInf);
  probs.assign(n * kActionCount, 0.0);
#pragma omp parallel for schedule(static)
  for (std::size_t s = 0; s < n; ++s) {
    if (!grid.passable[s]) continue;
    double* qs = q.data() + s * kActionCount;
    double* ps = probs.data() + s * kActionCount;
    std::size_t valid = 0;
    for (std::size_t a = 0; a < kActionCount; ++a) {
      const std::size_t nb = grid.successor(s, a);
      if (nb == n) continue;
      ++valid;
      qs[a] = value[nb] == kNegInf ? kNegInf : grid.reward[s] + value[nb];
    }
    if (s == goal || valid == 0) continue;

    if (value[s] == kNegInf) {
      for (std::size_t a = 0; a < kActionCount; ++a)
        if (grid.successor(s, a) != n) ps[a] = 1.0 / static_cast<double>(valid);
      continue;
    }
    double top = kNegInf;
    for (std::size_t a = 0; a < kActionCount; ++a)
      if (qs[a] != kNegInf) top = std::max(top, alpha * (qs[a] - value[s]));
    double total = 0.0;
    for (std::size_t a = 0; a < kActionCount; ++a) {
      if (qs[a] == kNegInf) continue;
      ps[a] = std::exp(alpha * (qs[a] - value[s]) - top);
      total += ps[a];
    }
    for (std::size_t a = 0; a < kActionCount; ++a) ps[a] /= total;
  }
}

std::vector<std::size_t> sample_path(const PlanningGrid& grid, std::span<const double> probs,
                                     std::size_t start, std::size_t goal, std::size_t cap, Rng& rng,
                                     bool* truncated) {
  std::vector<std::size_t> path{start};
  std::size_t s = start;
  bool cut = false;
  for (std::size_t step = 0; s != goal; ++step) {
    if (step == cap) {
      cut = true;
      break;
    }
    const double* ps = probs.data() + s * kActionCount;
    const double u = rng.uniform();
    double acc = 0.0;
    std::size_t chosen = kActionCount;
    std::size_t last_valid = kActionCount;
    for (std::size_t a = 0; a < kActionCount; ++a) {
      if (ps[a] <= 0.0) continue;
      last_valid = a;
      acc += ps[a];
      if (u < acc) {
        chosen = a;
        break;
      }
    }
    if (chosen == kActionCount) chosen = last_valid;  // rounding slack at the top end
    if (chosen == kActionCount) {
      cut = true;  // no valid action
      break;
    }
    s = grid.successor(s, chosen);
    path.push_back(s);
  }
  if (truncated) *truncated = cut;
  return path;
}

RolloutCounts simulate_rollouts_reference(const PlanningGrid& grid, std::span<const double> probs,
                                          std::size_t start, std::size_t goal, std::size_t n,
                                          std::size_t cap, std::uint64_t seed) {
  RolloutCounts out;
  out.visits.assign(grid.size(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, {i}));
    bool cut = false;
    for (std::size_t s : sample_path(grid, probs, start, goal, cap, rng, &cut)) ++out.visits[s];
    if (cut) ++out.truncated;
  }
  return out;
}

RolloutCounts simulate_rollouts(const PlanningGrid& grid, std::span<const double> probs,
                                std::size_t start, std::size_t goal, std::size_t n,
                                std::size_t cap, std::uint64_t seed) {
  RolloutCounts out;
  out.visits.assign(grid.size(), 0);
  std::size_t truncated = 0;
#pragma omp parallel reduction(+ : truncated)
  {
    std::vector<std::uint64_t> local(grid.size(), 0);
#pragma omp for schedule(dynamic, 16)
    for (std::size_t i = 0; i < n; ++i) {
      Rng rng(derive_seed(seed, {i}));
      bool cut = false;
      for (std::size_t s : sample_path(grid, probs, start, goal, cap, rng, &cut)) ++local[s];
      if (cut) ++truncated;
    }
#pragma omp critical
    for (std::size_t s = 0; s < local.size(); ++s) out.visits[s] += local[s];
  }
  out.truncated = truncated;
  return out;
}

}  // namespace occprior
