#include "occprior/maxent_irl.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace occprior {
namespace {

constexpr double kSimplexTolerance = 1e-9;
constexpr double kLoadTolerance = 1e-6;

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void normalize(std::vector<double>& v) {
  const double total = std::accumulate(v.begin(), v.end(), 0.0);
  if (total > 0.0)
    for (auto& x : v) x /= total;
}

double l2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

std::vector<std::uint8_t> passable_mask(const SemanticMap& map, const std::vector<std::string>& impassable) {
  std::vector<std::uint8_t> closed_class(map.classes().size(), 0);
  for (const auto& name : impassable) {
    const int k = map.classes().find(name);
    if (k >= 0) closed_class[static_cast<std::size_t>(k)] = 1;
  }
  std::vector<std::uint8_t> mask(map.size());
  for (std::size_t i = 0; i < map.size(); ++i)
    mask[i] = closed_class[static_cast<std::size_t>(map.class_at(i))] ? 0 : 1;
  return mask;
}

// Per-map features folded into model class order.
std::vector<double> to_model_space(const std::vector<double>& map_features,
                                   const std::vector<std::size_t>& mapping, std::size_t k) {
  std::vector<double> out(k, 0.0);
  for (std::size_t c = 0; c < map_features.size(); ++c) out[mapping[c]] += map_features[c];
  return out;
}

}  // namespace

ThetaModel uniform_model(const ClassTable& classes, double r0) {
  ThetaModel m;
  m.classes = classes.names();
  const double u = 1.0 / static_cast<double>(classes.size());
  m.theta.assign(classes.size(), u);
  m.endpoint_prior.assign(classes.size(), u);
  m.r0 = r0;
  validate(m);
  return m;
}

void validate(const ThetaModel& model) {
  const std::size_t k = model.classes.size();
  if (k == 0) throw Error("model has no classes");
  if (model.theta.size() != k || model.endpoint_prior.size() != k)
    throw Error("model vectors must have one entry per class");
  if (!(model.r0 > 0.0) || !std::isfinite(model.r0)) throw Error("r0 must be positive");
  auto check = [](const std::vector<double>& v, const char* what) {
    double sum = 0.0;
    for (double x : v) {
      if (!(x >= 0.0) || !std::isfinite(x)) throw Error(std::string(what) + " entries must be >= 0");
      sum += x;
    }
    if (std::abs(sum - 1.0) > kSimplexTolerance)
      throw Error(std::string(what) + " must sum to 1, sums to " + format_real(sum));
  };
  check(model.theta, "theta");
  check(model.endpoint_prior, "endpoint prior");
}

void save_theta(const ThetaModel& model, const std::filesystem::path& path) {
  validate(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(path.string() + ": cannot open for writing");
  out << "THETA 1\n" << model.size() << ' ' << format_real(model.r0) << '\n';
  auto row = [&](auto&& fmt) {
    for (std::size_t k = 0; k < model.size(); ++k) out << (k ? " " : "") << fmt(k);
    out << '\n';
  };
  row([&](std::size_t k) { return model.classes[k]; });
  row([&](std::size_t k) { return format_real(model.theta[k]); });
  row([&](std::size_t k) { return format_real(model.endpoint_prior[k]); });
  out.flush();
  if (!out) throw Error(path.string() + ": write failed");
}

ThetaModel load_theta(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(path.string() + ": cannot open for reading");
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& msg) -> void {
    throw Error(path.string() + ":" + std::to_string(lineno) + ": " + msg);
  };
  auto next_tokens = [&]() {
    std::vector<std::string> tokens;
    while (tokens.empty()) {
      if (!std::getline(in, line)) {
        ++lineno;
        fail("unexpected end of file");
      }
      ++lineno;
      std::istringstream ss(line);
      for (std::string t; ss >> t;) tokens.push_back(t);
    }
    return tokens;
  };
  auto parse_real = [&](const std::string& tok) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size() || !std::isfinite(v)) fail("expected number, found '" + tok + "'");
    return v;
  };

  auto header = next_tokens();
  if (header.size() != 2 || header[0] != "THETA" || header[1] != "1") fail("malformed header, expected 'THETA 1'");
  auto dims = next_tokens();
  if (dims.size() != 2) fail("expected '<K> <r0>'");
  char* end = nullptr;
  const long k = std::strtol(dims[0].c_str(), &end, 10);
  if (end != dims[0].c_str() + dims[0].size() || k <= 0) fail("class count must be a positive integer");
  ThetaModel m;
  m.r0 = parse_real(dims[1]);
  m.classes = next_tokens();
  if (m.classes.size() != static_cast<std::size_t>(k)) fail("dimension mismatch: expected " + std::to_string(k) + " class names");
  for (auto* target : {&m.theta, &m.endpoint_prior}) {
    auto tokens = next_tokens();
    if (tokens.size() != static_cast<std::size_t>(k)) fail("dimension mismatch: expected " + std::to_string(k) + " values");
    for (const auto& t : tokens) target->push_back(parse_real(t));
    const double sum = std::accumulate(target->begin(), target->end(), 0.0);
    if (std::abs(sum - 1.0) > kLoadTolerance) fail("values sum to " + format_real(sum) + ", expected 1");
    for (double x : *target)
      if (x < 0.0) fail("negative weight");
    normalize(*target);
  }
  try {
    validate(m);
  } catch (const Error& e) {
    fail(e.what());
  }
  return m;
}

std::size_t IocmmHyper::sweeps_for(const SemanticMap& map) const {
  return vi_max_sweeps > 0 ? static_cast<std::size_t>(vi_max_sweeps)
                           : static_cast<std::size_t>(4 * (map.width() + map.height()));
}

std::size_t IocmmHyper::cap_for(const SemanticMap& map) const {
  return rollout_cap > 0 ? static_cast<std::size_t>(rollout_cap)
                         : static_cast<std::size_t>(8 * (map.width() + map.height()));
}

void validate(const IocmmHyper& h) {
  if (h.traj_batch < 1 || h.map_batch < 1) throw Error("batch sizes must be positive");
  if (!(h.alpha > 0.0)) throw Error("alpha must be positive");
  if (!(h.learning_rate >= 0.0)) throw Error("learning rate must be >= 0");
  if (!(h.epsilon > 0.0)) throw Error("epsilon must be positive");
  if (h.max_iters < 1) throw Error("max_iters must be positive");
  if (!(h.vi_tolerance > 0.0)) throw Error("vi_tolerance must be positive");
  if (h.vi_max_sweeps < 0 || h.rollout_cap < 0) throw Error("sweep and rollout caps must be >= 0");
  if (h.rollouts_per_traj < 1) throw Error("rollouts_per_traj must be positive");
}

std::vector<std::size_t> class_mapping(const ClassTable& map_classes, const ThetaModel& model) {
  std::vector<std::size_t> mapping;
  std::string missing;
  for (const auto& name : map_classes.names()) {
    const auto it = std::find(model.classes.begin(), model.classes.end(), name);
    if (it == model.classes.end()) {
      missing += (missing.empty() ? "" : ", ") + name;
      continue;
    }
    mapping.push_back(static_cast<std::size_t>(it - model.classes.begin()));
  }
  if (!missing.empty()) throw Error("map classes not in model: " + missing);
  return mapping;
}

double state_cost(const SemanticMap& map, const ThetaModel& model, Cell s) {
  const auto mapping = class_mapping(map.classes(), model);
  return model.r0 + model.theta[mapping[static_cast<std::size_t>(map.class_at(s))]];
}

PlanningGrid planning_grid(const SemanticMap& map, const ThetaModel& model, const IocmmHyper& hyper) {
  const auto mapping = class_mapping(map.classes(), model);
  PlanningGrid grid;
  grid.width = map.width();
  grid.height = map.height();
  grid.passable = passable_mask(map, hyper.impassable);
  grid.reward.resize(map.size());
  for (std::size_t i = 0; i < map.size(); ++i)
    grid.reward[i] = -(model.r0 + model.theta[mapping[static_cast<std::size_t>(map.class_at(i))]]);
  return grid;
}

Policy::Policy(PlanningGrid grid, Cell goal, std::vector<double> q, std::vector<double> v,
               std::vector<double> probs, std::size_t sweeps, bool converged)
    : grid_(std::move(grid)), goal_(goal), q_(std::move(q)), v_(std::move(v)), probs_(std::move(probs)),
      sweeps_(sweeps), converged_(converged) {}

std::size_t Policy::goal_index() const {
  return static_cast<std::size_t>(goal_.y) * static_cast<std::size_t>(grid_.width) + static_cast<std::size_t>(goal_.x);
}

double Policy::prob(Cell s, std::size_t action) const {
  return probs_[(static_cast<std::size_t>(s.y) * static_cast<std::size_t>(grid_.width) + static_cast<std::size_t>(s.x)) *
                    kActionCount + action];
}

double Policy::value(Cell s) const {
  return v_[static_cast<std::size_t>(s.y) * static_cast<std::size_t>(grid_.width) + static_cast<std::size_t>(s.x)];
}

Policy backward_pass(const SemanticMap& map, const ThetaModel& model, Cell goal, const IocmmHyper& hyper) {
  if (!map.in_bounds(goal)) throw Error("goal outside map");
  PlanningGrid grid = planning_grid(map, model, hyper);
  const std::size_t g = map.index(goal);
  if (!grid.passable[g]) throw Error("goal lies on an impassable class");
  bool any_action = false;
  for (std::size_t s = 0; s < grid.size() && !any_action; ++s)
    if (grid.passable[s])
      for (std::size_t a = 0; a < kActionCount && !any_action; ++a) any_action = grid.successor(s, a) != grid.size();
  if (!any_action) throw Error("degenerate map");

  auto vi = soft_value_iteration(grid, g, hyper.alpha, hyper.vi_tolerance, hyper.sweeps_for(map));
  std::vector<double> q, probs;
  extract_policy(grid, vi.value, g, hyper.alpha, q, probs);
  return Policy(std::move(grid), goal, std::move(q), std::move(vi.value), std::move(probs), vi.sweeps, vi.converged);
}

Visitation forward_pass(const SemanticMap& map, const Policy& policy, Cell start, std::size_t n,
                        const IocmmHyper& hyper, std::uint64_t seed) {
  if (n == 0) throw Error("forward pass needs n >= 1");
  if (!map.in_bounds(start)) throw Error("start outside map");
  const std::size_t s = map.index(start);
  if (!policy.grid().passable[s]) throw Error("start lies on an impassable class");
  if (std::isinf(policy.v()[s])) throw Error("goal unreachable from start");
  const auto counts = simulate_rollouts(policy.grid(), policy.probs(), s, policy.goal_index(), n, hyper.cap_for(map), seed);
  Visitation out;
  out.counts.assign(counts.visits.begin(), counts.visits.end());
  out.rollouts = n;
  out.truncated = counts.truncated;
  return out;
}

std::vector<double> empirical_feature_count(const SemanticMap& map, const std::vector<Trajectory>& trajs) {
  if (trajs.empty()) throw Error("no trajectories");
  std::vector<double> f(map.classes().size(), 0.0);
  for (std::size_t t = 0; t < trajs.size(); ++t) {
    check_on_map(map, trajs[t], t);
    for (Cell c : trajs[t].states()) f[static_cast<std::size_t>(map.class_at(c))] += 1.0;
  }
  for (auto& x : f) x /= static_cast<double>(trajs.size());
  return f;
}

std::vector<double> expected_feature_count(const SemanticMap& map, const std::vector<double>& visits) {
  if (visits.size() != map.size()) throw Error("visitation grid does not match map size");
  std::vector<double> f(map.classes().size(), 0.0);
  for (std::size_t i = 0; i < visits.size(); ++i) f[static_cast<std::size_t>(map.class_at(i))] += visits[i];
  return f;
}

std::vector<double> exponentiated_update(const std::vector<double>& theta, const std::vector<double>& grad,
                                         double learning_rate) {
  std::vector<double> out(theta.size());
  for (std::size_t k = 0; k < theta.size(); ++k) out[k] = theta[k] * std::exp(learning_rate * grad[k]);
  normalize(out);
  return out;
}

namespace {

struct PassTask {
  std::size_t map = 0;
  Cell goal;
  std::vector<std::size_t> trajs;
};

struct PassOutcome {
  std::vector<double> expected;                 // model class order
  std::vector<std::size_t> kept;                // trajectories that ran
  std::vector<std::string> warnings;
  std::size_t truncated = 0;
};

std::vector<std::size_t> draw_without_replacement(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  k = std::min(k, n);
  for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + rng.below(n - i)]);
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

TrainResult train_iocmm(const Dataset& data, const IocmmHyper& hyper, ThetaModel model0) {
  validate(hyper);
  validate(model0);
  std::vector<std::size_t> usable;
  std::vector<std::vector<std::size_t>> mappings(data.size());
  for (std::size_t m = 0; m < data.size(); ++m) {
    mappings[m] = class_mapping(data[m].map.classes(), model0);
    if (!data[m].trajectories.empty()) usable.push_back(m);
  }
  if (usable.empty()) throw Error("training needs at least one map with trajectories");

  const std::size_t k = model0.size();
  TrainResult result;
  result.model = std::move(model0);

  for (int iter = 0; iter < hyper.max_iters; ++iter) {
    Rng batch_rng(derive_seed(hyper.seed, {0x62617463ULL, static_cast<std::uint64_t>(iter)}));
    const auto maps = draw_without_replacement(usable.size(), static_cast<std::size_t>(hyper.map_batch), batch_rng);

    // One backward pass per distinct (map, goal) in the batch.
    std::vector<PassTask> tasks;
    for (std::size_t mi : maps) {
      const std::size_t m = usable[mi];
      const auto& trajs = data[m].trajectories;
      for (std::size_t t : draw_without_replacement(trajs.size(), static_cast<std::size_t>(hyper.traj_batch), batch_rng)) {
        const Cell goal = trajs[t].back();
        auto it = std::find_if(tasks.begin(), tasks.end(),
                               [&](const PassTask& task) { return task.map == m && task.goal == goal; });
        if (it == tasks.end()) {
          tasks.push_back({m, goal, {}});
          it = tasks.end() - 1;
        }
        it->trajs.push_back(t);
      }
    }

    std::vector<PassOutcome> outcomes(tasks.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      const auto& task = tasks[i];
      const auto& entry = data[task.map];
      auto& out = outcomes[i];
      out.expected.assign(k, 0.0);
      try {
        const Policy policy = backward_pass(entry.map, result.model, task.goal, hyper);
        for (std::size_t t : task.trajs) {
          try {
            const auto seed = derive_seed(hyper.seed, {0x726f6c6cULL, task.map, t});
            const auto vis = forward_pass(entry.map, policy, entry.trajectories[t].front(),
                                          static_cast<std::size_t>(hyper.rollouts_per_traj), hyper, seed);
            const auto f = to_model_space(expected_feature_count(entry.map, vis.counts), mappings[task.map], k);
            for (std::size_t c = 0; c < k; ++c) out.expected[c] += f[c];
            out.truncated += vis.truncated;
            out.kept.push_back(t);
          } catch (const Error& e) {
            out.warnings.push_back(entry.name + " trajectory " + std::to_string(t) + " skipped: " + e.what());
          }
        }
      } catch (const Error& e) {
        out.warnings.push_back(entry.name + " goal (" + std::to_string(task.goal.x) + ", " +
                               std::to_string(task.goal.y) + ") skipped: " + e.what());
      }
    }

    std::vector<double> empirical(k, 0.0);
    std::vector<double> expected(k, 0.0);
    std::map<std::size_t, std::vector<Trajectory>> kept_by_map;
    TrainLogEntry entry_log;
    entry_log.iteration = iter;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      for (std::size_t c = 0; c < k; ++c) expected[c] += outcomes[i].expected[c];
      for (std::size_t t : outcomes[i].kept) kept_by_map[tasks[i].map].push_back(data[tasks[i].map].trajectories[t]);
      entry_log.truncated += outcomes[i].truncated;
      for (auto& w : outcomes[i].warnings) result.warnings.push_back(std::move(w));
    }
    for (const auto& [m, trajs] : kept_by_map) {
      const auto f = to_model_space(empirical_feature_count(data[m].map, trajs), mappings[m], k);
      for (std::size_t c = 0; c < k; ++c) empirical[c] += f[c];
      entry_log.trajectories += trajs.size();
    }
    if (kept_by_map.empty()) throw Error("every trajectory in training batch " + std::to_string(iter) + " was skipped");

    normalize(empirical);
    normalize(expected);
    std::vector<double> grad(k);
    for (std::size_t c = 0; c < k; ++c) grad[c] = expected[c] - empirical[c];
    const double norm = l2(grad);
    result.model.theta = exponentiated_update(result.model.theta, grad, hyper.learning_rate);

    entry_log.theta = result.model.theta;
    entry_log.grad_norm = norm;
    entry_log.empirical = std::move(empirical);
    entry_log.expected = std::move(expected);
    result.log.push_back(std::move(entry_log));
    if (norm < hyper.epsilon) {
      result.converged = true;
      break;
    }
  }
  result.model.endpoint_prior = learn_endpoint_prior(data, result.model.classes);
  validate(result.model);
  return result;
}

std::vector<double> learn_endpoint_prior(const Dataset& data, const std::vector<std::string>& classes) {
  ThetaModel names_only;
  names_only.classes = classes;
  std::vector<double> counts(classes.size(), 1.0);
  std::size_t endpoints = 0;
  for (const auto& entry : data) {
    const auto mapping = class_mapping(entry.map.classes(), names_only);
    for (const auto& t : entry.trajectories) {
      for (Cell c : {t.front(), t.back()}) counts[mapping[static_cast<std::size_t>(entry.map.class_at(c))]] += 1.0;
      endpoints += 2;
    }
  }
  if (endpoints == 0) throw Error("endpoint prior needs at least one trajectory");
  normalize(counts);
  return counts;
}

EndpointSampler::EndpointSampler(const SemanticMap& map, const ThetaModel& model, EndpointStrategy strategy,
                                 double tau, const std::vector<std::string>& impassable)
    : width_(map.width()) {
  const auto mapping = class_mapping(map.classes(), model);
  const auto open = passable_mask(map, impassable);
  const double cx = 0.5 * (map.width() - 1);
  const double cy = 0.5 * (map.height() - 1);
  const double d_max = std::hypot(cx, cy);

  std::vector<double> base(map.size(), 0.0);
  if (strategy == EndpointStrategy::learned) {
    for (std::size_t i = 0; i < map.size(); ++i)
      base[i] = model.endpoint_prior[mapping[static_cast<std::size_t>(map.class_at(i))]];
  } else {
    if (!(tau > 0.0)) throw Error("softmax endpoint sampling needs tau > 0");
    double c_min = std::numeric_limits<double>::infinity();
    std::vector<double> cost(map.size());
    for (std::size_t i = 0; i < map.size(); ++i) {
      cost[i] = model.r0 + model.theta[mapping[static_cast<std::size_t>(map.class_at(i))]];
      if (open[i]) c_min = std::min(c_min, cost[i]);
    }
    // Shifted by the minimum cost; the common factor cancels on normalization.
    for (std::size_t i = 0; i < map.size(); ++i) base[i] = std::exp(-(cost[i] - c_min) / tau);
  }

  weights_.assign(map.size(), 0.0);
  cumulative_.resize(map.size());
  double total = 0.0;
  std::size_t candidates = 0;
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (open[i]) {
      const Cell c = map.cell(i);
      const double d = std::hypot(c.x - cx, c.y - cy);
      weights_[i] = base[i] * (1.0 + (d_max > 0.0 ? d / d_max : 0.0));
      if (weights_[i] > 0.0) ++candidates;
    }
    total += weights_[i];
    cumulative_[i] = total;
  }
  if (!(total > 0.0)) throw Error("all endpoint weights are zero");
  if (candidates < 2) throw Error("endpoint sampling needs at least 2 candidate states");
  for (auto& w : weights_) w /= total;
}

std::size_t EndpointSampler::draw(Rng& rng) const {
  const double u = rng.uniform() * cumulative_.back();
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  if (it == cumulative_.end()) --it;
  // Skip zero-weight cells that share the same cumulative value.
  auto i = static_cast<std::size_t>(it - cumulative_.begin());
  while (weights_[i] == 0.0 && i + 1 < weights_.size()) ++i;
  return i;
}

std::pair<Cell, Cell> EndpointSampler::sample(Rng& rng) const {
  const std::size_t s0 = draw(rng);
  std::size_t sg = draw(rng);
  while (sg == s0) sg = draw(rng);
  auto to_cell = [&](std::size_t i) {
    return Cell{static_cast<int>(i % static_cast<std::size_t>(width_)), static_cast<int>(i / static_cast<std::size_t>(width_))};
  };
  return {to_cell(s0), to_cell(sg)};
}

std::pair<Cell, Cell> sample_endpoints(const SemanticMap& map, const ThetaModel& model, EndpointStrategy strategy,
                                       double tau, Rng& rng) {
  return EndpointSampler(map, model, strategy, tau).sample(rng);
}

}  // namespace occprior
