#include "fixtures.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <unistd.h>

#include "occprior/kernels.hpp"

namespace occprior::testing {

SemanticMap ascii_map(const std::vector<std::string>& rows) {
  const int h = static_cast<int>(rows.size());
  const int w = h > 0 ? static_cast<int>(rows.front().size()) : 0;
  std::vector<int> cells;
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != w) throw std::invalid_argument("ragged ascii map");
    for (char c : row) {
      switch (c) {
        case 's': cells.push_back(0); break;
        case 'g': cells.push_back(1); break;
        case 'r': cells.push_back(2); break;
        case '#': cells.push_back(3); break;
        default: throw std::invalid_argument(std::string("unknown map letter ") + c);
      }
    }
  }
  return SemanticMap(w, h, urban_classes(), std::move(cells));
}

SemanticMap random_map(Rng& rng, int width, int height, const ClassTable& classes) {
  std::vector<int> cells(static_cast<std::size_t>(width * height));
  for (auto& c : cells) c = static_cast<int>(rng.below(classes.size()));
  return SemanticMap(width, height, classes, std::move(cells));
}

ClassTable random_classes(Rng& rng, std::size_t max_k) {
  const std::size_t k = 1 + rng.below(max_k);
  std::vector<std::string> names;
  std::vector<bool> walkable;
  for (std::size_t i = 0; i < k; ++i) {
    names.push_back("c" + std::to_string(i) + "_" + std::to_string(rng.below(1000)));
    walkable.push_back(rng.below(2) == 1);
  }
  walkable[rng.below(k)] = true;
  return ClassTable(std::move(names), std::move(walkable));
}

std::vector<Trajectory> random_walks(Rng& rng, const SemanticMap& map, std::size_t count, std::size_t max_len) {
  std::vector<Trajectory> out;
  for (std::size_t t = 0; t < count; ++t) {
    const std::size_t len = 2 + rng.below(std::max<std::size_t>(max_len, 2) - 1);
    std::vector<Cell> states{map.cell(rng.below(map.size()))};
    while (states.size() < len) {
      const Cell c = states.back();
      std::vector<Cell> next;
      for (const auto& a : kActions) {
        const Cell n{c.x + a.dx, c.y + a.dy};
        if (map.in_bounds(n)) next.push_back(n);
      }
      states.push_back(next[rng.below(next.size())]);
    }
    out.emplace_back(std::move(states));
  }
  return out;
}

OccupancyGrid random_occupancy(Rng& rng, int width, int height, double zero_fraction) {
  std::vector<double> w(static_cast<std::size_t>(width * height));
  for (auto& v : w) v = rng.uniform() < zero_fraction ? 0.0 : -std::log(1.0 - rng.uniform());
  if (std::all_of(w.begin(), w.end(), [](double v) { return v == 0.0; })) w[rng.below(w.size())] = 1.0;
  return OccupancyGrid::from_weights(width, height, std::move(w));
}

namespace {

std::vector<double> dirichlet(Rng& rng, std::size_t k) {
  std::vector<double> v(k);
  for (auto& x : v) x = -std::log(1.0 - rng.uniform()) + 1e-12;
  const double s = std::accumulate(v.begin(), v.end(), 0.0);
  for (auto& x : v) x /= s;
  // Absorb rounding so the simplex check at 1e-9 always holds.
  v.back() = std::max(0.0, 1.0 - std::accumulate(v.begin(), v.end() - 1, 0.0));
  return v;
}

}  // namespace

ThetaModel random_model(Rng& rng, const ClassTable& classes, double r0) {
  ThetaModel m;
  m.classes = classes.names();
  m.theta = dirichlet(rng, classes.size());
  m.endpoint_prior = dirichlet(rng, classes.size());
  m.r0 = r0;
  return m;
}

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("occprior_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

namespace {

// Blocky 3-class layout: grass background with random sidewalk and road
// rectangles.
SemanticMap blocky_map(Rng& rng, const ClassTable& classes, int size) {
  std::vector<int> cells(static_cast<std::size_t>(size * size), 1);
  for (int r = 0; r < 6; ++r) {
    const int cls = r % 2 == 0 ? 0 : 2;
    const int w = rng.between(2, size / 2);
    const int h = rng.between(2, size / 2);
    const int x0 = rng.between(0, size - w);
    const int y0 = rng.between(0, size - h);
    for (int y = y0; y < y0 + h; ++y)
      for (int x = x0; x < x0 + w; ++x) cells[static_cast<std::size_t>(y * size + x)] = cls;
  }
  return SemanticMap(size, size, classes, std::move(cells));
}

}  // namespace

SelfConsistencyFixture self_consistency_fixture(std::uint64_t seed) {
  constexpr int kMaps = 8;
  constexpr int kSize = 12;
  constexpr int kTrajs = 10;
  const ClassTable classes({"sidewalk", "grass", "road"}, {true, true, false});
  Rng rng(derive_seed(seed, {0x7363}));

  SelfConsistencyFixture fx;
  std::vector<double> levels{0.1, 0.3, 0.6};
  for (std::size_t i = levels.size(); i > 1; --i) std::swap(levels[i - 1], levels[rng.below(i)]);
  fx.truth = uniform_model(classes);
  fx.truth.theta = levels;

  fx.hyper.traj_batch = kTrajs;
  fx.hyper.map_batch = kMaps;
  fx.hyper.rollouts_per_traj = 20;
  fx.hyper.seed = seed;

  for (int m = 0; m < kMaps; ++m) {
    DatasetEntry entry;
    entry.name = "sc_" + std::to_string(m);
    entry.map = blocky_map(rng, classes, kSize);
    const std::size_t cap = fx.hyper.cap_for(entry.map);
    while (entry.trajectories.size() < static_cast<std::size_t>(kTrajs)) {
      const Cell start = entry.map.cell(rng.below(entry.map.size()));
      const Cell goal = entry.map.cell(rng.below(entry.map.size()));
      if (chebyshev(start, goal) < kSize / 3) continue;
      const Policy policy = backward_pass(entry.map, fx.truth, goal, fx.hyper);
      bool cut = false;
      const auto path =
          sample_path(policy.grid(), policy.probs(), entry.map.index(start), policy.goal_index(), cap, rng, &cut);
      if (cut) continue;
      std::vector<Cell> states;
      for (std::size_t s : path) states.push_back(entry.map.cell(s));
      entry.trajectories.emplace_back(std::move(states));
    }
    entry.ground_truth = occupancy_from_trajectories(entry.map, entry.trajectories);
    fx.data.push_back(std::move(entry));
  }
  return fx;
}

namespace {

PlanningFixture planning(std::string name, const std::vector<std::string>& rows, Cell start, Cell goal,
                         std::vector<double> theta, double r0, double alpha) {
  PlanningFixture f{std::move(name), ascii_map(rows), start, goal, uniform_model(urban_classes(), r0), {}};
  f.model.theta = std::move(theta);
  f.hyper.alpha = alpha;
  f.hyper.vi_tolerance = 1e-13;
  f.hyper.vi_max_sweeps = 20000;
  return f;
}

}  // namespace

std::vector<PlanningFixture> corridor_fixtures() {
  const std::vector<double> uniform{0.25, 0.25, 0.25, 0.25};
  const std::vector<double> skewed{0.1, 0.5, 0.3, 0.1};
  return {
      planning("1x3 corridor", {"sss"}, {0, 0}, {2, 0}, uniform, kDefaultR0, 25.0),
      planning("1x3 corridor, soft", {"sgr"}, {0, 0}, {2, 0}, skewed, 3.0, 1.0),
      planning("2x3 corridor", {"sss", "sss"}, {0, 1}, {2, 0}, uniform, kDefaultR0, 25.0),
      planning("2x3 corridor, soft", {"sgs", "rss"}, {0, 0}, {2, 1}, skewed, 3.0, 1.0),
  };
}

std::vector<PlanningFixture> small_fixtures() {
  auto out = corridor_fixtures();
  const std::vector<double> skewed{0.05, 0.35, 0.55, 0.05};
  out.push_back(planning("3x3 pillar", {"sss", "s#s", "sss"}, {0, 0}, {2, 2}, skewed, 0.5, 5.0));
  out.push_back(planning("4x4 open field", {"gggg", "gggg", "gggg", "gggg"}, {0, 3}, {3, 0}, skewed, 1.1, 2.0));
  const std::vector<std::string> mixed{"ssgrr", "sg#rr", "sg#ss", "sggss", "sssss"};
  out.push_back(planning("5x5 mixed", mixed, {0, 0}, {4, 4}, skewed, kDefaultR0, 25.0));
  out.push_back(planning("5x5 mixed, soft", mixed, {0, 0}, {4, 4}, skewed, 0.8, 3.0));
  out.push_back(planning("5x5 mixed, reversed", mixed, {4, 4}, {4, 0}, skewed, 0.8, 3.0));
  return out;
}

std::vector<std::string> cost_order(const ThetaModel& model) {
  std::vector<std::size_t> idx(model.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return model.theta[a] < model.theta[b]; });
  std::vector<std::string> out;
  for (std::size_t i : idx) out.push_back(model.classes[i]);
  return out;
}

}  // namespace occprior::testing
