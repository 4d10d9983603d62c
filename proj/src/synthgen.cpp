#include "occprior/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <queue>
#include <string>
#include <tuple>

#include "occprior/rng.hpp"

namespace occprior {
namespace {

enum UrbanClass : int { kSidewalk = 0, kGrass = 1, kRoad = 2, kObstacle = 3 };

constexpr int kMaxAttempts = 100;
constexpr int kOffsets[8][2] = {{-1, -1}, {0, -1}, {1, -1}, {-1, 0}, {1, 0}, {-1, 1}, {0, 1}, {1, 1}};

struct Band {
  bool vertical;
  int start;
  int width;
};

class Canvas {
 public:
  Canvas(int w, int h) : w_(w), h_(h), cells_(static_cast<std::size_t>(w * h), kGrass) {}

  int& at(int x, int y) { return cells_[static_cast<std::size_t>(y * w_ + x)]; }

  void paint_band(const Band& b, int cls) {
    const int extent = b.vertical ? w_ : h_;
    const int length = b.vertical ? h_ : w_;
    for (int o = std::max(0, b.start); o < std::min(extent, b.start + b.width); ++o)
      for (int t = 0; t < length; ++t) (b.vertical ? at(o, t) : at(t, o)) = cls;
  }

  std::vector<int> take() { return std::move(cells_); }

 private:
  int w_, h_;
  std::vector<int> cells_;
};

SemanticMap generate_once(const GeneratorSpec& spec, Rng& rng) {
  const int w = spec.width;
  const int h = spec.height;
  Canvas canvas(w, h);

  // Sidewalks first, roads second, so crossing bands cut through sidewalks.
  std::vector<Band> roads;
  std::vector<Band> walks;
  for (int r = 0; r < spec.road_count; ++r) {
    const bool vertical = rng.below(2) == 1;
    const int extent = vertical ? w : h;
    const int road_w = rng.between(2, 3);
    const int side_w = rng.between(1, 2);
    const int band_w = road_w + 2 * side_w;
    const int start = rng.between(1, std::max(1, extent - band_w - 1));
    walks.push_back({vertical, start, band_w});
    roads.push_back({vertical, start + side_w, road_w});
  }
  const int footpaths = spec.road_count == 0 ? rng.between(1, 2) : rng.between(0, 1);
  for (int f = 0; f < footpaths; ++f) {
    const bool vertical = rng.below(2) == 1;
    const int extent = vertical ? w : h;
    const int path_w = rng.between(1, 2);
    walks.push_back({vertical, rng.between(1, extent - path_w - 1), path_w});
  }
  for (const auto& b : walks) canvas.paint_band(b, kSidewalk);
  for (const auto& b : roads) canvas.paint_band(b, kRoad);
  for (const auto& b : roads) {
    const int length = b.vertical ? h : w;
    const int crossings = rng.between(0, 2);
    for (int c = 0; c < crossings; ++c) {
      const int at = rng.between(0, length - 2);
      for (int t = at; t < at + 2; ++t)
        for (int o = b.start; o < b.start + b.width; ++o) {
          int& cell = b.vertical ? canvas.at(o, t) : canvas.at(t, o);
          if (cell == kRoad) cell = kSidewalk;
        }
    }
  }

  const int target = static_cast<int>(std::lround(spec.obstacle_density * w * h));
  int placed = 0;
  for (int attempt = 0; attempt < 400 && placed < target; ++attempt) {
    const int rw = rng.between(2, 6);
    const int rh = rng.between(2, 6);
    const int x0 = rng.between(0, w - rw);
    const int y0 = rng.between(0, h - rh);
    const bool apron = rng.below(2) == 1;
    int block = 0;
    for (int y = y0; y < y0 + rh && placed < target; ++y)
      for (int x = x0; x < x0 + rw && placed < target; ++x)
        if (canvas.at(x, y) == kGrass) {
          canvas.at(x, y) = kObstacle;
          ++placed;
          ++block;
        }
    if (!apron || block == 0) continue;
    for (int y = std::max(0, y0 - 1); y < std::min(h, y0 + rh + 1); ++y)
      for (int x = std::max(0, x0 - 1); x < std::min(w, x0 + rw + 1); ++x)
        if (canvas.at(x, y) == kGrass) canvas.at(x, y) = kSidewalk;
  }
  return SemanticMap(w, h, urban_classes(), canvas.take());
}

std::vector<double> cell_costs(const SemanticMap& map, const std::vector<double>& class_costs) {
  std::vector<double> c(map.size());
  for (std::size_t i = 0; i < map.size(); ++i) c[i] = class_costs[static_cast<std::size_t>(map.class_at(i))];
  return c;
}

bool has_endpoint_pair(const std::vector<Cell>& candidates, int min_sep) {
  for (std::size_t i = 0; i < candidates.size(); ++i)
    for (std::size_t j = i + 1; j < candidates.size(); ++j)
      if (chebyshev(candidates[i], candidates[j]) >= min_sep) return true;
  return false;
}

}  // namespace

void validate(const GeneratorSpec& spec) {
  if (spec.width < 16 || spec.height < 16) throw Error("generator needs width and height >= 16");
  if (spec.road_count < 0) throw Error("road_count must be >= 0");
  if (!(spec.obstacle_density >= 0.0 && spec.obstacle_density <= 1.0))
    throw Error("obstacle_density must lie in [0, 1]");
  if (spec.trajectories_per_map < 1) throw Error("trajectories_per_map must be >= 1");
  if (spec.oracle_costs.size() != urban_classes().size())
    throw Error("oracle_costs needs one entry per class (" + std::to_string(urban_classes().size()) + ")");
  for (std::size_t k = 0; k < spec.oracle_costs.size(); ++k) {
    const double c = spec.oracle_costs[k];
    if (!(c > 0.0)) throw Error("oracle_costs must be positive");
    if (std::isinf(c) && urban_classes().walkable(k))
      throw Error("walkable class '" + urban_classes().name(k) + "' needs a finite oracle cost");
  }
  if (!(spec.oracle_noise >= 0.0) || std::isinf(spec.oracle_noise))
    throw Error("oracle_noise must be finite and >= 0");
}

std::vector<Cell> boundary_sidewalks(const SemanticMap& map) {
  std::vector<Cell> out;
  const int sidewalk = map.classes().find("sidewalk");
  if (sidewalk < 0) return out;
  for (int y = 0; y < map.height(); ++y)
    for (int x = 0; x < map.width(); ++x) {
      const bool edge = x == 0 || y == 0 || x == map.width() - 1 || y == map.height() - 1;
      if (edge && map.class_at(Cell{x, y}) == sidewalk) out.push_back({x, y});
    }
  return out;
}

bool boundary_sidewalks_connected(const SemanticMap& map, const std::vector<double>& class_costs) {
  const auto ends = boundary_sidewalks(map);
  if (ends.empty()) return true;
  const auto cost = cell_costs(map, class_costs);
  std::vector<char> seen(map.size(), 0);
  std::vector<std::size_t> stack{map.index(ends.front())};
  seen[stack.back()] = 1;
  while (!stack.empty()) {
    const Cell c = map.cell(stack.back());
    stack.pop_back();
    for (const auto& o : kOffsets) {
      const Cell n{c.x + o[0], c.y + o[1]};
      if (!map.in_bounds(n)) continue;
      const auto i = map.index(n);
      if (seen[i] || std::isinf(cost[i])) continue;
      seen[i] = 1;
      stack.push_back(i);
    }
  }
  return std::all_of(ends.begin(), ends.end(), [&](Cell c) { return seen[map.index(c)] != 0; });
}

SemanticMap generate_map(const GeneratorSpec& spec) {
  validate(spec);
  const int min_sep = spec.width / 2;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    Rng rng(derive_seed(spec.seed, {1, static_cast<std::uint64_t>(attempt)}));
    SemanticMap map = generate_once(spec, rng);
    if (boundary_sidewalks_connected(map, spec.oracle_costs) &&
        has_endpoint_pair(boundary_sidewalks(map), min_sep))
      return map;
  }
  throw Error("generator failed to produce connected map");
}

std::vector<Cell> least_cost_path(const SemanticMap& map, const std::vector<double>& enter_cost,
                                  Cell from, Cell to) {
  const std::size_t n = map.size();
  const std::size_t src = map.index(from);
  const std::size_t dst = map.index(to);
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(n, inf);
  std::vector<std::size_t> parent(n, n);
  using Item = std::tuple<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  dist[src] = 0.0;
  queue.emplace(0.0, src);
  while (!queue.empty()) {
    const auto [d, u] = queue.top();
    queue.pop();
    if (d > dist[u]) continue;
    if (u == dst) break;
    const Cell c = map.cell(u);
    for (const auto& o : kOffsets) {
      const Cell nb{c.x + o[0], c.y + o[1]};
      if (!map.in_bounds(nb)) continue;
      const std::size_t v = map.index(nb);
      if (std::isinf(enter_cost[v])) continue;
      const double step = (o[0] != 0 && o[1] != 0) ? std::sqrt(2.0) : 1.0;
      const double nd = d + enter_cost[v] * step;
      if (nd < dist[v]) {
        dist[v] = nd;
        parent[v] = u;
        queue.emplace(nd, v);
      }
    }
  }
  if (std::isinf(dist[dst])) return {};
  std::vector<Cell> path;
  for (std::size_t v = dst; v != n; v = parent[v]) path.push_back(map.cell(v));
  std::reverse(path.begin(), path.end());
  return path;
}

std::vector<Trajectory> oracle_trajectories(const SemanticMap& map, const GeneratorSpec& spec) {
  validate(spec);
  if (map.classes() != urban_classes()) throw Error("oracle expects the urban class table");
  const auto ends = boundary_sidewalks(map);
  const int min_sep = map.width() / 2;
  if (!has_endpoint_pair(ends, min_sep)) throw Error("no valid endpoint pair on boundary sidewalks");

  const auto base = cell_costs(map, spec.oracle_costs);
  std::vector<Trajectory> out;
  out.reserve(static_cast<std::size_t>(spec.trajectories_per_map));
  for (int t = 0; t < spec.trajectories_per_map; ++t) {
    Rng rng(derive_seed(spec.seed, {2, static_cast<std::uint64_t>(t)}));
    std::vector<double> cost = base;
    for (auto& c : cost)
      if (!std::isinf(c)) c += spec.oracle_noise * rng.uniform();

    std::vector<Cell> path;
    for (int attempt = 0; attempt < kMaxAttempts && path.size() < 2; ++attempt) {
      const Cell a = ends[rng.below(ends.size())];
      std::vector<Cell> far;
      for (Cell b : ends)
        if (chebyshev(a, b) >= min_sep) far.push_back(b);
      if (far.empty()) continue;
      const Cell b = far[rng.below(far.size())];
      path = least_cost_path(map, cost, a, b);
    }
    if (path.size() < 2)
      throw Error("oracle could not connect an endpoint pair after " + std::to_string(kMaxAttempts) +
                  " attempts");
    out.emplace_back(std::move(path));
  }
  return out;
}

std::filesystem::path build_dataset(int n_maps, const GeneratorSpec& spec,
                                    const std::filesystem::path& out_dir) {
  if (n_maps < 1) throw Error("maps must be ≥ 1");
  validate(spec);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(out_dir.string() + ": " + ec.message());

  std::vector<ManifestRow> rows;
  for (int i = 0; i < n_maps; ++i) {
    GeneratorSpec local = spec;
    local.seed = derive_seed(spec.seed, {static_cast<std::uint64_t>(i)});
    const SemanticMap map = generate_map(local);
    const auto trajs = oracle_trajectories(map, local);
    const auto occ = occupancy_from_trajectories(map, trajs);

    char stem[32];
    std::snprintf(stem, sizeof stem, "map_%03d", i);
    const ManifestRow row{std::string(stem) + ".smap", std::string(stem) + ".traj",
                          std::string(stem) + ".occ"};
    save_map(map, out_dir / row.map);
    save_trajectories(trajs, out_dir / row.trajectories);
    save_occupancy(occ, out_dir / row.occupancy);
    rows.push_back(row);
  }
  const auto manifest = out_dir / "manifest";
  save_manifest(rows, manifest);
  return manifest;
}

}  // namespace occprior
