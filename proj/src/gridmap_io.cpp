#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string_view>

#include "occprior/gridmap.hpp"

namespace occprior {
namespace {

constexpr double kLoadMassTolerance = 1e-4;

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

// Line-oriented reader that stamps errors with `<path>:<line>`.
class LineReader {
 public:
  explicit LineReader(const std::filesystem::path& path) : path_(path), in_(path) {
    if (!in_) throw Error(path.string() + ": cannot open for reading");
  }

  // Next line split into tokens; blank lines are skipped.
  std::vector<std::string_view> next(const char* what) {
    while (std::getline(in_, buf_)) {
      ++line_;
      auto tokens = split_ws(buf_);
      if (!tokens.empty()) return tokens;
    }
    ++line_;
    fail(std::string("unexpected end of file, expected ") + what);
  }

  bool at_end() {
    while (std::getline(in_, buf_)) {
      ++line_;
      if (!split_ws(buf_).empty()) return false;
    }
    return true;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(path_.string() + ":" + std::to_string(line_) + ": " + msg);
  }

  void expect_header(std::string_view magic) {
    const auto tokens = next("header");
    if (tokens.size() != 2 || tokens[0] != magic || tokens[1] != "1")
      fail("malformed header, expected '" + std::string(magic) + " 1'");
  }

  void expect_count(const std::vector<std::string_view>& tokens, std::size_t n, const char* what) {
    if (tokens.size() != n)
      fail("dimension mismatch: expected " + std::to_string(n) + " " + what + ", found " +
           std::to_string(tokens.size()));
  }

  long long integer(std::string_view tok) const {
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
      fail("expected integer, found '" + std::string(tok) + "'");
    return v;
  }

  double real(std::string_view tok) const {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(v))
      fail("expected number, found '" + std::string(tok) + "'");
    return v;
  }

  int line() const { return line_; }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  std::string buf_;
  int line_ = 0;
};

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(path.string() + ": cannot open for writing");
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw Error(path.string() + ": write failed");
}

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

void save_map(const SemanticMap& map, const std::filesystem::path& path) {
  auto out = open_out(path);
  const auto& classes = map.classes();
  out << "SMAP 1\n" << map.width() << ' ' << map.height() << ' ' << classes.size() << '\n';
  for (std::size_t k = 0; k < classes.size(); ++k) out << (k ? " " : "") << classes.name(k);
  out << '\n';
  for (std::size_t k = 0; k < classes.size(); ++k) out << (k ? " " : "") << (classes.walkable(k) ? 1 : 0);
  out << '\n';
  for (int y = 0; y < map.height(); ++y) {
    for (int x = 0; x < map.width(); ++x) out << (x ? " " : "") << map.class_at(Cell{x, y});
    out << '\n';
  }
  finish(out, path);
}

SemanticMap load_map(const std::filesystem::path& path) {
  LineReader r(path);
  r.expect_header("SMAP");
  auto dims = r.next("dimensions");
  r.expect_count(dims, 3, "header fields <width> <height> <K>");
  const long long w = r.integer(dims[0]);
  const long long h = r.integer(dims[1]);
  const long long k = r.integer(dims[2]);
  if (w <= 0 || h <= 0 || k <= 0) r.fail("width, height and class count must be positive");

  auto name_tokens = r.next("class names");
  r.expect_count(name_tokens, static_cast<std::size_t>(k), "class names");
  std::vector<std::string> names(name_tokens.begin(), name_tokens.end());
  auto flag_tokens = r.next("walkability flags");
  r.expect_count(flag_tokens, static_cast<std::size_t>(k), "walkability flags");
  std::vector<bool> walkable;
  for (auto tok : flag_tokens) {
    const long long f = r.integer(tok);
    if (f != 0 && f != 1) r.fail("walkability flag must be 0 or 1, found " + std::string(tok));
    walkable.push_back(f == 1);
  }
  std::optional<ClassTable> classes;
  try {
    classes.emplace(std::move(names), std::move(walkable));
  } catch (const Error& e) {
    r.fail(e.what());
  }

  std::vector<int> cells;
  cells.reserve(static_cast<std::size_t>(w * h));
  for (long long y = 0; y < h; ++y) {
    auto row = r.next("map row");
    r.expect_count(row, static_cast<std::size_t>(w), "class ids in row");
    for (auto tok : row) {
      const long long id = r.integer(tok);
      if (id < 0 || id >= k)
        r.fail("class id " + std::string(tok) + " overflows class count " + std::to_string(k));
      cells.push_back(static_cast<int>(id));
    }
  }
  if (!r.at_end()) r.fail("dimension mismatch: more than " + std::to_string(h) + " rows");
  return SemanticMap(static_cast<int>(w), static_cast<int>(h), std::move(*classes), std::move(cells));
}

void save_occupancy(const OccupancyGrid& occ, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "OCC 1\n" << occ.width() << ' ' << occ.height() << '\n';
  for (int y = 0; y < occ.height(); ++y) {
    for (int x = 0; x < occ.width(); ++x) out << (x ? " " : "") << format_real(occ.at(Cell{x, y}));
    out << '\n';
  }
  finish(out, path);
}

OccupancyGrid load_occupancy(const std::filesystem::path& path) {
  LineReader r(path);
  r.expect_header("OCC");
  auto dims = r.next("dimensions");
  r.expect_count(dims, 2, "header fields <width> <height>");
  const long long w = r.integer(dims[0]);
  const long long h = r.integer(dims[1]);
  if (w <= 0 || h <= 0) r.fail("width and height must be positive");

  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(w * h));
  double mass = 0.0;
  for (long long y = 0; y < h; ++y) {
    auto row = r.next("occupancy row");
    r.expect_count(row, static_cast<std::size_t>(w), "values in row");
    for (auto tok : row) {
      const double v = r.real(tok);
      if (v < 0.0) r.fail("negative occupancy " + std::string(tok));
      values.push_back(v);
      mass += v;
    }
  }
  if (std::abs(mass - 1.0) > kLoadMassTolerance) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", mass);
    r.fail(std::string("occupancy mass ") + buf + " ≠ 1");
  }
  if (!r.at_end()) r.fail("dimension mismatch: more than " + std::to_string(h) + " rows");
  return OccupancyGrid(static_cast<int>(w), static_cast<int>(h), std::move(values));
}

void save_trajectories(const std::vector<Trajectory>& trajs, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "TRAJ 1\n" << trajs.size() << '\n';
  for (const auto& t : trajs) {
    out << t.size() << '\n';
    for (Cell c : t.states()) out << c.x << ' ' << c.y << '\n';
  }
  finish(out, path);
}

std::vector<Trajectory> load_trajectories(const std::filesystem::path& path) {
  LineReader r(path);
  r.expect_header("TRAJ");
  auto count_line = r.next("trajectory count");
  r.expect_count(count_line, 1, "fields <count>");
  const long long count = r.integer(count_line[0]);
  if (count < 0) r.fail("negative trajectory count");

  std::vector<Trajectory> trajs;
  trajs.reserve(static_cast<std::size_t>(count));
  for (long long t = 0; t < count; ++t) {
    auto len_line = r.next("trajectory length");
    r.expect_count(len_line, 1, "fields <length>");
    const long long len = r.integer(len_line[0]);
    if (len < 2) r.fail("trajectory length must be >= 2, found " + std::to_string(len));
    std::vector<Cell> states;
    states.reserve(static_cast<std::size_t>(len));
    for (long long i = 0; i < len; ++i) {
      auto xy = r.next("state");
      r.expect_count(xy, 2, "coordinates <x> <y>");
      const long long x = r.integer(xy[0]);
      const long long y = r.integer(xy[1]);
      if (x < 0 || y < 0 || x > 1'000'000 || y > 1'000'000)
        r.fail("coordinate out of range (" + std::string(xy[0]) + ", " + std::string(xy[1]) + ")");
      const Cell c{static_cast<int>(x), static_cast<int>(y)};
      if (!states.empty() && chebyshev(states.back(), c) != 1)
        r.fail("non-adjacent step at index " + std::to_string(i));
      states.push_back(c);
    }
    trajs.emplace_back(std::move(states));
  }
  if (!r.at_end()) r.fail("more trajectories than the declared count " + std::to_string(count));
  return trajs;
}

void save_manifest(const std::vector<ManifestRow>& rows, const std::filesystem::path& path) {
  auto out = open_out(path);
  for (const auto& row : rows)
    out << row.map.generic_string() << ' ' << row.trajectories.generic_string() << ' '
        << row.occupancy.generic_string() << '\n';
  finish(out, path);
}

std::vector<ManifestRow> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(path.string() + ": cannot open for reading");
  std::vector<ManifestRow> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    if (tokens.size() != 3)
      throw Error(path.string() + ":" + std::to_string(lineno) +
                  ": expected '<map.smap> <trajs.traj> <gt.occ>'");
    rows.push_back({std::string(tokens[0]), std::string(tokens[1]), std::string(tokens[2])});
  }
  if (rows.empty()) throw Error(path.string() + ": manifest lists no maps");
  return rows;
}

Dataset load_dataset(const std::filesystem::path& manifest) {
  const auto base = manifest.parent_path();
  Dataset data;
  for (const auto& row : load_manifest(manifest)) {
    DatasetEntry e;
    e.name = row.map.stem().string();
    e.map = load_map(base / row.map);
    e.trajectories = load_trajectories(base / row.trajectories);
    e.ground_truth = load_occupancy(base / row.occupancy);
    if (e.ground_truth.width() != e.map.width() || e.ground_truth.height() != e.map.height())
      throw Error((base / row.occupancy).string() + ": occupancy size does not match map " +
                  (base / row.map).string());
    for (std::size_t t = 0; t < e.trajectories.size(); ++t) {
      try {
        check_on_map(e.map, e.trajectories[t], t);
      } catch (const Error& err) {
        throw Error((base / row.trajectories).string() + ": " + err.what());
      }
    }
    data.push_back(std::move(e));
  }
  return data;
}

}  // namespace occprior
