#pragma once

#include <iosfwd>
#include <string>

#include "occprior/gridmap.hpp"

namespace occprior::cli {

/// Runs the `occprior` command line. Returns the process exit code:
/// 0 success, 1 user or domain error, 2 internal error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Binary PGM (P5) of `occ`, linearly scaled from [0, max] to [0, 255].
/// With `map`, unwalkable cells are drawn mid-gray.
std::string render_pgm(const OccupancyGrid& occ, const SemanticMap* map = nullptr);

}  // namespace occprior::cli
