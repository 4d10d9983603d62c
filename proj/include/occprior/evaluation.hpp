#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "occprior/gridmap.hpp"
#include "occprior/inference.hpp"
#include "occprior/maxent_irl.hpp"

namespace occprior {

inline constexpr double kDefaultSmoothing = 1e-3;

/// (pred + eps U) / (1 + eps) with U uniform over the grid.
OccupancyGrid smooth(const OccupancyGrid& pred, double eps);

/// KL(gt || smooth(pred, eps)) with 0 log 0 = 0.
double kl_divergence(const OccupancyGrid& gt, const OccupancyGrid& pred, double smoothing = kDefaultSmoothing);

enum class Method { uniform, walkable, class_prior, iocmm_learned, iocmm_softmax };

std::string method_name(Method m);
Method parse_method(const std::string& name);

struct MethodSpec {
  Method method = Method::uniform;
  IocmmHyper hyper;        // IOCMM training
  InferOptions infer;      // IOCMM inference; strategy is set from `method`
  double r0 = kDefaultR0;  // initial model
};

struct FoldScore {
  std::string map;
  Method method = Method::uniform;
  double kl = 0.0;
  bool failed = false;
  std::string error;
};

struct Summary {
  Method method = Method::uniform;
  double mean = 0.0;
  double stddev = 0.0;  // population
  std::size_t folds = 0;
  std::size_t failed = 0;
};

struct LooResult {
  std::vector<FoldScore> folds;
  Summary summary;
};

/// Produces the prediction for `data[held_out]` having fit `spec` on every
/// other map.
OccupancyGrid predict_held_out(const Dataset& data, std::size_t held_out, const MethodSpec& spec);

/// Leave-one-out: fit on all maps but one, score KL on the held-out map,
/// for every map. Fold failures are recorded and excluded from the summary.
LooResult leave_one_out(const Dataset& data, const MethodSpec& spec, double smoothing = kDefaultSmoothing);

Summary summarize(Method method, const std::vector<FoldScore>& folds);

/// `method: mean ± std`, with a failure note when folds failed.
std::string format_summary(const Summary& s);

/// CSV with header `map,method,kl_div`.
void write_results_csv(const std::vector<FoldScore>& folds, const std::filesystem::path& path);

}  // namespace occprior
