#include "occprior/evaluation.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace occprior {

OccupancyGrid smooth(const OccupancyGrid& pred, double eps) {
  if (!(eps >= 0.0)) throw Error("smoothing must be >= 0");
  const double u = 1.0 / static_cast<double>(pred.size());
  std::vector<double> out(pred.values());
  for (auto& v : out) v = (v + eps * u) / (1.0 + eps);
  return OccupancyGrid(pred.width(), pred.height(), std::move(out));
}

double kl_divergence(const OccupancyGrid& gt, const OccupancyGrid& pred, double smoothing) {
  if (gt.width() != pred.width() || gt.height() != pred.height())
    throw Error("dimension mismatch: ground truth " + std::to_string(gt.width()) + "x" + std::to_string(gt.height()) +
                " vs prediction " + std::to_string(pred.width()) + "x" + std::to_string(pred.height()));
  const OccupancyGrid q = smooth(pred, smoothing);
  double kl = 0.0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const double p = gt.values()[i];
    if (p == 0.0) continue;
    kl += p * std::log(p / q.values()[i]);
  }
  // Rounding can leave a tiny negative sum when gt == pred.
  return kl < 0.0 ? 0.0 : kl;
}

std::string method_name(Method m) {
  switch (m) {
    case Method::uniform: return "uniform";
    case Method::walkable: return "walkable";
    case Method::class_prior: return "classprior";
    case Method::iocmm_learned: return "iocmm";
    case Method::iocmm_softmax: return "iocmm-softmax";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  for (Method m : {Method::uniform, Method::walkable, Method::class_prior, Method::iocmm_learned, Method::iocmm_softmax})
    if (method_name(m) == name) return m;
  throw Error("unknown method '" + name + "' (expected uniform, walkable, classprior, iocmm, iocmm-softmax)");
}

OccupancyGrid predict_held_out(const Dataset& data, std::size_t held_out, const MethodSpec& spec) {
  const auto& target = data.at(held_out).map;
  switch (spec.method) {
    case Method::uniform: return baseline_uniform(target);
    case Method::walkable: return baseline_uniform_walkable(target);
    default: break;
  }
  Dataset train;
  train.reserve(data.size() - 1);
  for (std::size_t i = 0; i < data.size(); ++i)
    if (i != held_out) train.push_back(data[i]);
  if (train.empty()) throw Error("leave-one-out needs at least 2 maps");

  if (spec.method == Method::class_prior) return baseline_class_prior(learn_class_prior(train), target);

  IocmmHyper hyper = spec.hyper;
  hyper.seed = derive_seed(spec.hyper.seed, {held_out});
  const auto trained = train_iocmm(train, hyper, uniform_model(train.front().map.classes(), spec.r0));
  InferOptions infer = spec.infer;
  infer.strategy = spec.method == Method::iocmm_softmax ? EndpointStrategy::softmax_cost : EndpointStrategy::learned;
  infer.seed = derive_seed(spec.infer.seed, {held_out});
  return iocmm_infer(target, trained.model, infer, spec.hyper).occupancy;
}

LooResult leave_one_out(const Dataset& data, const MethodSpec& spec, double smoothing) {
  if (data.size() < 2) throw Error("leave-one-out needs at least 2 maps");
  LooResult result;
  for (std::size_t i = 0; i < data.size(); ++i) {
    FoldScore score;
    score.map = data[i].name;
    score.method = spec.method;
    try {
      score.kl = kl_divergence(data[i].ground_truth, predict_held_out(data, i, spec), smoothing);
    } catch (const Error& e) {
      score.failed = true;
      score.kl = std::nan("");
      score.error = e.what();
    }
    result.folds.push_back(std::move(score));
  }
  result.summary = summarize(spec.method, result.folds);
  return result;
}

Summary summarize(Method method, const std::vector<FoldScore>& folds) {
  Summary s;
  s.method = method;
  double sum = 0.0;
  for (const auto& f : folds) {
    if (f.failed) {
      ++s.failed;
      continue;
    }
    sum += f.kl;
    ++s.folds;
  }
  if (s.folds == 0) {
    s.mean = s.stddev = std::nan("");
    return s;
  }
  s.mean = sum / static_cast<double>(s.folds);
  double var = 0.0;
  for (const auto& f : folds)
    if (!f.failed) var += (f.kl - s.mean) * (f.kl - s.mean);
  s.stddev = std::sqrt(var / static_cast<double>(s.folds));
  return s;
}

std::string format_summary(const Summary& s) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%s: %.2f ± %.2f", method_name(s.method).c_str(), s.mean, s.stddev);
  std::string out = buf;
  if (s.failed > 0) out += " (" + std::to_string(s.failed) + " failed folds)";
  return out;
}

void write_results_csv(const std::vector<FoldScore>& folds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(path.string() + ": cannot open for writing");
  out << "map,method,kl_div\n";
  for (const auto& f : folds) {
    char buf[32];
    if (f.failed)
      std::snprintf(buf, sizeof buf, "nan");
    else
      std::snprintf(buf, sizeof buf, "%.9g", f.kl);
    out << f.map << ',' << method_name(f.method) << ',' << buf << '\n';
  }
  out.flush();
  if (!out) throw Error(path.string() + ": write failed");
}

}  // namespace occprior
