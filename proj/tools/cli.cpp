#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "occprior/evaluation.hpp"
#include "occprior/inference.hpp"
#include "occprior/maxent_irl.hpp"
#include "occprior/synthgen.hpp"

namespace occprior::cli {
namespace {

constexpr unsigned char kUnwalkableGray = 128;

std::string fixed(double v, const char* fmt = "%.4g") {
  char buf[40];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

std::string theta_line(const ThetaModel& m) {
  std::string s;
  for (std::size_t k = 0; k < m.size(); ++k)
    s += (k ? " " : "") + m.classes[k] + "=" + fixed(m.theta[k]);
  return s;
}

void write_bytes(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(path.string() + ": cannot open for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(path.string() + ": write failed");
}

// Flags shared by every command that runs the IOCMM planner.
struct PlannerFlags {
  double alpha = IocmmHyper{}.alpha;
  std::uint64_t seed = 0;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--alpha", alpha, "Inverse temperature of the backward pass and policy")->capture_default_str();
    cmd.add_option("--seed", seed, "Random seed")->capture_default_str();
  }
};

struct TrainFlags {
  std::string data;
  std::string out;
  IocmmHyper hyper;
  double r0 = kDefaultR0;
  std::string log;

  void add_to(CLI::App& cmd, bool with_io) {
    if (with_io) {
      cmd.add_option("--data", data, "Dataset manifest")->required();
      cmd.add_option("--out", out, "Model file to write (.theta)")->required();
      cmd.add_option("--log", log, "Per-iteration training log (CSV)");
    }
    cmd.add_option("--bt", hyper.traj_batch, "Trajectories per map per batch")->capture_default_str();
    cmd.add_option("--bm", hyper.map_batch, "Maps per batch")->capture_default_str();
    cmd.add_option("--lambda", hyper.learning_rate, "Learning rate")->capture_default_str();
    cmd.add_option("--r0", r0, "Base step cost")->capture_default_str();
    cmd.add_option("--eps", hyper.epsilon, "Gradient-norm stopping threshold")->capture_default_str();
    cmd.add_option("--max-iters", hyper.max_iters, "Iteration cap")->capture_default_str();
    cmd.add_option("--rollouts", hyper.rollouts_per_traj, "Forward-pass rollouts per trajectory")->capture_default_str();
  }
};

void warn_hyper(const IocmmHyper& hyper, double r0, std::ostream& err) {
  if (hyper.learning_rate == 0.0) err << "warning: --lambda 0: no learning, theta stays at its initial value\n";
  if (hyper.alpha * r0 <= std::log(8.0))
    err << "warning: alpha * r0 = " << fixed(hyper.alpha * r0)
        << " <= log 8; value iteration may stop at the sweep cap without converging\n";
}

void write_train_log(const TrainResult& r, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(path.string() + ": cannot open for writing");
  out << "iteration,grad_norm,trajectories,truncated";
  for (const auto& name : r.model.classes) out << ",theta_" << name;
  out << '\n';
  for (const auto& e : r.log) {
    out << e.iteration << ',' << fixed(e.grad_norm, "%.9g") << ',' << e.trajectories << ',' << e.truncated;
    for (double t : e.theta) out << ',' << fixed(t, "%.9g");
    out << '\n';
  }
  if (!out) throw Error(path.string() + ": write failed");
}

EndpointStrategy parse_strategy(const std::string& s) {
  if (s == "learned") return EndpointStrategy::learned;
  if (s == "softmax") return EndpointStrategy::softmax_cost;
  throw Error("unknown strategy '" + s + "' (expected learned or softmax)");
}

}  // namespace

std::string render_pgm(const OccupancyGrid& occ, const SemanticMap* map) {
  if (map && (map->width() != occ.width() || map->height() != occ.height()))
    throw Error("dimension mismatch: occupancy " + std::to_string(occ.width()) + "x" + std::to_string(occ.height()) +
                " vs map " + std::to_string(map->width()) + "x" + std::to_string(map->height()));
  const auto& v = occ.values();
  const double top = *std::max_element(v.begin(), v.end());
  std::string out = "P5\n" + std::to_string(occ.width()) + " " + std::to_string(occ.height()) + "\n255\n";
  std::vector<bool> walkable;
  if (map) walkable = walkable_mask(*map);
  for (std::size_t i = 0; i < v.size(); ++i) {
    unsigned char px = 0;
    if (map && !walkable[i])
      px = kUnwalkableGray;
    else if (top > 0.0)
      px = static_cast<unsigned char>(std::lround(255.0 * v[i] / top));
    out.push_back(static_cast<char>(px));
  }
  return out;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Pedestrian occupancy priors on semantic grid maps", "occprior"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset");
  int gen_maps = 0;
  std::string gen_out;
  GeneratorSpec gspec;
  gen->add_option("--maps", gen_maps, "Number of maps")->required();
  gen->add_option("--seed", gspec.seed, "Random seed")->capture_default_str();
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--width", gspec.width)->capture_default_str();
  gen->add_option("--height", gspec.height)->capture_default_str();
  gen->add_option("--trajs", gspec.trajectories_per_map, "Trajectories per map")->capture_default_str();
  gen->add_option("--roads", gspec.road_count)->capture_default_str();
  gen->add_option("--obstacles", gspec.obstacle_density, "Obstacle density")->capture_default_str();
  gen->add_option("--noise", gspec.oracle_noise, "Oracle cost noise amplitude")->capture_default_str();

  // train
  auto* train = app.add_subcommand("train", "Learn a cost model from a dataset");
  TrainFlags tflags;
  PlannerFlags tplan;
  tflags.add_to(*train, true);
  tplan.add_to(*train);

  // infer
  auto* infer = app.add_subcommand("infer", "Predict occupancy for a map with a learned model");
  std::string inf_map, inf_model, inf_out, inf_strategy = "learned";
  InferOptions iopts;
  PlannerFlags iplan;
  infer->add_option("--map", inf_map, "Semantic map (.smap)")->required();
  infer->add_option("--model", inf_model, "Model (.theta)")->required();
  infer->add_option("--out", inf_out, "Occupancy to write (.occ)")->required();
  infer->add_option("--ntraj", iopts.n_traj, "Simulated trajectories")->capture_default_str();
  infer->add_option("--strategy", inf_strategy, "Endpoint sampling: learned or softmax")->capture_default_str();
  infer->add_option("--tau", iopts.tau, "Softmax endpoint temperature")->capture_default_str();
  iplan.add_to(*infer);

  // baseline
  auto* baseline = app.add_subcommand("baseline", "Predict occupancy with a baseline");
  std::string base_kind, base_map, base_out, base_data;
  baseline->add_option("--kind", base_kind, "uniform, walkable or classprior")->required();
  baseline->add_option("--map", base_map, "Semantic map (.smap)")->required();
  baseline->add_option("--out", base_out, "Occupancy to write (.occ)")->required();
  baseline->add_option("--data", base_data, "Training manifest (classprior only)");

  // eval
  auto* eval = app.add_subcommand("eval", "Leave-one-out KL-divergence benchmark");
  std::string eval_data, eval_out;
  std::vector<std::string> eval_methods;
  TrainFlags eflags;
  PlannerFlags eplan;
  InferOptions eopts;
  double smoothing = kDefaultSmoothing;
  eval->add_option("--data", eval_data, "Dataset manifest")->required();
  eval->add_option("--method", eval_methods, "uniform, walkable, classprior, iocmm, iocmm-softmax")
      ->required()
      ->delimiter(',');
  eval->add_option("--out", eval_out, "Results CSV")->required();
  eval->add_option("--ntraj", eopts.n_traj, "Simulated trajectories per held-out map")->capture_default_str();
  eval->add_option("--tau", eopts.tau, "Softmax endpoint temperature")->capture_default_str();
  eval->add_option("--smoothing", smoothing, "Prediction smoothing before KL")->capture_default_str();
  eflags.add_to(*eval, false);
  eplan.add_to(*eval);

  // render
  auto* render = app.add_subcommand("render", "Render an occupancy grid as a PGM image");
  std::string ren_occ, ren_out, ren_map;
  render->add_option("--occ", ren_occ, "Occupancy (.occ)")->required();
  render->add_option("--out", ren_out, "Image to write (.pgm)")->required();
  render->add_option("--map", ren_map, "Semantic map; unwalkable cells drawn gray");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) {
      out << build_dataset(gen_maps, gspec, gen_out).string() << '\n';
    } else if (train->parsed()) {
      tflags.hyper.alpha = tplan.alpha;
      tflags.hyper.seed = tplan.seed;
      validate(tflags.hyper);
      warn_hyper(tflags.hyper, tflags.r0, err);
      const Dataset data = load_dataset(tflags.data);
      const auto result = train_iocmm(data, tflags.hyper, uniform_model(data.front().map.classes(), tflags.r0));
      for (const auto& w : result.warnings) err << "warning: " << w << '\n';
      save_theta(result.model, tflags.out);
      if (!tflags.log.empty()) write_train_log(result, tflags.log);
      const auto& last = result.log.back();
      out << (result.converged ? "converged" : "stopped at iteration cap") << " after " << result.log.size()
          << " iterations\n";
      out << "||grad L|| = " << fixed(last.grad_norm) << '\n';
      out << "theta: " << theta_line(result.model) << '\n';
    } else if (infer->parsed()) {
      IocmmHyper hyper;
      hyper.alpha = iplan.alpha;
      iopts.seed = iplan.seed;
      iopts.strategy = parse_strategy(inf_strategy);
      const auto model = load_theta(inf_model);
      warn_hyper(hyper, model.r0, err);
      const auto result = iocmm_infer(load_map(inf_map), model, iopts, hyper);
      if (result.truncated > 0)
        err << "warning: " << result.truncated << " of " << iopts.n_traj << " rollouts hit the step cap\n";
      save_occupancy(result.occupancy, inf_out);
    } else if (baseline->parsed()) {
      const SemanticMap map = load_map(base_map);
      OccupancyGrid pred;
      if (base_kind == "uniform") {
        pred = baseline_uniform(map);
      } else if (base_kind == "walkable") {
        pred = baseline_uniform_walkable(map);
      } else if (base_kind == "classprior") {
        if (base_data.empty()) throw Error("--kind classprior needs --data MANIFEST");
        pred = baseline_class_prior(learn_class_prior(load_dataset(base_data)), map);
      } else {
        throw Error("unknown baseline '" + base_kind + "' (expected uniform, walkable or classprior)");
      }
      save_occupancy(pred, base_out);
    } else if (eval->parsed()) {
      std::vector<Method> methods;
      for (const auto& m : eval_methods) methods.push_back(parse_method(m));
      const Dataset data = load_dataset(eval_data);
      std::vector<FoldScore> rows;
      for (Method m : methods) {
        MethodSpec spec;
        spec.method = m;
        spec.hyper = eflags.hyper;
        spec.hyper.alpha = eplan.alpha;
        spec.hyper.seed = eplan.seed;
        spec.infer = eopts;
        spec.infer.seed = eplan.seed;
        spec.r0 = eflags.r0;
        if (m == Method::iocmm_learned || m == Method::iocmm_softmax) {
          validate(spec.hyper);
          warn_hyper(spec.hyper, spec.r0, err);
        }
        const auto result = leave_one_out(data, spec, smoothing);
        for (const auto& f : result.folds)
          if (f.failed) err << "warning: " << method_name(m) << " fold " << f.map << " failed: " << f.error << '\n';
        out << format_summary(result.summary) << '\n';
        rows.insert(rows.end(), result.folds.begin(), result.folds.end());
      }
      write_results_csv(rows, eval_out);
    } else if (render->parsed()) {
      const OccupancyGrid occ = load_occupancy(ren_occ);
      if (ren_map.empty()) {
        write_bytes(ren_out, render_pgm(occ));
      } else {
        const SemanticMap map = load_map(ren_map);
        write_bytes(ren_out, render_pgm(occ, &map));
      }
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace occprior::cli
