#include <gtest/gtest.h>

#include <omp.h>

#include <algorithm>

#include "fixtures.hpp"
#include "occprior/evaluation.hpp"
#include "occprior/inference.hpp"

namespace occprior {
namespace {

using testing::ascii_map;

DatasetEntry entry_with_gt(const SemanticMap& map, std::vector<double> weights) {
  DatasetEntry e;
  e.map = map;
  e.ground_truth = OccupancyGrid::from_weights(map.width(), map.height(), std::move(weights));
  return e;
}

TEST(IocmmInfer, SingleCorridorHoldsAllMass) {
  const auto map = ascii_map({"#######", "#sssss#", "#######"});
  InferOptions opts;
  opts.n_traj = 200;
  opts.seed = 3;
  const auto r = iocmm_infer(map, uniform_model(urban_classes()), opts, IocmmHyper{});
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (map.class_at(i) == 3) {
      EXPECT_EQ(r.occupancy.values()[i], 0.0);
    } else {
      EXPECT_GT(r.occupancy.values()[i], 0.0);
    }
  }
  EXPECT_NEAR(r.occupancy.mass(), 1.0, 1e-12);
}

TEST(IocmmInfer, ReproducibleAndIndependentOfWorkerCount) {
  const auto map = testing::ascii_map({"ssssssss", "sggggrrs", "sg##grrs", "sggggrrs", "ssssssss"});
  ThetaModel model = uniform_model(urban_classes());
  model.theta = {0.1, 0.4, 0.4, 0.1};
  InferOptions opts;
  opts.n_traj = 300;
  opts.seed = 77;
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const auto one = iocmm_infer(map, model, opts, IocmmHyper{});
  omp_set_num_threads(4);
  const auto four = iocmm_infer(map, model, opts, IocmmHyper{});
  const auto again = iocmm_infer(map, model, opts, IocmmHyper{});
  omp_set_num_threads(saved);
  EXPECT_EQ(one.occupancy, four.occupancy);
  EXPECT_EQ(four.occupancy, again.occupancy);
  EXPECT_EQ(one.truncated, four.truncated);

  opts.seed = 78;
  EXPECT_NE(iocmm_infer(map, model, opts, IocmmHyper{}).occupancy, one.occupancy);
}

TEST(IocmmInfer, RejectsIncompatibleClassTables) {
  const SemanticMap map(2, 1, ClassTable({"sidewalk", "lava"}, {true, false}), {0, 1});
  try {
    iocmm_infer(map, uniform_model(urban_classes()), InferOptions{}, IocmmHyper{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("lava"), std::string::npos);
  }
}

TEST(IocmmInfer, SoftmaxEndpointsFavourCheapCells) {
  const auto map = ascii_map({"gggggggg", "gggggggg", "ssssssss", "gggggggg", "gggggggg"});
  ThetaModel model = uniform_model(urban_classes());
  model.theta = {0.05, 0.45, 0.45, 0.05};
  InferOptions opts;
  opts.n_traj = 300;
  opts.strategy = EndpointStrategy::softmax_cost;
  opts.tau = 0.01;
  const auto r = iocmm_infer(map, model, opts, IocmmHyper{});
  double sidewalk = 0.0;
  for (int x = 0; x < 8; ++x) sidewalk += r.occupancy.at({x, 2});
  EXPECT_GT(sidewalk, 0.95);
}

TEST(BaselineUniform, Examples) {
  const auto quarter = baseline_uniform(ascii_map({"sg", "r#"}));
  for (double v : quarter.values()) EXPECT_DOUBLE_EQ(v, 0.25);
  const auto map = ascii_map({"sgr", "#gs", "rrr"});
  const auto u = baseline_uniform(map);
  EXPECT_NEAR(u.mass(), 1.0, 1e-15);
  EXPECT_EQ(kl_divergence(u, u, 0.0), 0.0);
}

TEST(BaselineWalkable, Examples) {
  const auto half = ascii_map({"sgrr", "gs##"});
  const auto w = baseline_uniform_walkable(half);
  const auto mask = walkable_mask(half);
  for (std::size_t i = 0; i < half.size(); ++i) EXPECT_DOUBLE_EQ(w.values()[i], mask[i] ? 2.0 / 8.0 : 0.0);

  const auto all = ascii_map({"sg", "gs"});
  EXPECT_EQ(baseline_uniform_walkable(all), baseline_uniform(all));

  EXPECT_THROW(baseline_uniform_walkable(ascii_map({"r#"})), Error);
}

TEST(ClassPrior, SidewalkOnlyTrainingSpreadsOverTargetSidewalk) {
  const auto train_map = ascii_map({"ssgg", "rr##"});
  const Dataset train{entry_with_gt(train_map, {1, 3, 0, 0, 0, 0, 0, 0})};
  const auto target = ascii_map({"sgs", "rsr", "##s"});
  const auto p = baseline_class_prior(learn_class_prior(train), target);
  for (std::size_t i = 0; i < target.size(); ++i) EXPECT_DOUBLE_EQ(p.values()[i], target.class_at(i) == 0 ? 0.25 : 0.0);
}

TEST(ClassPrior, TwoMapHandAggregation) {
  // Map A: sidewalk 0.6, grass 0.4. Map B: sidewalk 0.2, road 0.8.
  const auto a = ascii_map({"sg", "sg"});
  const auto b = ascii_map({"sr", "rr"});
  const Dataset train{entry_with_gt(a, {0.3, 0.2, 0.3, 0.2}), entry_with_gt(b, {0.2, 0.4, 0.2, 0.2})};
  const auto prior = learn_class_prior(train);
  auto share = [&](const std::string& name) {
    const auto it = std::find(prior.classes.begin(), prior.classes.end(), name);
    return it == prior.classes.end() ? -1.0 : prior.share[static_cast<std::size_t>(it - prior.classes.begin())];
  };
  EXPECT_NEAR(share("sidewalk"), 0.4, 1e-15);
  EXPECT_NEAR(share("grass"), 0.2, 1e-15);
  EXPECT_NEAR(share("road"), 0.4, 1e-15);
  EXPECT_NEAR(share("obstacle"), 0.0, 1e-15);

  // Target: 2 sidewalk, 1 grass, 1 obstacle; road absent and renormalized away.
  const auto target = ascii_map({"ss", "g#"});
  const auto p = baseline_class_prior(prior, target);
  EXPECT_NEAR(p.at({0, 0}), 0.2 / 0.6, 1e-12);
  EXPECT_NEAR(p.at({1, 0}), 0.2 / 0.6, 1e-12);
  EXPECT_NEAR(p.at({0, 1}), 0.2 / 0.6, 1e-12);
  EXPECT_EQ(p.at({1, 1}), 0.0);
}

TEST(ClassPrior, SingleClassMapDegeneratesToUniform) {
  Rng rng(12);
  const auto train_map = testing::random_map(rng, 6, 6, urban_classes());
  const Dataset train{entry_with_gt(train_map, std::vector<double>(36, 1.0))};
  const auto target = ascii_map({"ggg", "ggg"});
  EXPECT_EQ(baseline_class_prior(learn_class_prior(train), target), baseline_uniform(target));
}

TEST(ClassPrior, Errors) {
  EXPECT_THROW(learn_class_prior({}), Error);
  const Dataset train{entry_with_gt(ascii_map({"sg"}), {1, 0})};
  EXPECT_THROW(baseline_class_prior(learn_class_prior(train), ascii_map({"gr"})), Error);
}

}  // namespace
}  // namespace occprior
