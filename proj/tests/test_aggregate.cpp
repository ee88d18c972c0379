#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "ptgraph/aggregate.hpp"
#include "ptgraph/construct.hpp"
#include "ptgraph/geometry.hpp"

namespace ptgraph {
namespace {

NeighborList self_only(Index n) {
  std::vector<std::vector<Index>> lists(n);
  for (Index i = 0; i < n; ++i) lists[i] = {i};
  return NeighborList(std::move(lists), 1);
}

struct Geometry {
  std::vector<LocalFrame> frames;
  std::vector<CylindricalCoords> cyl;
};

Geometry geometry_of(const PointCloud& cloud, const NeighborList& nl) {
  auto frames = local_frames(cloud, nl);
  auto cyl = cylindrical_all(cloud, nl, frames);
  return {std::move(frames), std::move(cyl)};
}

TEST(AggregateBaseline, SelfOnlyRelativeChannelsGiveZero) {
  Rng rng(1);
  const auto cloud = oracle::random_featured_cloud(rng, 10, 2);
  AggregationSpec spec;
  spec.weight_psi = Eigen::MatrixXd::Zero(5, 3);
  spec.weight_psi.bottomRows(3) = Eigen::Matrix3d::Identity();
  EXPECT_EQ(aggregate_baseline(cloud, self_only(10), spec), Eigen::MatrixXd::Zero(10, 3));
}

TEST(AggregateBaseline, FeatureProjectionIsMaxOfRelu) {
  Rng rng(2);
  const auto cloud = oracle::random_featured_cloud(rng, 30, 4);
  SmoothingConfig cfg;
  cfg.radius = 0.6;
  cfg.k = 6;
  const auto nl = ball_query_neighbors(cloud, cfg);
  AggregationSpec spec;
  spec.weight_psi = Eigen::MatrixXd::Zero(7, 4);
  spec.weight_psi.topRows(4) = Eigen::Matrix4d::Identity();
  const auto got = aggregate_baseline(cloud, nl, spec);
  for (Index i = 0; i < cloud.size(); ++i) {
    for (Eigen::Index c = 0; c < 4; ++c) {
      double expected = 0.0;
      for (Index j : nl[i]) expected = std::max(expected, (*cloud.features)(static_cast<Eigen::Index>(j), c));
      EXPECT_EQ(got(static_cast<Eigen::Index>(i), c), expected);
    }
  }
}

TEST(AggregateBaseline, MatchesNaiveLoopForEveryStrategy) {
  Rng rng(3);
  const auto cloud = oracle::random_featured_cloud(rng, 40, 3);
  SmoothingConfig cfg;
  cfg.radius = 0.5;
  cfg.k = 8;
  const auto nl = ball_query_neighbors(cloud, cfg);
  for (const auto& act : {Activation::relu(), Activation::identity(), Activation::tanh(), Activation::leaky_relu()}) {
    for (Pool pool : {Pool::kMax, Pool::kSum, Pool::kMean}) {
      auto spec = oracle::random_spec(rng, AggregationMode::kBaseline, 3, 5, 0);
      spec.activation = act;
      spec.pool = pool;
      const auto got = aggregate_baseline(cloud, nl, spec);
      ASSERT_EQ(got.cols(), 5);
      EXPECT_LE((got - oracle::aggregate(cloud, nl, spec, nullptr, nullptr)).cwiseAbs().maxCoeff(), 1e-10)
          << act.name << " " << pool_name(pool);
    }
  }
}

TEST(AggregateBaseline, WorksWithoutFeatures) {
  Rng rng(4);
  const auto cloud = oracle::random_cloud(rng, 12);
  SmoothingConfig cfg;
  cfg.k = 4;
  cfg.radius = 1.0;
  const auto nl = ball_query_neighbors(cloud, cfg);
  const auto spec = oracle::random_spec(rng, AggregationMode::kBaseline, 0, 2, 0);
  const auto got = aggregate_baseline(cloud, nl, spec);
  EXPECT_LE((got - oracle::aggregate(cloud, nl, spec, nullptr, nullptr)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(AggregateBaseline, RejectsBadSpecs) {
  Rng rng(5);
  const auto cloud = oracle::random_featured_cloud(rng, 5, 2);
  const auto nl = self_only(5);
  auto spec = oracle::random_spec(rng, AggregationMode::kBaseline, 3, 4, 0);
  EXPECT_THROW(aggregate_baseline(cloud, nl, spec), InputError);
  spec = oracle::random_spec(rng, AggregationMode::kBaseline, 2, 4, 0);
  spec.bias = Eigen::VectorXd::Zero(3);
  EXPECT_THROW(aggregate_baseline(cloud, nl, spec), InputError);
  spec.bias.reset();
  spec.weight_psi(0, 0) = NAN;
  EXPECT_THROW(aggregate_baseline(cloud, nl, spec), InputError);
  spec = oracle::random_spec(rng, AggregationMode::kEnhanced, 2, 4, 2);
  EXPECT_THROW(aggregate_baseline(cloud, nl, spec), InputError);
  EXPECT_THROW(aggregate_baseline(cloud, self_only(4), oracle::random_spec(rng, AggregationMode::kBaseline, 2, 4, 0)), InputError);
  EXPECT_THROW(Activation::by_name("softmax"), InputError);
  EXPECT_THROW(pool_by_name("median"), InputError);
}

TEST(AggregateEnhanced, ZeroPsiIsolatesShapePath) {
  Rng rng(6);
  const auto cloud = oracle::random_featured_cloud(rng, 25, 2);
  SmoothingConfig cfg;
  cfg.radius = 0.7;
  cfg.k = 8;
  const auto nl = ball_query_neighbors(cloud, cfg);
  const auto g = geometry_of(cloud, nl);
  AggregationSpec spec;
  spec.mode = AggregationMode::kEnhanced;
  spec.weight_psi = Eigen::MatrixXd::Zero(8, 4);
  spec.weight_phi = Eigen::Matrix3d::Identity();
  spec.bias_phi = Eigen::Vector3d(1, 2, 3);
  const auto got = aggregate_enhanced(cloud, nl, g.frames, g.cyl, spec);
  ASSERT_EQ(got.cols(), 7);
  EXPECT_EQ(got.leftCols(4), Eigen::MatrixXd::Zero(25, 4));
  for (Index i = 0; i < cloud.size(); ++i) {
    const Eigen::Vector3d expected = g.frames[i].eigenvalues + Eigen::Vector3d(1, 2, 3);
    EXPECT_EQ(got.row(static_cast<Eigen::Index>(i)).tail(3).transpose(), expected);
  }
}

TEST(AggregateEnhanced, SelfOnlyClosedForm) {
  Rng rng(7);
  const auto cloud = oracle::random_featured_cloud(rng, 8, 2);
  const auto nl = self_only(8);
  const auto g = geometry_of(cloud, nl);
  const auto spec = oracle::random_spec(rng, AggregationMode::kEnhanced, 2, 3, 2);
  const auto got = aggregate_enhanced(cloud, nl, g.frames, g.cyl, spec);
  for (Index i = 0; i < 8; ++i) {
    Eigen::RowVectorXd in(8);
    in << cloud.features->row(static_cast<Eigen::Index>(i)), 0, 0, 0, 0, 0, 1;
    const Eigen::RowVectorXd z = in * spec.weight_psi + spec.bias->transpose();
    for (Eigen::Index c = 0; c < 3; ++c) {
      EXPECT_NEAR(got(static_cast<Eigen::Index>(i), c), std::max(z[c], 0.0), 1e-15);
    }
    for (Eigen::Index c = 0; c < 2; ++c) EXPECT_EQ(got(static_cast<Eigen::Index>(i), 3 + c), (*spec.bias_phi)[c]);
  }
}

TEST(AggregateEnhanced, MatchesNaiveLoop) {
  Rng rng(8);
  const auto cloud = oracle::random_featured_cloud(rng, 40, 3);
  SmoothingConfig cfg;
  cfg.radius = 0.6;
  cfg.k = 8;
  const auto nl = ball_query_neighbors(cloud, cfg);
  const auto g = geometry_of(cloud, nl);
  for (Pool pool : {Pool::kMax, Pool::kSum, Pool::kMean}) {
    auto spec = oracle::random_spec(rng, AggregationMode::kEnhanced, 3, 6, 4);
    spec.pool = pool;
    const auto got = aggregate_enhanced(cloud, nl, g.frames, g.cyl, spec);
    ASSERT_EQ(got.cols(), 10);
    EXPECT_LE((got - oracle::aggregate(cloud, nl, spec, &g.frames, &g.cyl)).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(AggregateEnhanced, RejectsMisalignedGeometry) {
  Rng rng(9);
  const auto cloud = oracle::random_featured_cloud(rng, 6, 1);
  const auto nl = self_only(6);
  auto g = geometry_of(cloud, nl);
  const auto spec = oracle::random_spec(rng, AggregationMode::kEnhanced, 1, 2, 2);
  g.cyl.pop_back();
  EXPECT_THROW(aggregate_enhanced(cloud, nl, g.frames, g.cyl, spec), InputError);
  g = geometry_of(cloud, nl);
  g.frames[2].support_size = 3;
  EXPECT_THROW(aggregate_enhanced(cloud, nl, g.frames, g.cyl, spec), InputError);
  auto bad = spec;
  bad.weight_phi = Eigen::MatrixXd::Zero(2, 2);
  g = geometry_of(cloud, nl);
  EXPECT_THROW(aggregate_enhanced(cloud, nl, g.frames, g.cyl, bad), InputError);
}

TEST(AggregateProperties, NeighborOrderDoesNotChangeBits) {
  Rng rng(10);
  std::mt19937_64 shuffler(10);
  const auto cloud = oracle::random_featured_cloud(rng, 50, 2);
  SmoothingConfig cfg;
  cfg.radius = 0.6;
  cfg.k = 10;
  const auto nl = ball_query_neighbors(cloud, cfg);
  auto lists = nl.lists();
  for (auto& l : lists) std::shuffle(l.begin(), l.end(), shuffler);
  const NeighborList shuffled(lists, cfg.k);
  const auto g = geometry_of(cloud, nl);
  const auto gs = geometry_of(cloud, shuffled);
  for (Pool pool : {Pool::kMax, Pool::kSum, Pool::kMean}) {
    auto base = oracle::random_spec(rng, AggregationMode::kBaseline, 2, 4, 0);
    base.pool = pool;
    EXPECT_EQ(aggregate_baseline(cloud, nl, base), aggregate_baseline(cloud, shuffled, base));
    auto enh = oracle::random_spec(rng, AggregationMode::kEnhanced, 2, 4, 3);
    enh.pool = pool;
    EXPECT_EQ(aggregate_enhanced(cloud, nl, g.frames, g.cyl, enh),
              aggregate_enhanced(cloud, shuffled, gs.frames, gs.cyl, enh));
  }
}

TEST(AggregateProperties, RowsDependOnlyOnTheirNeighborhood) {
  Rng rng(11);
  auto cloud = oracle::random_featured_cloud(rng, 40, 2);
  SmoothingConfig cfg;
  cfg.radius = 0.4;
  cfg.k = 6;
  const auto nl = ball_query_neighbors(cloud, cfg);
  const auto spec = oracle::random_spec(rng, AggregationMode::kBaseline, 2, 3, 0);
  const auto before = aggregate_baseline(cloud, nl, spec);
  const Index target = 7;
  auto changed = cloud;
  changed.features->row(static_cast<Eigen::Index>(target)) *= -5.0;
  const auto after = aggregate_baseline(changed, nl, spec);
  for (Index i = 0; i < cloud.size(); ++i) {
    const auto& l = nl[i];
    if (std::find(l.begin(), l.end(), target) == l.end()) {
      EXPECT_EQ(before.row(static_cast<Eigen::Index>(i)), after.row(static_cast<Eigen::Index>(i))) << i;
    }
  }
}

TEST(AggregateProperties, TranslationLeavesEnhancedOutputUnchanged) {
  Rng rng(12);
  const auto cloud = oracle::random_featured_cloud(rng, 40, 2);
  SmoothingConfig cfg;
  cfg.radius = 0.6;
  cfg.k = 8;
  const auto nl = ball_query_neighbors(cloud, cfg);
  auto moved = cloud;
  for (auto& p : moved.points) p += Point(10.0, -3.0, 0.5);
  const auto g = geometry_of(cloud, nl);
  const auto gm = geometry_of(moved, nl);
  const auto spec = oracle::random_spec(rng, AggregationMode::kEnhanced, 2, 5, 3);
  const auto a = aggregate_enhanced(cloud, nl, g.frames, g.cyl, spec);
  const auto b = aggregate_enhanced(moved, nl, gm.frames, gm.cyl, spec);
  EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(AggregateProperties, WidthsFollowSpec) {
  Rng rng(13);
  for (Index n : {1u, 2u, 17u}) {
    const auto cloud = oracle::random_featured_cloud(rng, n, 3);
    const auto nl = self_only(n);
    const auto g = geometry_of(cloud, nl);
    const auto b = aggregate_baseline(cloud, nl, oracle::random_spec(rng, AggregationMode::kBaseline, 3, 7, 0));
    const auto e = aggregate_enhanced(cloud, nl, g.frames, g.cyl, oracle::random_spec(rng, AggregationMode::kEnhanced, 3, 7, 5));
    EXPECT_EQ(b.rows(), static_cast<Eigen::Index>(n));
    EXPECT_EQ(b.cols(), 7);
    EXPECT_EQ(e.rows(), static_cast<Eigen::Index>(n));
    EXPECT_EQ(e.cols(), 12);
  }
}

}  // namespace
}  // namespace ptgraph
