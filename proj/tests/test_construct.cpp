#include <algorithm>
#include <cmath>
#include <cstdlib>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "ptgraph/construct.hpp"
#include "ptgraph/fixtures.hpp"
#include "ptgraph/smooth.hpp"

namespace ptgraph {
namespace {

PointCloud cloud_of(std::vector<Point> pts) {
  PointCloud c;
  c.points = std::move(pts);
  return c;
}

SmoothingConfig config(double r, Index k) {
  SmoothingConfig cfg;
  cfg.radius = r;
  cfg.k = k;
  cfg.k_out = k;
  return cfg;
}

std::vector<Index> brute_radius(const PointCloud& cloud, const Point& q, double r) {
  std::vector<Index> out;
  for (Index j = 0; j < cloud.size(); ++j) {
    if (oracle::dist2(cloud.points[j], q) <= r * r) out.push_back(j);
  }
  return out;
}

std::vector<Index> indices_of(const std::vector<Neighbor>& nbs) {
  std::vector<Index> out;
  for (const auto& nb : nbs) out.push_back(nb.index);
  return out;
}

TEST(SpatialIndex, SingletonRadiusQueryReturnsItself) {
  const auto cloud = cloud_of({Point(0.3, -0.2, 5.0)});
  const auto index = build_index(cloud);
  EXPECT_EQ(indices_of(index.radius_query(cloud.points[0], 1.0)), std::vector<Index>{0});
  EXPECT_EQ(indices_of(index.radius_query(cloud.points[0], 0.0)), std::vector<Index>{0});
}

TEST(SpatialIndex, GridGivesSixConnectedNeighborhoods) {
  std::vector<Point> pts;
  for (int x = 0; x < 3; ++x)
    for (int y = 0; y < 3; ++y)
      for (int z = 0; z < 3; ++z) pts.emplace_back(0.5 * x, 0.5 * y, 0.5 * z);
  const auto cloud = cloud_of(pts);
  const auto index = build_index(cloud);
  for (Index i = 0; i < cloud.size(); ++i) {
    const auto got = indices_of(index.radius_query(cloud.points[i], 0.5));
    Index expected = 1;
    const Point& p = cloud.points[i];
    for (int a = 0; a < 3; ++a) {
      if (p[a] > 0.0) ++expected;
      if (p[a] < 1.0) ++expected;
    }
    EXPECT_EQ(got.size(), expected) << "point " << i;
    for (Index j : got) {
      const double d = (cloud.points[j] - p).lpNorm<1>();
      EXPECT_TRUE(d == 0.0 || std::abs(d - 0.5) < 1e-15);
    }
  }
}

TEST(SpatialIndex, RandomQueriesMatchBruteForce) {
  Rng rng(5);
  const auto cloud = oracle::random_cloud(rng, 500);
  const auto index = build_index(cloud);
  for (int q = 0; q < 100; ++q) {
    const Point p(rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2));
    const double r = rng.uniform(0.05, 0.6);
    auto got = indices_of(index.radius_query(p, r));
    std::sort(got.begin(), got.end());
    EXPECT_EQ(got, brute_radius(cloud, p, r));

    const Index k = 1 + rng.index(40);
    std::vector<std::pair<double, Index>> all;
    for (Index j = 0; j < cloud.size(); ++j) all.emplace_back(oracle::dist2(cloud.points[j], p), j);
    std::sort(all.begin(), all.end());
    const auto knn = index.knn_query(p, k);
    ASSERT_EQ(knn.size(), k);
    for (Index t = 0; t < k; ++t) EXPECT_EQ(knn[t].index, all[t].second);
  }
}

TEST(SpatialIndex, KnnTieBreakIsByIndex) {
  // Four points equidistant from the origin query.
  const auto cloud = cloud_of({Point(0, 0, 1), Point(1, 0, 0), Point(0, -1, 0), Point(-1, 0, 0), Point(5, 5, 5)});
  const auto index = build_index(cloud);
  EXPECT_EQ(indices_of(index.knn_query(Point::Zero(), 2)), (std::vector<Index>{0, 1}));
  EXPECT_EQ(indices_of(index.knn_query(Point::Zero(), 4)), (std::vector<Index>{0, 1, 2, 3}));
}

TEST(BallQuery, IsolatedPairKeepsOnlySelf) {
  const auto cloud = cloud_of({Point(0, 0, 0), Point(0.4, 0, 0)});
  const auto nl = ball_query_neighbors(cloud, config(0.2, 4));
  EXPECT_EQ(nl[0], std::vector<Index>{0});
  EXPECT_EQ(nl[1], std::vector<Index>{1});
}

TEST(BallQuery, UnderCapacityReturnsAllInsideRadius) {
  // k-1 = 3 others within r, one outside.
  const auto cloud = cloud_of({Point(0, 0, 0), Point(0.1, 0, 0), Point(0, 0.15, 0), Point(0, 0, 0.05), Point(1, 1, 1)});
  const auto index = build_index(cloud);
  EXPECT_EQ(ball_query(index, 0, config(0.2, 4)), (std::vector<Index>{0, 3, 1, 2}));
}

TEST(BallQuery, CapKeepsNearestWithIndexTieBreak) {
  const auto cloud = cloud_of({Point(0, 0, 0), Point(0.1, 0, 0), Point(-0.1, 0, 0), Point(0, 0.1, 0), Point(0, 0, 0.05)});
  const auto index = build_index(cloud);
  EXPECT_EQ(ball_query(index, 0, config(0.2, 3)), (std::vector<Index>{0, 4, 1}));
}

TEST(BallQuery, DuplicatePointsNeverDisplaceSelf) {
  const auto cloud = cloud_of({Point(0, 0, 0), Point(0, 0, 0), Point(0, 0, 0)});
  const auto index = build_index(cloud);
  EXPECT_EQ(ball_query(index, 2, config(0.1, 2)), (std::vector<Index>{2, 0}));
  EXPECT_EQ(ball_query(index, 0, config(0.1, 1)), (std::vector<Index>{0}));
}

TEST(BallQuery, RandomCloudMatchesExhaustiveEvaluation) {
  Rng rng(17);
  const auto cloud = oracle::random_cloud(rng, 200);
  const auto cfg = config(0.2, 16);
  const auto nl = ball_query_neighbors(cloud, cfg);
  for (Index i = 0; i < cloud.size(); ++i) EXPECT_EQ(nl[i], oracle::ball_query(cloud, i, 0.2, 16));
}

TEST(BallQuery, ResultsIndependentOfThreadCount) {
  Rng rng(3);
  const auto cloud = oracle::random_cloud(rng, 800);
  setenv("PTGRAPH_THREADS", "1", 1);
  const auto a = ball_query_neighbors(cloud, config(0.25, 12));
  const auto fa = farthest_point_sample(cloud, 64, 7);
  setenv("PTGRAPH_THREADS", "3", 1);
  const auto b = ball_query_neighbors(cloud, config(0.25, 12));
  const auto fb = farthest_point_sample(cloud, 64, 7);
  unsetenv("PTGRAPH_THREADS");
  EXPECT_EQ(a, b);
  EXPECT_EQ(fa, fb);
}

TEST(BuildAdjacency, EquilateralTriangleIsComplete) {
  const auto cloud = cloud_of({Point(0, 0, 0), Point(1, 0, 0), Point(0.5, std::sqrt(3.0) / 2.0, 0)});
  const auto adj = build_adjacency(cloud, config(1.5, 3));
  EXPECT_EQ(dense_of(adj), Eigen::MatrixXd::Ones(3, 3));
  EXPECT_FALSE(adj.symmetric());
}

TEST(BuildAdjacency, EffectiveRadiusFollowsDensityClass) {
  // u sits in a dense cluster, v is a sparse outlier.
  std::vector<Point> pts{Point(0, 0, 0)};
  for (int a = 1; a <= 6; ++a) pts.emplace_back(0.01 * a, 0.0, 0.0);
  pts.emplace_back(0.5, 0.0, 0.0);
  const auto cloud = cloud_of(pts);
  const auto index = build_index(cloud);
  const auto cfg = config(0.3, 4);
  const Index u = 0, v = 7;
  EXPECT_EQ(density_class(index, u, cfg), DensityClass::kDense);
  EXPECT_DOUBLE_EQ(effective_radius(index, u, cfg), kth_distance(index, u, 4));
  EXPECT_NEAR(effective_radius(index, u, cfg), 0.03, 1e-15);
  EXPECT_EQ(density_class(index, v, cfg), DensityClass::kSparse);
  EXPECT_EQ(effective_radius(index, v, cfg), 0.3);
  EXPECT_EQ(ball_query(index, v, cfg), std::vector<Index>{7});
}

TEST(BuildAdjacency, RandomCloudMatchesOracle) {
  Rng rng(23);
  const auto cloud = oracle::random_cloud(rng, 100);
  const auto adj = build_adjacency(cloud, config(0.45, 10));
  EXPECT_EQ(dense_of(adj), oracle::ball_query_adjacency(cloud, 0.45, 10));
  for (Index i = 0; i < adj.dim(); ++i) EXPECT_EQ(adj.at(i, i), 1.0);
}

TEST(BuildAdjacency, DirectionalityWitnessExists) {
  Rng rng(31);
  auto cloud = oracle::random_cloud(rng, 300, 0.3);
  for (int a = 0; a < 20; ++a) cloud.points.emplace_back(rng.uniform(0.5, 1.5), rng.uniform(-1, 1), 0.0);
  const auto cfg = config(0.2, 16);
  const auto index = build_index(cloud);
  bool dense = false, sparse = false;
  for (Index i = 0; i < cloud.size(); ++i) {
    (density_class(index, i, cfg) == DensityClass::kDense ? dense : sparse) = true;
  }
  ASSERT_TRUE(dense && sparse);
  const auto adj = build_adjacency(cloud, cfg);
  bool witness = false;
  for (Index i = 0; i < adj.dim() && !witness; ++i) {
    for (Index j : adj.row_cols(i)) {
      if (adj.at(j, i) == 0.0) {
        witness = true;
        break;
      }
    }
  }
  EXPECT_TRUE(witness);
}

TEST(BuildAdjacency, RowLengthsFollowDensityClass) {
  const auto cloud = make_fixture("airplane-like", 1024, 2);
  const auto cfg = config(0.15, 24);
  const auto index = build_index(cloud);
  const auto adj = build_adjacency(cloud, cfg);
  for (Index i = 0; i < cloud.size(); ++i) {
    if (density_class(index, i, cfg) == DensityClass::kDense) {
      EXPECT_EQ(adj.row_size(i), cfg.k);
    } else {
      EXPECT_EQ(adj.row_size(i), brute_radius(cloud, cloud.points[i], cfg.radius).size());
    }
  }
}

TEST(DegreeReport, CompleteGraphIsRegular) {
  SparseAdjacency adj = sparse_of(Eigen::MatrixXd::Ones(3, 3), true);
  const auto r = degree_report(adj);
  EXPECT_EQ(r.out_degree, (std::vector<Index>{3, 3, 3}));
  EXPECT_EQ(r.in_degree, (std::vector<Index>{3, 3, 3}));
  EXPECT_EQ(r.out_histogram.at(3), 3u);
  EXPECT_EQ(r.out_summary.stddev, 0.0);
}

TEST(DegreeReport, DirectedChain) {
  SparseAdjacency adj(3, {{{1, 1.0}}, {{2, 1.0}}, {}}, false);
  const auto r = degree_report(adj);
  EXPECT_EQ(r.out_degree, (std::vector<Index>{1, 1, 0}));
  EXPECT_EQ(r.in_degree, (std::vector<Index>{0, 1, 1}));
  EXPECT_DOUBLE_EQ(r.in_summary.mean, 2.0 / 3.0);
  EXPECT_NEAR(r.in_summary.stddev, std::sqrt(2.0) / 3.0, 1e-15);
}

TEST(DegreeReport, SumsAgreeAndSymmetricGraphsBalance) {
  Rng rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = oracle::random_digraph(rng, 30, 0.2, 0.5);
    const auto r = degree_report(sparse_of(a, false));
    Index so = 0, si = 0;
    for (Index v : r.out_degree) so += v;
    for (Index v : r.in_degree) si += v;
    EXPECT_EQ(so, si);
    EXPECT_EQ(so, static_cast<Index>(a.sum()));
    const auto s = degree_report(sparse_of(oracle::random_symmetric_graph(rng, 30, 0.2, true), true));
    EXPECT_EQ(s.out_degree, s.in_degree);
  }
}

TEST(DegreeReport, SparsePointsHaveReachBelowSize) {
  // For points whose ball is capped by r, every j in N(i) sees i within r and
  // so reaches it back unless j's own cap excludes it.
  const auto cloud = make_fixture("airplane-like", 2048, 0);
  const auto cfg = config(0.06, 32);
  const auto index = build_index(cloud);
  const auto adj = build_adjacency(cloud, cfg);
  const auto r = degree_report(adj);
  Index sparse = 0;
  for (Index i = 0; i < cloud.size(); ++i) {
    EXPECT_LE(r.out_degree[i], cfg.k);
    EXPECT_LE(r.in_degree[i], cloud.size());
    if (density_class(index, i, cfg) == DensityClass::kSparse) {
      ++sparse;
      EXPECT_LE(r.in_degree[i], r.out_degree[i]) << "point " << i;
    }
  }
  EXPECT_GT(sparse, 0u);
}

TEST(FarthestPointSample, FullSampleIsPermutation) {
  Rng rng(2);
  const auto cloud = oracle::random_cloud(rng, 40);
  auto s = farthest_point_sample(cloud, 40, 13);
  EXPECT_EQ(s.front(), 13u);
  std::sort(s.begin(), s.end());
  for (Index i = 0; i < 40; ++i) EXPECT_EQ(s[i], i);
}

TEST(FarthestPointSample, LineEndpoints) {
  std::vector<Point> pts;
  for (int a = 0; a <= 10; ++a) pts.emplace_back(0.1 * a, 0, 0);
  EXPECT_EQ(farthest_point_sample(cloud_of(pts), 2, 0), (std::vector<Index>{0, 10}));
}

TEST(FarthestPointSample, SquareCornersBeforeCenter) {
  const auto cloud = cloud_of({Point(0, 0, 0), Point(1, 0, 0), Point(0, 1, 0), Point(1, 1, 0), Point(0.5, 0.5, 0)});
  auto s = farthest_point_sample(cloud, 4, 0);
  EXPECT_EQ(s, (std::vector<Index>{0, 3, 1, 2}));
  // Exhaustive max-min: the corner set has the largest minimum pairwise gap.
  double best = -1.0;
  std::vector<Index> best_set;
  for (Index skip = 0; skip < 5; ++skip) {
    std::vector<Index> set;
    for (Index j = 0; j < 5; ++j)
      if (j != skip) set.push_back(j);
    double gap = 1e9;
    for (Index a : set)
      for (Index b : set)
        if (a < b) gap = std::min(gap, oracle::dist2(cloud.points[a], cloud.points[b]));
    if (gap > best) best = gap, best_set = set;
  }
  std::sort(s.begin(), s.end());
  EXPECT_EQ(s, best_set);
}

TEST(FarthestPointSample, RejectsBadArguments) {
  const auto cloud = cloud_of({Point(0, 0, 0), Point(1, 0, 0)});
  EXPECT_THROW(farthest_point_sample(cloud, 0, 0), InputError);
  EXPECT_THROW(farthest_point_sample(cloud, 3, 0), InputError);
  EXPECT_THROW(farthest_point_sample(cloud, 1, 2), InputError);
}

}  // namespace
}  // namespace ptgraph
