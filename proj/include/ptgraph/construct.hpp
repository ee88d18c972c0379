// ptgraph - point cloud neighbor graphs, graph smoothing and local geometry
//
// Exact spatial queries, capped ball-query neighborhoods, binary adjacency
// assembly, degree diagnostics and farthest point sampling.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <queue>
#include <vector>

#include <Eigen/Geometry>

#include "ptgraph/core.hpp"

namespace ptgraph {

/// Squared Euclidean distance, evaluated in a fixed order so that every
/// caller sees the same rounding.
inline double squared_distance(const Point& a, const Point& b) {
  const double dx = a.x() - b.x();
  const double dy = a.y() - b.y();
  const double dz = a.z() - b.z();
  return dx * dx + dy * dy + dz * dz;
}

struct Neighbor {
  Index index;
  double dist2;

  friend bool operator<(const Neighbor& a, const Neighbor& b) {
    return a.dist2 < b.dist2 || (a.dist2 == b.dist2 && a.index < b.index);
  }
  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Static kd-tree answering exact radius and k-nearest queries. Results are
/// ordered by (distance, index) ascending; a point lies within radius r when
/// its squared distance is <= r*r.
class SpatialIndex {
 public:
  static constexpr Index kLeafSize = 8;

  explicit SpatialIndex(const PointCloud& cloud) : points_(cloud.points) {
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), Index{0});
    for (const auto& p : points_) bounds_.extend(p);
    if (!points_.empty()) build(0, points_.size());
  }

  Index size() const { return points_.size(); }
  const Point& point(Index i) const { return points_[i]; }
  const Eigen::AlignedBox3d& bounds() const { return bounds_; }

  std::vector<Neighbor> radius_query(const Point& q, double r) const {
    std::vector<Neighbor> out;
    if (!nodes_.empty()) radius_rec(0, q, r * r, out);
    std::sort(out.begin(), out.end());
    return out;
  }

  std::vector<Neighbor> knn_query(const Point& q, Index k) const {
    std::priority_queue<Neighbor> heap;  // max-heap on (dist2, index)
    if (k > 0 && !nodes_.empty()) knn_rec(0, q, k, heap);
    std::vector<Neighbor> out(heap.size());
    for (Index e = out.size(); e-- > 0;) {
      out[e] = heap.top();
      heap.pop();
    }
    return out;
  }

 private:
  struct Node {
    Index begin, end;
    int axis = -1;  // -1 for leaves
    double split = 0.0;
    Index left = 0, right = 0;
  };

  Index build(Index begin, Index end) {
    const Index id = nodes_.size();
    nodes_.push_back({begin, end});
    if (end - begin <= kLeafSize) return id;

    Eigen::AlignedBox3d box;
    for (Index e = begin; e < end; ++e) box.extend(points_[order_[e]]);
    Eigen::Index axis = 0;
    box.sizes().maxCoeff(&axis);
    if (box.sizes()[axis] == 0.0) return id;  // all coincident: keep as leaf

    const Index mid = begin + (end - begin) / 2;
    const int ax = static_cast<int>(axis);
    std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                     order_.begin() + static_cast<std::ptrdiff_t>(mid),
                     order_.begin() + static_cast<std::ptrdiff_t>(end),
                     [&](Index a, Index b) { return points_[a][ax] < points_[b][ax]; });
    const double split = points_[order_[mid]][ax];
    const Index left = build(begin, mid);
    const Index right = build(mid, end);
    nodes_[id].axis = ax;
    nodes_[id].split = split;
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  void radius_rec(Index id, const Point& q, double r2, std::vector<Neighbor>& out) const {
    const Node& node = nodes_[id];
    if (node.axis < 0) {
      for (Index e = node.begin; e < node.end; ++e) {
        const Index j = order_[e];
        const double d2 = squared_distance(q, points_[j]);
        if (d2 <= r2) out.push_back({j, d2});
      }
      return;
    }
    const double diff = q[node.axis] - node.split;
    const Index near = diff <= 0.0 ? node.left : node.right;
    const Index far = diff <= 0.0 ? node.right : node.left;
    radius_rec(near, q, r2, out);
    if (diff * diff <= r2) radius_rec(far, q, r2, out);
  }

  void knn_rec(Index id, const Point& q, Index k, std::priority_queue<Neighbor>& heap) const {
    const Node& node = nodes_[id];
    if (node.axis < 0) {
      for (Index e = node.begin; e < node.end; ++e) {
        const Neighbor cand{order_[e], squared_distance(q, points_[order_[e]])};
        if (heap.size() < k) {
          heap.push(cand);
        } else if (cand < heap.top()) {
          heap.pop();
          heap.push(cand);
        }
      }
      return;
    }
    const double diff = q[node.axis] - node.split;
    const Index near = diff <= 0.0 ? node.left : node.right;
    const Index far = diff <= 0.0 ? node.right : node.left;
    knn_rec(near, q, k, heap);
    // Equal distances may still beat the worst candidate on index.
    if (heap.size() < k || diff * diff <= heap.top().dist2) knn_rec(far, q, k, heap);
  }

  std::vector<Point> points_;
  std::vector<Index> order_;
  std::vector<Node> nodes_;
  Eigen::AlignedBox3d bounds_;
};

inline SpatialIndex build_index(const PointCloud& cloud) {
  require_valid(cloud);
  return SpatialIndex(cloud);
}

/// The k nearest points to point i with i itself ranked first, then the
/// others by (distance, index). Duplicated coordinates never displace self.
inline std::vector<Neighbor> nearest_with_self(const SpatialIndex& index, Index i, Index k) {
  if (i >= index.size()) throw InputError("query index out of range");
  if (k == 0) return {};
  auto knn = index.knn_query(index.point(i), k);
  auto self = std::find_if(knn.begin(), knn.end(), [i](const Neighbor& nb) { return nb.index == i; });
  if (self != knn.end()) {
    std::rotate(knn.begin(), self, self + 1);
  } else {
    knn.pop_back();
    knn.insert(knn.begin(), Neighbor{i, 0.0});
  }
  return knn;
}

/// Distance from point i to its k-th nearest point (self counted first), or
/// +inf when the cloud holds fewer than k points.
inline double kth_distance(const SpatialIndex& index, Index i, Index k) {
  auto knn = nearest_with_self(index, i, k);
  if (knn.size() < k) return std::numeric_limits<double>::infinity();
  return std::sqrt(knn.back().dist2);
}

/// Ball query capped at k: { j : rho_ij <= min(rho_i(k), r) }, ordered with
/// self first and the rest by (distance, index).
inline std::vector<Index> ball_query(const SpatialIndex& index, Index i, const SmoothingConfig& cfg) {
  if (cfg.k < 1) throw InputError("k must be >= 1");
  const double r2 = cfg.radius * cfg.radius;
  std::vector<Index> out;
  for (const auto& nb : nearest_with_self(index, i, cfg.k)) {
    if (nb.dist2 <= r2) out.push_back(nb.index);
  }
  return out;
}

/// Ball-query neighborhoods N(i) for every point.
inline NeighborList ball_query_neighbors(const PointCloud& cloud, const SmoothingConfig& cfg) {
  cfg.validate();
  const auto index = build_index(cloud);
  std::vector<std::vector<Index>> lists(cloud.size());
  detail::parallel_for(cloud.size(), [&](Index i) { lists[i] = ball_query(index, i, cfg); });
  return NeighborList(std::move(lists), cfg.k);
}

/// Binary, generally asymmetric adjacency: a_ij = 1 iff j is in N(i).
inline SparseAdjacency build_adjacency(const PointCloud& cloud, const SmoothingConfig& cfg) {
  return ball_query_neighbors(cloud, cfg).to_adjacency();
}

enum class DensityClass {
  kDense,   // rho_i(k) <= r, effective radius rho_i(k)
  kSparse,  // rho_i(k) > r, effective radius r
};

inline DensityClass density_class(const SpatialIndex& index, Index i, const SmoothingConfig& cfg) {
  return kth_distance(index, i, cfg.k) <= cfg.radius ? DensityClass::kDense : DensityClass::kSparse;
}

/// Radius actually realized by the capped ball query at point i.
inline double effective_radius(const SpatialIndex& index, Index i, const SmoothingConfig& cfg) {
  return std::min(kth_distance(index, i, cfg.k), cfg.radius);
}

// ---------------------------------------------------------------------------
// Degree diagnostics

struct DegreeSummary {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double stddev = 0.0;  // population

  friend bool operator==(const DegreeSummary&, const DegreeSummary&) = default;
};

inline DegreeSummary summarize(const std::vector<Index>& values) {
  DegreeSummary s;
  if (values.empty()) return s;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  s.min = static_cast<double>(*lo);
  s.max = static_cast<double>(*hi);
  double sum = 0.0;
  for (Index v : values) sum += static_cast<double>(v);
  s.mean = sum / static_cast<double>(values.size());
  double ss = 0.0;
  for (Index v : values) {
    const double d = static_cast<double>(v) - s.mean;
    ss += d * d;
  }
  s.stddev = std::sqrt(ss / static_cast<double>(values.size()));
  return s;
}

inline std::map<Index, Index> histogram(const std::vector<Index>& values) {
  std::map<Index, Index> h;
  for (Index v : values) ++h[v];
  return h;
}

/// Out-degree counts row entries, in-degree counts column entries.
struct DegreeReport {
  std::vector<Index> out_degree;
  std::vector<Index> in_degree;
  std::map<Index, Index> out_histogram;
  std::map<Index, Index> in_histogram;
  DegreeSummary out_summary;
  DegreeSummary in_summary;

  static DegreeReport from_degrees(std::vector<Index> out, std::vector<Index> in) {
    DegreeReport r;
    r.out_histogram = histogram(out);
    r.in_histogram = histogram(in);
    r.out_summary = summarize(out);
    r.in_summary = summarize(in);
    r.out_degree = std::move(out);
    r.in_degree = std::move(in);
    return r;
  }

  friend bool operator==(const DegreeReport&, const DegreeReport&) = default;
};

inline DegreeReport degree_report(const SparseAdjacency& adj) {
  const Index n = adj.dim();
  std::vector<Index> out(n, 0), in(n, 0);
  for (Index i = 0; i < n; ++i) {
    out[i] = adj.row_size(i);
    for (Index j : adj.row_cols(i)) ++in[j];
  }
  return DegreeReport::from_degrees(std::move(out), std::move(in));
}

// ---------------------------------------------------------------------------
// Farthest point sampling

/// Greedy max-min subset of size m starting at seed_index; ties go to the
/// smaller index.
inline std::vector<Index> farthest_point_sample(const PointCloud& cloud, Index m, Index seed_index) {
  const Index n = cloud.size();
  if (m < 1 || m > n) throw InputError("FPS target count out of range [1, n]");
  if (seed_index >= n) throw InputError("FPS seed index out of range");

  std::vector<Index> chosen;
  chosen.reserve(m);
  std::vector<char> taken(n, 0);
  std::vector<double> min_d2(n, std::numeric_limits<double>::infinity());
  Index current = seed_index;
  for (;;) {
    chosen.push_back(current);
    taken[current] = 1;
    if (chosen.size() == m) break;
    Index best = n;
    double best_d2 = -1.0;
    for (Index j = 0; j < n; ++j) {
      if (taken[j]) continue;
      min_d2[j] = std::min(min_d2[j], squared_distance(cloud.points[j], cloud.points[current]));
      if (min_d2[j] > best_d2) {
        best_d2 = min_d2[j];
        best = j;
      }
    }
    current = best;
  }
  return chosen;
}

}  // namespace ptgraph
