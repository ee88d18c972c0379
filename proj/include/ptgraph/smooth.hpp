// ptgraph - point cloud neighbor graphs, graph smoothing and local geometry
//
// Graph smoothing: mutual-edge refinement, symmetric degree normalization,
// truncated von Neumann power sums S_T = sum_{t=0..T} (alpha*A~)^t and top-K
// neighborhood reselection. exact_von_neumann and path_sum are small-scale
// oracles used to certify the sparse path.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>

#include "ptgraph/construct.hpp"
#include "ptgraph/core.hpp"

namespace ptgraph {

namespace detail {

inline void require_binary(const SparseAdjacency& adj, const char* what) {
  for (Index i = 0; i < adj.dim(); ++i) {
    for (double w : adj.row_weights(i)) {
      if (w != 1.0) throw InputError(std::string(what) + ": adjacency weights must be binary");
    }
  }
}

/// FNV-1a over raw bytes; used for provenance fingerprints only.
class Fnv1a {
 public:
  void add(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t e = 0; e < len; ++e) {
      state_ ^= p[e];
      state_ *= 0x100000001b3ULL;
    }
  }
  template <typename T>
  void add_value(const T& v) { add(&v, sizeof(T)); }

  std::string hex() const {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(state_));
    return buf;
  }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

inline std::string fingerprint(const SparseAdjacency& adj) {
  Fnv1a h;
  h.add_value(adj.dim());
  for (Index i = 0; i < adj.dim(); ++i) {
    auto c = adj.row_cols(i);
    auto w = adj.row_weights(i);
    h.add_value(c.size());
    h.add(c.data(), c.size_bytes());
    h.add(w.data(), w.size_bytes());
  }
  return h.hex();
}

inline std::string fingerprint(const SmoothingConfig& cfg) {
  Fnv1a h;
  h.add_value(cfg.radius);
  h.add_value(cfg.k);
  h.add_value(cfg.alpha);
  h.add_value(cfg.order);
  h.add_value(cfg.k_out);
  h.add_value(cfg.eps);
  h.add_value(cfg.prune);
  return h.hex();
}

/// Row-wise Gustavson product scale * lhs * rhs. Each output row accumulates
/// in ascending (lhs column, rhs column) order, independent of threading.
inline std::vector<std::vector<Entry>> scaled_product(const SparseAdjacency& lhs,
                                                      const SparseAdjacency& rhs, double scale) {
  const Index n = lhs.dim();
  std::vector<std::vector<Entry>> rows(n);
  detail::parallel_for(n, [&](Index i) {
    thread_local std::vector<double> acc;
    thread_local std::vector<char> mark;
    if (acc.size() < n) {
      acc.assign(n, 0.0);
      mark.assign(n, 0);
    }
    std::vector<Index> touched;
    auto lc = lhs.row_cols(i);
    auto lw = lhs.row_weights(i);
    for (Index e = 0; e < lc.size(); ++e) {
      const double a = scale * lw[e];
      auto rc = rhs.row_cols(lc[e]);
      auto rw = rhs.row_weights(lc[e]);
      for (Index f = 0; f < rc.size(); ++f) {
        const Index j = rc[f];
        if (!mark[j]) {
          mark[j] = 1;
          touched.push_back(j);
        }
        acc[j] += a * rw[f];
      }
    }
    std::sort(touched.begin(), touched.end());
    auto& row = rows[i];
    row.reserve(touched.size());
    for (Index j : touched) {
      row.push_back({j, acc[j]});
      acc[j] = 0.0;
      mark[j] = 0;
    }
  });
  return rows;
}

inline std::vector<Entry> merge_add(std::span<const Index> ac, std::span<const double> aw,
                                    const std::vector<Entry>& b) {
  std::vector<Entry> out;
  out.reserve(ac.size() + b.size());
  Index x = 0, y = 0;
  while (x < ac.size() || y < b.size()) {
    if (y == b.size() || (x < ac.size() && ac[x] < b[y].col)) {
      out.push_back({ac[x], aw[x]});
      ++x;
    } else if (x == ac.size() || b[y].col < ac[x]) {
      out.push_back(b[y]);
      ++y;
    } else {
      out.push_back({ac[x], aw[x] + b[y].weight});
      ++x;
      ++y;
    }
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Refinement and normalization

/// A_sym = floor((A + A^T) / 2) on a binary A, i.e. only mutual edges survive.
inline SparseAdjacency symmetric_refine(const SparseAdjacency& adj) {
  detail::require_binary(adj, "symmetric_refine");
  const Index n = adj.dim();
  std::vector<std::vector<Entry>> rows(n);
  for (Index i = 0; i < n; ++i) {
    for (Index j : adj.row_cols(i)) {
      if (adj.at(j, i) != 0.0) rows[i].push_back({j, 1.0});
    }
  }
  return SparseAdjacency(n, std::move(rows), true);
}

/// A~ = D^{-1/2} A_sym D^{-1/2}; d_i counts row entries including any self-loop.
inline SparseAdjacency symmetric_normalize(const SparseAdjacency& adj_sym) {
  if (!adj_sym.symmetric()) throw InputError("symmetric_normalize: input is not flagged symmetric");
  detail::require_binary(adj_sym, "symmetric_normalize");
  const Index n = adj_sym.dim();
  std::vector<double> degree(n);
  for (Index i = 0; i < n; ++i) degree[i] = static_cast<double>(adj_sym.row_size(i));
  std::vector<std::vector<Entry>> rows(n);
  for (Index i = 0; i < n; ++i) {
    for (Index j : adj_sym.row_cols(i)) {
      rows[i].push_back({j, 1.0 / std::sqrt(degree[i] * degree[j])});
    }
  }
  return SparseAdjacency(n, std::move(rows), true);
}

// ---------------------------------------------------------------------------
// Smoothing

struct SmoothedGraph {
  SparseAdjacency s_matrix;
  Index order_used = 0;
  double alpha_used = 0.0;
  std::string input_fingerprint;
  std::string config_fingerprint;
};

/// Rows whose diagonal is smaller than some off-diagonal entry.
inline std::vector<Index> diagonal_dominance_violations(const SparseAdjacency& s) {
  std::vector<Index> bad;
  for (Index i = 0; i < s.dim(); ++i) {
    const double diag = s.at(i, i);
    auto c = s.row_cols(i);
    auto w = s.row_weights(i);
    for (Index e = 0; e < c.size(); ++e) {
      if (c[e] != i && w[e] > diag) {
        bad.push_back(i);
        break;
      }
    }
  }
  return bad;
}

/// S_T = sum_{t=0}^{T} (alpha*A~)^t via P_{t+1} = alpha*A~*P_t, S += P_{t+1}.
///
/// With cfg.prune > 0, each P_{t+1} is replaced by its symmetric part and
/// entries below the threshold are dropped.
/// Throws InvariantViolation if the result is not symmetric, has a diagonal
/// below 1, or (for alpha <= 0.5, where the bound is guaranteed) loses
/// diagonal dominance.
inline SmoothedGraph smooth(const SparseAdjacency& adj_norm, const SmoothingConfig& cfg) {
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw InputError("smooth: alpha must lie in (0, 1)");
  if (!(cfg.prune >= 0.0)) throw InputError("smooth: prune threshold must be >= 0");
  if (!adj_norm.symmetric()) throw InputError("smooth: normalized adjacency must be symmetric");
  const Index n = adj_norm.dim();

  std::vector<std::vector<Entry>> identity(n);
  for (Index i = 0; i < n; ++i) identity[i].push_back({i, 1.0});
  SparseAdjacency power(n, identity, false);
  SparseAdjacency sum(n, std::move(identity), false);

  for (Index t = 0; t < cfg.order; ++t) {
    auto next_rows = detail::scaled_product(adj_norm, power, cfg.alpha);
    if (cfg.prune > 0.0) {
      // Once a term is pruned, A~ no longer commutes with it; average with the
      // transpose so every term (and S_T) stays symmetric.
      const SparseAdjacency unpruned(n, next_rows, false);
      const auto flipped = unpruned.transpose();
      for (Index i = 0; i < n; ++i) {
        auto merged = detail::merge_add(unpruned.row_cols(i), unpruned.row_weights(i), flipped.row(i));
        for (auto& e : merged) e.weight *= 0.5;
        std::erase_if(merged, [&](const Entry& e) { return e.weight < cfg.prune; });
        next_rows[i] = std::move(merged);
      }
    }
    std::vector<std::vector<Entry>> sum_rows(n);
    for (Index i = 0; i < n; ++i) {
      sum_rows[i] = detail::merge_add(sum.row_cols(i), sum.row_weights(i), next_rows[i]);
    }
    power = SparseAdjacency(n, std::move(next_rows), false);
    sum = SparseAdjacency(n, std::move(sum_rows), false);
  }

  std::vector<std::vector<Entry>> rows(n);
  for (Index i = 0; i < n; ++i) rows[i] = sum.row(i);
  SmoothedGraph out{SparseAdjacency(n, std::move(rows), true), cfg.order, cfg.alpha,
                    detail::fingerprint(adj_norm), detail::fingerprint(cfg)};

  for (Index i = 0; i < n; ++i) {
    if (out.s_matrix.at(i, i) < 1.0) {
      throw InvariantViolation("smooth: diagonal of S_T below 1 at row " + std::to_string(i));
    }
  }
  if (cfg.alpha <= 0.5) {
    auto bad = diagonal_dominance_violations(out.s_matrix);
    if (!bad.empty()) {
      throw InvariantViolation("smooth: S_T row " + std::to_string(bad.front()) +
                               " is not diagonally dominant");
    }
  }
  return out;
}

inline constexpr Index kKernelGuard = 512;

/// Dense (I - alpha*A~)^{-1}.
inline Eigen::MatrixXd exact_von_neumann(const SparseAdjacency& adj_norm, double alpha) {
  if (adj_norm.dim() > kKernelGuard) {
    throw InputError("exact_von_neumann: dimension exceeds guard " + std::to_string(kKernelGuard));
  }
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("exact_von_neumann: alpha must lie in (0, 1)");
  const auto n = static_cast<Eigen::Index>(adj_norm.dim());
  const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n) - alpha * dense_of(adj_norm);
  return system.partialPivLu().solve(Eigen::MatrixXd::Identity(n, n));
}

inline constexpr Index kPathSumNodeGuard = 64;
inline constexpr Index kPathSumLengthGuard = 4;

/// Sum over all walks of exactly `length` steps from i to j of the product
/// of their edge weights.
inline double path_sum(const SparseAdjacency& adj_norm, Index i, Index j, Index length) {
  if (adj_norm.dim() > kPathSumNodeGuard) throw InputError("path_sum: node count exceeds guard");
  if (length > kPathSumLengthGuard) throw InputError("path_sum: walk length exceeds guard");
  if (i >= adj_norm.dim() || j >= adj_norm.dim()) throw InputError("path_sum: index out of range");

  std::function<double(Index, Index)> walk = [&](Index at, Index remaining) -> double {
    if (remaining == 0) return at == j ? 1.0 : 0.0;
    double total = 0.0;
    auto c = adj_norm.row_cols(at);
    auto w = adj_norm.row_weights(at);
    for (Index e = 0; e < c.size(); ++e) total += w[e] * walk(c[e], remaining - 1);
    return total;
  };
  return walk(i, length);
}

// ---------------------------------------------------------------------------
// Reselection

/// N'(i): the K_out largest entries of row i of S_T, ordered by descending
/// weight with ties broken by (distance to p_i, index). Self is always kept;
/// if it would fall outside the top K_out it replaces the last selected entry.
inline NeighborList reselect_neighborhoods(const SmoothedGraph& sg, const PointCloud& cloud,
                                           Index k_out) {
  if (k_out < 1) throw InputError("reselect_neighborhoods: K_out must be >= 1");
  const Index n = sg.s_matrix.dim();
  if (cloud.size() != n) throw InputError("reselect_neighborhoods: cloud/graph size mismatch");

  std::vector<std::vector<Index>> lists(n);
  detail::parallel_for(n, [&](Index i) {
    struct Candidate {
      double weight;
      double dist2;
      Index index;
    };
    auto cols = sg.s_matrix.row_cols(i);
    auto ws = sg.s_matrix.row_weights(i);
    std::vector<Candidate> cand;
    cand.reserve(cols.size());
    for (Index e = 0; e < cols.size(); ++e) {
      cand.push_back({ws[e], squared_distance(cloud.points[i], cloud.points[cols[e]]), cols[e]});
    }
    auto better = [](const Candidate& a, const Candidate& b) {
      if (a.weight != b.weight) return a.weight > b.weight;
      if (a.dist2 != b.dist2) return a.dist2 < b.dist2;
      return a.index < b.index;
    };
    const Index take = std::min(k_out, cand.size());
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(take), cand.end(), better);
    cand.resize(take);
    auto& list = lists[i];
    for (const auto& c : cand) list.push_back(c.index);
    if (std::find(list.begin(), list.end(), i) == list.end()) {
      if (list.size() == k_out) list.pop_back();
      list.push_back(i);
    }
  });
  return NeighborList(std::move(lists), k_out);
}

// ---------------------------------------------------------------------------
// Boundary / junction diagnostics

enum class PointRole { kInterior, kBoundaryLike, kJunctionLike };

/// Classifies points by comparing how many neighborhoods include a point
/// (its reach, the column count of A) with the size of its own neighborhood
/// (the row count). Boundary-like: reach < size <= k. Junction-like:
/// reach > k and size == k.
inline std::vector<PointRole> boundary_junction_classify(const SparseAdjacency& adj, Index k) {
  const auto report = degree_report(adj);
  std::vector<PointRole> roles(adj.dim(), PointRole::kInterior);
  for (Index i = 0; i < adj.dim(); ++i) {
    const Index reach = report.in_degree[i];
    const Index size = report.out_degree[i];
    if (reach < size && size <= k) {
      roles[i] = PointRole::kBoundaryLike;
    } else if (reach > k && size == k) {
      roles[i] = PointRole::kJunctionLike;
    }
  }
  return roles;
}

}  // namespace ptgraph
