// ptgraph - point cloud neighbor graphs, graph smoothing and local geometry
//
// Core value types shared by every module: point clouds, row-compressed
// sparse adjacency, neighbor lists and the smoothing configuration.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace ptgraph {

using Index = std::size_t;
using Point = Eigen::Vector3d;

/// Raised for malformed user input or out-of-range arguments.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a structural invariant of a library type is broken.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// ---------------------------------------------------------------------------
// PointCloud

struct PointCloud {
  std::vector<Point> points;
  /// n x eta feature matrix; absent when the cloud carries coordinates only.
  std::optional<Eigen::MatrixXd> features;
  /// Optional per-point part labels (synthetic fixtures).
  std::optional<std::vector<int>> labels;

  Index size() const { return points.size(); }
  Index feature_width() const {
    return features ? static_cast<Index>(features->cols()) : 0;
  }
};

struct Violation {
  std::optional<Index> index;  // offending point, if point-specific
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }

  std::string to_string() const {
    std::ostringstream os;
    for (const auto& v : violations) {
      if (v.index) os << "point " << *v.index << ": ";
      os << v.message << '\n';
    }
    return os.str();
  }
};

/// Reports every invariant violation of `cloud`. Never throws.
inline ValidationReport validate_cloud(const PointCloud& cloud) {
  ValidationReport report;
  if (cloud.points.empty()) {
    report.violations.push_back({std::nullopt, "cloud has no points"});
  }
  for (Index i = 0; i < cloud.points.size(); ++i) {
    if (!cloud.points[i].allFinite()) {
      report.violations.push_back({i, "non-finite coordinate"});
    }
  }
  if (cloud.features) {
    const auto& f = *cloud.features;
    if (static_cast<Index>(f.rows()) != cloud.size()) {
      std::ostringstream os;
      os << "feature matrix has " << f.rows() << " rows for " << cloud.size()
         << " points";
      report.violations.push_back({std::nullopt, os.str()});
    }
    if (f.cols() < 1) {
      report.violations.push_back({std::nullopt, "feature width must be >= 1"});
    }
    for (Eigen::Index r = 0; r < f.rows(); ++r) {
      if (!f.row(r).allFinite()) {
        report.violations.push_back(
            {static_cast<Index>(r), "non-finite feature value"});
      }
    }
  }
  if (cloud.labels && cloud.labels->size() != cloud.size()) {
    report.violations.push_back({std::nullopt, "label count differs from point count"});
  }
  return report;
}

inline void require_valid(const PointCloud& cloud) {
  auto report = validate_cloud(cloud);
  if (!report.ok()) throw InputError("invalid point cloud:\n" + report.to_string());
}

// ---------------------------------------------------------------------------
// SparseAdjacency

struct Entry {
  Index col;
  double weight;
};

/// Weighted sparse n x n matrix in row-compressed form. Columns are strictly
/// increasing per row and explicit zeros are never stored.
class SparseAdjacency {
 public:
  static constexpr double kSymmetryTolerance = 1e-12;

  SparseAdjacency() = default;

  /// Builds from per-row entry lists. Entries within a row may arrive in any
  /// order but must not repeat a column; zero weights are dropped.
  SparseAdjacency(Index n, std::vector<std::vector<Entry>> rows, bool symmetric)
      : n_(n), symmetric_(symmetric) {
    if (rows.size() != n) throw InvariantViolation("row count differs from dimension");
    row_ptr_.assign(1, 0);
    row_ptr_.reserve(n + 1);
    for (Index i = 0; i < n; ++i) {
      auto& row = rows[i];
      std::sort(row.begin(), row.end(),
                [](const Entry& a, const Entry& b) { return a.col < b.col; });
      for (Index e = 0; e < row.size(); ++e) {
        const auto& en = row[e];
        if (en.col >= n) throw InvariantViolation("column index out of range");
        if (e > 0 && row[e - 1].col == en.col) {
          throw InvariantViolation("duplicate column in row " + std::to_string(i));
        }
        if (!std::isfinite(en.weight) || en.weight < 0.0) {
          throw InvariantViolation("negative or non-finite weight in row " +
                                   std::to_string(i));
        }
        if (en.weight == 0.0) continue;
        cols_.push_back(en.col);
        weights_.push_back(en.weight);
      }
      row_ptr_.push_back(cols_.size());
    }
    if (symmetric_) check_symmetry();
  }

  Index dim() const { return n_; }
  Index nonzeros() const { return cols_.size(); }
  bool symmetric() const { return symmetric_; }

  std::span<const Index> row_cols(Index i) const {
    return {cols_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
  }
  std::span<const double> row_weights(Index i) const {
    return {weights_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
  }
  Index row_size(Index i) const { return row_ptr_[i + 1] - row_ptr_[i]; }

  /// Stored weight at (i, j), or 0.
  double at(Index i, Index j) const {
    auto c = row_cols(i);
    auto it = std::lower_bound(c.begin(), c.end(), j);
    if (it == c.end() || *it != j) return 0.0;
    return row_weights(i)[static_cast<Index>(it - c.begin())];
  }

  std::vector<Entry> row(Index i) const {
    std::vector<Entry> out;
    out.reserve(row_size(i));
    auto c = row_cols(i);
    auto w = row_weights(i);
    for (Index e = 0; e < c.size(); ++e) out.push_back({c[e], w[e]});
    return out;
  }

  SparseAdjacency transpose() const {
    std::vector<std::vector<Entry>> rows(n_);
    for (Index i = 0; i < n_; ++i) {
      auto c = row_cols(i);
      auto w = row_weights(i);
      for (Index e = 0; e < c.size(); ++e) rows[c[e]].push_back({i, w[e]});
    }
    return SparseAdjacency(n_, std::move(rows), symmetric_);
  }

  friend bool operator==(const SparseAdjacency&, const SparseAdjacency&) = default;

 private:
  void check_symmetry() const {
    for (Index i = 0; i < n_; ++i) {
      auto c = row_cols(i);
      auto w = row_weights(i);
      for (Index e = 0; e < c.size(); ++e) {
        const Index j = c[e];
        auto cj = row_cols(j);
        auto it = std::lower_bound(cj.begin(), cj.end(), i);
        if (it == cj.end() || *it != i) {
          throw InvariantViolation("symmetric adjacency missing mirror of (" +
                                   std::to_string(i) + "," + std::to_string(j) + ")");
        }
        const double wj = row_weights(j)[static_cast<Index>(it - cj.begin())];
        if (std::abs(wj - w[e]) > kSymmetryTolerance) {
          throw InvariantViolation("symmetric adjacency weight mismatch at (" +
                                   std::to_string(i) + "," + std::to_string(j) + ")");
        }
      }
    }
  }

  Index n_ = 0;
  bool symmetric_ = false;
  std::vector<Index> row_ptr_{0};
  std::vector<Index> cols_;
  std::vector<double> weights_;
};

inline constexpr Index kDenseGuard = 4096;

inline Eigen::MatrixXd dense_of(const SparseAdjacency& sparse) {
  const Index n = sparse.dim();
  if (n > kDenseGuard) {
    throw InputError("dense_of: dimension " + std::to_string(n) +
                     " exceeds oracle guard " + std::to_string(kDenseGuard));
  }
  Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                                static_cast<Eigen::Index>(n));
  for (Index i = 0; i < n; ++i) {
    auto c = sparse.row_cols(i);
    auto w = sparse.row_weights(i);
    for (Index e = 0; e < c.size(); ++e) {
      dense(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c[e])) = w[e];
    }
  }
  return dense;
}

inline SparseAdjacency sparse_of(const Eigen::MatrixXd& dense, bool symmetric) {
  if (dense.rows() != dense.cols()) throw InputError("sparse_of: matrix not square");
  const auto n = static_cast<Index>(dense.rows());
  std::vector<std::vector<Entry>> rows(n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      const double w = dense(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (w != 0.0) rows[i].push_back({j, w});
    }
  }
  return SparseAdjacency(n, std::move(rows), symmetric);
}

// ---------------------------------------------------------------------------
// NeighborList

/// Per-point neighbor index lists. Every list is nonempty, contains its own
/// point, holds no duplicates and has at most max_size entries.
class NeighborList {
 public:
  NeighborList() = default;

  NeighborList(std::vector<std::vector<Index>> lists, Index max_size)
      : lists_(std::move(lists)), max_size_(max_size) {
    std::vector<char> seen(lists_.size(), 0);
    for (Index i = 0; i < lists_.size(); ++i) {
      const auto& l = lists_[i];
      if (l.empty()) throw InvariantViolation("empty neighbor list at " + std::to_string(i));
      if (l.size() > max_size_) {
        throw InvariantViolation("neighbor list " + std::to_string(i) + " exceeds max size");
      }
      bool has_self = false;
      for (Index j : l) {
        if (j >= lists_.size()) {
          throw InvariantViolation("neighbor index out of range in list " + std::to_string(i));
        }
        if (seen[j]) throw InvariantViolation("duplicate neighbor in list " + std::to_string(i));
        seen[j] = 1;
        has_self = has_self || j == i;
      }
      for (Index j : l) seen[j] = 0;
      if (!has_self) {
        throw InvariantViolation("neighbor list " + std::to_string(i) + " lacks its own point");
      }
    }
  }

  Index size() const { return lists_.size(); }
  Index max_size() const { return max_size_; }
  const std::vector<Index>& operator[](Index i) const { return lists_[i]; }
  const std::vector<std::vector<Index>>& lists() const { return lists_; }

  /// Binary adjacency with row i holding the members of list i.
  SparseAdjacency to_adjacency() const {
    std::vector<std::vector<Entry>> rows(lists_.size());
    for (Index i = 0; i < lists_.size(); ++i) {
      for (Index j : lists_[i]) rows[i].push_back({j, 1.0});
    }
    return SparseAdjacency(lists_.size(), std::move(rows), false);
  }

  friend bool operator==(const NeighborList&, const NeighborList&) = default;

 private:
  std::vector<std::vector<Index>> lists_;
  Index max_size_ = 0;
};

// ---------------------------------------------------------------------------
// SmoothingConfig

struct SmoothingConfig {
  double radius = 0.2;
  Index k = 32;
  double alpha = 0.5;
  Index order = 3;  // smoothing order T
  Index k_out = 32;
  double eps = 1e-9;
  /// Entries of S_T below this are dropped after each power step (0 = exact).
  double prune = 0.0;

  void validate() const {
    if (!(radius > 0.0) || !std::isfinite(radius)) throw InputError("radius must be > 0");
    if (k < 1) throw InputError("k must be >= 1");
    if (k_out < 1) throw InputError("K_out must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("alpha must lie in (0, 1)");
    if (!(eps >= 0.0)) throw InputError("eps must be >= 0");
    if (!(prune >= 0.0)) throw InputError("prune threshold must be >= 0");
  }
};

namespace detail {

/// Worker count: PTGRAPH_THREADS if set, else hardware concurrency.
inline unsigned thread_count() {
  if (const char* env = std::getenv("PTGRAPH_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(i) for i in [0, n) over contiguous chunks. fn must only write
/// state owned by index i, so results do not depend on the thread count.
template <typename Fn>
void parallel_for(Index n, Fn&& fn) {
  const Index workers = std::min<Index>(thread_count(), std::max<Index>(n / 64, 1));
  if (workers <= 1) {
    for (Index i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  pool.reserve(workers);
  const Index chunk = (n + workers - 1) / workers;
  for (Index w = 0; w < workers; ++w) {
    const Index lo = w * chunk;
    const Index hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, w, &fn, &errors] {
      try {
        for (Index i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace detail

}  // namespace ptgraph
