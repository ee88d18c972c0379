// ptgraph - point cloud neighbor graphs, graph smoothing and local geometry
//
// Single-stage neighborhood feature aggregation with fixed affine maps:
//   baseline:  pool_j act(psi([x_j | p_i - p_j]))
//   enhanced:  pool_j act(psi'([x_j | p_i - p_j | h'_j, w'_j, cos t_j])) | phi(L_i)

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ptgraph/core.hpp"
#include "ptgraph/geometry.hpp"

namespace ptgraph {

struct Activation {
  std::string name;
  double (*fn)(double);

  static Activation relu() {
    return {"relu", [](double v) { return v > 0.0 ? v : 0.0; }};
  }
  static Activation identity() {
    return {"identity", [](double v) { return v; }};
  }
  static Activation tanh() {
    return {"tanh", [](double v) { return std::tanh(v); }};
  }
  static Activation leaky_relu() {
    return {"leaky_relu", [](double v) { return v > 0.0 ? v : 0.01 * v; }};
  }

  static Activation by_name(const std::string& name) {
    for (auto a : {relu(), identity(), tanh(), leaky_relu()}) {
      if (a.name == name) return a;
    }
    throw InputError("unknown activation '" + name + "'");
  }
};

/// Coordinatewise permutation-invariant reducers. Sum and mean reduce the
/// values in sorted order so the result does not depend on neighbor order.
enum class Pool { kMax, kSum, kMean };

inline Pool pool_by_name(const std::string& name) {
  if (name == "max") return Pool::kMax;
  if (name == "sum") return Pool::kSum;
  if (name == "mean") return Pool::kMean;
  throw InputError("unknown pool '" + name + "'");
}

inline const char* pool_name(Pool p) {
  switch (p) {
    case Pool::kMax: return "max";
    case Pool::kSum: return "sum";
    case Pool::kMean: return "mean";
  }
  return "?";
}

enum class AggregationMode { kBaseline, kEnhanced };

struct AggregationSpec {
  AggregationMode mode = AggregationMode::kBaseline;
  /// (eta+3) x eta' in baseline mode, (eta+6) x eta' in enhanced mode.
  Eigen::MatrixXd weight_psi;
  std::optional<Eigen::VectorXd> bias;
  /// 3 x eta_phi; enhanced mode only.
  Eigen::MatrixXd weight_phi;
  std::optional<Eigen::VectorXd> bias_phi;
  Activation activation = Activation::relu();
  Pool pool = Pool::kMax;

  Index output_width() const { return static_cast<Index>(weight_psi.cols()); }
  Index phi_width() const { return static_cast<Index>(weight_phi.cols()); }

  void validate(Index eta) const {
    const Index extra = mode == AggregationMode::kBaseline ? 3 : 6;
    if (static_cast<Index>(weight_psi.rows()) != eta + extra) {
      throw InputError("aggregation: psi has " + std::to_string(weight_psi.rows()) +
                       " rows, expected " + std::to_string(eta + extra));
    }
    if (!weight_psi.allFinite()) throw InputError("aggregation: non-finite psi weight");
    if (bias) {
      if (bias->size() != weight_psi.cols()) throw InputError("aggregation: psi bias width mismatch");
      if (!bias->allFinite()) throw InputError("aggregation: non-finite psi bias");
    }
    if (mode == AggregationMode::kEnhanced) {
      if (weight_phi.rows() != 3) throw InputError("aggregation: phi must have 3 rows");
      if (!weight_phi.allFinite()) throw InputError("aggregation: non-finite phi weight");
      if (bias_phi) {
        if (bias_phi->size() != weight_phi.cols()) throw InputError("aggregation: phi bias width mismatch");
        if (!bias_phi->allFinite()) throw InputError("aggregation: non-finite phi bias");
      }
    }
  }
};

namespace detail {

inline Eigen::RowVectorXd affine(const Eigen::RowVectorXd& in, const Eigen::MatrixXd& w,
                                 const std::optional<Eigen::VectorXd>& b) {
  Eigen::RowVectorXd out = in * w;
  if (b) out += b->transpose();
  return out;
}

/// Pools the rows of `values` (one row per neighbor) into a single row.
inline Eigen::RowVectorXd pool_rows(const Eigen::MatrixXd& values, Pool pool) {
  const Eigen::Index width = values.cols();
  Eigen::RowVectorXd out(width);
  std::vector<double> column(static_cast<Index>(values.rows()));
  for (Eigen::Index c = 0; c < width; ++c) {
    for (Eigen::Index r = 0; r < values.rows(); ++r) column[static_cast<Index>(r)] = values(r, c);
    if (pool == Pool::kMax) {
      out[c] = *std::max_element(column.begin(), column.end());
      continue;
    }
    std::sort(column.begin(), column.end());
    double s = 0.0;
    for (double v : column) s += v;
    out[c] = pool == Pool::kMean ? s / static_cast<double>(column.size()) : s;
  }
  return out;
}

template <typename InputFn>
Eigen::MatrixXd aggregate_rows(const PointCloud& cloud, const NeighborList& neighbors,
                               const AggregationSpec& spec, Index input_width, InputFn&& input_of) {
  const Index n = cloud.size();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(spec.output_width()));
  detail::parallel_for(n, [&](Index i) {
    const auto& list = neighbors[i];
    Eigen::MatrixXd activated(static_cast<Eigen::Index>(list.size()), out.cols());
    Eigen::RowVectorXd in(static_cast<Eigen::Index>(input_width));
    for (Index e = 0; e < list.size(); ++e) {
      input_of(i, e, in);
      activated.row(static_cast<Eigen::Index>(e)) =
          affine(in, spec.weight_psi, spec.bias).unaryExpr(spec.activation.fn);
    }
    out.row(static_cast<Eigen::Index>(i)) = pool_rows(activated, spec.pool);
  });
  return out;
}

inline void check_neighbors(const PointCloud& cloud, const NeighborList& neighbors) {
  if (neighbors.size() != cloud.size()) throw InputError("aggregation: neighbor list size mismatch");
}

}  // namespace detail

/// Baseline aggregation; output is n x eta'.
inline Eigen::MatrixXd aggregate_baseline(const PointCloud& cloud, const NeighborList& neighbors,
                                          const AggregationSpec& spec) {
  if (spec.mode != AggregationMode::kBaseline) throw InputError("aggregate_baseline: spec is not in baseline mode");
  detail::check_neighbors(cloud, neighbors);
  const Index eta = cloud.feature_width();
  spec.validate(eta);
  return detail::aggregate_rows(cloud, neighbors, spec, eta + 3,
                                [&](Index i, Index e, Eigen::RowVectorXd& in) {
                                  const Index j = neighbors[i][e];
                                  const auto ei = static_cast<Eigen::Index>(eta);
                                  if (eta > 0) in.head(ei) = cloud.features->row(static_cast<Eigen::Index>(j));
                                  in.segment<3>(ei) = (cloud.points[i] - cloud.points[j]).transpose();
                                });
}

/// Enhanced aggregation; output is n x (eta' + eta_phi). cyl[i] must be
/// positionally aligned with neighbors[i] and frames[i] computed over it.
inline Eigen::MatrixXd aggregate_enhanced(const PointCloud& cloud, const NeighborList& neighbors,
                                          const std::vector<LocalFrame>& frames,
                                          const std::vector<CylindricalCoords>& cyl,
                                          const AggregationSpec& spec) {
  if (spec.mode != AggregationMode::kEnhanced) throw InputError("aggregate_enhanced: spec is not in enhanced mode");
  detail::check_neighbors(cloud, neighbors);
  const Index n = cloud.size();
  if (frames.size() != n || cyl.size() != n) throw InputError("aggregate_enhanced: frame/coordinate count mismatch");
  for (Index i = 0; i < n; ++i) {
    if (cyl[i].size() != neighbors[i].size() || frames[i].support_size != neighbors[i].size()) {
      throw InputError("aggregate_enhanced: geometry not aligned with neighbor list " + std::to_string(i));
    }
  }
  const Index eta = cloud.feature_width();
  spec.validate(eta);

  const Eigen::MatrixXd pooled = detail::aggregate_rows(
      cloud, neighbors, spec, eta + 6, [&](Index i, Index e, Eigen::RowVectorXd& in) {
        const Index j = neighbors[i][e];
        const auto ei = static_cast<Eigen::Index>(eta);
        if (eta > 0) in.head(ei) = cloud.features->row(static_cast<Eigen::Index>(j));
        in.segment<3>(ei) = (cloud.points[i] - cloud.points[j]).transpose();
        in[ei + 3] = cyl[i].h_norm[e];
        in[ei + 4] = cyl[i].omega_norm[e];
        in[ei + 5] = cyl[i].cos_theta[e];
      });

  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), pooled.cols() + spec.weight_phi.cols());
  out.leftCols(pooled.cols()) = pooled;
  for (Index i = 0; i < n; ++i) {
    out.row(static_cast<Eigen::Index>(i)).tail(spec.weight_phi.cols()) =
        detail::affine(frames[i].eigenvalues.transpose(), spec.weight_phi, spec.bias_phi);
  }
  return out;
}

}  // namespace ptgraph
