// ptgraph - point cloud neighbor graphs, graph smoothing and local geometry
//
// Local covariance frames, eigenvalue shape descriptors and the
// principal-axis cylindrical coordinate transform.

#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>

#include "ptgraph/core.hpp"

namespace ptgraph {

/// Covariance eigen-frame of one neighborhood. Eigenvalues are descending
/// and clamped at 0; eigenvector columns are orthonormal and each has its
/// largest-magnitude component positive (ties: earliest axis).
struct LocalFrame {
  Eigen::Vector3d eigenvalues = Eigen::Vector3d::Zero();
  Eigen::Matrix3d eigenvectors = Eigen::Matrix3d::Identity();
  Point centroid = Point::Zero();
  Index support_size = 0;
  /// Number of eigenvalues <= eps (0..3).
  int degenerate_rank = 0;
};

namespace detail {

inline Eigen::Vector3d sign_normalized(Eigen::Vector3d v) {
  Eigen::Index axis = 0;
  for (Eigen::Index a = 1; a < 3; ++a) {
    if (std::abs(v[a]) > std::abs(v[axis])) axis = a;
  }
  if (v[axis] < 0.0) v = -v;
  return v;
}

/// Canonical axis least aligned with v (ties: earliest axis).
inline Eigen::Vector3d least_aligned_axis(const Eigen::Vector3d& v) {
  Eigen::Index axis = 0;
  for (Eigen::Index a = 1; a < 3; ++a) {
    if (std::abs(v[a]) < std::abs(v[axis])) axis = a;
  }
  return Eigen::Vector3d::Unit(axis);
}

/// Accumulation order is fixed by sorting, so list order never changes bits.
inline std::vector<Index> sorted_copy(std::span<const Index> neighborhood) {
  std::vector<Index> s(neighborhood.begin(), neighborhood.end());
  std::sort(s.begin(), s.end());
  return s;
}

inline Point centroid_of(const PointCloud& cloud, std::span<const Index> neighborhood) {
  Point c = Point::Zero();
  for (Index j : sorted_copy(neighborhood)) c += cloud.points[j];
  return c / static_cast<double>(neighborhood.size());
}

}  // namespace detail

/// Covariance (1/m) sum (p_j - c)(p_j - c)^T about the neighborhood centroid.
inline Eigen::Matrix3d neighborhood_covariance(const PointCloud& cloud,
                                               std::span<const Index> neighborhood,
                                               const Point& centroid) {
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (Index j : detail::sorted_copy(neighborhood)) {
    const Eigen::Vector3d d = cloud.points[j] - centroid;
    cov.noalias() += d * d.transpose();
  }
  return cov / static_cast<double>(neighborhood.size());
}

inline LocalFrame local_frame(const PointCloud& cloud, std::span<const Index> neighborhood,
                              double eps = 1e-9) {
  if (neighborhood.empty()) throw InputError("local_frame: empty neighborhood");
  for (Index j : neighborhood) {
    if (j >= cloud.size()) throw InputError("local_frame: neighbor index out of range");
  }
  LocalFrame frame;
  frame.support_size = neighborhood.size();
  frame.centroid = detail::centroid_of(cloud, neighborhood);
  if (neighborhood.size() == 1) {
    frame.degenerate_rank = 3;
    return frame;
  }

  const Eigen::Matrix3d cov = neighborhood_covariance(cloud, neighborhood, frame.centroid);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
  // Solver order is ascending.
  for (int a = 0; a < 3; ++a) {
    frame.eigenvalues[a] = std::max(solver.eigenvalues()[2 - a], 0.0);
  }
  frame.degenerate_rank =
      static_cast<int>((frame.eigenvalues.array() <= eps).count());

  Eigen::Vector3d v1, v2, v3;
  if (frame.eigenvalues[0] <= eps) {
    frame.eigenvalues.setZero();
    return frame;  // identity frame
  }
  v1 = solver.eigenvectors().col(2).normalized();
  if (frame.eigenvalues[1] <= eps) {
    const Eigen::Vector3d axis = detail::least_aligned_axis(v1);
    v2 = (axis - axis.dot(v1) * v1).normalized();
  } else {
    v2 = solver.eigenvectors().col(1);
    v2 = (v2 - v2.dot(v1) * v1).normalized();
  }
  if (frame.eigenvalues[2] <= eps) {
    v3 = v1.cross(v2).normalized();
  } else {
    v3 = solver.eigenvectors().col(0);
    v3 = (v3 - v3.dot(v1) * v1 - v3.dot(v2) * v2).normalized();
  }
  frame.eigenvectors.col(0) = detail::sign_normalized(v1);
  frame.eigenvectors.col(1) = detail::sign_normalized(v2);
  frame.eigenvectors.col(2) = detail::sign_normalized(v3);
  return frame;
}

inline std::vector<LocalFrame> local_frames(const PointCloud& cloud, const NeighborList& neighbors,
                                            double eps = 1e-9) {
  if (neighbors.size() != cloud.size()) throw InputError("local_frames: neighbor list size mismatch");
  std::vector<LocalFrame> frames(cloud.size());
  detail::parallel_for(cloud.size(), [&](Index i) { frames[i] = local_frame(cloud, neighbors[i], eps); });
  return frames;
}

struct ShapeDescriptors {
  double linearity = 0.0;
  double planarity = 0.0;
  double sphericity = 0.0;
  Eigen::Vector3d eigenvalues = Eigen::Vector3d::Zero();
};

/// Classical eigenvalue descriptors; all zero when lambda1 <= eps.
inline ShapeDescriptors shape_descriptors(const LocalFrame& frame, double eps = 1e-9) {
  ShapeDescriptors d;
  d.eigenvalues = frame.eigenvalues;
  const double l1 = frame.eigenvalues[0];
  const double l2 = frame.eigenvalues[1];
  const double l3 = frame.eigenvalues[2];
  if (!(l1 > eps)) return d;
  d.linearity = (l1 - l2) / l1;
  d.planarity = (l2 - l3) / l1;
  d.sphericity = l3 / l1;
  return d;
}

/// Per-neighbor cylindrical coordinates in the query point's principal-axis
/// frame; axial coordinate along v1, radial plane spanned by (v2, v3).
struct CylindricalCoords {
  std::vector<double> h;
  std::vector<double> omega;
  std::vector<double> cos_theta;
  std::vector<double> h_norm;      // h / max|h|, in [-1, 1]
  std::vector<double> omega_norm;  // omega / max omega, in [0, 1]

  Index size() const { return h.size(); }
};

inline CylindricalCoords cylindrical_transform(const PointCloud& cloud, Index i,
                                               std::span<const Index> neighborhood,
                                               const LocalFrame& frame, double eps = 1e-9) {
  if (i >= cloud.size()) throw InputError("cylindrical_transform: query index out of range");
  if (neighborhood.size() != frame.support_size) {
    throw InputError("cylindrical_transform: frame was computed over a different neighborhood");
  }
  for (Index j : neighborhood) {
    if (j >= cloud.size()) throw InputError("cylindrical_transform: neighbor index out of range");
  }
  const Point c = detail::centroid_of(cloud, neighborhood);
  if ((c - frame.centroid).norm() > 1e-9 * (1.0 + frame.centroid.norm())) {
    throw InputError("cylindrical_transform: frame centroid does not match neighborhood");
  }

  const Eigen::Vector3d v1 = frame.eigenvectors.col(0);
  const Eigen::Vector3d v2 = frame.eigenvectors.col(1);
  const Eigen::Vector3d v3 = frame.eigenvectors.col(2);
  const Index m = neighborhood.size();
  CylindricalCoords out;
  out.h.resize(m);
  out.omega.resize(m);
  out.cos_theta.resize(m);
  out.h_norm.resize(m);
  out.omega_norm.resize(m);
  double max_h = 0.0;
  double max_omega = 0.0;
  for (Index e = 0; e < m; ++e) {
    const Eigen::Vector3d dp = cloud.points[neighborhood[e]] - cloud.points[i];
    const double x = dp.dot(v2);
    const double y = dp.dot(v3);
    const double z = dp.dot(v1);
    const double w = std::sqrt(x * x + y * y);
    out.h[e] = z;
    out.omega[e] = w;
    out.cos_theta[e] = w < eps ? 1.0 : std::clamp(x / w, -1.0, 1.0);
    max_h = std::max(max_h, std::abs(z));
    max_omega = std::max(max_omega, w);
  }
  for (Index e = 0; e < m; ++e) {
    out.h_norm[e] = max_h < eps ? 0.0 : out.h[e] / max_h;
    out.omega_norm[e] = max_omega < eps ? 0.0 : out.omega[e] / max_omega;
  }
  return out;
}

inline std::vector<CylindricalCoords> cylindrical_all(const PointCloud& cloud,
                                                      const NeighborList& neighbors,
                                                      const std::vector<LocalFrame>& frames,
                                                      double eps = 1e-9) {
  if (neighbors.size() != cloud.size() || frames.size() != cloud.size()) {
    throw InputError("cylindrical_all: size mismatch");
  }
  std::vector<CylindricalCoords> out(cloud.size());
  detail::parallel_for(cloud.size(), [&](Index i) {
    out[i] = cylindrical_transform(cloud, i, neighbors[i], frames[i], eps);
  });
  return out;
}

}  // namespace ptgraph
