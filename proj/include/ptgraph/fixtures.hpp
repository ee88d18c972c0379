// ptgraph - point cloud neighbor graphs, graph smoothing and local geometry
//
// Deterministic synthetic clouds. The two-planes-cross and airplane-like
// fixtures carry part labels for junction contamination metrics.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "ptgraph/construct.hpp"
#include "ptgraph/core.hpp"

namespace ptgraph {

/// mt19937_64 with a portable double mapping (the standard distributions
/// are implementation-defined, which would break cross-platform bit equality).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform in [0, n).
  Index index(Index n) { return static_cast<Index>(uniform() * static_cast<double>(n)); }

 private:
  std::mt19937_64 engine_;
};

inline const std::vector<std::string>& fixture_names() {
  static const std::vector<std::string> names{"plane", "sphere", "cylinder", "two-planes-cross",
                                              "airplane-like"};
  return names;
}

namespace detail {

/// Splits n over parts proportionally to their weights (largest remainder,
/// ties to the earlier part).
inline std::vector<Index> apportion(Index n, const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  std::vector<Index> counts(weights.size());
  std::vector<double> remainder(weights.size());
  Index assigned = 0;
  for (Index p = 0; p < weights.size(); ++p) {
    const double exact = static_cast<double>(n) * weights[p] / total;
    counts[p] = static_cast<Index>(std::floor(exact));
    remainder[p] = exact - static_cast<double>(counts[p]);
    assigned += counts[p];
  }
  while (assigned < n) {
    Index best = 0;
    for (Index p = 1; p < weights.size(); ++p) {
      if (remainder[p] > remainder[best]) best = p;
    }
    ++counts[best];
    remainder[best] = -1.0;
    ++assigned;
  }
  return counts;
}

}  // namespace detail

inline constexpr double kFuselageRadius = 0.12;

/// Builds fixture `name` with n points from `seed`.
///
/// plane: z = 0 over [-1,1]^2. sphere: unit sphere. cylinder: radius 0.5
/// lateral surface, z in [-1,1]. two-planes-cross: z = 0 (label 0) and
/// x = 0 (label 1) over [-1,1]^2 each, crossing along the y axis.
/// airplane-like: fuselage tube along x (label 0), a wing plate at z = 0
/// (label 1) and a vertical tail fin (label 2).
inline PointCloud make_fixture(const std::string& name, Index n, std::uint64_t seed) {
  if (n < 8) throw InputError("make_fixture: n must be >= 8");
  Rng rng(seed);
  PointCloud cloud;
  cloud.points.reserve(n);
  constexpr double kTwoPi = 2.0 * std::numbers::pi;

  if (name == "plane") {
    for (Index i = 0; i < n; ++i) {
      const double x = rng.uniform(-1.0, 1.0);
      const double y = rng.uniform(-1.0, 1.0);
      cloud.points.emplace_back(x, y, 0.0);
    }
  } else if (name == "sphere") {
    for (Index i = 0; i < n; ++i) {
      const double z = rng.uniform(-1.0, 1.0);
      const double phi = rng.uniform(0.0, kTwoPi);
      const double s = std::sqrt(1.0 - z * z);
      cloud.points.emplace_back(s * std::cos(phi), s * std::sin(phi), z);
    }
  } else if (name == "cylinder") {
    for (Index i = 0; i < n; ++i) {
      const double phi = rng.uniform(0.0, kTwoPi);
      const double z = rng.uniform(-1.0, 1.0);
      cloud.points.emplace_back(0.5 * std::cos(phi), 0.5 * std::sin(phi), z);
    }
  } else if (name == "two-planes-cross") {
    std::vector<int> labels;
    const Index half = n / 2;
    for (Index i = 0; i < n; ++i) {
      const double a = rng.uniform(-1.0, 1.0);
      const double b = rng.uniform(-1.0, 1.0);
      if (i < half) {
        cloud.points.emplace_back(a, b, 0.0);
        labels.push_back(0);
      } else {
        cloud.points.emplace_back(0.0, a, b);
        labels.push_back(1);
      }
    }
    cloud.labels = std::move(labels);
  } else if (name == "airplane-like") {
    constexpr double r = kFuselageRadius;
    constexpr double fuselage_len = 2.0;
    constexpr double wing_chord = 0.3;
    constexpr double wing_span = 1.0 - r;  // per side
    constexpr double fin_len = 0.25;
    constexpr double fin_height = 0.28;
    const auto counts = detail::apportion(
        n, {kTwoPi * r * fuselage_len, 2.0 * wing_chord * wing_span, fin_len * fin_height});
    std::vector<int> labels;
    for (Index i = 0; i < counts[0]; ++i) {
      const double x = rng.uniform(-1.0, 1.0);
      const double phi = rng.uniform(0.0, kTwoPi);
      cloud.points.emplace_back(x, r * std::cos(phi), r * std::sin(phi));
      labels.push_back(0);
    }
    for (Index i = 0; i < counts[1]; ++i) {
      const double x = rng.uniform(-0.5 * wing_chord, 0.5 * wing_chord);
      const double s = rng.uniform(-wing_span, wing_span);
      const double y = s < 0.0 ? s - r : s + r;
      cloud.points.emplace_back(x, y, 0.0);
      labels.push_back(1);
    }
    for (Index i = 0; i < counts[2]; ++i) {
      const double x = rng.uniform(-1.0, -1.0 + fin_len);
      const double z = rng.uniform(r, r + fin_height);
      cloud.points.emplace_back(x, 0.0, z);
      labels.push_back(2);
    }
    cloud.labels = std::move(labels);
  } else {
    throw InputError("make_fixture: unknown fixture '" + name + "'");
  }
  return cloud;
}

// ---------------------------------------------------------------------------
// Label metrics

/// Points of the two-planes-cross fixture within r of the crossing line.
inline std::vector<Index> crossing_line_band(const PointCloud& cloud, double r) {
  std::vector<Index> band;
  for (Index i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.points[i];
    if (std::sqrt(p.x() * p.x() + p.z() * p.z()) <= r) band.push_back(i);
  }
  return band;
}

/// Labeled points with at least one differently labeled point within r.
inline std::vector<Index> label_junction_band(const PointCloud& cloud, double r) {
  if (!cloud.labels) throw InputError("label_junction_band: cloud has no labels");
  const SpatialIndex index(cloud);
  const auto& labels = *cloud.labels;
  std::vector<Index> band;
  for (Index i = 0; i < cloud.size(); ++i) {
    for (const auto& nb : index.radius_query(cloud.points[i], r)) {
      if (labels[nb.index] != labels[i]) {
        band.push_back(i);
        break;
      }
    }
  }
  return band;
}

/// Junction band appropriate for the fixture: the crossing-line band for
/// two-planes-cross, the label-based band otherwise.
inline std::vector<Index> junction_band(const std::string& fixture, const PointCloud& cloud, double r) {
  if (fixture == "two-planes-cross") return crossing_line_band(cloud, r);
  return label_junction_band(cloud, r);
}

/// Fraction of the list (self included) carrying a label other than point i's.
inline double cross_label_fraction(const PointCloud& cloud, Index i, const std::vector<Index>& list) {
  if (!cloud.labels) throw InputError("cross_label_fraction: cloud has no labels");
  if (list.empty()) return 0.0;
  const auto& labels = *cloud.labels;
  Index cross = 0;
  for (Index j : list) cross += labels[j] != labels[i] ? 1 : 0;
  return static_cast<double>(cross) / static_cast<double>(list.size());
}

inline double mean_cross_label_fraction(const PointCloud& cloud, const NeighborList& neighbors,
                                        const std::vector<Index>& points) {
  if (points.empty()) return 0.0;
  double total = 0.0;
  for (Index i : points) total += cross_label_fraction(cloud, i, neighbors[i]);
  return total / static_cast<double>(points.size());
}

}  // namespace ptgraph
