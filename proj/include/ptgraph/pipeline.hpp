// ptgraph - point cloud neighbor graphs, graph smoothing and local geometry
//
// End-to-end pipeline: construct -> refine -> smooth -> geometry -> aggregate,
// with artifact exports and a JSON manifest of config, stages and hashes.

#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ptgraph/aggregate.hpp"
#include "ptgraph/construct.hpp"
#include "ptgraph/core.hpp"
#include "ptgraph/fixtures.hpp"
#include "ptgraph/geometry.hpp"
#include "ptgraph/io.hpp"
#include "ptgraph/smooth.hpp"

namespace ptgraph {

enum class Stage { kConstruct, kRefine, kSmooth, kGeometry, kAggregate };

inline const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names{"construct", "refine", "smooth", "geometry", "aggregate"};
  return names;
}

/// Parses "all" or a comma-separated stage list; the list must be a prefix
/// of the pipeline order.
inline std::vector<Stage> parse_stages(const std::string& spec) {
  const auto& names = stage_names();
  if (spec == "all") {
    return {Stage::kConstruct, Stage::kRefine, Stage::kSmooth, Stage::kGeometry, Stage::kAggregate};
  }
  std::vector<Stage> stages;
  for (auto part : split(spec, ',')) {
    auto it = std::find(names.begin(), names.end(), part);
    if (it == names.end()) throw InputError("unknown stage '" + std::string(part) + "'");
    const auto s = static_cast<Stage>(it - names.begin());
    if (static_cast<Index>(s) != stages.size()) {
      throw InputError("stages must be a prefix of construct,refine,smooth,geometry,aggregate");
    }
    stages.push_back(s);
  }
  if (stages.empty()) throw InputError("no stages selected");
  return stages;
}

struct PipelineConfig {
  std::optional<std::filesystem::path> input;
  std::optional<CloudFormat> format;  // inferred from the extension when unset
  std::optional<std::string> fixture;
  Index fixture_n = 2048;
  std::uint64_t seed = 0;
  SmoothingConfig smoothing;
  std::vector<Stage> stages = parse_stages("all");
  std::filesystem::path out_dir = "ptgraph_out";
  ExportFormat export_format = ExportFormat::kJson;
  bool record_timings = false;
  Index out_width = 16;
  Index phi_width = 8;
  std::string activation = "relu";
  std::string pool = "max";

  void validate() const {
    if (input.has_value() == fixture.has_value()) {
      throw InputError("exactly one of an input file or a fixture must be given");
    }
    smoothing.validate();
    if (stages.empty()) throw InputError("no stages selected");
    for (Index s = 0; s < stages.size(); ++s) {
      if (static_cast<Index>(stages[s]) != s) throw InputError("stages must be a prefix of the pipeline order");
    }
    if (out_width < 1 || phi_width < 1) throw InputError("aggregation widths must be >= 1");
    Activation::by_name(activation);
    pool_by_name(pool);
  }
};

namespace detail {

inline nlohmann::ordered_json summary_json(const DegreeSummary& s) {
  return {{"min", s.min}, {"max", s.max}, {"mean", s.mean}, {"stddev", s.stddev}};
}

inline Index count_outside(const std::vector<Index>& v, double lo, double hi) {
  Index c = 0;
  for (Index d : v) c += (static_cast<double>(d) < lo || static_cast<double>(d) > hi) ? 1 : 0;
  return c;
}

inline Eigen::MatrixXd random_matrix(Rng& rng, Index rows, Index cols) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(rows));
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = scale * rng.uniform(-1.0, 1.0);
  }
  return m;
}

inline Eigen::VectorXd random_vector(Rng& rng, Index n) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  for (Eigen::Index e = 0; e < v.size(); ++e) v[e] = 0.1 * rng.uniform(-1.0, 1.0);
  return v;
}

class StageRecorder {
 public:
  StageRecorder(const std::filesystem::path& dir, ExportFormat format, bool timings)
      : dir_(dir), format_(format), timings_(timings) {}

  void begin(Stage s) {
    current_ = {{"name", stage_names()[static_cast<Index>(s)]}, {"millis", 0},
                {"outputs", nlohmann::ordered_json::array()}};
    start_ = std::chrono::steady_clock::now();
  }

  /// Writes `content` as <stem><ext> and records its hash.
  void output(const std::string& stem, const std::string& content, const char* ext = nullptr) {
    const std::string name = stem + (ext ? ext : extension_of(format_));
    write_file(dir_ / name, content);
    current_["outputs"].push_back({{"path", name}, {"sha256", sha256_hex(content)}});
  }

  void end() {
    if (timings_) {
      const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
          std::chrono::steady_clock::now() - start_);
      current_["millis"] = ms.count();
    }
    stages_.push_back(std::move(current_));
  }

  ExportFormat format() const { return format_; }
  nlohmann::ordered_json stages() const { return stages_; }

 private:
  std::filesystem::path dir_;
  ExportFormat format_;
  bool timings_;
  nlohmann::ordered_json current_;
  nlohmann::ordered_json stages_ = nlohmann::ordered_json::array();
  std::chrono::steady_clock::time_point start_;
};

inline nlohmann::ordered_json config_json(const PipelineConfig& cfg) {
  const auto& s = cfg.smoothing;
  nlohmann::ordered_json j;
  if (cfg.input) {
    j["input"] = cfg.input->generic_string();
  } else {
    j["fixture"] = *cfg.fixture;
    j["n"] = cfg.fixture_n;
  }
  j["seed"] = cfg.seed;
  j["radius"] = s.radius;
  j["k"] = s.k;
  j["alpha"] = s.alpha;
  j["t_order"] = s.order;
  j["topk"] = s.k_out;
  j["eps"] = s.eps;
  j["prune"] = s.prune;
  auto stages = nlohmann::ordered_json::array();
  for (auto st : cfg.stages) stages.push_back(stage_names()[static_cast<Index>(st)]);
  j["stages"] = std::move(stages);
  j["export_format"] = cfg.export_format == ExportFormat::kJson ? "json" : "csv";
  j["out_width"] = cfg.out_width;
  j["phi_width"] = cfg.phi_width;
  j["activation"] = cfg.activation;
  j["pool"] = cfg.pool;
  return j;
}

}  // namespace detail

/// Runs the selected stages, writes artifacts plus manifest.json into
/// cfg.out_dir and returns the manifest. Throws InputError for bad input and
/// InvariantViolation when a module invariant breaks mid-run.
inline nlohmann::ordered_json run_pipeline(const PipelineConfig& cfg) {
  cfg.validate();
  const auto& sc = cfg.smoothing;

  PointCloud cloud;
  if (cfg.input) {
    cloud = parse_cloud(*cfg.input, cfg.format.value_or(cloud_format_of_path(*cfg.input)));
  } else {
    cloud = make_fixture(*cfg.fixture, cfg.fixture_n, cfg.seed);
  }
  require_valid(cloud);

  std::filesystem::create_directories(cfg.out_dir);
  detail::StageRecorder rec(cfg.out_dir, cfg.export_format, cfg.record_timings);
  const auto fmt = cfg.export_format;
  auto has = [&](Stage s) { return std::find(cfg.stages.begin(), cfg.stages.end(), s) != cfg.stages.end(); };

  nlohmann::ordered_json metrics;
  metrics["points"] = cloud.size();
  std::optional<std::vector<Index>> band;
  if (cloud.labels) band = junction_band(cfg.fixture.value_or(""), cloud, sc.radius);
  const double extreme_lo = 20.0 * static_cast<double>(sc.k) / 32.0;
  const double extreme_hi = 35.0 * static_cast<double>(sc.k) / 32.0;

  // construct
  rec.begin(Stage::kConstruct);
  const auto raw_neighbors = ball_query_neighbors(cloud, sc);
  const auto adj = raw_neighbors.to_adjacency();
  const auto raw_report = degree_report(adj);
  rec.output("cloud", cloud_to_text(cloud, CloudFormat::kXyz), ".xyz");
  rec.output("adjacency_raw", adjacency_to_text(adj, fmt));
  rec.output("degrees_raw", degree_heatmap_to_text(raw_report, cloud, fmt));
  rec.output("neighborhoods_raw", neighborhoods_to_text(raw_neighbors, cloud, {}, fmt));
  {
    Index directional = 0;
    for (Index i = 0; i < adj.dim(); ++i) {
      for (Index j : adj.row_cols(i)) directional += adj.at(j, i) == 0.0 ? 1 : 0;
    }
    const auto index = SpatialIndex(cloud);
    Index sparse = 0;
    for (Index i = 0; i < cloud.size(); ++i) sparse += density_class(index, i, sc) == DensityClass::kSparse ? 1 : 0;
    Index boundary = 0, junction = 0;
    for (auto role : boundary_junction_classify(adj, sc.k)) {
      boundary += role == PointRole::kBoundaryLike ? 1 : 0;
      junction += role == PointRole::kJunctionLike ? 1 : 0;
    }
    metrics["construct"] = {{"edges", adj.nonzeros()},
                            {"directional_edges", directional},
                            {"sparse_points", sparse},
                            {"boundary_like", boundary},
                            {"junction_like", junction},
                            {"neighborhood_size", detail::summary_json(raw_report.out_summary)},
                            {"reach", detail::summary_json(raw_report.in_summary)},
                            {"reach_extreme_count", detail::count_outside(raw_report.in_degree, extreme_lo, extreme_hi)}};
  }
  rec.end();

  if (has(Stage::kRefine)) {
    rec.begin(Stage::kRefine);
    const auto sym = symmetric_refine(adj);
    const auto sym_report = degree_report(sym);
    for (Index i = 0; i < sym.dim(); ++i) {
      if (sym_report.in_degree[i] != sym_report.out_degree[i] || sym_report.out_degree[i] > sc.k) {
        throw InvariantViolation("refine: degrees of point " + std::to_string(i) + " are unequal or exceed k");
      }
    }
    rec.output("adjacency_sym", adjacency_to_text(sym, fmt));
    rec.output("degrees_sym", degree_heatmap_to_text(sym_report, cloud, fmt));
    metrics["refine"] = {{"edges", sym.nonzeros()}, {"removed_edges", adj.nonzeros() - sym.nonzeros()},
                         {"degree", detail::summary_json(sym_report.out_summary)}};
    rec.end();

    if (has(Stage::kSmooth)) {
      rec.begin(Stage::kSmooth);
      const auto norm = symmetric_normalize(sym);
      const auto sg = smooth(norm, sc);
      const auto refined = reselect_neighborhoods(sg, cloud, sc.k_out);
      const auto new_report = degree_report(refined.to_adjacency());
      rec.output("adjacency_normalized", adjacency_to_text(norm, fmt));
      rec.output("smoothed_matrix", adjacency_to_text(sg.s_matrix, fmt));
      rec.output("neighborhoods_smoothed", neighborhoods_to_text(refined, cloud, {}, fmt));
      rec.output("degrees_smoothed", degree_heatmap_to_text(new_report, cloud, fmt));
      nlohmann::ordered_json m{
          {"s_nonzeros", sg.s_matrix.nonzeros()},
          {"diagonal_dominance_violations", diagonal_dominance_violations(sg.s_matrix).size()},
          {"reach_stddev_raw", raw_report.in_summary.stddev},
          {"reach_stddev_smoothed", new_report.in_summary.stddev},
          {"reach_extreme_raw", detail::count_outside(raw_report.in_degree, extreme_lo, extreme_hi)},
          {"reach_extreme_smoothed", detail::count_outside(new_report.in_degree, extreme_lo, extreme_hi)},
          {"extreme_thresholds", {extreme_lo, extreme_hi}},
          {"input_fingerprint", sg.input_fingerprint},
          {"config_fingerprint", sg.config_fingerprint}};
      if (band) {
        m["junction_band_points"] = band->size();
        m["junction_cross_label_raw"] = mean_cross_label_fraction(cloud, raw_neighbors, *band);
        m["junction_cross_label_smoothed"] = mean_cross_label_fraction(cloud, refined, *band);
      }
      metrics["smooth"] = std::move(m);
      rec.end();

      if (has(Stage::kGeometry)) {
        rec.begin(Stage::kGeometry);
        const auto frames = local_frames(cloud, refined, sc.eps);
        const auto cyl = cylindrical_all(cloud, refined, frames, sc.eps);
        rec.output("frames", frames_to_text(frames, fmt));
        rec.output("cylindrical", cylindrical_to_text(refined, cyl, fmt));
        rec.end();

        if (has(Stage::kAggregate)) {
          rec.begin(Stage::kAggregate);
          Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
          const Index eta = cloud.feature_width();
          AggregationSpec base;
          base.mode = AggregationMode::kBaseline;
          base.weight_psi = detail::random_matrix(rng, eta + 3, cfg.out_width);
          base.bias = detail::random_vector(rng, cfg.out_width);
          base.activation = Activation::by_name(cfg.activation);
          base.pool = pool_by_name(cfg.pool);
          AggregationSpec enh = base;
          enh.mode = AggregationMode::kEnhanced;
          enh.weight_psi = detail::random_matrix(rng, eta + 6, cfg.out_width);
          enh.weight_phi = detail::random_matrix(rng, 3, cfg.phi_width);
          enh.bias_phi = detail::random_vector(rng, cfg.phi_width);
          rec.output("features_baseline", matrix_to_text(aggregate_baseline(cloud, raw_neighbors, base), fmt));
          rec.output("features_enhanced", matrix_to_text(aggregate_enhanced(cloud, refined, frames, cyl, enh), fmt));
          rec.end();
        }
      }
    }
  }

  nlohmann::ordered_json manifest;
  manifest["config"] = detail::config_json(cfg);
  manifest["stages"] = rec.stages();
  manifest["metrics"] = std::move(metrics);
  write_file(cfg.out_dir / "manifest.json", manifest.dump(2) + "\n");
  return manifest;
}

/// Runs fn and maps the outcome to the exit status contract: 0 success,
/// 1 input error, 2 invariant violation or other internal failure.
template <typename Fn>
int guarded_exit_code(Fn&& fn, std::ostream& diag) {
  try {
    fn();
    return 0;
  } catch (const InvariantViolation& e) {
    diag << "invariant violation: " << e.what() << '\n';
    return 2;
  } catch (const InputError& e) {
    diag << "input error: " << e.what() << '\n';
    return 1;
  } catch (const nlohmann::json::exception& e) {
    diag << "input error: " << e.what() << '\n';
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    diag << "input error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    diag << "internal error: " << e.what() << '\n';
    return 2;
  }
}

inline int run_pipeline_guarded(const PipelineConfig& cfg, std::ostream& diag) {
  return guarded_exit_code([&] { run_pipeline(cfg); }, diag);
}

}  // namespace ptgraph
