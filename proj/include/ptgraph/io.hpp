// ptgraph - point cloud neighbor graphs, graph smoothing and local geometry
//
// Point cloud parsing (xyz, csv, ascii PLY) and diagnostic exporters with
// matching parsers. Floating point values are written in shortest
// round-trip form so re-parsing reproduces them exactly.

#pragma once

#include <array>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>
#include <openssl/evp.h>

#include "ptgraph/construct.hpp"
#include "ptgraph/core.hpp"
#include "ptgraph/fixtures.hpp"
#include "ptgraph/geometry.hpp"

namespace ptgraph {

/// Parse failure carrying the 1-based line it occurred on (0 if none).
class ParseError : public InputError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : InputError(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// ---------------------------------------------------------------------------
// Primitives

inline std::string format_double(double v) {
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw InvariantViolation("format_double failed");
  return std::string(buf.data(), end);
}

inline std::optional<double> parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

inline std::optional<Index> parse_index(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
  Index v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? line.npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::vector<std::string_view> split_whitespace(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

inline std::vector<std::string> read_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot open '" + path.string() + "' for writing");
  out << content;
  if (!out) throw InputError("write failed for '" + path.string() + "'");
}

inline std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw InvariantViolation("sha256 digest failed");
  }
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int e = 0; e < len; ++e) {
    char b[3];
    std::snprintf(b, sizeof(b), "%02x", digest[e]);
    hex += b;
  }
  return hex;
}

// ---------------------------------------------------------------------------
// Point clouds

enum class CloudFormat { kXyz, kCsv, kPlyAscii };

inline CloudFormat cloud_format_by_name(const std::string& name) {
  if (name == "xyz") return CloudFormat::kXyz;
  if (name == "csv") return CloudFormat::kCsv;
  if (name == "ply" || name == "ply-ascii") return CloudFormat::kPlyAscii;
  throw InputError("unknown cloud format '" + name + "' (expected xyz, csv or ply-ascii)");
}

inline CloudFormat cloud_format_of_path(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".csv") return CloudFormat::kCsv;
  if (ext == ".ply") return CloudFormat::kPlyAscii;
  return CloudFormat::kXyz;
}

namespace detail {

inline PointCloud cloud_from_rows(const std::vector<std::vector<double>>& rows) {
  PointCloud cloud;
  cloud.points.reserve(rows.size());
  const Index width = rows.front().size();
  for (const auto& r : rows) cloud.points.emplace_back(r[0], r[1], r[2]);
  if (width > 3) {
    Eigen::MatrixXd f(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width - 3));
    for (Index i = 0; i < rows.size(); ++i) {
      for (Index c = 3; c < width; ++c) f(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c - 3)) = rows[i][c];
    }
    cloud.features = std::move(f);
  }
  return cloud;
}

inline PointCloud parse_delimited(const std::string& text, bool csv) {
  const auto lines = read_lines(text);
  std::vector<std::vector<double>> rows;
  std::optional<Index> width;
  bool first_content = true;
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    std::string_view line = lines[ln];
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string_view::npos || line[first] == '#') continue;
    auto cells = csv ? split(line, ',') : split_whitespace(line);
    std::vector<double> values;
    values.reserve(cells.size());
    bool numeric = true;
    for (auto c : cells) {
      auto v = parse_double(c);
      if (!v) {
        numeric = false;
        break;
      }
      values.push_back(*v);
    }
    if (!numeric) {
      if (csv && first_content) {  // header row
        first_content = false;
        continue;
      }
      throw ParseError("non-numeric value", ln + 1);
    }
    first_content = false;
    if (values.size() < 3) throw ParseError("expected at least 3 columns", ln + 1);
    if (width && *width != values.size()) {
      throw ParseError("column count " + std::to_string(values.size()) + " differs from " +
                           std::to_string(*width),
                       ln + 1);
    }
    width = values.size();
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw ParseError("file contains no points", 0);
  return cloud_from_rows(rows);
}

inline PointCloud parse_ply_ascii(const std::string& text) {
  const auto lines = read_lines(text);
  if (lines.empty() || lines[0] != "ply") throw ParseError("missing 'ply' magic", 1);

  struct Element {
    std::string name;
    Index count;
    std::vector<std::string> properties;  // scalar property names; "" for lists
  };
  std::vector<Element> elements;
  std::size_t ln = 1;
  bool ascii = false;
  for (; ln < lines.size(); ++ln) {
    const auto tok = split_whitespace(lines[ln]);
    if (tok.empty()) continue;
    if (tok[0] == "end_header") {
      ++ln;
      break;
    }
    if (tok[0] == "format") {
      if (tok.size() < 2) throw ParseError("malformed format line", ln + 1);
      if (tok[1] != "ascii") {
        throw ParseError("binary PLY is not supported; convert to ascii PLY", ln + 1);
      }
      ascii = true;
    } else if (tok[0] == "element") {
      if (tok.size() != 3) throw ParseError("malformed element line", ln + 1);
      auto count = parse_index(tok[2]);
      if (!count) throw ParseError("bad element count", ln + 1);
      elements.push_back({std::string(tok[1]), *count, {}});
    } else if (tok[0] == "property") {
      if (elements.empty()) throw ParseError("property before element", ln + 1);
      if (tok.size() >= 2 && tok[1] == "list") {
        elements.back().properties.emplace_back();
      } else if (tok.size() == 3) {
        elements.back().properties.emplace_back(tok[2]);
      } else {
        throw ParseError("malformed property line", ln + 1);
      }
    } else if (tok[0] != "comment" && tok[0] != "obj_info") {
      throw ParseError("unexpected header keyword '" + std::string(tok[0]) + "'", ln + 1);
    }
  }
  if (!ascii) throw ParseError("missing format line", 0);

  for (const auto& el : elements) {
    if (el.name != "vertex") {
      ln += el.count;  // skip body lines of elements preceding the vertices
      continue;
    }
    std::optional<Index> ix, iy, iz;
    std::vector<Index> extra;
    for (Index p = 0; p < el.properties.size(); ++p) {
      const auto& name = el.properties[p];
      if (name.empty()) throw ParseError("list properties on vertices are not supported", 0);
      if (name == "x") ix = p;
      else if (name == "y") iy = p;
      else if (name == "z") iz = p;
      else extra.push_back(p);
    }
    if (!ix || !iy || !iz) throw ParseError("vertex element lacks x, y or z", 0);
    if (el.count == 0) throw ParseError("file contains no points", 0);
    std::vector<std::vector<double>> rows;
    for (Index v = 0; v < el.count; ++v, ++ln) {
      if (ln >= lines.size()) throw ParseError("unexpected end of vertex data", ln + 1);
      const auto tok = split_whitespace(lines[ln]);
      if (tok.size() != el.properties.size()) throw ParseError("vertex property count mismatch", ln + 1);
      std::vector<double> values(el.properties.size());
      for (Index p = 0; p < tok.size(); ++p) {
        auto d = parse_double(tok[p]);
        if (!d) throw ParseError("non-numeric vertex value", ln + 1);
        values[p] = *d;
      }
      std::vector<double> row{values[*ix], values[*iy], values[*iz]};
      for (Index p : extra) row.push_back(values[p]);
      rows.push_back(std::move(row));
    }
    return cloud_from_rows(rows);
  }
  throw ParseError("no vertex element", 0);
}

}  // namespace detail

inline PointCloud parse_cloud_text(const std::string& text, CloudFormat format) {
  if (text.empty()) throw ParseError("empty file", 0);
  switch (format) {
    case CloudFormat::kXyz: return detail::parse_delimited(text, false);
    case CloudFormat::kCsv: return detail::parse_delimited(text, true);
    case CloudFormat::kPlyAscii: return detail::parse_ply_ascii(text);
  }
  throw InputError("unknown cloud format");
}

inline PointCloud parse_cloud(const std::filesystem::path& path, CloudFormat format) {
  auto cloud = parse_cloud_text(read_file(path), format);
  require_valid(cloud);
  return cloud;
}

/// Serializes coordinates followed by feature columns; xyz or csv only.
inline std::string cloud_to_text(const PointCloud& cloud, CloudFormat format) {
  if (format == CloudFormat::kPlyAscii) {
    std::ostringstream os;
    os << "ply\nformat ascii 1.0\nelement vertex " << cloud.size()
       << "\nproperty double x\nproperty double y\nproperty double z\n";
    for (Index c = 0; c < cloud.feature_width(); ++c) os << "property double f" << c << '\n';
    os << "end_header\n";
    for (Index i = 0; i < cloud.size(); ++i) {
      for (int a = 0; a < 3; ++a) os << (a ? " " : "") << format_double(cloud.points[i][a]);
      for (Index c = 0; c < cloud.feature_width(); ++c) {
        os << ' ' << format_double((*cloud.features)(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)));
      }
      os << '\n';
    }
    return os.str();
  }
  const char sep = format == CloudFormat::kCsv ? ',' : ' ';
  std::ostringstream os;
  for (Index i = 0; i < cloud.size(); ++i) {
    for (int a = 0; a < 3; ++a) os << (a ? std::string(1, sep) : "") << format_double(cloud.points[i][a]);
    for (Index c = 0; c < cloud.feature_width(); ++c) {
      os << sep << format_double((*cloud.features)(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)));
    }
    os << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Diagnostic exports

enum class ExportFormat { kJson, kCsv };

inline ExportFormat export_format_by_name(const std::string& name) {
  if (name == "json") return ExportFormat::kJson;
  if (name == "csv") return ExportFormat::kCsv;
  throw InputError("unknown export format '" + name + "' (expected json or csv)");
}

inline const char* extension_of(ExportFormat f) { return f == ExportFormat::kJson ? ".json" : ".csv"; }

inline bool looks_like_json(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  return first != std::string::npos && (text[first] == '{' || text[first] == '[');
}

// Adjacency -----------------------------------------------------------------

inline std::string adjacency_to_text(const SparseAdjacency& adj, ExportFormat format) {
  if (format == ExportFormat::kJson) {
    nlohmann::ordered_json j;
    j["n"] = adj.dim();
    j["symmetric"] = adj.symmetric();
    auto entries = nlohmann::ordered_json::array();
    for (Index i = 0; i < adj.dim(); ++i) {
      for (const auto& e : adj.row(i)) entries.push_back({i, e.col, e.weight});
    }
    j["entries"] = std::move(entries);
    return j.dump(1) + "\n";
  }
  std::ostringstream os;
  os << "# n=" << adj.dim() << " symmetric=" << (adj.symmetric() ? 1 : 0) << '\n';
  os << "row,col,weight\n";
  for (Index i = 0; i < adj.dim(); ++i) {
    for (const auto& e : adj.row(i)) os << i << ',' << e.col << ',' << format_double(e.weight) << '\n';
  }
  return os.str();
}

inline SparseAdjacency adjacency_from_text(const std::string& text) {
  if (looks_like_json(text)) {
    const auto j = nlohmann::json::parse(text);
    const Index n = j.at("n").get<Index>();
    std::vector<std::vector<Entry>> rows(n);
    for (const auto& e : j.at("entries")) {
      const Index i = e.at(0).get<Index>();
      if (i >= n) throw ParseError("adjacency row out of range", 0);
      rows[i].push_back({e.at(1).get<Index>(), e.at(2).get<double>()});
    }
    return SparseAdjacency(n, std::move(rows), j.at("symmetric").get<bool>());
  }
  const auto lines = read_lines(text);
  Index n = 0;
  int sym = 0;
  if (lines.empty() || std::sscanf(lines[0].c_str(), "# n=%zu symmetric=%d", &n, &sym) != 2) {
    throw ParseError("missing adjacency header", 1);
  }
  const bool symmetric = sym != 0;
  std::vector<std::vector<Entry>> rows(n);
  for (std::size_t ln = 2; ln < lines.size(); ++ln) {
    if (lines[ln].empty()) continue;
    const auto cells = split(lines[ln], ',');
    if (cells.size() != 3) throw ParseError("expected row,col,weight", ln + 1);
    auto i = parse_index(cells[0]);
    auto c = parse_index(cells[1]);
    auto w = parse_double(cells[2]);
    if (!i || !c || !w || *i >= n) throw ParseError("malformed adjacency entry", ln + 1);
    rows[*i].push_back({*c, *w});
  }
  return SparseAdjacency(n, std::move(rows), symmetric);
}

// Degree heatmap --------------------------------------------------------------

struct DegreeHeatmap {
  std::vector<Point> points;
  DegreeReport report;
};

inline std::string degree_heatmap_to_text(const DegreeReport& report, const PointCloud& cloud,
                                          ExportFormat format) {
  if (report.out_degree.size() != cloud.size()) throw InputError("degree heatmap: report/cloud size mismatch");
  auto summary_json = [](const DegreeSummary& s) {
    return nlohmann::ordered_json{{"min", s.min}, {"max", s.max}, {"mean", s.mean}, {"stddev", s.stddev}};
  };
  if (format == ExportFormat::kJson) {
    nlohmann::ordered_json j;
    auto records = nlohmann::ordered_json::array();
    for (Index i = 0; i < cloud.size(); ++i) {
      const auto& p = cloud.points[i];
      records.push_back({{"index", i}, {"x", p.x()}, {"y", p.y()}, {"z", p.z()},
                         {"d_out", report.out_degree[i]}, {"d_in", report.in_degree[i]}});
    }
    j["points"] = std::move(records);
    j["summary"] = {{"out", summary_json(report.out_summary)}, {"in", summary_json(report.in_summary)}};
    return j.dump(1) + "\n";
  }
  std::ostringstream os;
  os << "index,x,y,z,d_out,d_in\n";
  for (Index i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.points[i];
    os << i << ',' << format_double(p.x()) << ',' << format_double(p.y()) << ',' << format_double(p.z())
       << ',' << report.out_degree[i] << ',' << report.in_degree[i] << '\n';
  }
  os << "\n# summary\nstat,out,in\n";
  os << "min," << format_double(report.out_summary.min) << ',' << format_double(report.in_summary.min) << '\n';
  os << "max," << format_double(report.out_summary.max) << ',' << format_double(report.in_summary.max) << '\n';
  os << "mean," << format_double(report.out_summary.mean) << ',' << format_double(report.in_summary.mean) << '\n';
  os << "stddev," << format_double(report.out_summary.stddev) << ',' << format_double(report.in_summary.stddev)
     << '\n';
  return os.str();
}

/// Inverse of degree_heatmap_to_text; histograms and summaries are rebuilt
/// from the per-point degrees.
inline DegreeHeatmap degree_heatmap_from_text(const std::string& text) {
  DegreeHeatmap out;
  std::vector<Index> d_out, d_in;
  if (looks_like_json(text)) {
    const auto j = nlohmann::json::parse(text);
    for (const auto& r : j.at("points")) {
      out.points.emplace_back(r.at("x").get<double>(), r.at("y").get<double>(), r.at("z").get<double>());
      d_out.push_back(r.at("d_out").get<Index>());
      d_in.push_back(r.at("d_in").get<Index>());
    }
  } else {
    const auto lines = read_lines(text);
    for (std::size_t ln = 1; ln < lines.size(); ++ln) {
      if (lines[ln].empty()) break;
      const auto cells = split(lines[ln], ',');
      if (cells.size() != 6) throw ParseError("expected 6 heatmap columns", ln + 1);
      auto x = parse_double(cells[1]), y = parse_double(cells[2]), z = parse_double(cells[3]);
      auto o = parse_index(cells[4]), in = parse_index(cells[5]);
      if (!x || !y || !z || !o || !in) throw ParseError("malformed heatmap record", ln + 1);
      out.points.emplace_back(*x, *y, *z);
      d_out.push_back(*o);
      d_in.push_back(*in);
    }
  }
  out.report = DegreeReport::from_degrees(std::move(d_out), std::move(d_in));
  return out;
}

// Neighborhoods -------------------------------------------------------------

struct NeighborhoodRecord {
  Index query;
  std::vector<Index> neighbors;
  std::optional<double> cross_label_fraction;
};

struct NeighborhoodDump {
  Index max_size = 0;
  Index n_points = 0;
  std::vector<NeighborhoodRecord> records;

  /// Rebuilds the full NeighborList; requires one record per point in order.
  NeighborList to_neighbor_list() const {
    if (records.size() != n_points) throw InputError("neighborhood dump does not cover every point");
    std::vector<std::vector<Index>> lists(n_points);
    for (Index i = 0; i < n_points; ++i) {
      if (records[i].query != i) throw InputError("neighborhood dump records out of order");
      lists[i] = records[i].neighbors;
    }
    return NeighborList(std::move(lists), max_size);
  }
};

/// Exports the listed query points (all points when `queries` is empty).
inline std::string neighborhoods_to_text(const NeighborList& neighbors, const PointCloud& cloud,
                                         std::span<const Index> queries, ExportFormat format) {
  if (neighbors.size() != cloud.size()) throw InputError("neighborhood export: list/cloud size mismatch");
  std::vector<Index> all;
  if (queries.empty()) {
    all.resize(cloud.size());
    std::iota(all.begin(), all.end(), Index{0});
    queries = all;
  }
  for (Index q : queries) {
    if (q >= cloud.size()) throw InputError("neighborhood export: query index " + std::to_string(q) + " out of range");
  }
  const bool labeled = cloud.labels.has_value();
  if (format == ExportFormat::kJson) {
    nlohmann::ordered_json j;
    j["max_size"] = neighbors.max_size();
    j["n_points"] = cloud.size();
    auto records = nlohmann::ordered_json::array();
    for (Index q : queries) {
      nlohmann::ordered_json r;
      const auto& p = cloud.points[q];
      r["query"] = q;
      r["point"] = {p.x(), p.y(), p.z()};
      r["neighbors"] = neighbors[q];
      auto coords = nlohmann::ordered_json::array();
      for (Index nb : neighbors[q]) {
        const auto& np = cloud.points[nb];
        coords.push_back({np.x(), np.y(), np.z()});
      }
      r["neighbor_points"] = std::move(coords);
      if (labeled) r["cross_label_fraction"] = cross_label_fraction(cloud, q, neighbors[q]);
      records.push_back(std::move(r));
    }
    j["records"] = std::move(records);
    return j.dump(1) + "\n";
  }
  std::ostringstream os;
  os << "# max_size=" << neighbors.max_size() << " n_points=" << cloud.size() << '\n';
  os << "query,qx,qy,qz,rank,neighbor,nx,ny,nz,cross_label_fraction\n";
  for (Index q : queries) {
    const auto& p = cloud.points[q];
    const std::string frac = labeled ? format_double(cross_label_fraction(cloud, q, neighbors[q])) : "";
    for (Index r = 0; r < neighbors[q].size(); ++r) {
      const Index nb = neighbors[q][r];
      const auto& np = cloud.points[nb];
      os << q << ',' << format_double(p.x()) << ',' << format_double(p.y()) << ',' << format_double(p.z()) << ','
         << r << ',' << nb << ',' << format_double(np.x()) << ',' << format_double(np.y()) << ','
         << format_double(np.z()) << ',' << frac << '\n';
    }
  }
  return os.str();
}

inline NeighborhoodDump neighborhoods_from_text(const std::string& text) {
  NeighborhoodDump dump;
  if (looks_like_json(text)) {
    const auto j = nlohmann::json::parse(text);
    dump.max_size = j.at("max_size").get<Index>();
    dump.n_points = j.at("n_points").get<Index>();
    for (const auto& r : j.at("records")) {
      NeighborhoodRecord rec{r.at("query").get<Index>(), r.at("neighbors").get<std::vector<Index>>(), std::nullopt};
      if (r.contains("cross_label_fraction")) rec.cross_label_fraction = r.at("cross_label_fraction").get<double>();
      dump.records.push_back(std::move(rec));
    }
    return dump;
  }
  const auto lines = read_lines(text);
  if (lines.empty() ||
      std::sscanf(lines[0].c_str(), "# max_size=%zu n_points=%zu", &dump.max_size, &dump.n_points) != 2) {
    throw ParseError("missing neighborhood header", 1);
  }
  for (std::size_t ln = 2; ln < lines.size(); ++ln) {
    if (lines[ln].empty()) continue;
    const auto cells = split(lines[ln], ',');
    if (cells.size() != 10) throw ParseError("expected 10 neighborhood columns", ln + 1);
    auto q = parse_index(cells[0]);
    auto rank = parse_index(cells[4]);
    auto nb = parse_index(cells[5]);
    if (!q || !rank || !nb) throw ParseError("malformed neighborhood record", ln + 1);
    if (dump.records.empty() || dump.records.back().query != *q || *rank == 0) {
      if (*rank != 0) throw ParseError("neighbor ranks must start at 0", ln + 1);
      dump.records.push_back({*q, {}, std::nullopt});
      if (!cells[9].empty()) dump.records.back().cross_label_fraction = parse_double(cells[9]);
    }
    if (*rank != dump.records.back().neighbors.size()) throw ParseError("neighbor rank out of sequence", ln + 1);
    dump.records.back().neighbors.push_back(*nb);
  }
  return dump;
}

// Geometry and features -----------------------------------------------------

inline std::string frames_to_text(const std::vector<LocalFrame>& frames, ExportFormat format) {
  if (format == ExportFormat::kJson) {
    auto arr = nlohmann::ordered_json::array();
    for (Index i = 0; i < frames.size(); ++i) {
      const auto& f = frames[i];
      const auto d = shape_descriptors(f);
      nlohmann::ordered_json r;
      r["index"] = i;
      r["eigenvalues"] = {f.eigenvalues[0], f.eigenvalues[1], f.eigenvalues[2]};
      auto vecs = nlohmann::ordered_json::array();
      for (int c = 0; c < 3; ++c) {
        vecs.push_back({f.eigenvectors(0, c), f.eigenvectors(1, c), f.eigenvectors(2, c)});
      }
      r["eigenvectors"] = std::move(vecs);
      r["centroid"] = {f.centroid.x(), f.centroid.y(), f.centroid.z()};
      r["linearity"] = d.linearity;
      r["planarity"] = d.planarity;
      r["sphericity"] = d.sphericity;
      arr.push_back(std::move(r));
    }
    return nlohmann::ordered_json{{"frames", std::move(arr)}}.dump(1) + "\n";
  }
  std::ostringstream os;
  os << "index,l1,l2,l3,v1x,v1y,v1z,v2x,v2y,v2z,v3x,v3y,v3z,cx,cy,cz,linearity,planarity,sphericity\n";
  for (Index i = 0; i < frames.size(); ++i) {
    const auto& f = frames[i];
    const auto d = shape_descriptors(f);
    os << i;
    for (int a = 0; a < 3; ++a) os << ',' << format_double(f.eigenvalues[a]);
    for (int c = 0; c < 3; ++c) {
      for (int a = 0; a < 3; ++a) os << ',' << format_double(f.eigenvectors(a, c));
    }
    for (int a = 0; a < 3; ++a) os << ',' << format_double(f.centroid[a]);
    os << ',' << format_double(d.linearity) << ',' << format_double(d.planarity) << ','
       << format_double(d.sphericity) << '\n';
  }
  return os.str();
}

inline std::string cylindrical_to_text(const NeighborList& neighbors, const std::vector<CylindricalCoords>& cyl,
                                       ExportFormat format) {
  if (format == ExportFormat::kJson) {
    auto arr = nlohmann::ordered_json::array();
    for (Index i = 0; i < cyl.size(); ++i) {
      nlohmann::ordered_json r;
      r["query"] = i;
      r["neighbors"] = neighbors[i];
      r["h"] = cyl[i].h;
      r["omega"] = cyl[i].omega;
      r["cos_theta"] = cyl[i].cos_theta;
      r["h_norm"] = cyl[i].h_norm;
      r["omega_norm"] = cyl[i].omega_norm;
      arr.push_back(std::move(r));
    }
    return nlohmann::ordered_json{{"cylindrical", std::move(arr)}}.dump(1) + "\n";
  }
  std::ostringstream os;
  os << "query,neighbor,h,omega,cos_theta,h_norm,omega_norm\n";
  for (Index i = 0; i < cyl.size(); ++i) {
    for (Index e = 0; e < cyl[i].size(); ++e) {
      os << i << ',' << neighbors[i][e] << ',' << format_double(cyl[i].h[e]) << ',' << format_double(cyl[i].omega[e])
         << ',' << format_double(cyl[i].cos_theta[e]) << ',' << format_double(cyl[i].h_norm[e]) << ','
         << format_double(cyl[i].omega_norm[e]) << '\n';
    }
  }
  return os.str();
}

inline std::string matrix_to_text(const Eigen::MatrixXd& m, ExportFormat format) {
  if (format == ExportFormat::kJson) {
    auto rows = nlohmann::ordered_json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      auto row = nlohmann::ordered_json::array();
      for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
      rows.push_back(std::move(row));
    }
    return nlohmann::ordered_json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(rows)}}.dump(1) + "\n";
  }
  std::ostringstream os;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) os << (c ? "," : "") << format_double(m(r, c));
    os << '\n';
  }
  return os.str();
}

// File-level wrappers -------------------------------------------------------

inline void export_degree_heatmap(const DegreeReport& report, const PointCloud& cloud,
                                  const std::filesystem::path& path, ExportFormat format) {
  write_file(path, degree_heatmap_to_text(report, cloud, format));
}

inline void export_neighborhoods(const NeighborList& neighbors, const PointCloud& cloud,
                                 std::span<const Index> queries, const std::filesystem::path& path,
                                 ExportFormat format) {
  write_file(path, neighborhoods_to_text(neighbors, cloud, queries, format));
}

inline DegreeHeatmap parse_degree_heatmap(const std::filesystem::path& path) {
  return degree_heatmap_from_text(read_file(path));
}

inline NeighborhoodDump parse_neighborhoods(const std::filesystem::path& path) {
  return neighborhoods_from_text(read_file(path));
}

}  // namespace ptgraph
