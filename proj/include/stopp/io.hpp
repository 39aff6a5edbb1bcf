#pragma once

// CSV and JSON readers/writers for patterns, networks, surfaces and intensities.

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "stopp/error.hpp"
#include "stopp/geometry.hpp"
#include "stopp/intensity.hpp"
#include "stopp/pattern.hpp"
#include "stopp/secondorder.hpp"

namespace stopp::io {

using json = nlohmann::json;

namespace detail {

inline std::string trim(std::string s) {
  auto issp = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && issp(s.back())) s.pop_back();
  std::size_t k = 0;
  while (k < s.size() && issp(s[k])) ++k;
  return s.substr(k);
}

/// Splits one CSV record; double quotes group fields and "" escapes a quote.
inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    char c = line[k];
    if (quoted) {
      if (c == '"' && k + 1 < line.size() && line[k + 1] == '"') {
        cur += '"';
        ++k;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

inline std::optional<double> parse_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return v;
}

inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open '" + path + "' for reading");
  return in;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot open '" + path + "' for writing");
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Patterns

/// Raw table read from a pattern CSV: coordinates, marks and any domain
/// declared in "# window:" / "# time:" comment lines.
struct PatternTable {
  std::vector<STPoint> points;
  MarkTable marks;
  std::optional<Window> window;
  std::optional<TimeInterval> time;
};

/// Reads a header row with columns x, y, t (any order) plus optional mark
/// columns. Columns whose every value parses as a number become numeric marks;
/// the rest become categorical marks with levels in order of appearance.
inline PatternTable read_pattern_table(std::istream& in) {
  PatternTable tab;
  std::string line;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string t = detail::trim(line);
    if (t.empty()) continue;
    if (t[0] == '#') {
      std::istringstream ss(t.substr(1));
      std::string key;
      ss >> key;
      if (key == "window:") {
        double a, b, c, d;
        if (!(ss >> a >> b >> c >> d)) throw Error(Errc::ParseError, "malformed '# window:' line");
        tab.window = Window({a, b}, {c, d});
      } else if (key == "time:") {
        double a, b;
        if (!(ss >> a >> b)) throw Error(Errc::ParseError, "malformed '# time:' line");
        tab.time = TimeInterval(a, b);
      }
      continue;
    }
    auto fields = detail::split_csv(t);
    if (header.empty()) {
      header = std::move(fields);
      continue;
    }
    if (fields.size() != header.size())
      throw Error(Errc::ParseError, "line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                                        " fields, expected " + std::to_string(header.size()));
    rows.push_back(std::move(fields));
  }
  if (header.empty()) throw Error(Errc::ParseError, "missing header row");
  int ix = -1, iy = -1, it = -1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "x") ix = static_cast<int>(c);
    else if (header[c] == "y") iy = static_cast<int>(c);
    else if (header[c] == "t") it = static_cast<int>(c);
  }
  if (ix < 0 || iy < 0 || it < 0) throw Error(Errc::ParseError, "pattern CSV needs columns x, y and t");
  tab.points.resize(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto x = detail::parse_double(rows[r][ix]), y = detail::parse_double(rows[r][iy]),
         t = detail::parse_double(rows[r][it]);
    if (!x || !y || !t) throw Error(Errc::ParseError, "non-numeric coordinate in data row " + std::to_string(r + 1));
    tab.points[r] = {*x, *y, *t};
  }
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (static_cast<int>(c) == ix || static_cast<int>(c) == iy || static_cast<int>(c) == it) continue;
    MarkColumn col{header[c], {}, {}};
    bool numeric = true;
    for (const auto& row : rows) {
      auto v = detail::parse_double(row[c]);
      if (!v) {
        numeric = false;
        break;
      }
      col.values.push_back(*v);
    }
    if (!numeric) {
      col.values.clear();
      std::map<std::string, std::size_t> code;
      for (const auto& row : rows) {
        auto [pos, inserted] = code.emplace(row[c], col.levels.size());
        if (inserted) col.levels.push_back(row[c]);
        col.values.push_back(static_cast<double>(pos->second));
      }
    }
    tab.marks.push_back(std::move(col));
  }
  return tab;
}

inline PatternTable read_pattern_table(const std::string& path) {
  auto in = detail::open_in(path);
  return read_pattern_table(in);
}

/// Builds a pattern from a table: explicit domain arguments win over the
/// declared comment lines, which win over the bounding box. With a network the
/// points are snapped.
inline PointPattern make_pattern(PatternTable tab, std::optional<Window> window = std::nullopt,
                                 std::optional<TimeInterval> time = std::nullopt,
                                 std::shared_ptr<const LinearNetwork> net = nullptr) {
  if (!window) window = tab.window;
  if (!time) time = tab.time;
  if (net) return PointPattern::on_network(std::move(tab.points), std::move(net), time, std::move(tab.marks));
  if (!window || !time) {
    if (tab.points.empty()) throw Error(Errc::EmptyPattern, "cannot infer a domain from zero points");
    auto [w, t] = PointPattern::bounding_box(tab.points);
    if (!window) window = w;
    if (!time) time = t;
  }
  return PointPattern::planar(std::move(tab.points), *window, *time, std::move(tab.marks));
}

inline PointPattern read_pattern_csv(const std::string& path, std::optional<Window> window = std::nullopt,
                                     std::optional<TimeInterval> time = std::nullopt,
                                     std::shared_ptr<const LinearNetwork> net = nullptr) {
  return make_pattern(read_pattern_table(path), window, time, std::move(net));
}

/// Writes the domain as comment lines, then x, y, t and the marks at full
/// precision (categorical marks as their level names).
inline void write_pattern_csv(std::ostream& os, const PointPattern& p) {
  if (p.window())
    os << "# window: " << detail::num(p.window()->x().lo) << ' ' << detail::num(p.window()->x().hi) << ' '
       << detail::num(p.window()->y().lo) << ' ' << detail::num(p.window()->y().hi) << '\n';
  os << "# time: " << detail::num(p.time().lo()) << ' ' << detail::num(p.time().hi()) << '\n';
  os << "x,y,t";
  for (const auto& m : p.marks()) os << ',' << detail::quote(m.name);
  os << '\n';
  for (std::size_t i = 0; i < p.size(); ++i) {
    os << detail::num(p[i].x) << ',' << detail::num(p[i].y) << ',' << detail::num(p[i].t);
    for (const auto& m : p.marks()) {
      os << ',';
      if (m.categorical())
        os << detail::quote(m.levels.at(static_cast<std::size_t>(m.values[i])));
      else
        os << detail::num(m.values[i]);
    }
    os << '\n';
  }
}

inline void write_pattern_csv(const std::string& path, const PointPattern& p) {
  auto out = detail::open_out(path);
  write_pattern_csv(out, p);
}

inline json pattern_to_json(const PointPattern& p) {
  json j;
  j["n"] = p.size();
  json pts = json::array();
  for (const auto& q : p.points()) pts.push_back({q.x, q.y, q.t});
  j["points"] = std::move(pts);
  j["time"] = {p.time().lo(), p.time().hi()};
  if (p.window()) {
    j["domain"] = "window";
    j["window"] = {p.window()->x().lo, p.window()->x().hi, p.window()->y().lo, p.window()->y().hi};
  } else {
    j["domain"] = "network";
    json locs = json::array();
    for (const auto& l : p.locations()) locs.push_back({l.segment, l.offset});
    j["network_locations"] = std::move(locs);
  }
  json marks = json::array();
  for (const auto& m : p.marks()) marks.push_back({{"name", m.name}, {"values", m.values}, {"levels", m.levels}});
  j["marks"] = std::move(marks);
  return j;
}

// ---------------------------------------------------------------------------
// Networks

/// One segment per row with columns x0, y0, x1, y1.
inline LinearNetwork read_network_csv(std::istream& in, std::optional<double> snap = std::nullopt) {
  auto tab_rows = [&] {
    std::vector<std::pair<Point2, Point2>> segs;
    std::string line;
    std::vector<std::string> header;
    int c[4] = {-1, -1, -1, -1};
    const char* names[4] = {"x0", "y0", "x1", "y1"};
    while (std::getline(in, line)) {
      std::string t = detail::trim(line);
      if (t.empty() || t[0] == '#') continue;
      auto f = detail::split_csv(t);
      if (header.empty()) {
        header = f;
        for (std::size_t k = 0; k < f.size(); ++k)
          for (int a = 0; a < 4; ++a)
            if (f[k] == names[a]) c[a] = static_cast<int>(k);
        for (int a = 0; a < 4; ++a)
          if (c[a] < 0) throw Error(Errc::ParseError, "network CSV needs columns x0, y0, x1, y1");
        continue;
      }
      double v[4];
      for (int a = 0; a < 4; ++a) {
        auto d = static_cast<std::size_t>(c[a]) < f.size() ? detail::parse_double(f[c[a]]) : std::nullopt;
        if (!d) throw Error(Errc::ParseError, "non-numeric network coordinate in row " + std::to_string(segs.size() + 1));
        v[a] = *d;
      }
      segs.push_back({{v[0], v[1]}, {v[2], v[3]}});
    }
    return segs;
  }();
  return build_network(tab_rows, snap);
}

/// {"vertices": [[x, y], ...], "edges": [[i, j], ...]}
inline LinearNetwork read_network_json(const json& j, std::optional<double> snap = std::nullopt) {
  try {
    const auto& verts = j.at("vertices");
    std::vector<std::pair<Point2, Point2>> segs;
    for (const auto& e : j.at("edges")) {
      std::size_t a = e.at(0).get<std::size_t>(), b = e.at(1).get<std::size_t>();
      if (a >= verts.size() || b >= verts.size()) throw Error(Errc::ParseError, "edge references a missing vertex");
      segs.push_back({{verts[a].at(0).get<double>(), verts[a].at(1).get<double>()},
                      {verts[b].at(0).get<double>(), verts[b].at(1).get<double>()}});
    }
    return build_network(segs, snap);
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, std::string("network JSON: ") + e.what());
  }
}

/// Reads a network from a .json file or a CSV file (decided by extension).
inline std::shared_ptr<const LinearNetwork> read_network(const std::string& path,
                                                         std::optional<double> snap = std::nullopt) {
  auto in = detail::open_in(path);
  if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") {
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw Error(Errc::ParseError, std::string("network JSON: ") + e.what());
    }
    return std::make_shared<const LinearNetwork>(read_network_json(j, snap));
  }
  return std::make_shared<const LinearNetwork>(read_network_csv(in, snap));
}

inline json network_to_json(const LinearNetwork& net) {
  json verts = json::array(), edges = json::array();
  for (const auto& v : net.vertices()) verts.push_back({v.x, v.y});
  for (const auto& s : net.segments()) edges.push_back({s.from, s.to});
  return {{"vertices", std::move(verts)}, {"edges", std::move(edges)}};
}

inline void write_network_csv(std::ostream& os, const LinearNetwork& net) {
  os << "x0,y0,x1,y1\n";
  for (const auto& s : net.segments()) {
    const Point2 &a = net.vertices()[s.from], &b = net.vertices()[s.to];
    os << detail::num(a.x) << ',' << detail::num(a.y) << ',' << detail::num(b.x) << ',' << detail::num(b.y) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Surfaces and intensities

/// Long format: one row per (r, h) node with the estimate and the benchmark.
inline void write_surface_csv(std::ostream& os, const GridSpec& g, const Eigen::MatrixXd& values,
                              const Eigen::MatrixXd* theo = nullptr) {
  os << "r,h,value" << (theo ? ",theo" : "") << '\n';
  for (std::size_t a = 0; a < g.nr(); ++a)
    for (std::size_t b = 0; b < g.nh(); ++b) {
      os << detail::num(g.r[a]) << ',' << detail::num(g.h[b]) << ',' << detail::num(values(a, b));
      if (theo) os << ',' << detail::num((*theo)(a, b));
      os << '\n';
    }
}

inline void write_surface_csv(std::ostream& os, const KSurface& k) { write_surface_csv(os, k.grid, k.values, &k.theo); }

inline json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index a = 0; a < m.rows(); ++a) {
    json row = json::array();
    for (Eigen::Index b = 0; b < m.cols(); ++b) row.push_back(m(a, b));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json surface_to_json(const KSurface& k) {
  return {{"r", k.grid.r}, {"h", k.grid.h}, {"value", matrix_to_json(k.values)}, {"theo", matrix_to_json(k.theo)}};
}

/// Local surfaces in long format with a point index column.
inline void write_lista_csv(std::ostream& os, std::span<const ListaSurface> surfaces) {
  os << "point,r,h,value\n";
  for (const auto& s : surfaces)
    for (std::size_t a = 0; a < s.grid.nr(); ++a)
      for (std::size_t b = 0; b < s.grid.nh(); ++b)
        os << s.point_index << ',' << detail::num(s.grid.r[a]) << ',' << detail::num(s.grid.h[b]) << ','
           << detail::num(s.values(a, b)) << '\n';
}

inline void write_intensity_csv(std::ostream& os, const PointPattern& p, const IntensityValues& lam) {
  os << "x,y,t,lambda\n";
  for (std::size_t i = 0; i < p.size(); ++i)
    os << detail::num(p[i].x) << ',' << detail::num(p[i].y) << ',' << detail::num(p[i].t) << ','
       << detail::num(lam[i]) << '\n';
}

/// Reads a "lambda" column (or the only column) aligned with a pattern.
inline IntensityValues read_intensity_csv(const std::string& path) {
  auto in = detail::open_in(path);
  std::string line;
  std::vector<std::string> header;
  int col = -1;
  IntensityValues out;
  while (std::getline(in, line)) {
    std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto f = detail::split_csv(t);
    if (header.empty()) {
      header = f;
      for (std::size_t k = 0; k < f.size(); ++k)
        if (f[k] == "lambda") col = static_cast<int>(k);
      if (col < 0 && f.size() == 1) col = 0;
      if (col < 0) throw Error(Errc::ParseError, "intensity CSV needs a 'lambda' column");
      continue;
    }
    auto v = static_cast<std::size_t>(col) < f.size() ? detail::parse_double(f[col]) : std::nullopt;
    if (!v) throw Error(Errc::ParseError, "non-numeric intensity value");
    out.values.push_back(*v);
  }
  return out;
}

inline void write_json(const std::string& path, const json& j) {
  auto out = detail::open_out(path);
  out << j.dump(2) << '\n';
}

}  // namespace stopp::io
