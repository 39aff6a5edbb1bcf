#pragma once

// Spatio-temporal point patterns on a rectangular window or a linear network.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "stopp/error.hpp"
#include "stopp/geometry.hpp"
#include "stopp/stats.hpp"

namespace stopp {

struct STPoint {
  double x = 0.0;
  double y = 0.0;
  double t = 0.0;
};

/// One mark column aligned with the points. Categorical columns store level
/// codes in `values` and the level names in `levels`.
struct MarkColumn {
  std::string name;
  std::vector<double> values;
  std::vector<std::string> levels;

  bool categorical() const { return !levels.empty(); }
};

using MarkTable = std::vector<MarkColumn>;

class PointPattern {
 public:
  /// Planar pattern on an explicit window and time interval.
  static PointPattern planar(std::vector<STPoint> points, Window window, TimeInterval time,
                             MarkTable marks = {}) {
    PointPattern p(std::move(points), window, time, std::move(marks));
    for (std::size_t i = 0; i < p.points_.size(); ++i) {
      const STPoint& q = p.points_[i];
      if (!std::isfinite(q.x) || !std::isfinite(q.y) || !std::isfinite(q.t))
        throw Error(Errc::PointOutsideDomain, "non-finite coordinate at point " + std::to_string(i),
                    static_cast<long>(i));
      if (!window.contains({q.x, q.y}) || !time.contains(q.t))
        throw Error(Errc::PointOutsideDomain, "point " + std::to_string(i) + " lies outside the domain",
                    static_cast<long>(i));
    }
    p.check_marks();
    p.check_duplicates();
    return p;
  }

  /// Planar pattern whose window and time interval are the bounding box of the
  /// coordinates.
  static PointPattern planar(std::vector<STPoint> points, MarkTable marks = {}) {
    if (points.empty()) throw Error(Errc::EmptyPattern, "cannot infer a domain from zero points");
    auto [w, t] = bounding_box(points);
    return planar(std::move(points), w, t, std::move(marks));
  }

  /// Network pattern; each point is snapped to its nearest network location and
  /// must lie within `snap_tolerance` (default 1e-6 of the network diagonal).
  static PointPattern on_network(std::vector<STPoint> points, std::shared_ptr<const LinearNetwork> net,
                                 std::optional<TimeInterval> time = std::nullopt, MarkTable marks = {},
                                 std::optional<double> snap_tolerance = std::nullopt) {
    if (!net) throw Error(Errc::EmptyNetwork, "null network");
    if (!time) {
      if (points.empty()) throw Error(Errc::EmptyPattern, "cannot infer a time interval from zero points");
      time = bounding_box(points).second;
    }
    const double tol = snap_tolerance.value_or(1e-6 * net->diagonal());
    std::vector<NetworkLocation> locs(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
      STPoint& q = points[i];
      if (!std::isfinite(q.x) || !std::isfinite(q.y) || !std::isfinite(q.t))
        throw Error(Errc::PointOutsideDomain, "non-finite coordinate at point " + std::to_string(i),
                    static_cast<long>(i));
      if (!time->contains(q.t))
        throw Error(Errc::PointOutsideDomain, "point " + std::to_string(i) + " lies outside the time interval",
                    static_cast<long>(i));
      auto [loc, d] = net->project({q.x, q.y});
      if (d > tol)
        throw Error(Errc::SnapFailure,
                    "point " + std::to_string(i) + " is " + std::to_string(d) + " away from the network",
                    static_cast<long>(i));
      locs[i] = loc;
      Point2 snapped = net->point_at(loc);
      q.x = snapped.x;
      q.y = snapped.y;
    }
    PointPattern p(std::move(points), std::move(net), *time, std::move(locs), std::move(marks));
    p.check_marks();
    p.check_duplicates();
    return p;
  }

  /// Network pattern from explicit network locations.
  static PointPattern on_network(std::span<const NetworkLocation> locations, std::span<const double> times,
                                 std::shared_ptr<const LinearNetwork> net, TimeInterval time,
                                 MarkTable marks = {}) {
    if (!net) throw Error(Errc::EmptyNetwork, "null network");
    if (locations.size() != times.size())
      throw Error(Errc::LengthMismatch, "locations and times differ in length");
    std::vector<STPoint> points(locations.size());
    for (std::size_t i = 0; i < locations.size(); ++i) {
      if (!net->valid(locations[i]))
        throw Error(Errc::PointOutsideDomain, "point " + std::to_string(i) + " is not on the network",
                    static_cast<long>(i));
      if (!time.contains(times[i]))
        throw Error(Errc::PointOutsideDomain, "point " + std::to_string(i) + " lies outside the time interval",
                    static_cast<long>(i));
      Point2 q = net->point_at(locations[i]);
      points[i] = {q.x, q.y, times[i]};
    }
    PointPattern p(std::move(points), std::move(net), time,
                   std::vector<NetworkLocation>(locations.begin(), locations.end()), std::move(marks));
    p.check_marks();
    p.check_duplicates();
    return p;
  }

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const std::vector<STPoint>& points() const { return points_; }
  const STPoint& operator[](std::size_t i) const { return points_[i]; }

  bool is_network() const { return network_ != nullptr; }
  const std::optional<Window>& window() const { return window_; }
  const std::shared_ptr<const LinearNetwork>& network() const { return network_; }
  const std::vector<NetworkLocation>& locations() const { return locations_; }
  const TimeInterval& time() const { return time_; }
  const MarkTable& marks() const { return marks_; }

  const MarkColumn* mark(std::string_view name) const {
    for (const auto& m : marks_)
      if (m.name == name) return &m;
    return nullptr;
  }

  /// |W| for planar patterns, |L| for network patterns.
  double spatial_measure() const { return network_ ? network_->total_length() : window_->area(); }
  /// |W||T| or |L||T|.
  double volume() const { return spatial_measure() * time_.length(); }

  /// Spatial distance between points i and j (Euclidean or shortest-path).
  /// Network distances through this accessor run one Dijkstra per call; batch
  /// callers should use DistanceField directly.
  double spatial_distance(std::size_t i, std::size_t j) const {
    if (!network_) return std::hypot(points_[i].x - points_[j].x, points_[i].y - points_[j].y);
    return DistanceField(*network_, locations_[i]).to(locations_[j]);
  }

  /// Pattern made of the selected points (in the given order) on the same
  /// domain. Indices may not repeat.
  PointPattern subset(std::span<const std::size_t> indices) const {
    PointPattern out = *this;
    out.points_.clear();
    out.locations_.clear();
    for (auto& m : out.marks_) m.values.clear();
    for (std::size_t i : indices) {
      out.points_.push_back(points_.at(i));
      if (network_) out.locations_.push_back(locations_[i]);
      for (std::size_t c = 0; c < marks_.size(); ++c) out.marks_[c].values.push_back(marks_[c].values[i]);
    }
    return out;
  }

  /// True when both patterns live on the same spatial and temporal domain.
  bool same_domain(const PointPattern& other) const {
    if (time_.lo() != other.time_.lo() || time_.hi() != other.time_.hi()) return false;
    if (is_network() != other.is_network()) return false;
    if (network_) {
      if (network_ == other.network_) return true;
      const auto& a = *network_;
      const auto& b = *other.network_;
      if (a.segments().size() != b.segments().size() || a.vertices().size() != b.vertices().size())
        return false;
      for (std::size_t v = 0; v < a.vertices().size(); ++v)
        if (a.vertices()[v].x != b.vertices()[v].x || a.vertices()[v].y != b.vertices()[v].y) return false;
      for (std::size_t s = 0; s < a.segments().size(); ++s)
        if (a.segments()[s].from != b.segments()[s].from || a.segments()[s].to != b.segments()[s].to)
          return false;
      return true;
    }
    return window_->x().lo == other.window_->x().lo && window_->x().hi == other.window_->x().hi &&
           window_->y().lo == other.window_->y().lo && window_->y().hi == other.window_->y().hi;
  }

  static std::pair<Window, TimeInterval> bounding_box(std::span<const STPoint> points) {
    double xmin = kInf, xmax = -kInf, ymin = kInf, ymax = -kInf, tmin = kInf, tmax = -kInf;
    for (const auto& q : points) {
      xmin = std::min(xmin, q.x);
      xmax = std::max(xmax, q.x);
      ymin = std::min(ymin, q.y);
      ymax = std::max(ymax, q.y);
      tmin = std::min(tmin, q.t);
      tmax = std::max(tmax, q.t);
    }
    return {Window({xmin, xmax}, {ymin, ymax}), TimeInterval(tmin, tmax)};
  }

 private:
  PointPattern(std::vector<STPoint> points, Window window, TimeInterval time, MarkTable marks)
      : points_(std::move(points)), window_(window), time_(time), marks_(std::move(marks)) {}

  PointPattern(std::vector<STPoint> points, std::shared_ptr<const LinearNetwork> net, TimeInterval time,
               std::vector<NetworkLocation> locs, MarkTable marks)
      : points_(std::move(points)),
        network_(std::move(net)),
        locations_(std::move(locs)),
        time_(time),
        marks_(std::move(marks)) {}

  void check_marks() const {
    for (const auto& m : marks_)
      if (m.values.size() != points_.size())
        throw Error(Errc::LengthMismatch, "mark column '" + m.name + "' is not aligned with the points");
  }

  void check_duplicates() const {
    std::vector<std::size_t> order(points_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    auto key = [&](std::size_t i) { return std::tie(points_[i].x, points_[i].y, points_[i].t); };
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
    for (std::size_t k = 1; k < order.size(); ++k)
      if (key(order[k]) == key(order[k - 1]))
        throw Error(Errc::DuplicatePoint,
                    "points " + std::to_string(order[k - 1]) + " and " + std::to_string(order[k]) +
                        " coincide",
                    static_cast<long>(std::max(order[k], order[k - 1])));
  }

  std::vector<STPoint> points_;
  std::optional<Window> window_;
  std::shared_ptr<const LinearNetwork> network_;
  std::vector<NetworkLocation> locations_;
  TimeInterval time_{0.0, 1.0};
  MarkTable marks_;
};

struct PatternSummary {
  std::size_t n = 0;
  bool network = false;
  Interval x_range;
  Interval y_range;
  Interval t_range;
  std::size_t network_vertices = 0;
  std::size_t network_segments = 0;
  FiveNumber x;
  FiveNumber y;
  FiveNumber t;
};

inline PatternSummary summarize(const PointPattern& p) {
  PatternSummary s;
  s.n = p.size();
  s.network = p.is_network();
  s.t_range = {p.time().lo(), p.time().hi()};
  if (p.is_network()) {
    s.x_range = {p.network()->bbox_min().x, p.network()->bbox_max().x};
    s.y_range = {p.network()->bbox_min().y, p.network()->bbox_max().y};
    s.network_vertices = p.network()->vertices().size();
    s.network_segments = p.network()->segments().size();
  } else {
    s.x_range = p.window()->x();
    s.y_range = p.window()->y();
  }
  std::vector<double> xs, ys, ts;
  for (const auto& q : p.points()) {
    xs.push_back(q.x);
    ys.push_back(q.y);
    ts.push_back(q.t);
  }
  s.x = five_number(std::move(xs));
  s.y = five_number(std::move(ys));
  s.t = five_number(std::move(ts));
  return s;
}

namespace detail {
inline std::string fmt_g(double v, int digits = 7) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}
}  // namespace detail

/// Console block: point count, enclosing window (or network) and time period.
inline std::string format_pattern(const PatternSummary& s) {
  std::ostringstream os;
  using detail::fmt_g;
  if (s.network) {
    os << "Spatio-temporal point pattern on a linear network \n";
    os << s.n << " points \n";
    os << "Linear network with " << s.network_vertices << " vertices and " << s.network_segments
       << " lines \n";
    os << "Enclosing window: rectangle = [" << fmt_g(s.x_range.lo) << ", " << fmt_g(s.x_range.hi) << "] x ["
       << fmt_g(s.y_range.lo) << ", " << fmt_g(s.y_range.hi) << "] units\n";
  } else {
    os << "Spatio-temporal point pattern \n";
    os << s.n << " points \n";
    os << "Enclosing window: rectangle = [" << fmt_g(s.x_range.lo) << ", " << fmt_g(s.x_range.hi) << "] x ["
       << fmt_g(s.y_range.lo) << ", " << fmt_g(s.y_range.hi) << "] units\n";
  }
  os << "Time period: [" << fmt_g(s.t_range.lo) << ", " << fmt_g(s.t_range.hi) << "] \n";
  return os.str();
}

/// Five-number summaries of the coordinates, one row per statistic.
inline std::string format_coordinate_summary(const PatternSummary& s) {
  std::ostringstream os;
  if (s.n == 0) {
    os << "(no points)\n";
    return os.str();
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-8s %14s %14s %14s\n", "", "x", "y", "t");
  os << buf;
  auto row = [&](const char* label, double a, double b, double c) {
    std::snprintf(buf, sizeof buf, "%-8s %14.7g %14.7g %14.7g\n", label, a, b, c);
    os << buf;
  };
  row("Min.", s.x.min, s.y.min, s.t.min);
  row("1st Qu.", s.x.q1, s.y.q1, s.t.q1);
  row("Median", s.x.median, s.y.median, s.t.median);
  row("Mean", s.x.mean, s.y.mean, s.t.mean);
  row("3rd Qu.", s.x.q3, s.y.q3, s.t.q3);
  row("Max.", s.x.max, s.y.max, s.t.max);
  return os.str();
}

inline std::ostream& operator<<(std::ostream& os, const PointPattern& p) {
  return os << format_pattern(summarize(p));
}

}  // namespace stopp
