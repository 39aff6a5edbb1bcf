#pragma once

// Planar windows, time intervals and linear networks with shortest-path
// distances.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "stopp/error.hpp"

namespace stopp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

inline double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double length() const { return hi - lo; }
  bool contains(double v) const { return v >= lo && v <= hi; }
};

/// Axis-aligned rectangular window.
class Window {
 public:
  Window(Interval x, Interval y) : x_(x), y_(y) {
    if (!(x.length() > 0.0) || !(y.length() > 0.0) || !std::isfinite(x.length()) ||
        !std::isfinite(y.length()))
      throw Error(Errc::InvalidDomain, "window sides must have positive finite length");
  }

  static Window unit() { return Window({0.0, 1.0}, {0.0, 1.0}); }

  const Interval& x() const { return x_; }
  const Interval& y() const { return y_; }
  double area() const { return x_.length() * y_.length(); }
  double diagonal() const { return std::hypot(x_.length(), y_.length()); }
  bool contains(Point2 p) const { return x_.contains(p.x) && y_.contains(p.y); }

 private:
  Interval x_;
  Interval y_;
};

class TimeInterval {
 public:
  TimeInterval(double lo, double hi) : range_{lo, hi} {
    if (!(hi - lo > 0.0) || !std::isfinite(hi - lo))
      throw Error(Errc::InvalidDomain, "time interval must have positive finite length");
  }

  static TimeInterval unit() { return TimeInterval(0.0, 1.0); }

  double lo() const { return range_.lo; }
  double hi() const { return range_.hi; }
  double length() const { return range_.length(); }
  bool contains(double t) const { return range_.contains(t); }
  const Interval& range() const { return range_; }

 private:
  Interval range_;
};

struct Segment {
  std::size_t from = 0;
  std::size_t to = 0;
  double length = 0.0;
};

/// Position on a network: a segment and the arc length from its `from` vertex.
struct NetworkLocation {
  std::size_t segment = 0;
  double offset = 0.0;
};

/// Finite union of segments meeting only at shared endpoints. Immutable after
/// construction; all queries are const and safe to run concurrently.
class LinearNetwork {
 public:
  LinearNetwork(std::vector<Point2> vertices, std::vector<std::pair<std::size_t, std::size_t>> edges)
      : vertices_(std::move(vertices)) {
    if (edges.empty()) throw Error(Errc::EmptyNetwork, "network has no segments");
    adjacency_.resize(vertices_.size());
    segments_.reserve(edges.size());
    for (std::size_t s = 0; s < edges.size(); ++s) {
      auto [a, b] = edges[s];
      if (a >= vertices_.size() || b >= vertices_.size())
        throw Error(Errc::InvalidLocation, "segment references unknown vertex", static_cast<long>(s));
      double len = distance(vertices_[a], vertices_[b]);
      if (!(len > 0.0) || a == b)
        throw Error(Errc::DegenerateSegment, "segment " + std::to_string(s) + " has zero length",
                    static_cast<long>(s));
      segments_.push_back({a, b, len});
      adjacency_[a].push_back(s);
      adjacency_[b].push_back(s);
      total_length_ += len;
    }
    double xmin = kInf, xmax = -kInf, ymin = kInf, ymax = -kInf;
    for (const auto& v : vertices_) {
      xmin = std::min(xmin, v.x);
      xmax = std::max(xmax, v.x);
      ymin = std::min(ymin, v.y);
      ymax = std::max(ymax, v.y);
    }
    bbox_min_ = {xmin, ymin};
    bbox_max_ = {xmax, ymax};
    check_crossings();
  }

  const std::vector<Point2>& vertices() const { return vertices_; }
  const std::vector<Segment>& segments() const { return segments_; }
  const std::vector<std::size_t>& incident(std::size_t vertex) const { return adjacency_[vertex]; }
  double total_length() const { return total_length_; }
  Point2 bbox_min() const { return bbox_min_; }
  Point2 bbox_max() const { return bbox_max_; }
  double diagonal() const {
    return std::hypot(bbox_max_.x - bbox_min_.x, bbox_max_.y - bbox_min_.y);
  }
  /// Absolute tolerance used when comparing network distances.
  double tolerance() const { return 1e-9 * std::max(diagonal(), total_length_); }

  bool valid(const NetworkLocation& loc) const {
    return loc.segment < segments_.size() && loc.offset >= 0.0 &&
           loc.offset <= segments_[loc.segment].length;
  }

  Point2 point_at(const NetworkLocation& loc) const {
    const Segment& s = segments_.at(loc.segment);
    double f = loc.offset / s.length;
    const Point2& a = vertices_[s.from];
    const Point2& b = vertices_[s.to];
    return {a.x + f * (b.x - a.x), a.y + f * (b.y - a.y)};
  }

  /// Nearest network location to p, with its Euclidean distance.
  std::pair<NetworkLocation, double> project(Point2 p) const {
    NetworkLocation best{};
    double best_d = kInf;
    for (std::size_t s = 0; s < segments_.size(); ++s) {
      const Point2& a = vertices_[segments_[s].from];
      const Point2& b = vertices_[segments_[s].to];
      double dx = b.x - a.x, dy = b.y - a.y;
      double len2 = dx * dx + dy * dy;
      double f = std::clamp(((p.x - a.x) * dx + (p.y - a.y) * dy) / len2, 0.0, 1.0);
      Point2 q{a.x + f * dx, a.y + f * dy};
      double d = distance(p, q);
      if (d < best_d) {
        best_d = d;
        best = {s, f * segments_[s].length};
      }
    }
    return {best, best_d};
  }

 private:
  void check_crossings() const {
    auto orient = [](Point2 a, Point2 b, Point2 c) {
      return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    };
    const double eps = 1e-12 * std::max(1.0, diagonal() * diagonal());
    for (std::size_t i = 0; i < segments_.size(); ++i) {
      const Segment& si = segments_[i];
      Point2 a = vertices_[si.from], b = vertices_[si.to];
      for (std::size_t j = i + 1; j < segments_.size(); ++j) {
        const Segment& sj = segments_[j];
        Point2 c = vertices_[sj.from], d = vertices_[sj.to];
        if (std::max(c.x, d.x) < std::min(a.x, b.x) || std::min(c.x, d.x) > std::max(a.x, b.x) ||
            std::max(c.y, d.y) < std::min(a.y, b.y) || std::min(c.y, d.y) > std::max(a.y, b.y))
          continue;
        bool shares = si.from == sj.from || si.from == sj.to || si.to == sj.from || si.to == sj.to;
        double o1 = orient(a, b, c), o2 = orient(a, b, d);
        double o3 = orient(c, d, a), o4 = orient(c, d, b);
        bool proper = ((o1 > eps && o2 < -eps) || (o1 < -eps && o2 > eps)) &&
                      ((o3 > eps && o4 < -eps) || (o3 < -eps && o4 > eps));
        if (proper)
          throw Error(Errc::SegmentCrossing,
                      "segments " + std::to_string(i) + " and " + std::to_string(j) + " cross",
                      static_cast<long>(j));
        if (shares) {
          // Collinear overlap through a shared vertex.
          if (std::abs(o1) <= eps && std::abs(o2) <= eps) {
            std::size_t other_i = (si.from == sj.from || si.from == sj.to) ? si.to : si.from;
            std::size_t other_j = (sj.from == si.from || sj.from == si.to) ? sj.to : sj.from;
            std::size_t common = (si.from == sj.from || si.from == sj.to) ? si.from : si.to;
            Point2 p = vertices_[common], u = vertices_[other_i], v = vertices_[other_j];
            if ((u.x - p.x) * (v.x - p.x) + (u.y - p.y) * (v.y - p.y) > 0.0)
              throw Error(Errc::SegmentCrossing,
                          "segments " + std::to_string(i) + " and " + std::to_string(j) + " overlap",
                          static_cast<long>(j));
          }
          continue;
        }
        // An endpoint lying in the interior of the other segment.
        auto on_segment = [&](Point2 p, Point2 q, Point2 r, double o) {
          return std::abs(o) <= eps && r.x >= std::min(p.x, q.x) && r.x <= std::max(p.x, q.x) &&
                 r.y >= std::min(p.y, q.y) && r.y <= std::max(p.y, q.y);
        };
        if (on_segment(a, b, c, o1) || on_segment(a, b, d, o2) || on_segment(c, d, a, o3) ||
            on_segment(c, d, b, o4))
          throw Error(Errc::SegmentCrossing,
                      "segments " + std::to_string(i) + " and " + std::to_string(j) +
                          " touch away from a shared vertex",
                      static_cast<long>(j));
      }
    }
  }

  std::vector<Point2> vertices_;
  std::vector<Segment> segments_;
  std::vector<std::vector<std::size_t>> adjacency_;
  double total_length_ = 0.0;
  Point2 bbox_min_{};
  Point2 bbox_max_{};
};

/// Builds a network from raw segment endpoints, merging endpoints closer than
/// `snap_tolerance` (default: 1e-9 of the bounding-box diagonal).
inline LinearNetwork build_network(std::span<const std::pair<Point2, Point2>> segment_endpoints,
                                   std::optional<double> snap_tolerance = std::nullopt) {
  if (segment_endpoints.empty()) throw Error(Errc::EmptyNetwork, "network has no segments");
  double xmin = kInf, xmax = -kInf, ymin = kInf, ymax = -kInf;
  for (std::size_t s = 0; s < segment_endpoints.size(); ++s) {
    for (Point2 p : {segment_endpoints[s].first, segment_endpoints[s].second}) {
      if (!std::isfinite(p.x) || !std::isfinite(p.y))
        throw Error(Errc::InvalidLocation, "non-finite segment endpoint", static_cast<long>(s));
      xmin = std::min(xmin, p.x);
      xmax = std::max(xmax, p.x);
      ymin = std::min(ymin, p.y);
      ymax = std::max(ymax, p.y);
    }
  }
  double diag = std::hypot(xmax - xmin, ymax - ymin);
  double tol = snap_tolerance.value_or(1e-9 * diag);
  if (!(tol > 0.0)) tol = 1e-12;

  // Hash grid with cell size tol; a match is searched in the 3x3 neighbourhood.
  struct KeyHash {
    std::size_t operator()(const std::pair<std::int64_t, std::int64_t>& k) const {
      return std::hash<std::int64_t>()(k.first * 73856093) ^ std::hash<std::int64_t>()(k.second);
    }
  };
  std::unordered_map<std::pair<std::int64_t, std::int64_t>, std::vector<std::size_t>, KeyHash> grid;
  std::vector<Point2> vertices;
  auto vertex_for = [&](Point2 p) {
    auto cx = static_cast<std::int64_t>(std::floor((p.x - xmin) / tol));
    auto cy = static_cast<std::int64_t>(std::floor((p.y - ymin) / tol));
    for (std::int64_t dx = -1; dx <= 1; ++dx)
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        auto it = grid.find({cx + dx, cy + dy});
        if (it == grid.end()) continue;
        for (std::size_t v : it->second)
          if (distance(vertices[v], p) <= tol) return v;
      }
    vertices.push_back(p);
    grid[{cx, cy}].push_back(vertices.size() - 1);
    return vertices.size() - 1;
  };

  std::vector<std::pair<std::size_t, std::size_t>> edges;
  edges.reserve(segment_endpoints.size());
  for (std::size_t s = 0; s < segment_endpoints.size(); ++s) {
    std::size_t a = vertex_for(segment_endpoints[s].first);
    std::size_t b = vertex_for(segment_endpoints[s].second);
    if (a == b)
      throw Error(Errc::DegenerateSegment,
                  "segment " + std::to_string(s) + " has zero length after snapping",
                  static_cast<long>(s));
    edges.emplace_back(a, b);
  }
  return LinearNetwork(std::move(vertices), std::move(edges));
}

/// Single-source shortest-path distances from a network location to every
/// vertex, equivalent to splitting the source segment at the source and running
/// Dijkstra. Holds a reference to the network, which must outlive it.
class DistanceField {
 public:
  DistanceField(const LinearNetwork& net, NetworkLocation source) : net_(&net), source_(source) {
    if (!net.valid(source)) throw Error(Errc::InvalidLocation, "source location is not on the network");
    const auto& segs = net.segments();
    dist_.assign(net.vertices().size(), kInf);
    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
    const Segment& s0 = segs[source.segment];
    auto relax = [&](std::size_t v, double d) {
      if (d < dist_[v]) {
        dist_[v] = d;
        queue.emplace(d, v);
      }
    };
    relax(s0.from, source.offset);
    relax(s0.to, s0.length - source.offset);
    while (!queue.empty()) {
      auto [d, v] = queue.top();
      queue.pop();
      if (d > dist_[v]) continue;
      for (std::size_t e : net.incident(v)) {
        const Segment& s = segs[e];
        relax(s.from == v ? s.to : s.from, d + s.length);
      }
    }
  }

  const NetworkLocation& source() const { return source_; }
  double to_vertex(std::size_t v) const { return dist_[v]; }

  /// Shortest-path distance to `loc`; +infinity when unreachable.
  double to(const NetworkLocation& loc) const {
    const Segment& s = net_->segments()[loc.segment];
    double d = std::min(dist_[s.from] + loc.offset, dist_[s.to] + (s.length - loc.offset));
    if (loc.segment == source_.segment) d = std::min(d, std::abs(loc.offset - source_.offset));
    return d;
  }

  /// Number of network locations at distance exactly r from the source.
  /// r = 0 counts the source itself once; a vertex hit counts once regardless
  /// of its degree.
  int count_at(double r) const {
    const double tol = net_->tolerance();
    if (r <= tol) return 1;
    const auto& segs = net_->segments();
    int count = 0;
    for (std::size_t v = 0; v < dist_.size(); ++v)
      if (std::abs(dist_[v] - r) <= tol) ++count;
    double cand[4];
    for (std::size_t e = 0; e < segs.size(); ++e) {
      const Segment& s = segs[e];
      double d1 = dist_[s.from], d2 = dist_[s.to], len = s.length;
      if (!std::isfinite(d1) && !std::isfinite(d2)) continue;
      bool is_source = e == source_.segment;
      // Cheap reject: every interior point is at least min(d1, d2) away (not
      // true on the source segment).
      if (!is_source && std::min(d1, d2) > r + tol) continue;
      int nc = 0;
      cand[nc++] = r - d1;
      cand[nc++] = d2 + len - r;
      if (is_source) {
        cand[nc++] = source_.offset - r;
        cand[nc++] = source_.offset + r;
      }
      std::sort(cand, cand + nc);
      double last = -kInf;
      for (int c = 0; c < nc; ++c) {
        double off = cand[c];
        if (!(off > tol && off < len - tol)) continue;
        if (off - last <= tol) continue;
        if (std::abs(to({e, off}) - r) <= tol) {
          ++count;
          last = off;
        }
      }
    }
    return count;
  }

 private:
  const LinearNetwork* net_;
  NetworkLocation source_;
  std::vector<double> dist_;
};

/// d_L(a, b). The computation always starts from the lexicographically smaller
/// location, so the result is exactly symmetric.
inline double shortest_path_distance(const LinearNetwork& net, const NetworkLocation& a,
                                     const NetworkLocation& b) {
  if (!net.valid(a) || !net.valid(b)) throw Error(Errc::InvalidLocation, "location is not on the network");
  const bool swap = std::tie(b.segment, b.offset) < std::tie(a.segment, a.offset);
  return swap ? DistanceField(net, b).to(a) : DistanceField(net, a).to(b);
}

inline int count_at_distance(const LinearNetwork& net, const NetworkLocation& u, double r) {
  return DistanceField(net, u).count_at(r);
}

}  // namespace stopp
