#pragma once

// Gaussian kernel estimates of the first-order intensity at the data points.

#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "stopp/error.hpp"
#include "stopp/network_pairs.hpp"
#include "stopp/parallel.hpp"
#include "stopp/pattern.hpp"
#include "stopp/stats.hpp"

namespace stopp {

struct Bandwidths {
  double space = 0.0;
  double time = 0.0;
};

/// Intensity values aligned with the points of a pattern (events per unit
/// area or length, per unit time).
struct IntensityValues {
  std::vector<double> values;
  Bandwidths bandwidth;

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }

  static IntensityValues constant(std::size_t n, double value) {
    return {std::vector<double>(n, value), {}};
  }
};

struct KernelOptions {
  std::optional<double> bw_space;  // "auto" when empty
  std::optional<double> bw_time;   // "auto" when empty
  bool leave_one_out = false;
};

/// Silverman's rule 0.9 min(sd, IQR/1.34) n^(-1/5) for one coordinate; 0 when
/// the coordinate has no spread.
inline double silverman_rule(std::vector<double> v) {
  if (v.size() < 2) return 0.0;
  const double sd = stddev(v);
  std::sort(v.begin(), v.end());
  const double iqr = quantile_sorted(v, 0.75) - quantile_sorted(v, 0.25);
  double lo = std::min(sd, iqr / 1.34);
  if (!(lo > 0.0)) lo = sd;
  return 0.9 * lo * std::pow(static_cast<double>(v.size()), -0.2);
}

/// Default bandwidths from coordinate vectors: the spatial one is the mean of
/// the per-axis rules (axes without spread are skipped, as on an axis-parallel
/// network line); the fallbacks apply when a rule degenerates.
inline Bandwidths silverman_bandwidths(std::vector<double> xs, std::vector<double> ys, std::vector<double> ts,
                                       double space_fallback, double time_fallback) {
  double bx = silverman_rule(std::move(xs)), by = silverman_rule(std::move(ys));
  Bandwidths bw;
  if (bx > 0.0 && by > 0.0)
    bw.space = 0.5 * (bx + by);
  else
    bw.space = std::max(bx, by);
  if (!(bw.space > 0.0)) bw.space = space_fallback;
  bw.time = silverman_rule(std::move(ts));
  if (!(bw.time > 0.0)) bw.time = time_fallback;
  return bw;
}

inline Bandwidths silverman_bandwidths(const PointPattern& p) {
  std::vector<double> xs, ys, ts;
  for (const auto& q : p.points()) {
    xs.push_back(q.x);
    ys.push_back(q.y);
    ts.push_back(q.t);
  }
  return silverman_bandwidths(std::move(xs), std::move(ys), std::move(ts),
                              0.1 * (p.is_network() ? p.network()->diagonal() : p.window()->diagonal()),
                              0.1 * p.time().length());
}

namespace detail {

inline Bandwidths resolve_bandwidths(const PointPattern& p, const KernelOptions& opt) {
  Bandwidths bw{};
  if (!opt.bw_space || !opt.bw_time) bw = silverman_bandwidths(p);
  if (opt.bw_space) bw.space = *opt.bw_space;
  if (opt.bw_time) bw.time = *opt.bw_time;
  if (!(bw.space > 0.0) || !(bw.time > 0.0))
    throw Error(Errc::InvalidParams, "kernel bandwidths must be positive");
  return bw;
}

inline double gauss1(double d, double sigma) {
  return std::exp(-0.5 * d * d / (sigma * sigma)) / (std::sqrt(2.0 * std::numbers::pi) * sigma);
}

inline double gauss2(double d, double sigma) {
  return std::exp(-0.5 * d * d / (sigma * sigma)) / (2.0 * std::numbers::pi * sigma * sigma);
}

inline double intensity_floor(const PointPattern& p) {
  return 1e-10 * static_cast<double>(p.size()) / p.volume();
}

}  // namespace detail

/// Planar estimate: sum over other points (or all points) of a 2-D Gaussian
/// kernel in space times a 1-D Gaussian kernel in time. No edge correction.
inline IntensityValues kernel_intensity_planar(const PointPattern& p, const KernelOptions& opt = {}) {
  if (p.is_network()) throw Error(Errc::DomainMismatch, "planar intensity requested for a network pattern");
  const std::size_t n = p.size();
  if (n < 2) throw Error(Errc::TooFewPoints, "kernel intensity needs at least two points");
  const Bandwidths bw = detail::resolve_bandwidths(p, opt);
  const double floor = detail::intensity_floor(p);
  IntensityValues out{std::vector<double>(n), bw};
  const auto& pts = p.points();
  parallel_for(n, [&](std::size_t i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (opt.leave_one_out && j == i) continue;
      double ds = std::hypot(pts[i].x - pts[j].x, pts[i].y - pts[j].y);
      sum += detail::gauss2(ds, bw.space) * detail::gauss1(pts[i].t - pts[j].t, bw.time);
    }
    out.values[i] = std::max(sum, floor);
  });
  return out;
}

namespace detail {

/// Network kernel sum at each member of a subset of locations whose pairwise
/// distances are cached in `pairs`; `times` is aligned with `members`.
inline std::vector<double> network_kernel_sums(const NetworkPairs& pairs, std::span<const std::size_t> members,
                                               std::span<const double> times, Bandwidths bw, bool leave_one_out,
                                               double floor) {
  const std::size_t n = members.size();
  std::vector<double> out(n);
  parallel_for(n, [&](std::size_t i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) {
        if (!leave_one_out) sum += gauss1(0.0, bw.space) * gauss1(0.0, bw.time);
        continue;
      }
      double ds = pairs.distance(members[i], members[j]);
      if (!std::isfinite(ds)) continue;
      sum += gauss1(ds, bw.space) * gauss1(times[i] - times[j], bw.time);
    }
    out[i] = std::max(sum, floor);
  });
  return out;
}

}  // namespace detail

/// Network estimate: the spatial kernel is a 1-D Gaussian of the shortest-path
/// distance (per unit length); unreachable pairs contribute nothing.
inline IntensityValues kernel_intensity_network(const PointPattern& p, const KernelOptions& opt = {},
                                                const NetworkPairs* pairs = nullptr) {
  if (!p.is_network()) throw Error(Errc::DomainMismatch, "network intensity requested for a planar pattern");
  const std::size_t n = p.size();
  if (n < 2) throw Error(Errc::TooFewPoints, "kernel intensity needs at least two points");
  const Bandwidths bw = detail::resolve_bandwidths(p, opt);
  NetworkPairs local;
  if (!pairs) {
    local = NetworkPairs(*p.network(), p.locations(), false);
    pairs = &local;
  }
  std::vector<std::size_t> members(n);
  std::vector<double> times(n);
  for (std::size_t i = 0; i < n; ++i) {
    members[i] = i;
    times[i] = p[i].t;
  }
  return {detail::network_kernel_sums(*pairs, members, times, bw, opt.leave_one_out, detail::intensity_floor(p)),
          bw};
}

inline IntensityValues kernel_intensity(const PointPattern& p, const KernelOptions& opt = {}) {
  return p.is_network() ? kernel_intensity_network(p, opt) : kernel_intensity_planar(p, opt);
}

/// Homogeneous estimate n / volume at every point.
inline IntensityValues homogeneous_intensity(const PointPattern& p) {
  return IntensityValues::constant(p.size(), static_cast<double>(p.size()) / p.volume());
}

}  // namespace stopp
