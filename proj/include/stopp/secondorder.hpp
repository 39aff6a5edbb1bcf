#pragma once

// Global and local (LISTA) second-order statistics: K-functions and pair
// correlation functions, homogeneous and intensity-weighted, planar and on
// linear networks.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "stopp/error.hpp"
#include "stopp/intensity.hpp"
#include "stopp/network_pairs.hpp"
#include "stopp/parallel.hpp"
#include "stopp/pattern.hpp"

namespace stopp {

/// Spatial distances r and time lags h at which surfaces are evaluated. Both
/// are strictly increasing and positive.
struct GridSpec {
  std::vector<double> r;
  std::vector<double> h;

  std::size_t nr() const { return r.size(); }
  std::size_t nh() const { return h.size(); }

  void validate() const {
    auto ok = [](const std::vector<double>& v) {
      if (v.empty() || !(v.front() > 0.0)) return false;
      for (std::size_t k = 1; k < v.size(); ++k)
        if (!(v[k] > v[k - 1])) return false;
      return true;
    };
    if (!ok(r) || !ok(h)) throw Error(Errc::InvalidParams, "grid values must be positive and increasing");
  }
};

/// nr x nh equally spaced nodes (k r_max / nr, l h_max / nh), k, l >= 1.
inline GridSpec make_grid(double r_max, double h_max, std::size_t nr = 20, std::size_t nh = 20) {
  if (!(r_max > 0.0) || !(h_max > 0.0) || nr == 0 || nh == 0)
    throw Error(Errc::InvalidParams, "grid extents must be positive");
  GridSpec g;
  for (std::size_t k = 1; k <= nr; ++k) g.r.push_back(r_max * static_cast<double>(k) / static_cast<double>(nr));
  for (std::size_t k = 1; k <= nh; ++k) g.h.push_back(h_max * static_cast<double>(k) / static_cast<double>(nh));
  return g;
}

/// Largest finite pairwise spatial distance (shortest-path on networks).
inline double max_pairwise_distance(const PointPattern& p, const NetworkPairs* pairs = nullptr) {
  double m = 0.0;
  const std::size_t n = p.size();
  if (p.is_network()) {
    NetworkPairs local;
    if (!pairs) {
      local = NetworkPairs(*p.network(), p.locations(), false);
      pairs = &local;
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (std::isfinite(pairs->distance(i, j))) m = std::max(m, pairs->distance(i, j));
    return m;
  }
  const auto& pts = p.points();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) m = std::max(m, std::hypot(pts[i].x - pts[j].x, pts[i].y - pts[j].y));
  return m;
}

/// Default grid: r up to a quarter of the largest pairwise distance, h up to a
/// quarter of the time interval length.
inline GridSpec default_grid(const PointPattern& p, std::size_t nr = 20, std::size_t nh = 20,
                             const NetworkPairs* pairs = nullptr) {
  double r_max = 0.25 * max_pairwise_distance(p, pairs);
  if (!(r_max > 0.0))
    r_max = 0.25 * (p.is_network() ? p.network()->diagonal() : p.window()->diagonal());
  return make_grid(r_max, 0.25 * p.time().length(), nr, nh);
}

enum class Statistic { K, pcf };

/// Kernel half-widths for pcf-type statistics.
struct PcfBandwidths {
  double eps = 0.0;    // spatial
  double delta = 0.0;  // temporal

  static PcfBandwidths defaults(const GridSpec& g) { return {0.1 * g.r.back(), 0.1 * g.h.back()}; }
};

/// Global surface with its Poisson benchmark (pi r^2 h planar, r h network).
struct KSurface {
  GridSpec grid;
  Eigen::MatrixXd values;  // nr x nh
  Eigen::MatrixXd theo;
};

/// Per-point surface of a local second-order statistic.
struct ListaSurface {
  std::size_t point_index = 0;
  GridSpec grid;
  Eigen::MatrixXd values;  // nr x nh
};

inline Eigen::MatrixXd planar_theo(const GridSpec& g) {
  Eigen::MatrixXd t(g.nr(), g.nh());
  for (std::size_t a = 0; a < g.nr(); ++a)
    for (std::size_t b = 0; b < g.nh(); ++b) t(a, b) = std::numbers::pi * g.r[a] * g.r[a] * g.h[b];
  return t;
}

inline Eigen::MatrixXd network_theo(const GridSpec& g) {
  Eigen::MatrixXd t(g.nr(), g.nh());
  for (std::size_t a = 0; a < g.nr(); ++a)
    for (std::size_t b = 0; b < g.nh(); ++b) t(a, b) = g.r[a] * g.h[b];
  return t;
}

/// Trapezoidal integral of a surface over the grid rectangle [r_1, r_nr] x
/// [h_1, h_nh]. An axis with a single node contributes weight 1.
inline double trapezoid(const GridSpec& g, const Eigen::MatrixXd& m) {
  auto weights = [](const std::vector<double>& v) {
    std::vector<double> w(v.size(), v.size() == 1 ? 1.0 : 0.0);
    for (std::size_t k = 0; k + 1 < v.size(); ++k) {
      w[k] += 0.5 * (v[k + 1] - v[k]);
      w[k + 1] += 0.5 * (v[k + 1] - v[k]);
    }
    return w;
  };
  const auto wr = weights(g.r), wh = weights(g.h);
  double s = 0.0;
  for (std::size_t a = 0; a < g.nr(); ++a)
    for (std::size_t b = 0; b < g.nh(); ++b) s += wr[a] * wh[b] * m(a, b);
  return s;
}

namespace detail {

/// Pair contribution: spatial distance, time lag and weight.
struct PairTerm {
  double ds;
  double dt;
  double weight;
};

/// Cumulative indicator surface S(r, h) = sum of weights with ds <= r and
/// dt <= h (or < when `strict`).
inline Eigen::MatrixXd accumulate_indicator(std::span<const PairTerm> terms, const GridSpec& g, bool strict) {
  const std::size_t nr = g.nr(), nh = g.nh();
  Eigen::MatrixXd cells = Eigen::MatrixXd::Zero(nr, nh);
  for (const auto& t : terms) {
    auto ir = strict ? std::upper_bound(g.r.begin(), g.r.end(), t.ds) : std::lower_bound(g.r.begin(), g.r.end(), t.ds);
    auto ih = strict ? std::upper_bound(g.h.begin(), g.h.end(), t.dt) : std::lower_bound(g.h.begin(), g.h.end(), t.dt);
    if (ir == g.r.end() || ih == g.h.end()) continue;
    cells(ir - g.r.begin(), ih - g.h.begin()) += t.weight;
  }
  for (std::size_t a = 0; a < nr; ++a)
    for (std::size_t b = 1; b < nh; ++b) cells(a, b) += cells(a, b - 1);
  for (std::size_t a = 1; a < nr; ++a)
    for (std::size_t b = 0; b < nh; ++b) cells(a, b) += cells(a - 1, b);
  return cells;
}

inline double epanechnikov(double u, double bw) {
  const double z = u / bw;
  return std::abs(z) < 1.0 ? 0.75 * (1.0 - z * z) / bw : 0.0;
}

/// Kernel surface S(r, h) = sum of weight * k_eps(ds - r) * k_delta(dt - h).
inline Eigen::MatrixXd accumulate_kernel(std::span<const PairTerm> terms, const GridSpec& g, PcfBandwidths bw) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(g.nr(), g.nh());
  for (const auto& t : terms) {
    auto r0 = std::upper_bound(g.r.begin(), g.r.end(), t.ds - bw.eps) - g.r.begin();
    auto h0 = std::upper_bound(g.h.begin(), g.h.end(), t.dt - bw.delta) - g.h.begin();
    for (auto a = static_cast<std::size_t>(r0); a < g.nr() && g.r[a] < t.ds + bw.eps; ++a) {
      const double kr = epanechnikov(t.ds - g.r[a], bw.eps);
      if (kr == 0.0) continue;
      for (auto b = static_cast<std::size_t>(h0); b < g.nh() && g.h[b] < t.dt + bw.delta; ++b)
        s(a, b) += t.weight * kr * epanechnikov(t.dt - g.h[b], bw.delta);
    }
  }
  return s;
}

inline void check_lambda(const PointPattern& p, const IntensityValues& lambda) {
  if (lambda.size() != p.size())
    throw Error(Errc::LengthMismatch, "intensity values are not aligned with the pattern");
  for (std::size_t i = 0; i < lambda.size(); ++i)
    if (!(lambda[i] > 0.0) || !std::isfinite(lambda[i]))
      throw Error(Errc::NonpositiveLambda, "intensity at point " + std::to_string(i) + " is not positive",
                  static_cast<long>(i));
}

}  // namespace detail

/// Raw global K: (1 / (|W||T|)) * number of unordered pairs with
/// ||u_i - u_j|| <= r and |t_i - t_j| <= h. No edge correction and no
/// intensity scaling.
inline KSurface k_global(const PointPattern& p, const GridSpec& grid) {
  if (p.is_network()) throw Error(Errc::DomainMismatch, "k_global is planar; use the network statistics");
  grid.validate();
  const std::size_t n = p.size();
  if (n < 2) throw Error(Errc::TooFewPoints, "K needs at least two points");
  const double w = 1.0 / p.volume();
  std::vector<detail::PairTerm> terms;
  const auto& pts = p.points();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      terms.push_back({std::hypot(pts[i].x - pts[j].x, pts[i].y - pts[j].y), std::abs(pts[i].t - pts[j].t), w});
  return {grid, detail::accumulate_indicator(terms, grid, false), planar_theo(grid)};
}

/// k_global divided by the squared-intensity estimate n (n - 1) / (|W||T|)^2,
/// the scale on which the Poisson benchmark is pi r^2 h.
inline KSurface k_global_scaled(const PointPattern& p, const GridSpec& grid) {
  KSurface k = k_global(p, grid);
  const double n = static_cast<double>(p.size());
  k.values *= p.volume() * p.volume() / (n * (n - 1.0));
  return k;
}

/// Scale of the intensity-weighted global K.
enum class KNormalization {
  /// 1 / (|W||T|): expectation pi r^2 h when weighted by the true intensity.
  intensity,
  /// |W||T| / (n (n - 1)) as in the classical printed estimator.
  count,
};

/// Intensity-weighted global K: sum over unordered pairs within (r, h) of
/// 1 / (lambda_i lambda_j), times the chosen normalisation.
inline KSurface k_inhom_global(const PointPattern& p, const IntensityValues& lambda, const GridSpec& grid,
                               KNormalization norm = KNormalization::intensity) {
  if (p.is_network()) throw Error(Errc::DomainMismatch, "k_inhom_global is planar; use the network statistics");
  grid.validate();
  detail::check_lambda(p, lambda);
  const std::size_t n = p.size();
  if (n < 2) throw Error(Errc::TooFewPoints, "K needs at least two points");
  const double v = p.volume();
  const double scale = norm == KNormalization::intensity
                           ? 1.0 / v
                           : v / (static_cast<double>(n) * static_cast<double>(n - 1));
  std::vector<detail::PairTerm> terms;
  const auto& pts = p.points();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      terms.push_back({std::hypot(pts[i].x - pts[j].x, pts[i].y - pts[j].y), std::abs(pts[i].t - pts[j].t),
                       scale / (lambda[i] * lambda[j])});
  return {grid, detail::accumulate_indicator(terms, grid, false), planar_theo(grid)};
}

namespace detail {

/// Local planar surface of the point at `target` against `others` (which must
/// not contain the target). `lambda_target` and `lambda_others` are the
/// weighting intensities; `pcf_scale` is the (n - 1) factor of the local
/// product density.
inline Eigen::MatrixXd lista_planar_point(const STPoint& target, double lambda_target,
                                          std::span<const STPoint> others, std::span<const double> lambda_others,
                                          double volume, double n_minus_1, Statistic stat, const GridSpec& grid,
                                          const PcfBandwidths& bw) {
  std::vector<PairTerm> terms;
  terms.reserve(others.size());
  for (std::size_t j = 0; j < others.size(); ++j) {
    terms.push_back({std::hypot(target.x - others[j].x, target.y - others[j].y), std::abs(target.t - others[j].t),
                     1.0 / (volume * lambda_target * lambda_others[j])});
  }
  if (stat == Statistic::K) return accumulate_indicator(terms, grid, false);
  Eigen::MatrixXd s = accumulate_kernel(terms, grid, bw);
  for (std::size_t a = 0; a < grid.nr(); ++a) s.row(a) *= n_minus_1 / (4.0 * std::numbers::pi * grid.r[a]);
  return s;
}

}  // namespace detail

/// Local planar statistics, one surface per point. With `lambda` null the
/// homogeneous estimate n / (|W||T|) weights every pair:
///   K:   (1 / (|W||T|)) sum_{j != i} 1(||u_i - u_j|| <= r, |t_i - t_j| <= h) / (lambda_i lambda_j)
///   pcf: ((n - 1) / (4 pi r |W||T|)) sum_{j != i} k_eps(||.|| - r) k_delta(|.| - h) / (lambda_i lambda_j)
/// with Epanechnikov kernels.
inline std::vector<ListaSurface> lista_planar(const PointPattern& p, const IntensityValues* lambda, Statistic stat,
                                              const GridSpec& grid, std::optional<PcfBandwidths> pcf_bw = {}) {
  if (p.is_network()) throw Error(Errc::DomainMismatch, "lista_planar needs a planar pattern");
  grid.validate();
  const std::size_t n = p.size();
  if (n < 2) throw Error(Errc::TooFewPoints, "LISTA needs at least two points");
  IntensityValues lam = lambda ? *lambda : homogeneous_intensity(p);
  detail::check_lambda(p, lam);
  const PcfBandwidths bw = pcf_bw.value_or(PcfBandwidths::defaults(grid));
  const double v = p.volume();
  std::vector<ListaSurface> out(n);
  const auto& pts = p.points();
  parallel_for(n, [&](std::size_t i) {
    std::vector<STPoint> others;
    std::vector<double> lo;
    others.reserve(n - 1);
    lo.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      others.push_back(pts[j]);
      lo.push_back(lam[j]);
    }
    out[i] = {i, grid,
              detail::lista_planar_point(pts[i], lam[i], others, lo, v, static_cast<double>(n - 1), stat, grid, bw)};
  });
  return out;
}

/// Local network statistics together with the number of ordered pairs left out
/// because the two points lie on disconnected components.
struct NetworkLista {
  std::vector<ListaSurface> surfaces;
  std::size_t disconnected_pairs = 0;
  double normalization = 1.0;  // D(X) when normalised, else 1
};

/// Temporal multiplicity of the lag |t - s| seen from t: 2 when both t - h and
/// t + h lie in T, else 1.
inline int temporal_multiplicity(const TimeInterval& time, double t, double lag) {
  return (t - lag >= time.lo() && t + lag <= time.hi()) ? 2 : 1;
}

/// D(X) = ((n - 1) / (|L||T|)) sum_i sum_{j != i} 1 / (lambda_i lambda_j).
inline double network_normalization(std::span<const double> lambda, double volume) {
  double sum_inv = 0.0, sum_inv2 = 0.0;
  for (double l : lambda) {
    sum_inv += 1.0 / l;
    sum_inv2 += 1.0 / (l * l);
  }
  return (static_cast<double>(lambda.size()) - 1.0) / volume * (sum_inv * sum_inv - sum_inv2);
}

inline double network_normalization(const PointPattern& p, const IntensityValues& lambda) {
  return network_normalization(lambda.values, p.volume());
}

namespace detail {

/// Local network surface for point i given distances and multiplicities to the
/// other points; `members` lists the pattern's indices into the caches.
struct NetworkLocalInput {
  const NetworkPairs* pairs;
  std::span<const std::size_t> members;  // indices into `pairs`
  std::span<const double> times;         // aligned with members
  std::span<const double> lambda;        // aligned with members
  const TimeInterval* time;
  double volume;
};

inline Eigen::MatrixXd lista_network_point(const NetworkLocalInput& in, std::size_t i, Statistic stat,
                                           const GridSpec& grid, const PcfBandwidths& bw,
                                           std::size_t* disconnected) {
  std::vector<PairTerm> terms;
  terms.reserve(in.members.size());
  const std::size_t a = in.members[i];
  for (std::size_t j = 0; j < in.members.size(); ++j) {
    if (j == i) continue;
    const std::size_t b = in.members[j];
    const double ds = in.pairs->distance(a, b);
    if (!std::isfinite(ds)) {
      if (disconnected) ++*disconnected;
      continue;
    }
    const double dt = std::abs(in.times[i] - in.times[j]);
    const double m = static_cast<double>(in.pairs->count(a, b)) * temporal_multiplicity(*in.time, in.times[i], dt);
    terms.push_back({ds, dt, 1.0 / (in.volume * in.lambda[i] * in.lambda[j] * m)});
  }
  if (stat == Statistic::K) return accumulate_indicator(terms, grid, true);
  return accumulate_kernel(terms, grid, bw);
}

}  // namespace detail

/// Local network statistics, one surface per point:
///   K:   (1 / (|L||T|)) sum_{j != i} 1(d_L < r, |t_i - t_j| < h) / (lambda_i lambda_j M)
///   pcf: (1 / (|L||T|)) sum_{j != i} k_eps(d_L - r) k_delta(|.| - h) / (lambda_i lambda_j M)
/// where M is count_at_distance(u_i, d_L) times the temporal multiplicity.
/// With `normalize`, every surface is divided by D(X). A null `lambda` means
/// the homogeneous n / (|L||T|).
inline NetworkLista lista_network(const PointPattern& p, const IntensityValues* lambda, Statistic stat,
                                  bool normalize, const GridSpec& grid, std::optional<PcfBandwidths> pcf_bw = {},
                                  const NetworkPairs* pairs = nullptr) {
  if (!p.is_network()) throw Error(Errc::DomainMismatch, "lista_network needs a network pattern");
  grid.validate();
  const std::size_t n = p.size();
  if (n < 2) throw Error(Errc::TooFewPoints, "LISTA needs at least two points");
  IntensityValues lam = lambda ? *lambda : homogeneous_intensity(p);
  detail::check_lambda(p, lam);
  NetworkPairs local;
  if (!pairs || !pairs->has_counts()) {
    local = NetworkPairs(*p.network(), p.locations(), true);
    pairs = &local;
  }
  const PcfBandwidths bw = pcf_bw.value_or(PcfBandwidths::defaults(grid));
  std::vector<std::size_t> members(n);
  std::vector<double> times(n);
  for (std::size_t i = 0; i < n; ++i) {
    members[i] = i;
    times[i] = p[i].t;
  }
  detail::NetworkLocalInput in{pairs, members, times, lam.values, &p.time(), p.volume()};
  NetworkLista out;
  out.surfaces.resize(n);
  std::vector<std::size_t> disconnected(n, 0);
  parallel_for(n, [&](std::size_t i) {
    out.surfaces[i] = {i, grid, detail::lista_network_point(in, i, stat, grid, bw, &disconnected[i])};
  });
  for (auto d : disconnected) out.disconnected_pairs += d;
  if (normalize) {
    out.normalization = network_normalization(p, lam);
    for (auto& s : out.surfaces) s.values /= out.normalization;
  }
  return out;
}

/// Intensity-weighted global network K: the sum of the (unnormalised) local
/// surfaces, i.e. (1 / (|L||T|)) sum_{i != j} 1(...) / (lambda_i lambda_j M),
/// whose expectation under the true intensity is r h.
inline KSurface k_inhom_network(const PointPattern& p, const IntensityValues& lambda, const GridSpec& grid,
                                const NetworkPairs* pairs = nullptr) {
  NetworkLista local = lista_network(p, &lambda, Statistic::K, false, grid, {}, pairs);
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(grid.nr(), grid.nh());
  for (const auto& s : local.surfaces) sum += s.values;
  return {grid, std::move(sum), network_theo(grid)};
}

}  // namespace stopp
