#pragma once

// Poisson and ETAS simulators for planar and network domains.

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "stopp/error.hpp"
#include "stopp/geometry.hpp"
#include "stopp/pattern.hpp"

namespace stopp {

using Rng = std::mt19937_64;

/// Independent generator for (seed, stream...) tuples.
template <class... Ids>
Rng make_rng(std::uint64_t seed, Ids... ids) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(ids)...};
  return Rng(seq);
}

/// Intensity for the Poisson simulators: a constant, or a function of
/// (x, y, t) and a parameter vector with an optional dominating bound.
struct LambdaSpec {
  using Fn = std::function<double(double, double, double, std::span<const double>)>;

  std::optional<double> constant;
  Fn fn;
  std::vector<double> par;
  std::optional<double> lambda_max;

  static LambdaSpec homogeneous(double value) {
    if (!(value > 0.0) || !std::isfinite(value))
      throw Error(Errc::InvalidParams, "constant intensity must be positive");
    LambdaSpec s;
    s.constant = value;
    return s;
  }

  static LambdaSpec function(Fn fn, std::vector<double> par, std::optional<double> lambda_max = std::nullopt) {
    LambdaSpec s;
    s.fn = std::move(fn);
    s.par = std::move(par);
    s.lambda_max = lambda_max;
    return s;
  }

  /// exp(par[0] + par[1] * c1 + ...) with covariates chosen from "x", "y", "t".
  static LambdaSpec log_linear(std::vector<std::string> terms, std::vector<double> par,
                               std::optional<double> lambda_max = std::nullopt) {
    if (par.size() != terms.size() + 1)
      throw Error(Errc::InvalidParams, "log-linear intensity needs one coefficient per term plus an intercept");
    std::vector<int> which;
    for (const auto& t : terms) {
      if (t == "x") which.push_back(0);
      else if (t == "y") which.push_back(1);
      else if (t == "t") which.push_back(2);
      else throw Error(Errc::InvalidParams, "unknown intensity term '" + t + "'");
    }
    return function(
        [which](double x, double y, double t, std::span<const double> a) {
          const double c[3] = {x, y, t};
          double eta = a[0];
          for (std::size_t k = 0; k < which.size(); ++k) eta += a[k + 1] * c[which[k]];
          return std::exp(eta);
        },
        std::move(par), lambda_max);
  }

  bool is_constant() const { return constant.has_value(); }

  double operator()(double x, double y, double t) const { return constant ? *constant : fn(x, y, t, par); }
};

namespace detail {

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline std::uint64_t poisson(Rng& rng, double mean) {
  if (!(mean > 0.0)) return 0;
  return std::poisson_distribution<std::uint64_t>(mean)(rng);
}

inline double grid_node(double lo, double hi, int k, int n) { return lo + (hi - lo) * k / (n - 1); }

/// Dominating bound: the supplied bound, validated against a 50^3 grid scan,
/// or 1.1 times the grid maximum when none is supplied.
template <class Eval>
double dominating_bound(const LambdaSpec& spec, Eval&& scan_max) {
  if (spec.is_constant()) return *spec.constant;
  const double grid_max = scan_max();
  if (!std::isfinite(grid_max)) throw Error(Errc::BadBound, "intensity is not finite on the domain");
  if (spec.lambda_max) {
    if (grid_max > *spec.lambda_max)
      throw Error(Errc::BadBound, "intensity exceeds the supplied bound on the scan grid");
    return *spec.lambda_max;
  }
  return 1.1 * grid_max;
}

inline void check_accept(double value, double bound) {
  if (value > bound) throw Error(Errc::BadBound, "intensity exceeds its dominating bound at a proposal");
  if (value < 0.0 || !std::isfinite(value)) throw Error(Errc::InvalidParams, "intensity must be nonnegative");
}

/// Uniform location along the network (length-weighted segment choice).
inline NetworkLocation uniform_location(const LinearNetwork& net, std::span<const double> cumulative, Rng& rng) {
  double u = uniform(rng, 0.0, cumulative.back());
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  std::size_t s = std::min<std::size_t>(it - cumulative.begin(), cumulative.size() - 1);
  return {s, uniform(rng, 0.0, net.segments()[s].length)};
}

inline std::vector<double> cumulative_lengths(const LinearNetwork& net) {
  std::vector<double> c;
  double acc = 0.0;
  for (const auto& s : net.segments()) c.push_back(acc += s.length);
  return c;
}

}  // namespace detail

/// One Poisson pattern on W x T per replicate; replicate r uses seed + r.
inline std::vector<PointPattern> rstpp(const LambdaSpec& lambda, const Window& window, const TimeInterval& time,
                                       std::uint64_t seed, int nsim = 1) {
  const int n = 50;
  const double bound = detail::dominating_bound(lambda, [&] {
    double m = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          m = std::max(m, lambda(detail::grid_node(window.x().lo, window.x().hi, i, n),
                                 detail::grid_node(window.y().lo, window.y().hi, j, n),
                                 detail::grid_node(time.lo(), time.hi(), k, n)));
    return m;
  });
  std::vector<PointPattern> out;
  for (int r = 0; r < nsim; ++r) {
    Rng rng(seed + static_cast<std::uint64_t>(r));
    const std::uint64_t count = detail::poisson(rng, bound * window.area() * time.length());
    std::vector<STPoint> pts;
    pts.reserve(count);
    for (std::uint64_t k = 0; k < count; ++k) {
      STPoint q{detail::uniform(rng, window.x().lo, window.x().hi),
                detail::uniform(rng, window.y().lo, window.y().hi), detail::uniform(rng, time.lo(), time.hi())};
      if (!lambda.is_constant()) {
        double v = lambda(q.x, q.y, q.t);
        detail::check_accept(v, bound);
        if (detail::uniform(rng, 0.0, 1.0) * bound >= v) continue;
      }
      pts.push_back(q);
    }
    out.push_back(PointPattern::planar(std::move(pts), window, time));
  }
  return out;
}

/// Poisson pattern on L x T; intensity in points per unit length and time.
inline PointPattern rstlpp(const LambdaSpec& lambda, std::shared_ptr<const LinearNetwork> net,
                           const TimeInterval& time, std::uint64_t seed) {
  if (!net) throw Error(Errc::EmptyNetwork, "null network");
  const int n = 50;
  const double bound = detail::dominating_bound(lambda, [&] {
    double m = 0.0;
    for (std::size_t s = 0; s < net->segments().size(); ++s)
      for (int i = 0; i < n; ++i) {
        Point2 q = net->point_at({s, net->segments()[s].length * i / (n - 1)});
        for (int k = 0; k < n; ++k)
          m = std::max(m, lambda(q.x, q.y, detail::grid_node(time.lo(), time.hi(), k, n)));
      }
    return m;
  });
  const auto cumulative = detail::cumulative_lengths(*net);
  Rng rng(seed);
  const std::uint64_t count = detail::poisson(rng, bound * net->total_length() * time.length());
  std::vector<NetworkLocation> locs;
  std::vector<double> times;
  for (std::uint64_t k = 0; k < count; ++k) {
    NetworkLocation loc = detail::uniform_location(*net, cumulative, rng);
    double t = detail::uniform(rng, time.lo(), time.hi());
    if (!lambda.is_constant()) {
      Point2 q = net->point_at(loc);
      double v = lambda(q.x, q.y, t);
      detail::check_accept(v, bound);
      if (detail::uniform(rng, 0.0, 1.0) * bound >= v) continue;
    }
    locs.push_back(loc);
    times.push_back(t);
  }
  return PointPattern::on_network(locs, times, std::move(net), time);
}

/// ETAS parameters. `A` is the expected number of direct offspring of an event
/// at the threshold magnitude; each offspring count scales with
/// exp(alpha_m (m - m0)).
struct EtasParams {
  double mu = 0.0;       // background events per unit time over the whole domain
  double A = 0.0;        // productivity
  double c = 0.01;       // Omori offset
  double p = 1.2;        // Omori decay, > 1
  double d = 0.5;        // spatial kernel scale (squared distance units)
  double q = 1.5;        // spatial decay, > 1
  double alpha_m = 0.0;  // magnitude productivity
  double m0 = 2.5;       // magnitude threshold
  double b = 1.0;        // Gutenberg-Richter slope

  /// Converts a productivity k0 given for the unnormalised kernels
  /// (t + c)^-p and (r^2 + d)^-q into the expected offspring count A.
  static EtasParams from_unnormalized(double mu, double k0, double c, double p, double d, double q,
                                      double m0, double b, double alpha_m = 0.0) {
    EtasParams e{mu, 0.0, c, p, d, q, alpha_m, m0, b};
    if (!(p > 1.0) || !(q > 1.0) || !(c > 0.0) || !(d > 0.0))
      throw Error(Errc::InvalidParams, "ETAS kernels need p > 1, q > 1, c > 0, d > 0");
    const double time_mass = std::pow(c, 1.0 - p) / (p - 1.0);
    const double space_mass = std::numbers::pi * std::pow(d, 1.0 - q) / (q - 1.0);
    e.A = k0 * time_mass * space_mass;
    return e;
  }

  /// Expected number of direct offspring per event, averaged over magnitudes.
  double branching_ratio() const {
    const double beta = b * std::numbers::ln10;
    if (A == 0.0) return 0.0;
    if (alpha_m >= beta) return kInf;
    return A * beta / (beta - alpha_m);
  }

  void validate() const {
    if (mu < 0.0 || A < 0.0 || !(c > 0.0) || !(d > 0.0) || !(b > 0.0) || alpha_m < 0.0)
      throw Error(Errc::InvalidParams, "ETAS parameters must be positive");
    if (!(p > 1.0) || !(q > 1.0)) throw Error(Errc::InvalidParams, "ETAS kernels need p > 1 and q > 1");
    if (branching_ratio() >= 1.0)
      throw Error(Errc::SupercriticalBranching,
                  "expected offspring per event is " + std::to_string(branching_ratio()) + " >= 1");
  }
};

namespace detail {

struct EtasEvent {
  double t;
  double m;
  Point2 pos;
  NetworkLocation loc;
};

inline double omori_delay(Rng& rng, double c, double p) {
  double u = uniform(rng, 0.0, 1.0);
  return c * (std::pow(1.0 - u, -1.0 / (p - 1.0)) - 1.0);
}

inline double displacement_radius(Rng& rng, double d, double q) {
  double u = uniform(rng, 0.0, 1.0);
  return std::sqrt(d * (std::pow(1.0 - u, 1.0 / (1.0 - q)) - 1.0));
}

/// Moves `dist` along the network from `start`, picking the initial direction
/// and each junction exit uniformly; dead ends reverse the walk.
inline NetworkLocation network_walk(const LinearNetwork& net, NetworkLocation start, double dist, Rng& rng) {
  const auto& segs = net.segments();
  std::size_t seg = start.segment;
  double off = start.offset;
  bool forward = uniform(rng, 0.0, 1.0) < 0.5;  // towards segs[seg].to
  for (long step = 0; step < 1000000; ++step) {
    const double len = segs[seg].length;
    const double room = forward ? len - off : off;
    if (dist <= room) return {seg, forward ? off + dist : off - dist};
    dist -= room;
    const std::size_t vertex = forward ? segs[seg].to : segs[seg].from;
    const auto& inc = net.incident(vertex);
    std::size_t next = seg;
    if (inc.size() > 1) {
      std::size_t pick = std::uniform_int_distribution<std::size_t>(0, inc.size() - 2)(rng);
      for (std::size_t e : inc) {
        if (e == seg) continue;
        if (pick-- == 0) {
          next = e;
          break;
        }
      }
    }
    seg = next;
    forward = segs[seg].from == vertex;
    if (segs[seg].from == vertex && segs[seg].to == vertex) forward = true;
    off = forward ? 0.0 : segs[seg].length;
  }
  return {seg, off};
}

}  // namespace detail

/// ETAS branching simulation on W x T (planar) or L x T (network). Background
/// events are Poisson(mu |T|) uniform in space-time with Gutenberg-Richter
/// magnitudes above m0; offspring follow Omori delays and an isotropic
/// (r^2 + d)^-q displacement (mapped along the network for network domains).
/// Offspring falling outside the window still reproduce but are not recorded.
inline PointPattern retas(const EtasParams& params, const std::optional<Window>& window,
                          std::shared_ptr<const LinearNetwork> net, const TimeInterval& time, std::uint64_t seed) {
  params.validate();
  if (!window && !net) throw Error(Errc::InvalidDomain, "ETAS needs a window or a network");
  Rng rng(seed);
  const double beta = params.b * std::numbers::ln10;
  std::exponential_distribution<double> magnitude_excess(beta);
  std::vector<double> cumulative;
  if (net) cumulative = detail::cumulative_lengths(*net);

  std::vector<detail::EtasEvent> generation;
  const std::uint64_t n_background = detail::poisson(rng, params.mu * time.length());
  for (std::uint64_t k = 0; k < n_background; ++k) {
    detail::EtasEvent e{};
    e.t = detail::uniform(rng, time.lo(), time.hi());
    e.m = params.m0 + magnitude_excess(rng);
    if (net) {
      e.loc = detail::uniform_location(*net, cumulative, rng);
      e.pos = net->point_at(e.loc);
    } else {
      e.pos = {detail::uniform(rng, window->x().lo, window->x().hi),
               detail::uniform(rng, window->y().lo, window->y().hi)};
    }
    generation.push_back(e);
  }

  std::vector<detail::EtasEvent> recorded;
  while (!generation.empty()) {
    std::vector<detail::EtasEvent> next;
    for (const auto& parent : generation) {
      if (net || window->contains(parent.pos)) recorded.push_back(parent);
      const double expected = params.A * std::exp(params.alpha_m * (parent.m - params.m0));
      const std::uint64_t kids = detail::poisson(rng, expected);
      for (std::uint64_t k = 0; k < kids; ++k) {
        detail::EtasEvent child{};
        child.t = parent.t + detail::omori_delay(rng, params.c, params.p);
        child.m = params.m0 + magnitude_excess(rng);
        const double r = detail::displacement_radius(rng, params.d, params.q);
        if (net) {
          child.loc = detail::network_walk(*net, parent.loc, r, rng);
          child.pos = net->point_at(child.loc);
        } else {
          const double angle = detail::uniform(rng, 0.0, 2.0 * std::numbers::pi);
          child.pos = {parent.pos.x + r * std::cos(angle), parent.pos.y + r * std::sin(angle)};
        }
        if (child.t > time.hi()) continue;
        next.push_back(child);
      }
    }
    generation = std::move(next);
  }

  std::sort(recorded.begin(), recorded.end(),
            [](const detail::EtasEvent& a, const detail::EtasEvent& b) { return a.t < b.t; });
  MarkTable marks{{"magnitude", {}, {}}};
  for (const auto& e : recorded) marks[0].values.push_back(e.m);
  if (net) {
    std::vector<NetworkLocation> locs;
    std::vector<double> times;
    for (const auto& e : recorded) {
      locs.push_back(e.loc);
      times.push_back(e.t);
    }
    return PointPattern::on_network(locs, times, std::move(net), time, std::move(marks));
  }
  std::vector<STPoint> pts;
  for (const auto& e : recorded) pts.push_back({e.pos.x, e.pos.y, e.t});
  return PointPattern::planar(std::move(pts), *window, time, std::move(marks));
}

}  // namespace stopp
