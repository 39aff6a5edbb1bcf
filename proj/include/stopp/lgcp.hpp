#pragma once

// Log-Gaussian Cox process fits: first-order Poisson trend plus covariance
// parameters of the latent field by (locally weighted) minimum contrast on the
// pair correlation surface.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <Eigen/Dense>

#include "stopp/error.hpp"
#include "stopp/fit.hpp"
#include "stopp/intensity.hpp"
#include "stopp/parallel.hpp"
#include "stopp/secondorder.hpp"
#include "stopp/simulate.hpp"

namespace stopp {

enum class CovFamily { separable_exp, gneiting, iaco_cesare };

inline std::string family_name(CovFamily f) {
  switch (f) {
    case CovFamily::separable_exp: return "separable";
    case CovFamily::gneiting: return "gneiting";
    case CovFamily::iaco_cesare: return "iaco-cesare";
  }
  return "";
}

struct CovarianceParams {
  CovFamily family = CovFamily::separable_exp;
  double sigma2 = 1.0;
  double alpha = 1.0;  // spatial scale
  double beta = 1.0;   // temporal scale
  double gamma_s = 1.0;
  double gamma_t = 1.0;
  double delta = 1.0;

  void validate() const {
    auto pos = [](double v) { return v > 0.0 && std::isfinite(v); };
    if (!pos(sigma2) || !pos(alpha) || !pos(beta) || !pos(gamma_s) || !pos(gamma_t) || !pos(delta))
      throw Error(Errc::InvalidParams, "covariance parameters must be positive and finite");
    if (gamma_s > 2.0 || gamma_t > 2.0) throw Error(Errc::InvalidParams, "smoothness exponents must lie in (0, 2]");
    if (family == CovFamily::gneiting && delta > 2.0)
      throw Error(Errc::InvalidParams, "Gneiting separability exponent must lie in (0, 2]");
  }
};

/// Covariance C(r, h) of the latent field.
///   separable:   s2 exp(-r/a) exp(-h/b)
///   gneiting:    s2 / psi^(d/gt) * exp(-(r/a)^gs / psi^(d/(2 gt))),  psi = (h/b)^gt + 1
///   iaco-cesare: s2 (1 + (r/a)^gs + (h/b)^gt)^(-d)
inline double covariance(const CovarianceParams& p, double r, double h) {
  switch (p.family) {
    case CovFamily::separable_exp: return p.sigma2 * std::exp(-r / p.alpha - h / p.beta);
    case CovFamily::gneiting: {
      const double psi = std::pow(h / p.beta, p.gamma_t) + 1.0;
      return p.sigma2 * std::pow(psi, -p.delta / p.gamma_t) *
             std::exp(-std::pow(r / p.alpha, p.gamma_s) * std::pow(psi, -p.delta / (2.0 * p.gamma_t)));
    }
    case CovFamily::iaco_cesare:
      return p.sigma2 * std::pow(1.0 + std::pow(r / p.alpha, p.gamma_s) + std::pow(h / p.beta, p.gamma_t), -p.delta);
  }
  return 0.0;
}

/// g(r, h) = exp(C(r, h)).
inline double theoretical_pcf(const CovarianceParams& p, double r, double h) {
  p.validate();
  if (!(r >= 0.0) || !(h >= 0.0)) throw Error(Errc::InvalidParams, "distances must be nonnegative");
  return std::exp(covariance(p, r, h));
}

inline Eigen::MatrixXd theoretical_pcf_surface(const CovarianceParams& p, const GridSpec& g) {
  p.validate();
  Eigen::MatrixXd s(g.nr(), g.nh());
  for (std::size_t a = 0; a < g.nr(); ++a)
    for (std::size_t b = 0; b < g.nh(); ++b) s(a, b) = std::exp(covariance(p, g.r[a], g.h[b]));
  return s;
}

struct ContrastOptions {
  bool free_shape = false;  // estimate gamma_s, gamma_t, delta too (not for separable)
  int max_iter = 500;
  int restarts = 5;
  double tol = 1e-8;
  std::uint64_t seed = 1;
  std::uint64_t stream = 0;  // distinguishes per-point optimizations
  std::optional<CovarianceParams> start;
};

struct ContrastFit {
  CovarianceParams params;
  double contrast = 0.0;
  int evaluations = 0;
  bool converged = false;
};

namespace detail {

struct ContrastProblem {
  const GridSpec* grid;
  const Eigen::MatrixXd* empirical;
  CovarianceParams base;
  bool free_shape;
  double best = std::numeric_limits<double>::infinity();
  CovarianceParams best_params;
  int evaluations = 0;

  std::size_t dim() const { return free_shape ? 6 : 3; }

  std::optional<CovarianceParams> unpack(const gsl_vector* v) const {
    CovarianceParams p = base;
    p.sigma2 = std::exp(gsl_vector_get(v, 0));
    p.alpha = std::exp(gsl_vector_get(v, 1));
    p.beta = std::exp(gsl_vector_get(v, 2));
    if (free_shape) {
      p.gamma_s = std::exp(gsl_vector_get(v, 3));
      p.gamma_t = std::exp(gsl_vector_get(v, 4));
      p.delta = std::exp(gsl_vector_get(v, 5));
    }
    try {
      p.validate();
    } catch (const Error&) {
      return std::nullopt;
    }
    return p;
  }

  static double eval(const gsl_vector* v, void* self) {
    auto& pb = *static_cast<ContrastProblem*>(self);
    ++pb.evaluations;
    auto p = pb.unpack(v);
    if (!p) return 1e100;
    const GridSpec& g = *pb.grid;
    Eigen::MatrixXd sq(g.nr(), g.nh());
    for (std::size_t a = 0; a < g.nr(); ++a)
      for (std::size_t b = 0; b < g.nh(); ++b) {
        double d = (*pb.empirical)(a, b) - std::exp(covariance(*p, g.r[a], g.h[b]));
        sq(a, b) = d * d;
      }
    double c = trapezoid(g, sq);
    if (!std::isfinite(c)) return 1e100;
    if (c < pb.best) pb.best = c, pb.best_params = *p;
    return c;
  }
};

}  // namespace detail

/// Minimizes the contrast integral of (J_emp - g(.; psi))^2 over the grid,
/// with Nelder-Mead on log-parameters. Restart 0 starts from `opt.start` (or
/// a data-driven guess); later restarts jitter the best point found so far.
/// The reported parameters are the best ever evaluated.
inline ContrastFit min_contrast(const GridSpec& grid, const Eigen::MatrixXd& empirical, CovFamily family,
                                const ContrastOptions& opt = {}) {
  grid.validate();
  if (empirical.rows() != static_cast<Eigen::Index>(grid.nr()) ||
      empirical.cols() != static_cast<Eigen::Index>(grid.nh()))
    throw Error(Errc::LengthMismatch, "empirical surface does not match the grid");
  if (!empirical.allFinite()) throw Error(Errc::InvalidParams, "empirical surface has non-finite values");

  CovarianceParams start;
  if (opt.start) {
    start = *opt.start;
  } else {
    start.family = family;
    const double j0 = empirical(0, 0);
    start.sigma2 = j0 > 1.0 + 1e-3 ? std::clamp(std::log(j0), 0.05, 20.0) : 0.5;
    start.alpha = grid.r.back() / 4.0;
    start.beta = grid.h.back() / 4.0;
  }
  start.family = family;
  start.validate();

  detail::ContrastProblem pb{&grid, &empirical, start, opt.free_shape && family != CovFamily::separable_exp};
  const std::size_t dim = pb.dim();
  std::vector<double> x0{std::log(start.sigma2), std::log(start.alpha), std::log(start.beta)};
  if (dim == 6) {
    // Keep the shape exponents strictly inside (0, 2] at the start.
    for (double v : {start.gamma_s, start.gamma_t, start.delta}) x0.push_back(std::log(std::min(v, 1.9)));
  }

  gsl_set_error_handler_off();
  gsl_multimin_function fn{&detail::ContrastProblem::eval, dim, &pb};
  gsl_vector* x = gsl_vector_alloc(dim);
  gsl_vector* step = gsl_vector_alloc(dim);
  gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, dim);
  bool any_converged = false;
  for (int restart = 0; restart < std::max(1, opt.restarts); ++restart) {
    std::vector<double> from = x0;
    if (restart > 0) {
      Rng rng = make_rng(opt.seed, opt.stream, static_cast<std::uint64_t>(restart));
      std::normal_distribution<double> jitter(0.0, 0.5);
      const CovarianceParams& b = pb.best_params;
      from = {std::log(b.sigma2), std::log(b.alpha), std::log(b.beta)};
      if (dim == 6) for (double v : {b.gamma_s, b.gamma_t, b.delta}) from.push_back(std::log(std::min(v, 1.9)));
      for (std::size_t k = 0; k < dim; ++k) from[k] += jitter(rng) * (k < 3 ? 1.0 : 0.1);
    }
    for (std::size_t k = 0; k < dim; ++k) {
      gsl_vector_set(x, k, from[k]);
      gsl_vector_set(step, k, k < 3 ? 0.5 : 0.1);
    }
    gsl_multimin_fminimizer_set(s, &fn, x, step);
    double last = s->fval;
    int since = 0;
    for (int it = 0; it < opt.max_iter; ++it) {
      if (gsl_multimin_fminimizer_iterate(s) != GSL_SUCCESS) break;
      const double size = gsl_multimin_fminimizer_size(s);
      if (size < opt.tol) {
        any_converged = true;
        break;
      }
      // Stagnation: no relative improvement above tol in 50 iterations.
      if (last - s->fval > opt.tol * std::abs(last)) {
        last = s->fval;
        since = 0;
      } else if (++since >= 50) {
        any_converged = true;
        break;
      }
    }
  }
  gsl_multimin_fminimizer_free(s);
  gsl_vector_free(step);
  gsl_vector_free(x);
  if (!any_converged || !std::isfinite(pb.best))
    throw Error(Errc::OptimFailure, "minimum contrast: every restart hit the iteration cap");
  return {pb.best_params, pb.best, pb.evaluations, true};
}

enum class Scope { global, local };

struct LgcpOptions {
  Scope first = Scope::global;
  Scope second = Scope::global;
  CovFamily family = CovFamily::separable_exp;
  std::uint64_t seed = 1;
  bool free_shape = false;
  std::optional<GridSpec> grid;  // default: quarter-maximum grid of the pattern
  LocalFitOptions local;         // bandwidths for local first-order fits
};

struct LgcpFit {
  FittedModel first_order;
  Scope first = Scope::global;
  Scope second = Scope::global;
  CovFamily family = CovFamily::separable_exp;
  CovarianceParams params;                     // global second order
  std::vector<CovarianceParams> local_params;  // one per point (local second order)
  double contrast = 0.0;
  std::vector<double> local_contrast;
  GridSpec grid;
  Eigen::MatrixXd empirical;  // pattern-level average pcf
  double seconds = 0.0;
};

/// LGCP fit: Poisson trend (global or local), inhomogeneous local pcf
/// surfaces weighted by that trend, then minimum contrast against g = exp(C)
/// on the pattern-level average (global) or on Gaussian-weighted averages
/// centred at each point (local).
inline LgcpFit fit_stlgcppm(const PointPattern& p, const Formula& f, const LgcpOptions& opt = {}) {
  if (p.is_network()) throw Error(Errc::DomainMismatch, "LGCP fits need a planar pattern");
  if (p.size() < 10) throw Error(Errc::InsufficientPoints, "LGCP fit needs at least 10 points");
  const auto t0 = std::chrono::steady_clock::now();

  LgcpFit out;
  out.first = opt.first;
  out.second = opt.second;
  out.family = opt.family;
  out.first_order = opt.first == Scope::global ? fit_stppm(p, f) : fit_locstppm(p, f, opt.local);
  out.grid = opt.grid ? *opt.grid : default_grid(p);
  out.grid.validate();

  IntensityValues lam{out.first_order.fitted, {}};
  const auto surfaces = lista_planar(p, &lam, Statistic::pcf, out.grid);
  const std::size_t n = p.size();
  out.empirical = Eigen::MatrixXd::Zero(out.grid.nr(), out.grid.nh());
  for (const auto& s : surfaces) out.empirical += s.values;
  out.empirical /= static_cast<double>(n);

  ContrastOptions copt;
  copt.seed = opt.seed;
  copt.free_shape = opt.free_shape;
  ContrastFit global = min_contrast(out.grid, out.empirical, opt.family, copt);
  out.params = global.params;
  out.contrast = global.contrast;

  if (opt.second == Scope::local) {
    const Bandwidths bw = silverman_bandwidths(p);
    out.local_params.resize(n);
    out.local_contrast.resize(n);
    const auto& pts = p.points();
    parallel_for(n, [&](std::size_t i) {
      Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(out.grid.nr(), out.grid.nh());
      double wsum = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        double ds = std::hypot(pts[i].x - pts[j].x, pts[i].y - pts[j].y) / bw.space;
        double dt = (pts[i].t - pts[j].t) / bw.time;
        double w = std::exp(-0.5 * (ds * ds + dt * dt));
        acc += w * surfaces[j].values;
        wsum += w;
      }
      ContrastOptions lopt = copt;
      lopt.stream = i + 1;
      lopt.start = global.params;
      ContrastFit c = min_contrast(out.grid, acc / wsum, opt.family, lopt);
      out.local_params[i] = c.params;
      out.local_contrast[i] = c.contrast;
    });
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

namespace detail {

inline std::vector<std::string> covariance_names(const CovarianceParams& p, bool free_shape) {
  std::vector<std::string> names{"sigma", "alpha", "beta"};
  if (free_shape && p.family != CovFamily::separable_exp) names.insert(names.end(), {"gamma_s", "gamma_t", "delta"});
  return names;
}

inline Eigen::VectorXd covariance_vector(const CovarianceParams& p, std::size_t k) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(k));
  const double all[] = {p.sigma2, p.alpha, p.beta, p.gamma_s, p.gamma_t, p.delta};
  for (std::size_t i = 0; i < k; ++i) v[static_cast<Eigen::Index>(i)] = all[i];
  return v;
}

}  // namespace detail

/// Console block. The timing line is omitted when `show_time` is false so
/// that reproducible outputs do not depend on the wall clock.
inline std::string format_lgcp(const LgcpFit& fit, bool show_time = true, bool free_shape = false) {
  const char* rule = "-------------------------------------------------\n";
  auto scope = [](Scope s) { return s == Scope::global ? "global" : "local"; };
  std::ostringstream os;
  os << "Joint minimum contrast fit \nfor a log-Gaussian Cox process with \n"
     << scope(fit.first) << " first-order intensity and \n"
     << scope(fit.second) << " second-order intensity \n"
     << rule << detail::format_first_order(fit.first_order, " of the first-order intensity") << rule
     << "Covariance function: " << family_name(fit.family) << " \n\n";
  const auto names = detail::covariance_names(fit.params, free_shape);
  if (fit.second == Scope::global) {
    os << "Estimated coefficients of the second-order intensity: \n"
       << detail::named_vector(names, detail::covariance_vector(fit.params, names.size()));
  } else {
    Eigen::MatrixXd rows(static_cast<Eigen::Index>(fit.local_params.size()), static_cast<Eigen::Index>(names.size()));
    for (std::size_t i = 0; i < fit.local_params.size(); ++i)
      rows.row(static_cast<Eigen::Index>(i)) = detail::covariance_vector(fit.local_params[i], names.size()).transpose();
    os << "Summary of estimated coefficients of the second-order intensity \n" << detail::summary_table(names, rows);
  }
  os << rule;
  if (show_time) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", fit.seconds / 60.0);
    os << "Model fitted in " << buf << " minutes\n";
  }
  return os.str();
}

}  // namespace stopp
