#pragma once

// Log-linear Poisson intensity models fitted as weighted Poisson regressions on
// a Berman-Turner quadrature scheme: global, locally weighted and separable.

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "stopp/error.hpp"
#include "stopp/intensity.hpp"
#include "stopp/parallel.hpp"
#include "stopp/pattern.hpp"
#include "stopp/stats.hpp"

namespace stopp {

/// Right-hand side of a log-linear trend. Each term is a product of base
/// variables (x, y, t or a mark column); the intercept is always present.
struct Formula {
  std::vector<std::vector<std::string>> terms;

  bool intercept_only() const { return terms.empty(); }

  std::string str() const {
    if (terms.empty()) return "~1";
    std::string s = "~";
    for (std::size_t k = 0; k < terms.size(); ++k) {
      if (k) s += " + ";
      for (std::size_t v = 0; v < terms[k].size(); ++v) s += (v ? ":" : "") + terms[k][v];
    }
    return s;
  }

  /// Accepts "~1", "~x + y", "~x*y" (= x + y + x:y), "~x:t", "~t + crime_hour".
  static Formula parse(std::string_view text) {
    std::string s;
    for (char c : text)
      if (!std::isspace(static_cast<unsigned char>(c))) s += c;
    if (s.empty() || s.front() != '~') throw Error(Errc::ParseError, "formula must start with '~': " + std::string(text));
    s.erase(0, 1);
    if (s.empty()) throw Error(Errc::ParseError, "formula has no right-hand side");
    auto ident = [](const std::string& v) {
      if (v.empty() || std::isdigit(static_cast<unsigned char>(v[0]))) return false;
      return std::all_of(v.begin(), v.end(),
                         [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.'; });
    };
    auto split = [](const std::string& v, char sep) {
      std::vector<std::string> out;
      std::size_t start = 0;
      for (;;) {
        std::size_t pos = v.find(sep, start);
        out.push_back(v.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
        if (pos == std::string::npos) return out;
        start = pos + 1;
      }
    };
    Formula f;
    std::set<std::vector<std::string>> seen;
    auto add = [&](std::vector<std::string> term) {
      for (const auto& v : term)
        if (!ident(v)) throw Error(Errc::ParseError, "bad covariate name '" + v + "' in formula");
      std::vector<std::string> key = term;
      std::sort(key.begin(), key.end());
      if (std::adjacent_find(key.begin(), key.end()) != key.end())
        throw Error(Errc::ParseError, "repeated variable in term");
      if (seen.insert(key).second) f.terms.push_back(std::move(term));
    };
    for (const std::string& part : split(s, '+')) {
      if (part == "1") continue;
      if (part == "0" || part == "-1" || part.find('-') != std::string::npos)
        throw Error(Errc::ParseError, "the intercept is always included; '-' terms are not supported");
      if (part.empty()) throw Error(Errc::ParseError, "empty term in formula");
      if (part.find('*') != std::string::npos) {
        // a*b*c expands to every nonempty sub-product, lower orders first.
        std::vector<std::vector<std::string>> factors;
        for (const auto& fac : split(part, '*')) factors.push_back(split(fac, ':'));
        const std::size_t m = factors.size();
        for (std::size_t order = 1; order <= m; ++order)
          for (unsigned mask = 1; mask < (1u << m); ++mask) {
            if (static_cast<std::size_t>(std::popcount(mask)) != order) continue;
            std::vector<std::string> term;
            for (std::size_t b = 0; b < m; ++b)
              if (mask & (1u << b)) term.insert(term.end(), factors[b].begin(), factors[b].end());
            add(std::move(term));
          }
      } else {
        add(split(part, ':'));
      }
    }
    return f;
  }
};

/// Covariate values at a set of evaluation points. Mark values of point k are
/// read from row mark_row[k] of the mark table.
struct CovariateFrame {
  std::span<const double> x, y, t;
  const MarkTable* marks = nullptr;
  std::span<const std::size_t> mark_row;

  std::size_t size() const { return t.empty() ? x.size() : t.size(); }
};

struct Design {
  std::vector<std::string> names;  // "(Intercept)" first
  Eigen::MatrixXd matrix;
};

/// Design matrix of a formula; `allowed` restricts the base variables (empty =
/// any of x, y, t and the mark columns).
inline Design build_design(const Formula& f, const CovariateFrame& cf, const std::set<std::string>& allowed = {}) {
  const std::size_t n = cf.size();
  struct Col {
    std::string name;
    Eigen::VectorXd v;
  };
  auto base = [&](const std::string& var) -> std::vector<Col> {
    if (!allowed.empty() && !allowed.count(var))
      throw Error(Errc::InvalidParams, "covariate '" + var + "' is not allowed in this formula");
    auto coord = [&](std::span<const double> s) {
      if (s.size() != n) throw Error(Errc::InvalidParams, "covariate '" + var + "' is unavailable here");
      return std::vector<Col>{{var, Eigen::Map<const Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(n))}};
    };
    if (var == "x") return coord(cf.x);
    if (var == "y") return coord(cf.y);
    if (var == "t") return coord(cf.t);
    const MarkColumn* col = nullptr;
    if (cf.marks)
      for (const auto& c : *cf.marks)
        if (c.name == var) col = &c;
    if (!col) throw Error(Errc::InvalidParams, "formula references unknown covariate '" + var + "'");
    if (!col->categorical()) {
      Col c{var, Eigen::VectorXd(n)};
      for (std::size_t k = 0; k < n; ++k) c.v[k] = col->values[cf.mark_row[k]];
      return {c};
    }
    // Treatment contrasts against the first level.
    std::vector<Col> out;
    for (std::size_t l = 1; l < col->levels.size(); ++l) {
      Col c{var + col->levels[l], Eigen::VectorXd(n)};
      for (std::size_t k = 0; k < n; ++k) c.v[k] = col->values[cf.mark_row[k]] == static_cast<double>(l) ? 1.0 : 0.0;
      out.push_back(std::move(c));
    }
    return out;
  };

  std::vector<Col> cols{{"(Intercept)", Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n))}};
  for (const auto& term : f.terms) {
    std::vector<Col> prod{{"", Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n))}};
    for (const auto& var : term) {
      std::vector<Col> next;
      for (const auto& a : prod)
        for (const auto& b : base(var))
          next.push_back({a.name.empty() ? b.name : a.name + ":" + b.name, a.v.cwiseProduct(b.v)});
      prod = std::move(next);
    }
    cols.insert(cols.end(), prod.begin(), prod.end());
  }
  Design d;
  d.matrix.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    d.names.push_back(cols[c].name);
    d.matrix.col(static_cast<Eigen::Index>(c)) = cols[c].v;
  }
  return d;
}

/// Data points followed by dummy points, with weights a_k = nu / n_k where n_k
/// counts the quadrature points sharing point k's cell.
struct QuadratureScheme {
  std::vector<STPoint> points;
  std::vector<double> weights;
  std::vector<char> is_data;
  std::vector<std::size_t> mark_row;  // data: itself; dummy: the data point nearest in time
  std::size_t n_data = 0;
  std::array<std::size_t, 3> cells{1, 1, 1};
  double cell_volume = 0.0;
  double volume = 0.0;

  std::size_t size() const { return points.size(); }

  Eigen::VectorXd responses() const {
    Eigen::VectorXd y(static_cast<Eigen::Index>(size()));
    for (std::size_t k = 0; k < size(); ++k) y[k] = is_data[k] ? 1.0 / weights[k] : 0.0;
    return y;
  }
  Eigen::VectorXd weight_vector() const {
    return Eigen::Map<const Eigen::VectorXd>(weights.data(), static_cast<Eigen::Index>(weights.size()));
  }
  CovariateFrame frame(const MarkTable* marks, std::vector<double>& xs, std::vector<double>& ys,
                       std::vector<double>& ts) const {
    xs.clear(), ys.clear(), ts.clear();
    for (const auto& q : points) xs.push_back(q.x), ys.push_back(q.y), ts.push_back(q.t);
    return {xs, ys, ts, marks, mark_row};
  }
};

namespace detail {

inline std::vector<std::size_t> nearest_in_time(const std::vector<double>& data_t, const std::vector<double>& query) {
  std::vector<std::size_t> order(data_t.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return data_t[a] < data_t[b]; });
  std::vector<std::size_t> out(query.size(), 0);
  if (order.empty()) return out;
  for (std::size_t k = 0; k < query.size(); ++k) {
    auto it = std::lower_bound(order.begin(), order.end(), query[k],
                               [&](std::size_t a, double v) { return data_t[a] < v; });
    if (it == order.end()) {
      out[k] = order.back();
    } else if (it == order.begin()) {
      out[k] = *it;
    } else {
      std::size_t hi = *it, lo = *(it - 1);
      out[k] = (query[k] - data_t[lo] <= data_t[hi] - query[k]) ? lo : hi;
    }
  }
  return out;
}

/// Box quadrature over the active axes (x, y, t). Inactive axes have a single
/// cell and do not contribute to the volume. Dummy points sit at cell centres.
inline QuadratureScheme box_quadrature(const std::vector<STPoint>& data, std::array<Interval, 3> axes,
                                       std::array<bool, 3> active, std::size_t k) {
  for (int attempt = 0; attempt <= 10; ++attempt, k *= 2) {
    std::array<std::size_t, 3> nc{};
    double nu = 1.0, vol = 1.0;
    for (int a = 0; a < 3; ++a) {
      nc[a] = active[a] ? k : 1;
      if (active[a]) {
        nu *= axes[a].length() / static_cast<double>(k);
        vol *= axes[a].length();
      }
    }
    auto cell_of = [&](const STPoint& q) {
      const double c[3] = {q.x, q.y, q.t};
      std::size_t idx = 0;
      for (int a = 0; a < 3; ++a) {
        std::size_t i = 0;
        if (active[a]) {
          double u = (c[a] - axes[a].lo) / axes[a].length() * static_cast<double>(nc[a]);
          i = static_cast<std::size_t>(std::clamp(std::floor(u), 0.0, static_cast<double>(nc[a] - 1)));
        }
        idx = idx * nc[a] + i;
      }
      return idx;
    };
    QuadratureScheme q;
    q.n_data = data.size();
    q.points = data;
    q.is_data.assign(data.size(), 1);
    const STPoint fill = data.empty() ? STPoint{} : data.front();
    for (std::size_t i = 0; i < nc[0]; ++i)
      for (std::size_t j = 0; j < nc[1]; ++j)
        for (std::size_t l = 0; l < nc[2]; ++l) {
          auto centre = [&](int a, std::size_t idx, double dflt) {
            return active[a] ? axes[a].lo + (static_cast<double>(idx) + 0.5) * axes[a].length() / nc[a] : dflt;
          };
          q.points.push_back({centre(0, i, fill.x), centre(1, j, fill.y), centre(2, l, fill.t)});
          q.is_data.push_back(0);
        }
    const std::size_t ncell = nc[0] * nc[1] * nc[2];
    std::vector<std::size_t> count(ncell, 0), cell(q.points.size());
    for (std::size_t m = 0; m < q.points.size(); ++m) ++count[cell[m] = cell_of(q.points[m])];
    if (std::any_of(count.begin(), count.end(), [](std::size_t c) { return c == 0; })) continue;
    q.weights.resize(q.points.size());
    double total = 0.0;
    for (std::size_t m = 0; m < q.points.size(); ++m) total += q.weights[m] = nu / static_cast<double>(count[cell[m]]);
    if (std::abs(total - vol) > 1e-6 * vol) continue;
    q.cells = nc;
    q.cell_volume = nu;
    q.volume = vol;
    std::vector<double> data_t, all_t;
    for (const auto& p : data) data_t.push_back(p.t);
    for (const auto& p : q.points) all_t.push_back(p.t);
    q.mark_row = nearest_in_time(data_t, all_t);
    for (std::size_t m = 0; m < data.size(); ++m) q.mark_row[m] = m;
    return q;
  }
  throw Error(Errc::GridRefinementFailure, "quadrature grid refinement failed to cover the domain");
}

}  // namespace detail

/// Regular 3-D dummy grid over W x T with at least max(target, 4n) dummy points
/// (at least 4 cells per axis). Cells are the grid cubes.
inline QuadratureScheme build_quadrature(const PointPattern& p, std::optional<std::size_t> target_dummy = {}) {
  if (p.is_network()) throw Error(Errc::DomainMismatch, "quadrature scheme needs a planar pattern");
  if (p.empty()) throw Error(Errc::EmptyPattern, "quadrature scheme needs at least one point");
  const double m = static_cast<double>(std::max(target_dummy.value_or(0), 4 * p.size()));
  std::size_t k = static_cast<std::size_t>(std::ceil(std::cbrt(m) - 1e-9));
  if (!target_dummy) k = std::max<std::size_t>(k, 4);
  return detail::box_quadrature(p.points(), {p.window()->x(), p.window()->y(), p.time().range()},
                                {true, true, true}, std::max<std::size_t>(k, 1));
}

/// Spatial quadrature on a network: each segment is cut into pieces no longer
/// than |L| / (4n), with a dummy point at each piece midpoint; a = piece
/// length / number of quadrature points on the piece.
inline QuadratureScheme build_network_quadrature(const PointPattern& p) {
  const LinearNetwork& net = *p.network();
  const double step = net.total_length() / static_cast<double>(std::max<std::size_t>(4 * p.size(), 16));
  struct Piece {
    std::size_t seg;
    double len;
  };
  std::vector<std::size_t> first(net.segments().size());
  std::vector<Piece> pieces;
  std::vector<double> seglen(net.segments().size());
  QuadratureScheme q;
  q.n_data = p.size();
  q.points = p.points();
  q.is_data.assign(p.size(), 1);
  for (std::size_t s = 0; s < net.segments().size(); ++s) {
    const double len = net.segments()[s].length;
    const std::size_t np = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(len / step - 1e-9)));
    first[s] = pieces.size();
    seglen[s] = len;
    for (std::size_t k = 0; k < np; ++k) {
      pieces.push_back({s, len / static_cast<double>(np)});
      Point2 mid = net.point_at({s, (static_cast<double>(k) + 0.5) * len / static_cast<double>(np)});
      q.points.push_back({mid.x, mid.y, p.time().lo()});
      q.is_data.push_back(0);
    }
  }
  std::vector<std::size_t> piece_of(q.points.size()), count(pieces.size(), 0);
  for (std::size_t m = 0; m < q.points.size(); ++m) {
    std::size_t idx;
    if (m < p.size()) {
      const NetworkLocation& loc = p.locations()[m];
      const std::size_t np = (first.size() > loc.segment + 1 ? first[loc.segment + 1] : pieces.size()) - first[loc.segment];
      const double u = loc.offset / seglen[loc.segment] * static_cast<double>(np);
      idx = first[loc.segment] +
            static_cast<std::size_t>(std::clamp(std::floor(u), 0.0, static_cast<double>(np - 1)));
    } else {
      idx = m - p.size();
    }
    ++count[piece_of[m] = idx];
  }
  q.weights.resize(q.points.size());
  for (std::size_t m = 0; m < q.points.size(); ++m)
    q.weights[m] = pieces[piece_of[m]].len / static_cast<double>(count[piece_of[m]]);
  q.volume = net.total_length();
  q.cell_volume = step;
  q.cells = {pieces.size(), 1, 1};
  q.mark_row.assign(q.points.size(), 0);
  for (std::size_t m = 0; m < p.size(); ++m) q.mark_row[m] = m;
  return q;
}

struct PoissonRegression {
  Eigen::VectorXd beta;
  double deviance = 0.0;
  int iterations = 0;
  bool converged = false;
};

namespace detail {

inline double poisson_deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& w, const Eigen::VectorXd& mu) {
  double d = 0.0;
  for (Eigen::Index k = 0; k < y.size(); ++k) {
    double term = y[k] > 0 ? y[k] * std::log(y[k] / mu[k]) - (y[k] - mu[k]) : mu[k];
    d += w[k] * term;
  }
  return 2.0 * d;
}

}  // namespace detail

/// Maximizes sum_k w_k (y_k eta_k - exp(eta_k)) by Newton / IRLS with step
/// halving. Column 0 of X must be the intercept; the other columns are
/// centred and scaled internally. Stops when the relative deviance change
/// drops below `tol` or after `max_iter` iterations (converged = false).
inline PoissonRegression poisson_irls(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                                      const Eigen::VectorXd* start = nullptr, int max_iter = 100, double tol = 1e-8) {
  const Eigen::Index n = X.rows(), p = X.cols();
  Eigen::VectorXd centre = Eigen::VectorXd::Zero(p), scale = Eigen::VectorXd::Ones(p);
  for (Eigen::Index c = 1; c < p; ++c) {
    centre[c] = X.col(c).mean();
    double sd = std::sqrt((X.col(c).array() - centre[c]).square().sum() / std::max<double>(1.0, n - 1.0));
    if (!(sd > 0.0)) throw Error(Errc::RankDeficientDesign, "design column " + std::to_string(c) + " is constant");
    scale[c] = sd;
  }
  Eigen::MatrixXd Z = X;
  for (Eigen::Index c = 1; c < p; ++c) Z.col(c) = (X.col(c).array() - centre[c]) / scale[c];

  const Eigen::VectorXd sw = w.cwiseMax(0.0).cwiseSqrt();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sw.asDiagonal() * Z);
  qr.setThreshold(1e-10);
  if (qr.rank() < p) throw Error(Errc::RankDeficientDesign, "design matrix is rank deficient on the quadrature points");

  Eigen::VectorXd b = Eigen::VectorXd::Zero(p);
  if (start) {
    b = *start;
    for (Eigen::Index c = 1; c < p; ++c) {
      b[0] += (*start)[c] * centre[c];
      b[c] = (*start)[c] * scale[c];
    }
  } else {
    b[0] = std::log(std::max(w.dot(y) / w.sum(), 1e-300));
  }
  auto mean_of = [&](const Eigen::VectorXd& beta) {
    return (Z * beta).array().min(700.0).exp().matrix().eval();
  };
  Eigen::VectorXd mu = mean_of(b);
  double dev = detail::poisson_deviance(y, w, mu);

  PoissonRegression out;
  auto newton = [&](Eigen::VectorXd& beta, Eigen::VectorXd& m, double& d) {
    Eigen::VectorXd wm = w.cwiseProduct(m);
    Eigen::MatrixXd H = Z.transpose() * wm.asDiagonal() * Z;
    Eigen::VectorXd g = Z.transpose() * w.cwiseProduct(y - m);
    Eigen::VectorXd step = H.ldlt().solve(g);
    double s = 1.0;
    for (int half = 0; half < 40; ++half, s *= 0.5) {
      Eigen::VectorXd cand = beta + s * step;
      Eigen::VectorXd mc = mean_of(cand);
      double dc = detail::poisson_deviance(y, w, mc);
      if (std::isfinite(dc) && dc <= d + 1e-12 * std::abs(d)) {
        double change = std::abs(d - dc) / (std::abs(dc) + 0.1);
        beta = cand, m = mc, d = dc;
        return change;
      }
    }
    return 0.0;  // no improving step: at the optimum to working precision
  };
  for (out.iterations = 1; out.iterations <= max_iter; ++out.iterations) {
    if (newton(b, mu, dev) < tol) {
      out.converged = true;
      break;
    }
  }
  if (out.converged) newton(b, mu, dev);  // one polishing step tightens the score equations
  out.iterations = std::min(out.iterations, max_iter);
  out.deviance = dev;
  out.beta = b;
  for (Eigen::Index c = 1; c < p; ++c) {
    out.beta[c] = b[c] / scale[c];
    out.beta[0] -= out.beta[c] * centre[c];
  }
  return out;
}

enum class ModelKind { separable, global_poisson, local_poisson };

struct FittedModel {
  ModelKind kind = ModelKind::global_poisson;
  Formula formula;                      // spatial part for separable fits
  std::vector<std::string> names;
  Eigen::VectorXd coefficients;         // global / separable spatial
  Eigen::MatrixXd local_coefficients;   // one row per data point (local)
  std::vector<char> row_converged;      // local
  Formula time_formula;                 // separable
  std::vector<std::string> time_names;
  Eigen::VectorXd time_coefficients;
  double scale = 1.0;                   // separable normalization constant
  double integral = 0.0;                // quadrature integral of the fitted intensity
  std::vector<double> fitted;           // intensity at the data points
  double loglik = std::numeric_limits<double>::quiet_NaN();
  double deviance = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  std::size_t n = 0;
  bool network = false;
  Bandwidths bandwidths;                // local
  std::shared_ptr<const QuadratureScheme> quadrature;
  std::shared_ptr<const QuadratureScheme> time_quadrature;  // separable
};

namespace detail {

inline Design quadrature_design(const QuadratureScheme& q, const Formula& f, const MarkTable* marks,
                                const std::set<std::string>& allowed = {}) {
  std::vector<double> xs, ys, ts;
  CovariateFrame cf = q.frame(marks, xs, ys, ts);
  return build_design(f, cf, allowed);
}

inline void require_planar_fit(const PointPattern& p) {
  if (p.is_network()) throw Error(Errc::DomainMismatch, "this model is fitted on planar patterns only");
  if (p.empty()) throw Error(Errc::EmptyPattern, "cannot fit a model to an empty pattern");
}

/// log L = sum_data log lambda - sum_k a_k lambda_k.
inline double quadrature_loglik(const QuadratureScheme& q, const Eigen::VectorXd& lambda) {
  double ll = 0.0;
  for (std::size_t k = 0; k < q.size(); ++k) {
    if (q.is_data[k]) ll += std::log(lambda[static_cast<Eigen::Index>(k)]);
    ll -= q.weights[k] * lambda[static_cast<Eigen::Index>(k)];
  }
  return ll;
}

}  // namespace detail

/// Global log-linear Poisson fit.
inline FittedModel fit_stppm(const PointPattern& p, const Formula& f, std::optional<std::size_t> target_dummy = {}) {
  detail::require_planar_fit(p);
  auto q = std::make_shared<QuadratureScheme>(build_quadrature(p, target_dummy));
  Design d = detail::quadrature_design(*q, f, &p.marks());
  const Eigen::VectorXd y = q->responses(), w = q->weight_vector();
  PoissonRegression r = poisson_irls(d.matrix, y, w);
  if (!r.converged) throw Error(Errc::NonConvergence, "IRLS did not converge in 100 iterations");

  FittedModel m;
  m.kind = ModelKind::global_poisson;
  m.formula = f;
  m.names = d.names;
  m.coefficients = r.beta;
  m.deviance = r.deviance;
  m.iterations = r.iterations;
  m.n = p.size();
  const Eigen::VectorXd lambda = (d.matrix * r.beta).array().exp();
  m.loglik = detail::quadrature_loglik(*q, lambda);
  m.integral = w.dot(lambda);
  m.fitted.assign(lambda.data(), lambda.data() + p.size());
  m.quadrature = q;
  return m;
}

struct InformationCriteria {
  double aic = 0.0;
  double bic = 0.0;
};

inline InformationCriteria aic_bic(const FittedModel& m) {
  if (m.kind != ModelKind::global_poisson)
    throw Error(Errc::WrongKind, "AIC/BIC need a global Poisson fit with a single likelihood");
  const double k = static_cast<double>(m.coefficients.size());
  return {2.0 * k - 2.0 * m.loglik, k * std::log(static_cast<double>(m.n)) - 2.0 * m.loglik};
}

struct LocalFitOptions {
  std::optional<double> bw_space;  // "auto" when empty
  std::optional<double> bw_time;
  std::optional<std::size_t> target_dummy;
};

/// Locally weighted fits at every data point: quadrature weights become
/// w_j a_j with Gaussian w in space and time centred at the point. Rows whose
/// IRLS fails are flagged (row_converged = 0), carry the global coefficients,
/// and the fit continues.
inline FittedModel fit_locstppm(const PointPattern& p, const Formula& f, const LocalFitOptions& opt = {}) {
  detail::require_planar_fit(p);
  auto q = std::make_shared<QuadratureScheme>(build_quadrature(p, opt.target_dummy));
  Design d = detail::quadrature_design(*q, f, &p.marks());
  const Eigen::VectorXd y = q->responses(), a = q->weight_vector();

  Bandwidths bw{};
  if (!opt.bw_space || !opt.bw_time) bw = silverman_bandwidths(p);
  if (opt.bw_space) bw.space = *opt.bw_space;
  if (opt.bw_time) bw.time = *opt.bw_time;
  if (!(bw.space > 0.0) || !(bw.time > 0.0)) throw Error(Errc::InvalidParams, "local fit bandwidths must be positive");

  // Global fit seeds every local IRLS; it must exist for the design to be usable.
  PoissonRegression global = poisson_irls(d.matrix, y, a);

  const std::size_t n = p.size(), pc = d.names.size();
  FittedModel m;
  m.kind = ModelKind::local_poisson;
  m.formula = f;
  m.names = d.names;
  m.coefficients = global.beta;
  m.local_coefficients = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(pc),
                                                   std::numeric_limits<double>::quiet_NaN());
  m.row_converged.assign(n, 0);
  m.fitted.assign(n, std::numeric_limits<double>::quiet_NaN());
  m.n = n;
  m.bandwidths = bw;
  m.quadrature = q;
  const auto& pts = p.points();
  parallel_for(n, [&](std::size_t i) {
    Eigen::VectorXd w(a.size());
    for (std::size_t k = 0; k < q->size(); ++k) {
      const STPoint& u = q->points[k];
      double ds = std::hypot(u.x - pts[i].x, u.y - pts[i].y) / bw.space, dt = (u.t - pts[i].t) / bw.time;
      w[static_cast<Eigen::Index>(k)] = a[static_cast<Eigen::Index>(k)] * std::exp(-0.5 * (ds * ds + dt * dt));
    }
    try {
      PoissonRegression r = poisson_irls(d.matrix, y, w, &global.beta);
      m.local_coefficients.row(static_cast<Eigen::Index>(i)) = r.beta.transpose();
      m.row_converged[i] = r.converged;
      m.fitted[i] = std::exp(d.matrix.row(static_cast<Eigen::Index>(i)).dot(r.beta));
    } catch (const Error&) {
      m.row_converged[i] = 0;
    }
    if (!m.row_converged[i]) {
      // Flagged rows fall back to the global fit so the intensity stays usable.
      m.local_coefficients.row(static_cast<Eigen::Index>(i)) = global.beta.transpose();
      m.fitted[i] = std::exp(d.matrix.row(static_cast<Eigen::Index>(i)).dot(global.beta));
    }
  });
  return m;
}

/// lambda(u, t) = c lambda_s(u) lambda_t(t): spatial and temporal log-linear
/// Poisson fits on their own quadratures, rescaled so the quadrature integral
/// over W x T equals n. Spatial terms: x, y; temporal terms: t and marks (mark
/// values at temporal dummy points come from the data point nearest in time).
inline FittedModel fit_separable(const PointPattern& p, const Formula& space, const Formula& time) {
  if (p.empty()) throw Error(Errc::EmptyPattern, "cannot fit a model to an empty pattern");
  auto qs = std::make_shared<QuadratureScheme>();
  if (p.is_network()) {
    *qs = build_network_quadrature(p);
  } else {
    std::size_t k = std::max<std::size_t>(4, static_cast<std::size_t>(std::ceil(std::sqrt(4.0 * p.size()) - 1e-9)));
    *qs = detail::box_quadrature(p.points(), {p.window()->x(), p.window()->y(), p.time().range()},
                                 {true, true, false}, k);
  }
  auto qt = std::make_shared<QuadratureScheme>(detail::box_quadrature(
      p.points(), {Interval{0, 1}, Interval{0, 1}, p.time().range()}, {false, false, true}, 4 * p.size()));

  std::set<std::string> time_vars{"t"};
  for (const auto& c : p.marks()) time_vars.insert(c.name);
  Design ds = detail::quadrature_design(*qs, space, nullptr, {"x", "y"});
  Design dt = detail::quadrature_design(*qt, time, &p.marks(), time_vars);
  PoissonRegression rs = poisson_irls(ds.matrix, qs->responses(), qs->weight_vector());
  PoissonRegression rt = poisson_irls(dt.matrix, qt->responses(), qt->weight_vector());
  if (!rs.converged || !rt.converged) throw Error(Errc::NonConvergence, "separable fit did not converge");

  const Eigen::VectorXd ls = (ds.matrix * rs.beta).array().exp(), lt = (dt.matrix * rt.beta).array().exp();
  const double int_s = qs->weight_vector().dot(ls), int_t = qt->weight_vector().dot(lt);
  FittedModel m;
  m.kind = ModelKind::separable;
  m.network = p.is_network();
  m.formula = space;
  m.names = ds.names;
  m.coefficients = rs.beta;
  m.time_formula = time;
  m.time_names = dt.names;
  m.time_coefficients = rt.beta;
  m.n = p.size();
  m.scale = static_cast<double>(p.size()) / (int_s * int_t);
  m.integral = m.scale * int_s * int_t;
  m.iterations = std::max(rs.iterations, rt.iterations);
  m.fitted.resize(p.size());
  for (std::size_t i = 0; i < p.size(); ++i)
    m.fitted[i] = m.scale * ls[static_cast<Eigen::Index>(i)] * lt[static_cast<Eigen::Index>(i)];
  double ll = 0.0;
  for (double v : m.fitted) ll += std::log(v);
  m.loglik = ll - m.integral;
  m.quadrature = qs;
  m.time_quadrature = qt;
  return m;
}

namespace detail {

/// Named-vector layout: names over values, all fields right-aligned to a
/// common width.
inline std::string named_vector(const std::vector<std::string>& names, const Eigen::VectorXd& v, int decimals = 3) {
  std::vector<std::string> vals;
  std::size_t w = 0;
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v[k]);
    vals.push_back(buf);
    w = std::max({w, vals.back().size(), names[static_cast<std::size_t>(k)].size()});
  }
  std::string top, bottom;
  for (std::size_t k = 0; k < vals.size(); ++k) {
    top += std::string(w - names[k].size(), ' ') + names[k] + ' ';
    bottom += std::string(w - vals[k].size(), ' ') + vals[k] + ' ';
  }
  return top + "\n" + bottom + "\n";
}

/// Column-wise Min / quartiles / Mean / Max table, four significant digits on
/// the smallest magnitude in each column.
inline std::string summary_table(const std::vector<std::string>& names, const Eigen::MatrixXd& rows) {
  static const char* labels[] = {"Min.   ", "1st Qu.", "Median ", "Mean   ", "3rd Qu.", "Max.   "};
  std::vector<std::vector<std::string>> cells(names.size());
  std::vector<std::size_t> width(names.size(), 0);
  for (std::size_t c = 0; c < names.size(); ++c) {
    std::vector<double> col;
    for (Eigen::Index r = 0; r < rows.rows(); ++r)
      if (std::isfinite(rows(r, static_cast<Eigen::Index>(c)))) col.push_back(rows(r, static_cast<Eigen::Index>(c)));
    FiveNumber s = five_number(col);
    const double v[] = {s.min, s.q1, s.median, s.mean, s.q3, s.max};
    double smallest = 0.0;
    for (double x : v)
      if (x != 0.0 && (smallest == 0.0 || std::abs(x) < smallest)) smallest = std::abs(x);
    int dec = smallest > 0.0 ? std::clamp(3 - static_cast<int>(std::floor(std::log10(smallest))), 0, 8) : 0;
    std::size_t vw = 0;
    std::vector<std::string> txt;
    for (double x : v) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.*f", dec, x);
      txt.push_back(buf);
      vw = std::max(vw, txt.back().size());
    }
    for (int k = 0; k < 6; ++k)
      cells[c].push_back(std::string(labels[k]) + ":" + std::string(vw - txt[k].size(), ' ') + txt[k] + "  ");
    width[c] = std::max(cells[c][0].size(), names[c].size() + 2);
  }
  std::string out;
  for (std::size_t c = 0; c < names.size(); ++c) {
    std::string h = "  " + names[c];
    out += (c ? " " : "") + h + std::string(width[c] - h.size(), ' ');
  }
  out += "\n";
  for (int k = 0; k < 6; ++k) {
    for (std::size_t c = 0; c < names.size(); ++c)
      out += " " + cells[c][static_cast<std::size_t>(k)] + std::string(width[c] - cells[c][static_cast<std::size_t>(k)].size(), ' ');
    out += "\n";
  }
  return out;
}

inline std::string intensity_value(double v) {
  char buf[64];
  if (std::abs(v) >= 1.0)
    std::snprintf(buf, sizeof buf, "%.3f", v);
  else
    std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

/// Header + coefficients block shared with the LGCP printout.
inline std::string format_first_order(const FittedModel& m, const std::string& suffix) {
  std::ostringstream os;
  if (m.kind == ModelKind::local_poisson) {
    std::vector<double> fit;
    for (double v : m.fitted)
      if (std::isfinite(v)) fit.push_back(v);
    if (m.formula.intercept_only())
      os << "Homogeneous Poisson process \nwith median Intensity: " << fmt_g(median(fit)) << "\n\n";
    else
      os << "Inhomogeneous Poisson process \nwith Trend: " << m.formula.str() << "\n\n";
    os << "Summary of estimated coefficients" << suffix << " \n" << summary_table(m.names, m.local_coefficients);
    return os.str();
  }
  if (m.formula.intercept_only())
    os << "Homogeneous Poisson process \nwith Intensity: " << intensity_value(std::exp(m.coefficients[0])) << "\n\n";
  else
    os << "Inhomogeneous Poisson process \nwith Trend: " << m.formula.str() << "\n\n";
  os << "Estimated coefficients" << suffix << ": \n" << named_vector(m.names, m.coefficients);
  return os.str();
}

}  // namespace detail

inline std::string format_fit(const FittedModel& m) {
  if (m.kind != ModelKind::separable) return detail::format_first_order(m, "");
  std::ostringstream os;
  os << "Separable Poisson process" << (m.network ? " on a linear network" : "") << " \n"
     << "with spatial trend: " << m.formula.str() << " and temporal trend: " << m.time_formula.str() << "\n\n"
     << "Estimated coefficients of the spatial component: \n" << detail::named_vector(m.names, m.coefficients) << "\n"
     << "Estimated coefficients of the temporal component: \n"
     << detail::named_vector(m.time_names, m.time_coefficients) << "\n"
     << "Normalizing constant: " << detail::fmt_g(m.scale) << "\n";
  return os.str();
}

}  // namespace stopp
