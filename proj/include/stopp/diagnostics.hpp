#pragma once

// Goodness-of-fit checks for an intensity: the intensity-weighted K against
// its Poisson benchmark, and per-point chi-square discrepancies of the local K.

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stopp/error.hpp"
#include "stopp/intensity.hpp"
#include "stopp/parallel.hpp"
#include "stopp/pattern.hpp"
#include "stopp/secondorder.hpp"
#include "stopp/stats.hpp"

namespace stopp {

struct GlobalDiagResult {
  KSurface k_weighted;   // estimate, with its benchmark in k_weighted.theo
  Eigen::MatrixXd diff;  // k_weighted.values - k_weighted.theo
  double sum_sq = 0.0;   // plain sum of diff^2 over grid nodes
  bool network = false;
};

/// Planar: k_inhom_global (expectation pi r^2 h under the true intensity).
/// Network: sum of the local K_{L,I} surfaces (expectation r h).
inline GlobalDiagResult globaldiag(const PointPattern& p, const IntensityValues& lambda,
                                   std::optional<GridSpec> grid = {}) {
  const GridSpec g = grid ? *grid : default_grid(p);
  GlobalDiagResult out;
  out.network = p.is_network();
  out.k_weighted = p.is_network() ? k_inhom_network(p, lambda, g) : k_inhom_global(p, lambda, g);
  out.diff = out.k_weighted.values - out.k_weighted.theo;
  out.sum_sq = out.diff.squaredNorm();
  return out;
}

inline std::string format_globaldiag(const GlobalDiagResult& r) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "Sum of squared differences =  %.3f\n", r.sum_sq);
  return buf;
}

struct LocalDiagResult {
  std::vector<double> chi2;
  double percentile = 0.95;
  double threshold = 0.0;  // type-7 empirical quantile of chi2
  std::vector<std::size_t> outliers;
  std::size_t n = 0;
  bool network = false;
  GridSpec grid;
};

/// Local K of each point rescaled to the Poisson benchmark E (pi r^2 h
/// planar, r h network): planar surfaces are multiplied by |W||T| lambda_i / 2,
/// network surfaces by |L||T| lambda_i. Then
///   chi2_i = trapezoid over the grid of (K_i - E)^2 / max(E, 1e-12)
/// and points with chi2 strictly above the percentile are outliers.
inline LocalDiagResult localdiag(const PointPattern& p, const IntensityValues& lambda, double percentile = 0.95,
                                 std::optional<GridSpec> grid = {}) {
  if (!(percentile > 0.0 && percentile < 1.0)) throw Error(Errc::InvalidParams, "percentile must lie in (0, 1)");
  LocalDiagResult out;
  out.grid = grid ? *grid : default_grid(p);
  out.grid.validate();
  out.percentile = percentile;
  out.n = p.size();
  out.network = p.is_network();
  const double v = p.volume();

  std::vector<ListaSurface> surfaces = p.is_network()
                                           ? lista_network(p, &lambda, Statistic::K, false, out.grid).surfaces
                                           : lista_planar(p, &lambda, Statistic::K, out.grid);
  const Eigen::MatrixXd expected =
      (p.is_network() ? network_theo(out.grid) : planar_theo(out.grid)).cwiseMax(1e-12);
  const double factor = p.is_network() ? 1.0 : 0.5;
  out.chi2.assign(p.size(), 0.0);
  parallel_for(p.size(), [&](std::size_t i) {
    const Eigen::MatrixXd k = surfaces[i].values * (factor * v * lambda[i]);
    out.chi2[i] = trapezoid(out.grid, ((k - expected).array().square() / expected.array()).matrix());
  });
  out.threshold = quantile(out.chi2, percentile);
  for (std::size_t i = 0; i < out.chi2.size(); ++i)
    if (out.chi2[i] > out.threshold) out.outliers.push_back(i);
  return out;
}

inline std::string format_localdiag(const LocalDiagResult& r) {
  std::ostringstream os;
  os << "Points outlying from the " << detail::fmt_g(r.percentile) << " percentile\n"
     << "of the anaysed spatio-temporal point pattern" << (r.network ? " on a linear network" : "") << " \n"
     << "--------------------------------------------------\n"
     << "Analysed pattern X: " << r.n << " points \n"
     << r.outliers.size() << " outlying points\n";
  return os.str();
}

struct InfluenceRow {
  std::size_t rank = 0;  // 1 = largest chi2
  std::size_t index = 0;
  double x = 0.0, y = 0.0, t = 0.0;
  double chi2 = 0.0;
};

/// Outliers sorted by decreasing chi2 (ties by point index).
inline std::vector<InfluenceRow> infl(const LocalDiagResult& r, const PointPattern& p) {
  if (r.chi2.size() != p.size() || r.network != p.is_network())
    throw Error(Errc::PatternMismatch, "diagnostic result was not computed on this pattern");
  std::vector<std::size_t> idx = r.outliers;
  for (std::size_t i : idx)
    if (i >= p.size()) throw Error(Errc::PatternMismatch, "outlier index out of range");
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return r.chi2[a] > r.chi2[b]; });
  std::vector<InfluenceRow> rows;
  for (std::size_t k = 0; k < idx.size(); ++k)
    rows.push_back({k + 1, idx[k], p[idx[k]].x, p[idx[k]].y, p[idx[k]].t, r.chi2[idx[k]]});
  return rows;
}

inline std::string influence_csv(const std::vector<InfluenceRow>& rows) {
  std::ostringstream os;
  os << "rank,index,x,y,t,chi2\n";
  char buf[160];
  for (const auto& w : rows) {
    std::snprintf(buf, sizeof buf, "%zu,%zu,%.17g,%.17g,%.17g,%.17g\n", w.rank, w.index, w.x, w.y, w.t, w.chi2);
    os << buf;
  }
  return os.str();
}

}  // namespace stopp
