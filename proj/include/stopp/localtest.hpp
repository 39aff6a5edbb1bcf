#pragma once

// Permutation test for local second-order differences between two patterns.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "stopp/error.hpp"
#include "stopp/intensity.hpp"
#include "stopp/network_pairs.hpp"
#include "stopp/parallel.hpp"
#include "stopp/pattern.hpp"
#include "stopp/secondorder.hpp"
#include "stopp/simulate.hpp"

namespace stopp {

struct LocalTestOptions {
  Statistic statistic = Statistic::K;
  int k = 19;
  double alpha = 0.05;
  std::uint64_t seed = 1;
  std::optional<GridSpec> grid;  // default grid of X when empty
};

struct LocalTestResult {
  std::vector<double> p_values;        // one per point of X, on the lattice {0, 1/k, ..., 1}
  std::vector<double> statistic_obs;   // T^i
  std::vector<std::size_t> significant;
  double alpha = 0.05;
  int k = 0;
  Statistic statistic = Statistic::K;
  bool network = false;
  std::size_t n_background = 0;
  std::size_t n_alternative = 0;
  GridSpec grid;
  std::vector<std::string> warnings;
};

namespace detail {

/// Local surface of member `target` of a subset of the pooled points.
/// Planar: homogeneous local statistic with intensity m / |W||T|.
/// Network: inhomogeneous local statistic, normalised by D, with kernel
/// intensities recomputed on the subset using automatic bandwidths.
class LocalSurfaceEngine {
 public:
  LocalSurfaceEngine(const PointPattern& x, const PointPattern& z, Statistic stat, const GridSpec& grid)
      : stat_(stat), grid_(grid), bw_(PcfBandwidths::defaults(grid)), volume_(x.volume()), time_(x.time()) {
    pool_.insert(pool_.end(), x.points().begin(), x.points().end());
    pool_.insert(pool_.end(), z.points().begin(), z.points().end());
    if (x.is_network()) {
      net_ = x.network();
      std::vector<NetworkLocation> locs(x.locations().begin(), x.locations().end());
      locs.insert(locs.end(), z.locations().begin(), z.locations().end());
      pairs_ = NetworkPairs(*net_, locs, true);
    }
  }

  Eigen::MatrixXd surface(std::span<const std::size_t> members, std::size_t target) const {
    const std::size_t m = members.size();
    if (!net_) {
      const double lam = static_cast<double>(m) / volume_;
      std::vector<STPoint> others;
      others.reserve(m - 1);
      for (std::size_t j = 0; j < m; ++j)
        if (j != target) others.push_back(pool_[members[j]]);
      std::vector<double> lo(m - 1, lam);
      return lista_planar_point(pool_[members[target]], lam, others, lo, volume_, static_cast<double>(m - 1), stat_,
                                grid_, bw_);
    }
    std::vector<double> xs(m), ys(m), ts(m);
    for (std::size_t j = 0; j < m; ++j) {
      xs[j] = pool_[members[j]].x;
      ys[j] = pool_[members[j]].y;
      ts[j] = pool_[members[j]].t;
    }
    const Bandwidths bw = silverman_bandwidths(xs, ys, ts, 0.1 * net_->diagonal(), 0.1 * time_.length());
    const double floor = 1e-10 * static_cast<double>(m) / volume_;
    const std::vector<double> lam = network_kernel_sums(pairs_, members, ts, bw, false, floor);
    NetworkLocalInput in{&pairs_, members, ts, lam, &time_, volume_};
    Eigen::MatrixXd s = lista_network_point(in, target, stat_, grid_, bw_, nullptr);
    return s / network_normalization(lam, volume_);
  }

 private:
  Statistic stat_;
  GridSpec grid_;
  PcfBandwidths bw_;
  double volume_;
  TimeInterval time_;
  std::vector<STPoint> pool_;
  std::shared_ptr<const LinearNetwork> net_;
  NetworkPairs pairs_;
};

}  // namespace detail

/// For each point i of X: compares its local surface in X with the surfaces it
/// gets in k patterns made of point i plus n_X - 1 points drawn without
/// replacement from (X \ {i}) u Z. T^i is the trapezoidal integral of the
/// squared deviation from the permutation mean, and
/// p^i = #{j : T^{i,j} >= T^i} / k.
inline LocalTestResult localtest(const PointPattern& x, const PointPattern& z, const LocalTestOptions& opt = {}) {
  if (x.is_network() != z.is_network() || !x.same_domain(z))
    throw Error(Errc::DomainMismatch, "background and alternative patterns must share the same domain");
  if (x.size() < 2 || z.empty()) throw Error(Errc::TooFewPoints, "local test needs n_X >= 2 and a nonempty Z");
  if (opt.k < 1) throw Error(Errc::InvalidParams, "number of permutations must be at least 1");
  if (!(opt.alpha > 0.0 && opt.alpha < 1.0)) throw Error(Errc::InvalidParams, "alpha must lie in (0, 1)");

  LocalTestResult res;
  res.alpha = opt.alpha;
  res.k = opt.k;
  res.statistic = opt.statistic;
  res.network = x.is_network();
  res.n_background = x.size();
  res.n_alternative = z.size();
  res.grid = opt.grid ? *opt.grid : default_grid(x);
  res.grid.validate();
  if (static_cast<double>(opt.k) < 1.0 / opt.alpha - 1.0)
    res.warnings.push_back("k = " + std::to_string(opt.k) + " permutations give p-values on a 1/" +
                           std::to_string(opt.k) + " lattice, too coarse for alpha = " + detail::fmt_g(opt.alpha) +
                           "; use at least " + std::to_string(static_cast<int>(std::ceil(1.0 / opt.alpha - 1.0))));

  const std::size_t nx = x.size(), nz = z.size();
  const detail::LocalSurfaceEngine engine(x, z, opt.statistic, res.grid);
  res.p_values.assign(nx, 0.0);
  res.statistic_obs.assign(nx, 0.0);

  std::vector<std::size_t> all_x(nx);
  std::iota(all_x.begin(), all_x.end(), 0);

  parallel_for(nx, [&](std::size_t i) {
    const Eigen::MatrixXd observed = engine.surface(all_x, i);
    std::vector<std::size_t> pool;
    pool.reserve(nx - 1 + nz);
    for (std::size_t j = 0; j < nx; ++j)
      if (j != i) pool.push_back(j);
    for (std::size_t j = 0; j < nz; ++j) pool.push_back(nx + j);

    std::vector<Eigen::MatrixXd> perm(static_cast<std::size_t>(opt.k));
    for (int j = 0; j < opt.k; ++j) {
      Rng rng = make_rng(opt.seed, i, static_cast<std::uint64_t>(j));
      std::vector<std::size_t> draw = pool;
      std::vector<std::size_t> members{i};
      for (std::size_t s = 0; s + 1 < nx; ++s) {
        std::size_t pick = s + std::uniform_int_distribution<std::size_t>(0, draw.size() - 1 - s)(rng);
        std::swap(draw[s], draw[pick]);
        members.push_back(draw[s]);
      }
      perm[j] = engine.surface(members, 0);
    }
    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(res.grid.nr(), res.grid.nh());
    for (const auto& s : perm) mean += s;
    mean /= static_cast<double>(opt.k);

    const double t_obs = trapezoid(res.grid, (observed - mean).array().square().matrix());
    int exceed = 0;
    for (const auto& s : perm)
      if (trapezoid(res.grid, (s - mean).array().square().matrix()) >= t_obs) ++exceed;
    res.statistic_obs[i] = t_obs;
    res.p_values[i] = static_cast<double>(exceed) / static_cast<double>(opt.k);
  });
  for (std::size_t i = 0; i < nx; ++i)
    if (res.p_values[i] < opt.alpha) res.significant.push_back(i);
  return res;
}

inline std::string format_localtest(const LocalTestResult& r) {
  std::ostringstream os;
  os << "\nTest for local differences between two \n";
  os << (r.network ? "spatio-temporal point patterns on a linear network \n" : "spatio-temporal point patterns \n");
  os << "--------------------------------------\n";
  os << "Background pattern X: " << r.n_background << "  \n";
  os << "Alternative pattern Z: " << r.n_alternative << "  \n";
  os << "  \n";
  os << r.significant.size() << " significant points at alpha = " << detail::fmt_g(r.alpha) << "\n";
  return os.str();
}

}  // namespace stopp
