#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "stopp/intensity.hpp"
#include "stopp/secondorder.hpp"
#include "stopp/simulate.hpp"
#include "test_support.hpp"

using namespace stopp;
using stopp::testing::uniform_cube;

namespace {

GridSpec small_grid() { return make_grid(0.25, 0.25, 10, 10); }

// Direct double loop for the intensity-weighted global K.
double k_inhom_direct(const PointPattern& p, const IntensityValues& lam, double r, double h, double scale) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = i + 1; j < p.size(); ++j) {
      double ds = std::hypot(p[i].x - p[j].x, p[i].y - p[j].y);
      if (ds <= r && std::abs(p[i].t - p[j].t) <= h) s += 1.0 / (lam[i] * lam[j]);
    }
  return scale * s;
}

void expect_monotone(const Eigen::MatrixXd& m) {
  for (Eigen::Index a = 0; a < m.rows(); ++a)
    for (Eigen::Index b = 0; b < m.cols(); ++b) {
      if (a) EXPECT_GE(m(a, b), m(a - 1, b));
      if (b) EXPECT_GE(m(a, b), m(a, b - 1));
    }
}

}  // namespace

TEST(Grid, DefaultsQuarterRule) {
  auto p = PointPattern::planar({{0, 0, 0}, {3, 4, 2}, {1, 1, 1}}, Window({0, 3}, {0, 4}), TimeInterval(0, 2));
  auto g = default_grid(p);
  EXPECT_EQ(g.nr(), 20u);
  EXPECT_DOUBLE_EQ(g.r.back(), 1.25);
  EXPECT_DOUBLE_EQ(g.h.back(), 0.5);
}

TEST(KGlobal, SinglePair) {
  auto p = PointPattern::planar({{0.25, 0.5, 0.25}, {0.375, 0.5, 0.375}}, Window::unit(), TimeInterval::unit());
  GridSpec g{{0.0625, 0.125, 0.5}, {0.0625, 0.125, 0.5}};
  auto k = k_global(p, g);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) EXPECT_DOUBLE_EQ(k.values(a, b), (a >= 1 && b >= 1) ? 1.0 : 0.0);
  EXPECT_NEAR(k.theo(1, 1), std::numbers::pi * 0.125 * 0.125 * 0.125, 1e-15);
}

TEST(KGlobal, TooFewPoints) {
  auto p = PointPattern::planar({{0.5, 0.5, 0.5}}, Window::unit(), TimeInterval::unit());
  EXPECT_THROW(k_global(p, small_grid()), Error);
}

TEST(KGlobal, MonotoneInBothArguments) {
  for (std::uint64_t s = 0; s < 5; ++s) expect_monotone(k_global(uniform_cube(80, s), small_grid()).values);
}

TEST(KInhom, HandExample) {
  auto p = PointPattern::planar({{0.25, 0.5, 0.25}, {0.375, 0.5, 0.375}}, Window::unit(), TimeInterval::unit());
  IntensityValues lam{{2.0, 4.0}, {}};
  GridSpec g{{0.0625, 0.5}, {0.0625, 0.5}};
  auto k = k_inhom_global(p, lam, g, KNormalization::count);
  EXPECT_DOUBLE_EQ(k.values(1, 1), 1.0 / 16.0);
  EXPECT_DOUBLE_EQ(k.values(0, 0), 0.0);
  auto k_int = k_inhom_global(p, lam, g);
  EXPECT_DOUBLE_EQ(k_int.values(1, 1), 1.0 / 8.0);
}

TEST(KInhom, MatchesDirectOracle) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.5, 3.0);
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto p = uniform_cube(40 + s, 100 + s);
    IntensityValues lam{std::vector<double>(p.size()), {}};
    for (auto& v : lam.values) v = u(rng);
    const double n = static_cast<double>(p.size());
    auto g = small_grid();
    auto k1 = k_inhom_global(p, lam, g, KNormalization::count);
    auto k2 = k_inhom_global(p, lam, g);
    for (std::size_t a = 0; a < g.nr(); ++a)
      for (std::size_t b = 0; b < g.nh(); ++b) {
        EXPECT_NEAR(k1.values(a, b), k_inhom_direct(p, lam, g.r[a], g.h[b], 1.0 / (n * (n - 1))), 1e-12);
        EXPECT_NEAR(k2.values(a, b), k_inhom_direct(p, lam, g.r[a], g.h[b], 1.0), 1e-12);
      }
  }
}

TEST(KInhom, ConstantIntensityReducesToScaledCount) {
  auto p = uniform_cube(60, 1);
  auto g = small_grid();
  auto hom = homogeneous_intensity(p);
  auto ki = k_inhom_global(p, hom, g);
  auto ks = k_global_scaled(p, g);
  const double n = 60.0;
  // 1/V * (V/n)^2 * count vs V^2/(n(n-1)) * count / V
  EXPECT_TRUE(ki.values.isApprox(ks.values * (n - 1.0) / n, 1e-12));
}

TEST(KInhom, Errors) {
  auto p = uniform_cube(5, 1);
  IntensityValues short_lam{{1, 1, 1}, {}};
  try {
    k_inhom_global(p, short_lam, small_grid());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::LengthMismatch);
  }
  IntensityValues bad{{1, 1, 0, 1, 1}, {}};
  try {
    k_inhom_global(p, bad, small_grid());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NonpositiveLambda);
  }
}

TEST(ListaPlanar, LocalSumsToGlobalCount) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    auto p = uniform_cube(30 + s % 20, 500 + s);
    auto g = small_grid();
    const double v = p.volume();
    const double lam_hat = p.size() / v;
    auto local = lista_planar(p, nullptr, Statistic::K, g);
    auto raw = k_global(p, g);  // (1/V) * pair count
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(g.nr(), g.nh());
    for (const auto& l : local) sum += l.values;
    Eigen::MatrixXd lhs = sum * lam_hat * lam_hat * v;
    Eigen::MatrixXd rhs = 2.0 * raw.values * v;
    for (Eigen::Index a = 0; a < lhs.rows(); ++a)
      for (Eigen::Index b = 0; b < lhs.cols(); ++b)
        EXPECT_NEAR(lhs(a, b), rhs(a, b), 1e-9 * std::max(1.0, rhs(a, b)));

    // Inhomogeneous version: local sums are twice the intensity-weighted K.
    IntensityValues lam = kernel_intensity_planar(p);
    auto local_i = lista_planar(p, &lam, Statistic::K, g);
    Eigen::MatrixXd sum_i = Eigen::MatrixXd::Zero(g.nr(), g.nh());
    for (const auto& l : local_i) sum_i += l.values;
    Eigen::MatrixXd twice = 2.0 * k_inhom_global(p, lam, g).values;
    EXPECT_TRUE(sum_i.isApprox(twice, 1e-9) || (sum_i - twice).norm() < 1e-12);
  }
}

TEST(ListaPlanar, SymmetricPairAndIsolatedPoint) {
  auto pair = PointPattern::planar({{0.4, 0.5, 0.4}, {0.5, 0.5, 0.5}}, Window::unit(), TimeInterval::unit());
  auto l = lista_planar(pair, nullptr, Statistic::K, small_grid());
  EXPECT_TRUE(l[0].values.isApprox(l[1].values));

  auto p = uniform_cube(20, 3);
  auto pts = p.points();
  for (auto& q : pts) q = {0.5 * q.x, 0.5 * q.y, q.t};
  pts.push_back({0.99, 0.99, 0.5});
  auto with_far = PointPattern::planar(pts, Window::unit(), TimeInterval::unit());
  auto g = make_grid(0.2, 0.25, 10, 10);
  auto lk = lista_planar(with_far, nullptr, Statistic::K, g);
  auto lg = lista_planar(with_far, nullptr, Statistic::pcf, g);
  EXPECT_EQ(lk.back().values.norm(), 0.0);
  EXPECT_EQ(lg.back().values.norm(), 0.0);
}

TEST(ListaPlanar, PcfNonnegativeFinite) {
  auto p = uniform_cube(80, 21);
  auto lam = kernel_intensity_planar(p);
  for (const auto& s : lista_planar(p, &lam, Statistic::pcf, default_grid(p))) {
    EXPECT_TRUE(s.values.allFinite());
    EXPECT_GE(s.values.minCoeff(), 0.0);
  }
}

TEST(ListaNetwork, SinglePairHandComputation) {
  auto net = stopp::testing::line_network(1.0);
  std::vector<NetworkLocation> locs{{0, 0.45}, {0, 0.85}};
  std::vector<double> times{0.5, 0.6};
  auto p = PointPattern::on_network(locs, times, net, TimeInterval::unit());
  IntensityValues lam{{2.0, 3.0}, {}};
  GridSpec g{{0.3, 0.5}, {0.05, 0.2}};
  auto res = lista_network(p, &lam, Statistic::K, false, g);
  // From 0.45 the distance 0.4 is reached on both sides (0.05 and 0.85):
  // spatial count 2; times 0.5 +- 0.1 are both inside T: temporal count 2.
  EXPECT_DOUBLE_EQ(res.surfaces[0].values(1, 1), 1.0 / (2.0 * 3.0 * 4.0));
  // From 0.85 only 0.45 lies at distance 0.4.
  EXPECT_DOUBLE_EQ(res.surfaces[1].values(1, 1), 1.0 / (2.0 * 3.0 * 2.0));
  EXPECT_DOUBLE_EQ(res.surfaces[0].values(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(res.surfaces[0].values(1, 0), 0.0);

  auto norm = lista_network(p, &lam, Statistic::K, true, g);
  double d = 1.0 * 2.0 / (2.0 * 3.0);  // ((n-1)/V) * sum_{i != j} 1/(lambda_i lambda_j)
  EXPECT_DOUBLE_EQ(norm.normalization, d);
  EXPECT_DOUBLE_EQ(norm.surfaces[0].values(1, 1), 1.0 / 24.0 / d);
}

TEST(ListaNetwork, StrictInequalityAtGridNode) {
  auto net = stopp::testing::line_network(1.0);
  std::vector<NetworkLocation> locs{{0, 0.25}, {0, 0.5}};
  std::vector<double> times{0.25, 0.5};
  auto p = PointPattern::on_network(locs, times, net, TimeInterval::unit());
  GridSpec g{{0.25, 0.5}, {0.25, 0.5}};
  auto res = lista_network(p, nullptr, Statistic::K, false, g);
  EXPECT_EQ(res.surfaces[0].values(0, 0), 0.0);
  EXPECT_GT(res.surfaces[0].values(1, 1), 0.0);
}

TEST(ListaNetwork, ConstantLambdaEqualsHomogeneous) {
  auto net = stopp::testing::grid_network(2);
  auto p = rstlpp(LambdaSpec::homogeneous(3.0), net, TimeInterval::unit(), 4);
  auto g = default_grid(p, 8, 8);
  auto hom = homogeneous_intensity(p);
  auto a = lista_network(p, nullptr, Statistic::K, true, g);
  auto b = lista_network(p, &hom, Statistic::K, true, g);
  for (std::size_t i = 0; i < p.size(); ++i) EXPECT_EQ((a.surfaces[i].values - b.surfaces[i].values).norm(), 0.0);
}

TEST(ListaNetwork, StraightLineMatchesPlanarRestriction) {
  // On one segment the network statistic equals a planar-style loop with
  // Euclidean distances, strict inequalities and the analytic multiplicity.
  auto net = stopp::testing::line_network(2.0);
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto p = rstlpp(LambdaSpec::homogeneous(15.0), net, TimeInterval::unit(), 300 + s);
    if (p.size() < 3) continue;
    auto lam = kernel_intensity_network(p);
    auto g = make_grid(0.6, 0.3, 6, 6);
    auto res = lista_network(p, &lam, Statistic::K, false, g);
    const double v = p.volume();
    for (std::size_t i = 0; i < p.size(); ++i)
      for (std::size_t a = 0; a < g.nr(); ++a)
        for (std::size_t b = 0; b < g.nh(); ++b) {
          double expect = 0.0;
          for (std::size_t j = 0; j < p.size(); ++j) {
            if (j == i) continue;
            double ds = std::abs(p[i].x - p[j].x), dt = std::abs(p[i].t - p[j].t);
            if (!(ds < g.r[a] && dt < g.h[b])) continue;
            int ms = (p[i].x - ds >= 0.0 ? 1 : 0) + (p[i].x + ds <= 2.0 ? 1 : 0);
            int mt = (p[i].t - dt >= 0.0 && p[i].t + dt <= 1.0) ? 2 : 1;
            expect += 1.0 / (v * lam[i] * lam[j] * ms * mt);
          }
          EXPECT_NEAR(res.surfaces[i].values(a, b), expect, 1e-9 * std::max(1.0, expect));
        }
  }
}

TEST(ListaNetwork, DisconnectedPairsCounted) {
  std::vector<std::pair<Point2, Point2>> segs{{{0, 0}, {1, 0}}, {{0, 5}, {1, 5}}};
  auto net = std::make_shared<const LinearNetwork>(build_network(segs));
  std::vector<NetworkLocation> locs{{0, 0.2}, {0, 0.6}, {1, 0.5}};
  std::vector<double> times{0.1, 0.2, 0.3};
  auto p = PointPattern::on_network(locs, times, net, TimeInterval::unit());
  auto res = lista_network(p, nullptr, Statistic::K, false, make_grid(1.0, 1.0, 4, 4));
  EXPECT_EQ(res.disconnected_pairs, 4u);
  EXPECT_EQ(res.surfaces[2].values.norm(), 0.0);
}

TEST(ListaNetwork, PcfNonnegativeFiniteAndGlobalSum) {
  auto net = stopp::testing::grid_network(3);
  auto p = rstlpp(LambdaSpec::homogeneous(4.0), net, TimeInterval::unit(), 8);
  auto lam = kernel_intensity_network(p);
  auto g = default_grid(p, 10, 10);
  auto res = lista_network(p, &lam, Statistic::pcf, true, g);
  for (const auto& s : res.surfaces) {
    EXPECT_TRUE(s.values.allFinite());
    EXPECT_GE(s.values.minCoeff(), 0.0);
  }
  auto k = k_inhom_network(p, lam, g);
  auto local = lista_network(p, &lam, Statistic::K, false, g);
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(g.nr(), g.nh());
  for (const auto& s : local.surfaces) sum += s.values;
  EXPECT_TRUE(k.values.isApprox(sum));
  expect_monotone(k.values);
}

TEST(NetworkK, PoissonExpectationIsRH) {
  // Sum of local surfaces weighted by the true intensity has mean r h.
  auto net = stopp::testing::grid_network(2);
  auto g = make_grid(0.8, 0.25, 4, 4);
  Eigen::MatrixXd mean_k = Eigen::MatrixXd::Zero(4, 4);
  const int reps = 60;
  for (int s = 0; s < reps; ++s) {
    auto p = rstlpp(LambdaSpec::homogeneous(8.0), net, TimeInterval::unit(), 900 + s);
    auto lam = IntensityValues::constant(p.size(), 8.0);
    mean_k += k_inhom_network(p, lam, g).values / reps;
  }
  Eigen::MatrixXd theo = network_theo(g);
  // Temporal edge effects bias the estimate downwards only mildly at h <= |T| / 4.
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) EXPECT_NEAR(mean_k(a, b) / theo(a, b), 1.0, 0.2) << a << "," << b;
}
