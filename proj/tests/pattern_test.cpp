#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "stopp/pattern.hpp"
#include "test_support.hpp"

using namespace stopp;

TEST(Pattern, ExplicitDomain) {
  auto p = PointPattern::planar({{0.1, 0.2, 0.3}, {0.5, 0.5, 0.5}, {0.9, 0.1, 0.7}}, Window::unit(),
                                TimeInterval::unit());
  EXPECT_EQ(p.size(), 3u);
  EXPECT_FALSE(p.is_network());
  EXPECT_DOUBLE_EQ(p.volume(), 1.0);
}

TEST(Pattern, DuplicateRejected) {
  try {
    PointPattern::planar({{0.1, 0.2, 0.3}, {0.1, 0.2, 0.3}}, Window::unit(), TimeInterval::unit());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DuplicatePoint);
  }
}

TEST(Pattern, OutsideDomainReportsIndex) {
  try {
    PointPattern::planar({{0.1, 0.2, 0.3}, {0.4, 1.5, 0.3}}, Window::unit(), TimeInterval::unit());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::PointOutsideDomain);
    EXPECT_EQ(e.index(), 1);
  }
}

TEST(Pattern, InferredDomainPrintsBounds) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.02, 0.98);
  std::vector<STPoint> pts{{0.0011366, 0.5, 0.5}, {0.9933775, 0.5, 0.6}, {0.5, 0.0155277, 0.7},
                           {0.5, 0.9960438, 0.8}, {0.3, 0.3, 0.004},    {0.7, 0.7, 0.997}};
  while (pts.size() < 208) pts.push_back({u(rng), u(rng), 0.004 + 0.99 * u(rng)});
  auto p = PointPattern::planar(pts);
  std::string text = format_pattern(summarize(p));
  EXPECT_NE(text.find("208 points"), std::string::npos);
  EXPECT_NE(text.find("Enclosing window: rectangle = [0.0011366, 0.9933775] x [0.0155277, 0.9960438] units"),
            std::string::npos)
      << text;
  EXPECT_NE(text.find("Time period: [0.004, 0.997]"), std::string::npos) << text;
}

TEST(Pattern, InferFromNothingFails) {
  EXPECT_THROW(PointPattern::planar(std::vector<STPoint>{}), Error);
}

TEST(Pattern, MarksMustAlign) {
  MarkTable marks{{"m", {1.0}, {}}};
  EXPECT_THROW(PointPattern::planar({{0.1, 0.1, 0.1}, {0.2, 0.2, 0.2}}, Window::unit(), TimeInterval::unit(), marks),
               Error);
}

TEST(Pattern, NetworkSnapping) {
  auto net = stopp::testing::grid_network(2);
  auto p = PointPattern::on_network({{0.5, 1e-9, 0.1}, {1.0, 1.25, 0.2}}, net, TimeInterval::unit());
  EXPECT_TRUE(p.is_network());
  EXPECT_DOUBLE_EQ(p[0].y, 0.0);
  EXPECT_DOUBLE_EQ(p.spatial_measure(), 12.0);
  EXPECT_NEAR(p.spatial_distance(0, 1), 0.5 + 1.25, 1e-12);
  try {
    PointPattern::on_network({{0.5, 0.5, 0.1}}, net, TimeInterval::unit());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::SnapFailure);
  }
  std::string text = format_pattern(summarize(p));
  EXPECT_NE(text.find("Linear network with 9 vertices and 12 lines"), std::string::npos) << text;
}

TEST(Summary, Empty) {
  auto p = PointPattern::planar({}, Window::unit(), TimeInterval::unit());
  auto s = summarize(p);
  EXPECT_EQ(s.n, 0u);
  EXPECT_NE(format_pattern(s).find("0 points"), std::string::npos);
}

TEST(Summary, Medians) {
  auto p = PointPattern::planar({{0, 0, 0}, {1, 1, 1}}, Window::unit(), TimeInterval::unit());
  auto s = summarize(p);
  EXPECT_DOUBLE_EQ(s.x.median, 0.5);
  EXPECT_DOUBLE_EQ(s.y.median, 0.5);
  EXPECT_DOUBLE_EQ(s.t.median, 0.5);
}

TEST(Summary, QuartilesMatchSortOracle) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto p = stopp::testing::uniform_cube(100, seed);
    auto s = summarize(p);
    EXPECT_EQ(s.n, p.size());
    std::vector<double> xs;
    for (const auto& q : p.points()) xs.push_back(q.x);
    std::sort(xs.begin(), xs.end());
    // Type 7: h = (n - 1) p, interpolate between floor(h) and floor(h) + 1.
    auto q7 = [&](double prob) {
      double h = (xs.size() - 1) * prob;
      std::size_t lo = static_cast<std::size_t>(h);
      return xs[lo] + (h - lo) * (xs[std::min(lo + 1, xs.size() - 1)] - xs[lo]);
    };
    EXPECT_DOUBLE_EQ(s.x.q1, q7(0.25));
    EXPECT_DOUBLE_EQ(s.x.median, q7(0.5));
    EXPECT_DOUBLE_EQ(s.x.q3, q7(0.75));
    EXPECT_DOUBLE_EQ(s.x.min, xs.front());
    EXPECT_DOUBLE_EQ(s.x.max, xs.back());
  }
}

TEST(Pattern, SubsetAndDomain) {
  auto p = stopp::testing::uniform_cube(10, 3);
  std::vector<std::size_t> idx{2, 5};
  auto s = p.subset(idx);
  EXPECT_EQ(s.size(), 2u);
  EXPECT_DOUBLE_EQ(s[1].x, p[5].x);
  EXPECT_TRUE(s.same_domain(p));
  auto other = PointPattern::planar({{0.5, 0.5, 0.5}}, Window({0, 2}, {0, 1}), TimeInterval::unit());
  EXPECT_FALSE(other.same_domain(p));
}
