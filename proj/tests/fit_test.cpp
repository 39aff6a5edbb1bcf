#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "stopp/fit.hpp"
#include "stopp/intensity.hpp"
#include "stopp/lgcp.hpp"
#include "stopp/simulate.hpp"
#include "stopp/stats.hpp"
#include "test_support.hpp"

using namespace stopp;

namespace {

PointPattern homogeneous(double lambda, std::uint64_t seed) {
  return rstpp(LambdaSpec::homogeneous(lambda), Window::unit(), TimeInterval::unit(), seed).front();
}

PointPattern trend(std::uint64_t seed) {
  return rstpp(LambdaSpec::log_linear({"x"}, {2.0, 6.0}), Window::unit(), TimeInterval::unit(), seed).front();
}

Errc code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::IoError;
}

}  // namespace

TEST(Formula, ParsesTermsAndInteractions) {
  EXPECT_TRUE(Formula::parse("~1").intercept_only());
  auto f = Formula::parse("~ x * y");
  ASSERT_EQ(f.terms.size(), 3u);
  EXPECT_EQ(f.str(), "~x + y + x:y");
  EXPECT_EQ(Formula::parse("~x + x").terms.size(), 1u);
  EXPECT_EQ(Formula::parse("~crime_hour + week_day").terms.size(), 2u);
  EXPECT_EQ(code_of([] { Formula::parse("x"); }), Errc::ParseError);
  EXPECT_EQ(code_of([] { Formula::parse("~x - 1"); }), Errc::ParseError);
  EXPECT_EQ(code_of([] { Formula::parse("~x + "); }), Errc::ParseError);
}

TEST(Formula, DesignColumnsAndCategoricalMarks) {
  std::vector<double> x{0.1, 0.2, 0.3}, y{1, 2, 3}, t{0, 0, 0};
  MarkTable marks{{"day", {0, 1, 2}, {"mon", "tue", "wed"}}};
  std::vector<std::size_t> rows{0, 1, 2};
  CovariateFrame cf{x, y, t, &marks, rows};
  Design d = build_design(Formula::parse("~x*y + day"), cf);
  ASSERT_EQ(d.names.size(), 6u);
  EXPECT_EQ(d.names[3], "x:y");
  EXPECT_EQ(d.names[4], "daytue");
  EXPECT_DOUBLE_EQ(d.matrix(2, 3), 0.9);
  EXPECT_DOUBLE_EQ(d.matrix(1, 4), 1.0);
  EXPECT_DOUBLE_EQ(d.matrix(1, 5), 0.0);
  EXPECT_EQ(code_of([&] { build_design(Formula::parse("~z"), cf); }), Errc::InvalidParams);
  EXPECT_EQ(code_of([&] { build_design(Formula::parse("~t"), cf, {"x", "y"}); }), Errc::InvalidParams);
}

TEST(Quadrature, SinglePointUnitCube) {
  auto p = PointPattern::planar({{0.1, 0.1, 0.1}}, Window::unit(), TimeInterval::unit());
  auto q = build_quadrature(p, 64);
  EXPECT_EQ(q.cells, (std::array<std::size_t, 3>{4, 4, 4}));
  ASSERT_EQ(q.size(), 65u);
  EXPECT_DOUBLE_EQ(q.cell_volume, 1.0 / 64);
  // The data point shares the corner cube with one dummy point.
  EXPECT_DOUBLE_EQ(q.weights[0], 1.0 / 128);
  int halves = 0;
  for (std::size_t k = 1; k < q.size(); ++k)
    if (q.weights[k] == 1.0 / 128) ++halves;
    else EXPECT_DOUBLE_EQ(q.weights[k], 1.0 / 64);
  EXPECT_EQ(halves, 1);
  EXPECT_NEAR(std::accumulate(q.weights.begin(), q.weights.end(), 0.0), 1.0, 1e-12);
  auto y = q.responses();
  EXPECT_DOUBLE_EQ(y[0], 128.0);
  EXPECT_DOUBLE_EQ(y[1], 0.0);
}

TEST(Quadrature, AutoSizeAndWeightSum) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    auto p = rstpp(LambdaSpec::homogeneous(40), Window({-1, 2}, {0, 0.5}), TimeInterval(3, 7), s).front();
    if (p.empty()) continue;
    auto q = build_quadrature(p);
    EXPECT_GE(q.size() - q.n_data, 4 * p.size());
    double sum = std::accumulate(q.weights.begin(), q.weights.end(), 0.0);
    EXPECT_NEAR(sum / p.volume(), 1.0, 1e-6);
    for (double a : q.weights) EXPECT_GT(a, 0.0);
  }
}

TEST(Quadrature, RejectsNetworkAndEmpty) {
  auto net = stopp::testing::grid_network(2);
  auto lp = rstlpp(LambdaSpec::homogeneous(3), net, TimeInterval::unit(), 1);
  EXPECT_EQ(code_of([&] { build_quadrature(lp); }), Errc::DomainMismatch);
  EXPECT_EQ(code_of([&] { fit_stppm(lp, Formula::parse("~1")); }), Errc::DomainMismatch);
  auto empty = PointPattern::planar({}, Window::unit(), TimeInterval::unit());
  EXPECT_EQ(code_of([&] { build_quadrature(empty); }), Errc::EmptyPattern);
}

TEST(Stppm, InterceptOnlyIsCountOverVolume) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    auto p = trend(s);
    auto m = fit_stppm(p, Formula::parse("~1"));
    EXPECT_NEAR(std::exp(m.coefficients[0]) / (p.size() / p.volume()), 1.0, 0.01);
  }
}

TEST(Stppm, HomogeneousWithinThreeStandardErrors) {
  for (std::uint64_t s = 1; s <= 10; ++s) {
    auto p = homogeneous(200, s);
    auto m = fit_stppm(p, Formula::parse("~1"));
    // The MLE of log(lambda) has standard error about 1 / sqrt(n).
    EXPECT_NEAR(m.coefficients[0], std::log(200.0), 3.0 / std::sqrt(200.0));
  }
}

TEST(Stppm, RecoversLogLinearTrend) {
  double e0 = 0.0, e1 = 0.0;
  for (std::uint64_t s = 1; s <= 20; ++s) {
    auto m = fit_stppm(trend(s), Formula::parse("~x"));
    EXPECT_NEAR(m.coefficients[0], 2.0, 0.75);
    EXPECT_NEAR(m.coefficients[1], 6.0, 0.75);
    e0 += std::abs(m.coefficients[0] - 2.0);
    e1 += std::abs(m.coefficients[1] - 6.0);
  }
  EXPECT_LT(e0 / 20, 0.5);
  EXPECT_LT(e1 / 20, 0.5);
}

TEST(Stppm, ScoreEquationsHold) {
  auto p = trend(4);
  auto f = Formula::parse("~x + y + t");
  auto m = fit_stppm(p, f);
  const auto& q = *m.quadrature;
  std::vector<double> xs, ys, ts;
  Design d = build_design(f, q.frame(&p.marks(), xs, ys, ts));
  Eigen::VectorXd lambda = (d.matrix * m.coefficients).array().exp();
  Eigen::VectorXd resid = q.weight_vector().cwiseProduct(q.responses() - lambda);
  Eigen::VectorXd score = d.matrix.transpose() * resid;
  for (Eigen::Index c = 0; c < score.size(); ++c) EXPECT_NEAR(score[c], 0.0, 1e-6);
}

TEST(Stppm, LogLikelihoodMatchesDevianceRoute) {
  auto p = trend(5);
  auto m = fit_stppm(p, Formula::parse("~x"));
  const auto& q = *m.quadrature;
  double log_w = 0.0;
  for (std::size_t k = 0; k < q.size(); ++k)
    if (q.is_data[k]) log_w += std::log(q.weights[k]);
  EXPECT_NEAR(m.loglik, -(m.deviance / 2 + log_w + static_cast<double>(p.size())), 1e-6 * std::abs(m.loglik));
}

TEST(Stppm, PointOrderDoesNotMatter) {
  auto p = trend(6);
  std::vector<std::size_t> idx(p.size());
  std::iota(idx.rbegin(), idx.rend(), 0);
  auto a = fit_stppm(p, Formula::parse("~x + t"));
  auto b = fit_stppm(p.subset(idx), Formula::parse("~x + t"));
  for (Eigen::Index c = 0; c < a.coefficients.size(); ++c) EXPECT_NEAR(a.coefficients[c], b.coefficients[c], 1e-10);
}

TEST(Stppm, RankDeficientDesign) {
  auto p = trend(7);
  EXPECT_EQ(code_of([&] { fit_stppm(p, Formula::parse("~x + x:x")); }), Errc::ParseError);
  MarkTable konst{{"k", std::vector<double>(p.size(), 3.0), {}}};
  auto pk = PointPattern::planar(p.points(), *p.window(), p.time(), konst);  // constant column
  EXPECT_EQ(code_of([&] { fit_stppm(pk, Formula::parse("~k")); }), Errc::RankDeficientDesign);
}

TEST(AicBic, ModelSelection) {
  int aic_wins = 0, bic_wins = 0;
  for (std::uint64_t s = 1; s <= 20; ++s) {
    auto p = trend(100 + s);
    auto a1 = aic_bic(fit_stppm(p, Formula::parse("~1")));
    auto ax = aic_bic(fit_stppm(p, Formula::parse("~x")));
    if (ax.aic < a1.aic) ++aic_wins;
    auto h = homogeneous(200, 200 + s);
    auto b1 = aic_bic(fit_stppm(h, Formula::parse("~1")));
    auto bx = aic_bic(fit_stppm(h, Formula::parse("~x")));
    if (b1.bic < bx.bic) ++bic_wins;
  }
  EXPECT_GE(aic_wins, 18);
  EXPECT_GE(bic_wins, 15);
}

TEST(AicBic, Algebra) {
  auto p = trend(8);
  auto m = fit_stppm(p, Formula::parse("~x + y"));
  auto ic = aic_bic(m);
  const double k = 3, n = static_cast<double>(p.size());
  EXPECT_NEAR(ic.aic - ic.bic, 2 * k - k * std::log(n), 1e-9);
  auto loc = fit_locstppm(homogeneous(30, 1), Formula::parse("~1"));
  EXPECT_EQ(code_of([&] { aic_bic(loc); }), Errc::WrongKind);
}

TEST(Locstppm, HugeBandwidthCollapsesToGlobal) {
  auto p = trend(9);
  auto f = Formula::parse("~x");
  auto g = fit_stppm(p, f);
  LocalFitOptions opt;
  opt.bw_space = 1e6;
  opt.bw_time = 1e6;
  auto l = fit_locstppm(p, f, opt);
  ASSERT_EQ(l.local_coefficients.rows(), static_cast<Eigen::Index>(p.size()));
  double worst = 0.0;
  for (Eigen::Index i = 0; i < l.local_coefficients.rows(); ++i) {
    EXPECT_TRUE(l.row_converged[static_cast<std::size_t>(i)]);
    worst = std::max(worst, (l.local_coefficients.row(i).transpose() - g.coefficients).cwiseAbs().maxCoeff());
  }
  EXPECT_LT(worst, 1e-3);
}

TEST(Locstppm, InterceptOnlyIsDomainNormalisedKernelEstimate) {
  // With a constant template the local score equation gives
  // lambda_i = sum_data w_ij / sum_k a_k w_ik: the kernel estimator whose
  // Gaussian kernel is renormalised over W x T.
  for (std::uint64_t s = 1; s <= 3; ++s) {
    auto p = homogeneous(60, 300 + s);
    auto l = fit_locstppm(p, Formula::parse("~1"));
    const auto& q = *l.quadrature;
    const auto bw = l.bandwidths;
    for (std::size_t i = 0; i < p.size(); ++i) {
      double num = 0.0, den = 0.0;
      for (std::size_t k = 0; k < q.size(); ++k) {
        double ds = std::hypot(q.points[k].x - p[i].x, q.points[k].y - p[i].y) / bw.space;
        double dt = (q.points[k].t - p[i].t) / bw.time;
        double w = std::exp(-0.5 * (ds * ds + dt * dt));
        den += q.weights[k] * w;
        if (q.is_data[k]) num += w;
      }
      EXPECT_NEAR(l.fitted[i] / (num / den), 1.0, 1e-7);
    }
  }
}

TEST(Locstppm, InterceptOnlyAgreesWithKernelIntensityAwayFromEdges) {
  // The intensity module has no edge correction, so agreement is checked
  // with its estimate divided by the kernel mass inside W x T.
  auto p = homogeneous(150, 301);
  auto l = fit_locstppm(p, Formula::parse("~1"));
  KernelOptions ko;
  ko.bw_space = l.bandwidths.space;
  ko.bw_time = l.bandwidths.time;
  auto k = kernel_intensity(p, ko);
  std::vector<double> corrected(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    auto mass1 = [](double v, double lo, double hi, double s) {
      return 0.5 * (std::erf((hi - v) / (s * std::sqrt(2.0))) - std::erf((lo - v) / (s * std::sqrt(2.0))));
    };
    double m = mass1(p[i].x, 0, 1, ko.bw_space.value()) * mass1(p[i].y, 0, 1, ko.bw_space.value()) *
               mass1(p[i].t, 0, 1, ko.bw_time.value());
    corrected[i] = k.values[i] / m;
  }
  EXPECT_GT(correlation(l.fitted, corrected), 0.95);
}

TEST(Locstppm, MedianLocalSlope) {
  auto p = trend(2);
  auto l = fit_locstppm(p, Formula::parse("~x"));
  std::vector<double> slopes;
  for (Eigen::Index i = 0; i < l.local_coefficients.rows(); ++i)
    if (l.row_converged[static_cast<std::size_t>(i)]) slopes.push_back(l.local_coefficients(i, 1));
  EXPECT_NEAR(median(slopes), 6.0, 1.0);
  for (double v : l.fitted)
    if (std::isfinite(v)) EXPECT_GT(v, 0.0);
}

TEST(Locstppm, PermutedRowsFollowPoints) {
  auto p = homogeneous(40, 11);
  std::vector<std::size_t> idx(p.size());
  std::iota(idx.rbegin(), idx.rend(), 0);
  auto a = fit_locstppm(p, Formula::parse("~x"));
  auto b = fit_locstppm(p.subset(idx), Formula::parse("~x"));
  for (std::size_t i = 0; i < p.size(); ++i)
    for (Eigen::Index c = 0; c < 2; ++c)
      EXPECT_NEAR(a.local_coefficients(static_cast<Eigen::Index>(idx[i]), c),
                  b.local_coefficients(static_cast<Eigen::Index>(i), c), 1e-8);
}

TEST(Separable, HomogeneousIsConstant) {
  auto p = homogeneous(100, 12);
  auto m = fit_separable(p, Formula::parse("~1"), Formula::parse("~1"));
  for (double v : m.fitted) EXPECT_NEAR(v, p.size() / p.volume(), 1e-9 * v);
  EXPECT_NEAR(m.integral, static_cast<double>(p.size()), 1e-9);
}

TEST(Separable, RecoversSpatialSlope) {
  for (std::uint64_t s = 1; s <= 20; ++s) {
    auto p = trend(400 + s);
    auto m = fit_separable(p, Formula::parse("~x"), Formula::parse("~t"));
    EXPECT_NEAR(m.coefficients[1], 6.0, 0.75);
    EXPECT_NEAR(m.integral / p.size(), 1.0, 1e-3);
  }
}

TEST(Separable, TimeMarksAndRestrictions) {
  auto p = trend(13);
  MarkTable marks{{"hour", {}, {}}, {"day", {}, {"a", "b"}}};
  for (const auto& q : p.points()) {
    marks[0].values.push_back(std::floor(q.t * 24));
    marks[1].values.push_back(q.t < 0.5 ? 0 : 1);
  }
  auto pm = PointPattern::planar(p.points(), *p.window(), p.time(), marks);
  auto m = fit_separable(pm, Formula::parse("~x*y"), Formula::parse("~hour + day"));
  EXPECT_EQ(m.names.size(), 4u);
  EXPECT_EQ(m.time_names.back(), "dayb");
  EXPECT_EQ(code_of([&] { fit_separable(pm, Formula::parse("~t"), Formula::parse("~1")); }), Errc::InvalidParams);
  EXPECT_EQ(code_of([&] { fit_separable(pm, Formula::parse("~1"), Formula::parse("~x")); }), Errc::InvalidParams);
  EXPECT_NE(format_fit(m).find("temporal trend: ~hour + day"), std::string::npos);
}

TEST(Separable, NetworkLengthWeighted) {
  auto net = stopp::testing::grid_network(3);
  auto p = rstlpp(LambdaSpec::homogeneous(5.0), net, TimeInterval::unit(), 3);
  auto m = fit_separable(p, Formula::parse("~x"), Formula::parse("~t"));
  EXPECT_TRUE(m.network);
  EXPECT_NEAR(std::accumulate(m.quadrature->weights.begin(), m.quadrature->weights.end(), 0.0), net->total_length(),
              1e-9);
  EXPECT_NEAR(m.integral, static_cast<double>(p.size()), 1e-9);
  auto h = fit_separable(p, Formula::parse("~1"), Formula::parse("~1"));
  for (double v : h.fitted) EXPECT_NEAR(v, p.size() / p.volume(), 1e-9 * v);
}

TEST(FitPrint, ConsoleBlocks) {
  auto p = homogeneous(200, 1);
  std::string hom = format_fit(fit_stppm(p, Formula::parse("~1")));
  EXPECT_EQ(hom.rfind("Homogeneous Poisson process \nwith Intensity: ", 0), 0u);
  EXPECT_NE(hom.find("Estimated coefficients: \n(Intercept) \n"), std::string::npos);
  std::string inh = format_fit(fit_stppm(trend(2), Formula::parse("~x")));
  EXPECT_NE(inh.find("Inhomogeneous Poisson process \nwith Trend: ~x\n\nEstimated coefficients: \n(Intercept)           x \n"),
            std::string::npos);
  std::string loc = format_fit(fit_locstppm(trend(2), Formula::parse("~x")));
  EXPECT_NE(loc.find("Summary of estimated coefficients \n"), std::string::npos);
  for (const char* label : {" Min.   :", " 1st Qu.:", " Median :", " Mean   :", " 3rd Qu.:", " Max.   :"})
    EXPECT_NE(loc.find(label), std::string::npos) << label;
  std::string hloc = format_fit(fit_locstppm(homogeneous(40, 2), Formula::parse("~1")));
  EXPECT_NE(hloc.find("with median Intensity: "), std::string::npos);
}

TEST(FitPrint, NamedVectorLayout) {
  Eigen::VectorXd v(2);
  v << 2.18, 5.783;
  EXPECT_EQ(detail::named_vector({"(Intercept)", "x"}, v), "(Intercept)           x \n      2.180       5.783 \n");
  Eigen::VectorXd w(3);
  w << 6.989, 0.225, 156.353;
  EXPECT_EQ(detail::named_vector({"sigma", "alpha", "beta"}, w), "  sigma   alpha    beta \n  6.989   0.225 156.353 \n");
}

// ---- log-Gaussian Cox processes ----

TEST(TheoreticalPcf, OriginDecayAndPaperValue) {
  for (auto fam : {CovFamily::separable_exp, CovFamily::gneiting, CovFamily::iaco_cesare}) {
    CovarianceParams p{fam, 1.7, 0.2, 3.0};
    EXPECT_NEAR(theoretical_pcf(p, 0, 0), std::exp(1.7), 1e-12);
    EXPECT_NEAR(theoretical_pcf(p, 1e4, 1e6), 1.0, 1e-3);
  }
  CovarianceParams paper{CovFamily::separable_exp, 6.989, 0.225, 156.353};
  EXPECT_NEAR(theoretical_pcf(paper, 0.225, 156.353), std::exp(6.989 * std::exp(-2.0)), 1e-12);
  EXPECT_NEAR(theoretical_pcf(paper, 0.225, 156.353), 2.575, 1e-3);
}

TEST(TheoreticalPcf, InvalidParams) {
  EXPECT_EQ(code_of([] { theoretical_pcf({CovFamily::separable_exp, -1, 1, 1}, 0, 0); }), Errc::InvalidParams);
  EXPECT_EQ(code_of([] { theoretical_pcf({CovFamily::gneiting, 1, 1, 1, 2.5}, 0, 0); }), Errc::InvalidParams);
  EXPECT_EQ(code_of([] { theoretical_pcf({CovFamily::gneiting, 1, 1, 1, 1, 1, 3}, 0, 0); }), Errc::InvalidParams);
  EXPECT_EQ(code_of([] { theoretical_pcf({CovFamily::iaco_cesare, 1, 1, 1}, -0.1, 0); }), Errc::InvalidParams);
}

TEST(TheoreticalPcf, Monotone) {
  // Gneiting is checked for r <= alpha: beyond that the temporal damping of
  // the spatial term can make it increase in h.
  Rng rng = make_rng(42);
  std::uniform_real_distribution<double> u(0.05, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    for (auto fam : {CovFamily::separable_exp, CovFamily::gneiting, CovFamily::iaco_cesare}) {
      CovarianceParams p{fam, u(rng), u(rng), u(rng), u(rng), u(rng), u(rng)};
      const double rmax = fam == CovFamily::gneiting ? p.alpha : 3.0;
      double prev_r = theoretical_pcf(p, 0, 0.3);
      for (int k = 1; k <= 30; ++k) {
        double g = theoretical_pcf(p, rmax * k / 30, 0.3);
        EXPECT_LE(g, prev_r + 1e-12);
        prev_r = g;
      }
      double prev_h = theoretical_pcf(p, 0.5 * rmax, 0);
      for (int k = 1; k <= 30; ++k) {
        double g = theoretical_pcf(p, 0.5 * rmax, 0.2 * k);
        EXPECT_LE(g, prev_h + 1e-12);
        prev_h = g;
      }
    }
  }
}

TEST(MinContrast, PlantedTruthAllFamilies) {
  const GridSpec g = make_grid(0.4, 20.0, 20, 20);
  for (auto fam : {CovFamily::separable_exp, CovFamily::gneiting, CovFamily::iaco_cesare}) {
    CovarianceParams truth{fam, 2.0, 0.1, 5.0};
    auto fit = min_contrast(g, theoretical_pcf_surface(truth, g), fam);
    EXPECT_LT(fit.contrast, 1e-10) << family_name(fam);
    EXPECT_NEAR(fit.params.sigma2 / 2.0, 1.0, 0.01) << family_name(fam);
    EXPECT_NEAR(fit.params.alpha / 0.1, 1.0, 0.01) << family_name(fam);
    EXPECT_NEAR(fit.params.beta / 5.0, 1.0, 0.01) << family_name(fam);
  }
}

TEST(MinContrast, BestEvaluatedIsReported) {
  const GridSpec g = make_grid(0.3, 10.0, 10, 10);
  Eigen::MatrixXd emp = theoretical_pcf_surface({CovFamily::separable_exp, 1.0, 0.05, 2.0}, g);
  emp(3, 3) += 0.5;  // not attainable exactly
  auto fit = min_contrast(g, emp, CovFamily::separable_exp);
  EXPECT_GE(fit.contrast, 0.0);
  Eigen::MatrixXd d = (emp - theoretical_pcf_surface(fit.params, g)).array().square();
  EXPECT_NEAR(trapezoid(g, d), fit.contrast, 1e-12);
  for (double s2 : {0.5, 1.0, 2.0})
    for (double a : {0.02, 0.05, 0.1}) {
      Eigen::MatrixXd e = (emp - theoretical_pcf_surface({CovFamily::separable_exp, s2, a, 2.0}, g)).array().square();
      EXPECT_LE(fit.contrast, trapezoid(g, e) + 1e-15);
    }
}

TEST(MinContrast, IterationCapFails) {
  const GridSpec g = make_grid(0.4, 20.0, 10, 10);
  ContrastOptions opt;
  opt.max_iter = 3;
  EXPECT_EQ(code_of([&] {
              min_contrast(g, theoretical_pcf_surface({CovFamily::gneiting, 2, 0.1, 5}, g), CovFamily::gneiting, opt);
            }),
            Errc::OptimFailure);
}

TEST(Stlgcppm, GlobalGlobalOnPoisson) {
  auto p = homogeneous(150, 21);
  auto fit = fit_stlgcppm(p, Formula::parse("~1"));
  EXPECT_GE(fit.contrast, 0.0);
  EXPECT_GT(fit.seconds, 0.0);
  std::string text = format_lgcp(fit);
  EXPECT_EQ(text.rfind("Joint minimum contrast fit \nfor a log-Gaussian Cox process with \n"
                       "global first-order intensity and \nglobal second-order intensity \n",
                       0),
            0u);
  EXPECT_NE(text.find("Homogeneous Poisson process \nwith Intensity: "), std::string::npos);
  EXPECT_NE(text.find("Estimated coefficients of the first-order intensity: \n(Intercept) \n"), std::string::npos);
  EXPECT_NE(text.find("Covariance function: separable \n\nEstimated coefficients of the second-order intensity: \n"),
            std::string::npos);
  EXPECT_NE(text.find("sigma"), std::string::npos);
  EXPECT_NE(text.find("Model fitted in "), std::string::npos);
  EXPECT_EQ(format_lgcp(fit, false).find("Model fitted in"), std::string::npos);
}

TEST(Stlgcppm, EmpiricalIsAverageLocalPcf) {
  auto p = trend(22);
  auto fit = fit_stlgcppm(p, Formula::parse("~x"));
  IntensityValues lam{fit.first_order.fitted, {}};
  auto loc = lista_planar(p, &lam, Statistic::pcf, fit.grid);
  Eigen::MatrixXd avg = Eigen::MatrixXd::Zero(fit.grid.nr(), fit.grid.nh());
  for (const auto& s : loc) avg += s.values;
  avg /= static_cast<double>(p.size());
  EXPECT_LT((avg - fit.empirical).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Stlgcppm, LocalFirstOrder) {
  auto p = trend(23);
  LgcpOptions opt;
  opt.first = Scope::local;
  auto fit = fit_stlgcppm(p, Formula::parse("~x"), opt);
  std::vector<double> icpt;
  for (Eigen::Index i = 0; i < fit.first_order.local_coefficients.rows(); ++i)
    icpt.push_back(fit.first_order.local_coefficients(i, 0));
  auto s = five_number(icpt);
  EXPECT_LT(s.q1, s.q3);
  std::string text = format_lgcp(fit);
  EXPECT_NE(text.find("local first-order intensity and \nglobal second-order intensity"), std::string::npos);
  EXPECT_NE(text.find("Summary of estimated coefficients of the first-order intensity \n"), std::string::npos);
}

TEST(Stlgcppm, LocalSecondOrderDeterministic) {
  auto p = homogeneous(40, 24);
  LgcpOptions opt;
  opt.second = Scope::local;
  opt.family = CovFamily::iaco_cesare;
  set_num_threads(1);
  auto a = fit_stlgcppm(p, Formula::parse("~1"), opt);
  set_num_threads(4);
  auto b = fit_stlgcppm(p, Formula::parse("~1"), opt);
  set_num_threads(0);
  ASSERT_EQ(a.local_params.size(), p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    EXPECT_EQ(a.local_params[i].sigma2, b.local_params[i].sigma2);
    EXPECT_EQ(a.local_contrast[i], b.local_contrast[i]);
    EXPECT_GE(a.local_contrast[i], 0.0);
  }
  EXPECT_NE(format_lgcp(a).find("Covariance function: iaco-cesare"), std::string::npos);
}

TEST(Stlgcppm, Preconditions) {
  auto small = PointPattern::planar({{0.1, 0.1, 0.1}, {0.5, 0.5, 0.5}}, Window::unit(), TimeInterval::unit());
  EXPECT_EQ(code_of([&] { fit_stlgcppm(small, Formula::parse("~1")); }), Errc::InsufficientPoints);
  auto net = stopp::testing::grid_network(3);
  auto lp = rstlpp(LambdaSpec::homogeneous(5.0), net, TimeInterval::unit(), 1);
  EXPECT_EQ(code_of([&] { fit_stlgcppm(lp, Formula::parse("~1")); }), Errc::DomainMismatch);
}
