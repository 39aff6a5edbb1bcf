// stopp: command-line front end for simulation, second-order statistics,
// local tests, model fitting and diagnostics of spatio-temporal patterns.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "stopp/diagnostics.hpp"
#include "stopp/fit.hpp"
#include "stopp/io.hpp"
#include "stopp/lgcp.hpp"
#include "stopp/localtest.hpp"
#include "stopp/parallel.hpp"
#include "stopp/secondorder.hpp"
#include "stopp/simulate.hpp"
#include "stopp/svg.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace stopp;

namespace {

// Bad flag combinations detected after parsing; reported like parse errors.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GridOptions {
  std::optional<double> r_max, h_max;
  std::size_t nr = 20, nh = 20;

  void add(CLI::App* c) {
    c->add_option("--rmax", r_max, "Largest spatial distance (default: quarter of the largest pair distance)");
    c->add_option("--hmax", h_max, "Largest time lag (default: quarter of the time interval)");
    c->add_option("--nr", nr, "Number of distance nodes")->capture_default_str()->check(CLI::PositiveNumber);
    c->add_option("--nh", nh, "Number of time-lag nodes")->capture_default_str()->check(CLI::PositiveNumber);
  }

  GridSpec resolve(const PointPattern& p) const {
    GridSpec d = default_grid(p, nr, nh);
    return make_grid(r_max.value_or(d.r.back()), h_max.value_or(d.h.back()), nr, nh);
  }
};

struct BandwidthOptions {
  std::optional<double> space, time;

  void add(CLI::App* c) {
    c->add_option("--bw-space", space, "Spatial bandwidth (default: Silverman)")->check(CLI::PositiveNumber);
    c->add_option("--bw-time", time, "Temporal bandwidth (default: Silverman)")->check(CLI::PositiveNumber);
  }

  KernelOptions kernel() const { return {space, time, false}; }
};

std::shared_ptr<const LinearNetwork> load_network(const std::string& path) {
  return path.empty() ? nullptr : io::read_network(path);
}

PointPattern load_pattern(const std::string& path, const std::string& network) {
  return io::read_pattern_csv(path, std::nullopt, std::nullopt, load_network(network));
}

/// "auto" -> kernel estimate, "none" -> empty, otherwise a CSV aligned with p.
std::optional<IntensityValues> load_lambda(const std::string& spec, const PointPattern& p,
                                           const BandwidthOptions& bw) {
  if (spec == "none") return std::nullopt;
  if (spec == "auto") return kernel_intensity(p, bw.kernel());
  IntensityValues lam = io::read_intensity_csv(spec);
  if (lam.size() != p.size())
    throw Error(Errc::LengthMismatch, "intensity file has " + std::to_string(lam.size()) + " values for " +
                                          std::to_string(p.size()) + " points");
  return lam;
}

std::string sibling(const std::string& path, const std::string& suffix) {
  fs::path p(path);
  return (p.parent_path() / (p.stem().string() + suffix)).string();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw Error(Errc::IoError, "cannot write '" + path + "'");
}

/// Replayable record of the invocation: `stopp --config FILE` reruns it.
void write_run_config(const CLI::App& app, const std::string& out) {
  write_text(sibling(out, ".config.ini"), app.config_to_str(false, false));
}

Statistic parse_statistic(const std::string& s) { return s == "pcf" ? Statistic::pcf : Statistic::K; }

json grid_json(const GridSpec& g) { return {{"r", g.r}, {"h", g.h}}; }

json params_json(const CovarianceParams& c) {
  return {{"family", family_name(c.family)}, {"sigma2", c.sigma2}, {"alpha", c.alpha}, {"beta", c.beta},
          {"gamma_s", c.gamma_s},           {"gamma_t", c.gamma_t}, {"delta", c.delta}};
}

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json model_json(const FittedModel& m) {
  static const char* kinds[] = {"separable", "poisson", "locpoisson"};
  json j{{"model", kinds[static_cast<int>(m.kind)]},
         {"formula", m.formula.str()},
         {"n", m.n},
         {"network", m.network},
         {"names", m.names},
         {"integral", m.integral}};
  if (m.kind == ModelKind::local_poisson) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.local_coefficients.rows(); ++i)
      rows.push_back(vector_json(m.local_coefficients.row(i).transpose()));
    j["local_coefficients"] = std::move(rows);
    j["coefficients"] = vector_json(m.coefficients);
    j["bandwidths"] = {{"space", m.bandwidths.space}, {"time", m.bandwidths.time}};
    std::size_t failed = 0;
    for (char c : m.row_converged) failed += c ? 0 : 1;
    j["failed_rows"] = failed;
  } else {
    j["coefficients"] = vector_json(m.coefficients);
  }
  if (m.kind == ModelKind::separable) {
    j["time_formula"] = m.time_formula.str();
    j["time_names"] = m.time_names;
    j["time_coefficients"] = vector_json(m.time_coefficients);
    j["scale"] = m.scale;
  }
  if (m.kind == ModelKind::global_poisson) {
    auto ic = aic_bic(m);
    j["loglik"] = m.loglik;
    j["deviance"] = m.deviance;
    j["iterations"] = m.iterations;
    j["aic"] = ic.aic;
    j["bic"] = ic.bic;
  }
  return j;
}

/// Per-point table: coordinates, fitted intensity and local coefficients.
std::string points_csv(const PointPattern& p, const FittedModel& m, const LgcpFit* lgcp = nullptr) {
  std::ostringstream os;
  os << "index,x,y,t,lambda";
  const bool local = m.kind == ModelKind::local_poisson;
  if (local) {
    for (const auto& n : m.names) os << ',' << io::detail::quote("coef_" + n);
    os << ",converged";
  }
  const bool local_cov = lgcp && !lgcp->local_params.empty();
  if (local_cov) os << ",sigma2,alpha,beta,contrast";
  os << '\n';
  for (std::size_t i = 0; i < p.size(); ++i) {
    os << i << ',' << io::detail::num(p[i].x) << ',' << io::detail::num(p[i].y) << ',' << io::detail::num(p[i].t)
       << ',' << io::detail::num(m.fitted[i]);
    if (local) {
      for (Eigen::Index k = 0; k < m.local_coefficients.cols(); ++k)
        os << ',' << io::detail::num(m.local_coefficients(static_cast<Eigen::Index>(i), k));
      os << ',' << (m.row_converged[i] ? 1 : 0);
    }
    if (local_cov) {
      const auto& c = lgcp->local_params[i];
      os << ',' << io::detail::num(c.sigma2) << ',' << io::detail::num(c.alpha) << ',' << io::detail::num(c.beta)
         << ',' << io::detail::num(lgcp->local_contrast[i]);
    }
    os << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------

struct SimArgs {
  std::string model = "poisson";
  std::optional<double> lambda;
  std::vector<double> par;
  std::vector<double> domain{0, 1, 0, 1, 0, 1};
  std::string network;
  std::uint64_t seed = 1;
  int nsim = 1;
  std::string out;
  std::string svg;
};

int run_sim(const CLI::App& app, const SimArgs& a) {
  auto net = load_network(a.network);
  if (net ? a.domain.size() != 2 && a.domain.size() != 6 : a.domain.size() != 6)
    throw UsageError("--domain takes x0,x1,y0,y1,t0,t1 (or t0,t1 with --network)");
  const TimeInterval time(a.domain[a.domain.size() - 2], a.domain.back());
  std::optional<Window> window;
  if (!net) window = Window({a.domain[0], a.domain[1]}, {a.domain[2], a.domain[3]});

  std::vector<PointPattern> out;
  if (a.model == "poisson") {
    if (a.lambda.has_value() == !a.par.empty()) throw UsageError("poisson needs exactly one of --lambda or --par");
    LambdaSpec spec = [&] {
      if (a.lambda) return LambdaSpec::homogeneous(*a.lambda);
      static const char* terms[] = {"x", "y", "t"};
      if (a.par.size() > 4) throw UsageError("--par takes b0[,bx[,by[,bt]]] for poisson");
      return LambdaSpec::log_linear({terms, terms + (a.par.size() - 1)}, a.par);
    }();
    if (net) {
      for (int r = 0; r < a.nsim; ++r) out.push_back(rstlpp(spec, net, time, a.seed + static_cast<std::uint64_t>(r)));
    } else {
      out = rstpp(spec, *window, time, a.seed, a.nsim);
    }
  } else {
    if (a.lambda) throw UsageError("etas takes its parameters from --par");
    if (a.par.size() < 2 || a.par.size() > 9)
      throw UsageError("--par takes mu,A[,c,p,d,q,alpha_m,m0,b] for etas");
    EtasParams e;
    double* fields[] = {&e.mu, &e.A, &e.c, &e.p, &e.d, &e.q, &e.alpha_m, &e.m0, &e.b};
    for (std::size_t k = 0; k < a.par.size(); ++k) *fields[k] = a.par[k];
    for (int r = 0; r < a.nsim; ++r) out.push_back(retas(e, window, net, time, a.seed + static_cast<std::uint64_t>(r)));
  }

  for (std::size_t r = 0; r < out.size(); ++r) {
    std::string path = a.out;
    if (out.size() > 1) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "_%03zu", r + 1);
      path = sibling(a.out, buf + fs::path(a.out).extension().string());
    }
    io::write_pattern_csv(path, out[r]);
    std::cout << path << ": " << out[r].size() << " points\n";
  }
  if (!a.svg.empty()) svg::write(a.svg, svg::pattern_plot(out.front()));
  write_run_config(app, a.out);
  return 0;
}

// ---------------------------------------------------------------------------

struct SurfaceArgs {
  std::string pattern, network, lambda = "none", statistic = "K", out, svg;
  bool normalize = false;
  GridOptions grid;
  BandwidthOptions bw;
};

int run_k(const CLI::App& app, const SurfaceArgs& a) {
  PointPattern p = load_pattern(a.pattern, a.network);
  const GridSpec g = a.grid.resolve(p);
  auto lam = load_lambda(a.lambda, p, a.bw);
  KSurface k;
  if (p.is_network())
    k = k_inhom_network(p, lam ? *lam : homogeneous_intensity(p), g);
  else
    k = lam ? k_inhom_global(p, *lam, g) : k_global_scaled(p, g);
  std::ostringstream csv;
  io::write_surface_csv(csv, k);
  write_text(a.out, csv.str());
  io::write_json(sibling(a.out, ".json"), io::surface_to_json(k));
  if (!a.svg.empty()) svg::write(a.svg, svg::surface_plot(k));
  write_run_config(app, a.out);
  return 0;
}

int run_lista(const CLI::App& app, const SurfaceArgs& a) {
  PointPattern p = load_pattern(a.pattern, a.network);
  const GridSpec g = a.grid.resolve(p);
  auto lam = load_lambda(a.lambda, p, a.bw);
  const Statistic stat = parse_statistic(a.statistic);
  std::vector<ListaSurface> surfaces;
  if (p.is_network()) {
    auto res = lista_network(p, lam ? &*lam : nullptr, stat, a.normalize, g);
    if (res.disconnected_pairs)
      std::cerr << "warning: " << res.disconnected_pairs << " point pairs lie on disconnected components\n";
    surfaces = std::move(res.surfaces);
  } else {
    surfaces = lista_planar(p, lam ? &*lam : nullptr, stat, g);
  }
  std::ostringstream csv;
  io::write_lista_csv(csv, surfaces);
  write_text(a.out, csv.str());
  if (!a.svg.empty() && !surfaces.empty()) {
    Eigen::MatrixXd avg = Eigen::MatrixXd::Zero(g.nr(), g.nh());
    for (const auto& s : surfaces) avg += s.values;
    avg /= static_cast<double>(surfaces.size());
    const Eigen::MatrixXd theo = stat == Statistic::pcf ? Eigen::MatrixXd::Ones(g.nr(), g.nh()).eval()
                                 : p.is_network()        ? network_theo(g)
                                                         : planar_theo(g);
    svg::write(a.svg, svg::surface_plot(g, avg, theo));
  }
  write_run_config(app, a.out);
  return 0;
}

// ---------------------------------------------------------------------------

struct LocalTestArgs {
  std::string background, alternative, network, statistic = "K", out, svg;
  int k = 19;
  double alpha = 0.05;
  std::uint64_t seed = 1;
  GridOptions grid;
};

int run_localtest(const CLI::App& app, const LocalTestArgs& a) {
  auto net = load_network(a.network);
  PointPattern x = io::read_pattern_csv(a.background, std::nullopt, std::nullopt, net);
  PointPattern z = io::read_pattern_csv(a.alternative, std::nullopt, std::nullopt, net);
  LocalTestOptions opt;
  opt.statistic = parse_statistic(a.statistic);
  opt.k = a.k;
  opt.alpha = a.alpha;
  opt.seed = a.seed;
  opt.grid = a.grid.resolve(x);
  LocalTestResult r = localtest(x, z, opt);
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
  std::cout << format_localtest(r);
  json j{{"n_background", r.n_background}, {"n_alternative", r.n_alternative},
         {"k", r.k},                       {"alpha", r.alpha},
         {"statistic", a.statistic},      {"network", r.network},
         {"p_values", r.p_values},         {"statistic_obs", r.statistic_obs},
         {"significant", r.significant},   {"warnings", r.warnings},
         {"grid", grid_json(r.grid)}};
  io::write_json(a.out, j);
  if (!a.svg.empty()) svg::write(a.svg, svg::pattern_plot(x, r.significant, "Background pattern X"));
  write_run_config(app, a.out);
  return 0;
}

// ---------------------------------------------------------------------------

struct FitArgs {
  std::string pattern, network, model = "poisson", formula = "~1", time_formula = "~t";
  std::string first = "global", second = "global", family = "sepexp", out;
  std::optional<std::size_t> dummy;
  std::uint64_t seed = 1;
  bool free_shape = false;
  GridOptions grid;
  BandwidthOptions bw;
};

int run_fit(const CLI::App& app, const FitArgs& a) {
  PointPattern p = load_pattern(a.pattern, a.network);
  const Formula f = Formula::parse(a.formula);
  const bool lgcp = a.model == "lgcp";
  if (!lgcp && (app.get_subcommand("fit")->count("--first") || app.get_subcommand("fit")->count("--second") ||
                app.get_subcommand("fit")->count("--family")))
    throw UsageError("--first, --second and --family apply to --model lgcp only");
  LocalFitOptions local{a.bw.space, a.bw.time, a.dummy};

  json j;
  std::string sidecar;
  if (lgcp) {
    LgcpOptions opt;
    opt.first = a.first == "local" ? Scope::local : Scope::global;
    opt.second = a.second == "local" ? Scope::local : Scope::global;
    opt.family = a.family == "gneiting" ? CovFamily::gneiting
                 : a.family == "iaco"   ? CovFamily::iaco_cesare
                                        : CovFamily::separable_exp;
    opt.seed = a.seed;
    opt.free_shape = a.free_shape;
    opt.grid = a.grid.resolve(p);
    opt.local = local;
    LgcpFit fit = fit_stlgcppm(p, f, opt);
    std::cout << format_lgcp(fit, false, a.free_shape);
    std::fprintf(stderr, "Time elapsed: %.3f s\n", fit.seconds);
    j = model_json(fit.first_order);
    j["model"] = "lgcp";
    j["first"] = a.first;
    j["second"] = a.second;
    j["covariance"] = params_json(fit.params);
    j["contrast"] = fit.contrast;
    j["grid"] = grid_json(fit.grid);
    j["empirical_pcf"] = io::matrix_to_json(fit.empirical);
    sidecar = points_csv(p, fit.first_order, &fit);
  } else {
    FittedModel m = a.model == "sep"       ? fit_separable(p, f, Formula::parse(a.time_formula))
                    : a.model == "poisson" ? fit_stppm(p, f, a.dummy)
                                           : fit_locstppm(p, f, local);
    std::cout << format_fit(m);
    j = model_json(m);
    sidecar = points_csv(p, m);
  }
  io::write_json(a.out, j);
  write_text(sibling(a.out, ".points.csv"), sidecar);
  write_run_config(app, a.out);
  return 0;
}

// ---------------------------------------------------------------------------

struct DiagArgs {
  std::string pattern, network, lambda = "auto", mode = "global", out, svg;
  double percentile = 0.95;
  GridOptions grid;
  BandwidthOptions bw;
};

int run_diag(const CLI::App& app, const DiagArgs& a) {
  PointPattern p = load_pattern(a.pattern, a.network);
  if (a.lambda == "none") throw UsageError("diag needs --lambda FILE or auto");
  const IntensityValues lam = *load_lambda(a.lambda, p, a.bw);
  const GridSpec g = a.grid.resolve(p);
  json j;
  if (a.mode == "global") {
    GlobalDiagResult r = globaldiag(p, lam, g);
    std::cout << format_globaldiag(r);
    j = {{"mode", "global"}, {"network", r.network}, {"sum_sq", r.sum_sq}, {"surface", io::surface_to_json(r.k_weighted)}};
    if (!a.svg.empty()) svg::write(a.svg, svg::surface_plot(r.k_weighted));
  } else {
    LocalDiagResult r = localdiag(p, lam, a.percentile, g);
    std::cout << format_localdiag(r);
    j = {{"mode", "local"},   {"network", r.network},     {"n", r.n},
         {"percentile", r.percentile}, {"threshold", r.threshold}, {"outliers", r.outliers},
         {"chi2", r.chi2},    {"grid", grid_json(r.grid)}};
    write_text(sibling(a.out, ".influence.csv"), influence_csv(infl(r, p)));
    if (!a.svg.empty()) svg::write(a.svg, svg::pattern_plot(p, r.outliers, "Outlying points"));
  }
  io::write_json(a.out, j);
  write_run_config(app, a.out);
  return 0;
}

// ---------------------------------------------------------------------------

int run(int argc, char** argv) {
  CLI::App app{"Spatio-temporal point pattern analysis", "stopp"};
  app.set_config("--config", "", "Read options from an INI file (as written next to every output)");
  app.require_subcommand(1);
  app.fallthrough();
  unsigned threads = 0;
  app.add_option("--threads", threads, "Worker threads (default: STOPP_THREADS, else all cores)")
      ->configurable(false);

  SimArgs sim;
  auto* c_sim = app.add_subcommand("sim", "Simulate Poisson or ETAS patterns")->configurable();
  c_sim->add_option("--model", sim.model)->check(CLI::IsMember({"poisson", "etas"}))->capture_default_str();
  c_sim->add_option("--lambda", sim.lambda, "Constant Poisson intensity")->check(CLI::PositiveNumber);
  c_sim->add_option("--par", sim.par, "poisson: b0[,bx[,by[,bt]]] of exp(b0 + bx x + by y + bt t); "
                                      "etas: mu,A[,c,p,d,q,alpha_m,m0,b]")->delimiter(',');
  c_sim->add_option("--domain", sim.domain, "x0,x1,y0,y1,t0,t1 (t0,t1 with --network)")
      ->delimiter(',')->capture_default_str();
  c_sim->add_option("--network", sim.network, "Network file (CSV segments or JSON)");
  c_sim->add_option("--seed", sim.seed)->capture_default_str();
  c_sim->add_option("--nsim", sim.nsim, "Replicates; files get a _NNN suffix when > 1")
      ->check(CLI::PositiveNumber)->capture_default_str();
  c_sim->add_option("--out", sim.out, "Output CSV")->required();
  c_sim->add_option("--svg", sim.svg, "Map of the (first) simulated pattern");

  SurfaceArgs k;
  auto* c_k = app.add_subcommand("k", "Global K surface")->configurable();
  SurfaceArgs lista;
  auto* c_lista = app.add_subcommand("lista", "Local K or pcf surfaces, one per point")->configurable();
  for (auto [c, s] : {std::pair{c_k, &k}, std::pair{c_lista, &lista}}) {
    c->add_option("--pattern", s->pattern, "Pattern CSV")->required()->check(CLI::ExistingFile);
    c->add_option("--network", s->network, "Network file");
    c->add_option("--lambda", s->lambda, "Weighting intensity: FILE, auto or none")->capture_default_str();
    c->add_option("--out", s->out, "Output CSV")->required();
    c->add_option("--svg", s->svg, "Three-panel surface plot");
    s->grid.add(c);
    s->bw.add(c);
  }
  c_lista->add_option("--statistic", lista.statistic)->check(CLI::IsMember({"K", "pcf"}))->capture_default_str();
  c_lista->add_flag("--normalize", lista.normalize, "Network: divide by the normalisation D");

  LocalTestArgs lt;
  auto* c_lt = app.add_subcommand("localtest", "Permutation test for local differences")->configurable();
  c_lt->add_option("--background", lt.background, "Background pattern X")->required()->check(CLI::ExistingFile);
  c_lt->add_option("--alternative", lt.alternative, "Alternative pattern Z")->required()->check(CLI::ExistingFile);
  c_lt->add_option("--network", lt.network, "Network file");
  c_lt->add_option("--k", lt.k, "Permutations")->check(CLI::PositiveNumber)->capture_default_str();
  c_lt->add_option("--alpha", lt.alpha)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  c_lt->add_option("--statistic", lt.statistic)->check(CLI::IsMember({"K", "pcf"}))->capture_default_str();
  c_lt->add_option("--seed", lt.seed)->capture_default_str();
  c_lt->add_option("--out", lt.out, "Output JSON")->required();
  c_lt->add_option("--svg", lt.svg, "Background map with significant points highlighted");
  lt.grid.add(c_lt);

  FitArgs fit;
  auto* c_fit = app.add_subcommand("fit", "Fit Poisson or LGCP models")->configurable();
  c_fit->add_option("--pattern", fit.pattern, "Pattern CSV")->required()->check(CLI::ExistingFile);
  c_fit->add_option("--network", fit.network, "Network file");
  c_fit->add_option("--model", fit.model)->check(CLI::IsMember({"sep", "poisson", "locpoisson", "lgcp"}))
      ->capture_default_str();
  c_fit->add_option("--formula", fit.formula, "Trend formula, e.g. ~x+y")->capture_default_str();
  c_fit->add_option("--time-formula", fit.time_formula, "Temporal formula of separable fits")->capture_default_str();
  c_fit->add_option("--first", fit.first, "LGCP first-order scope")->check(CLI::IsMember({"global", "local"}))
      ->capture_default_str();
  c_fit->add_option("--second", fit.second, "LGCP second-order scope")->check(CLI::IsMember({"global", "local"}))
      ->capture_default_str();
  c_fit->add_option("--family", fit.family, "LGCP covariance family")
      ->check(CLI::IsMember({"sepexp", "gneiting", "iaco"}))->capture_default_str();
  c_fit->add_flag("--free-shape", fit.free_shape, "Estimate the shape parameters too");
  c_fit->add_option("--dummy", fit.dummy, "Target number of dummy points")->check(CLI::PositiveNumber);
  c_fit->add_option("--seed", fit.seed, "Optimiser restarts")->capture_default_str();
  c_fit->add_option("--out", fit.out, "Output JSON (per-point table in a .points.csv sidecar)")->required();
  fit.grid.add(c_fit);
  fit.bw.add(c_fit);

  DiagArgs diag;
  auto* c_diag = app.add_subcommand("diag", "Global or local goodness-of-fit diagnostics")->configurable();
  c_diag->add_option("--pattern", diag.pattern, "Pattern CSV")->required()->check(CLI::ExistingFile);
  c_diag->add_option("--network", diag.network, "Network file");
  c_diag->add_option("--lambda", diag.lambda, "Fitted intensity: FILE (lambda column) or auto")->capture_default_str();
  c_diag->add_option("--mode", diag.mode)->check(CLI::IsMember({"global", "local"}))->capture_default_str();
  c_diag->add_option("--percentile", diag.percentile)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  c_diag->add_option("--out", diag.out, "Output JSON")->required();
  c_diag->add_option("--svg", diag.svg, "Surface plot (global) or outlier map (local)");
  diag.grid.add(c_diag);
  diag.bw.add(c_diag);

  std::string summary_pattern, summary_network;
  bool coordinates = false;
  auto* c_sum = app.add_subcommand("summary", "Print a pattern summary");
  c_sum->add_option("--pattern", summary_pattern, "Pattern CSV")->required()->check(CLI::ExistingFile);
  c_sum->add_option("--network", summary_network, "Network file");
  c_sum->add_flag("--coordinates", coordinates, "Also print five-number summaries");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  set_num_threads(threads);

  try {
    if (*c_sim) return run_sim(app, sim);
    if (*c_k) return run_k(app, k);
    if (*c_lista) return run_lista(app, lista);
    if (*c_lt) return run_localtest(app, lt);
    if (*c_fit) return run_fit(app, fit);
    if (*c_diag) return run_diag(app, diag);
    PointPattern p = load_pattern(summary_pattern, summary_network);
    const PatternSummary s = summarize(p);
    std::cout << format_pattern(s);
    if (coordinates) std::cout << format_coordinate_summary(s);
    return 0;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n" << app.help();
    return 2;
  } catch (const Error& e) {
    std::cerr << json{{"error", e.name()}, {"message", e.what()}}.dump() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "InternalError"}, {"message", e.what()}}.dump() << '\n';
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
