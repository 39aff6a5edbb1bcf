#pragma once

// Deterministic SVG plots: three-panel surface heatmaps and pattern maps.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <span>
#include <sstream>
#include <string>

#include <Eigen/Dense>

#include "stopp/error.hpp"
#include "stopp/io.hpp"
#include "stopp/pattern.hpp"
#include "stopp/secondorder.hpp"

namespace stopp::svg {

namespace detail {

inline std::string f(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

/// Sequential white-to-blue ramp for u in [0, 1].
inline std::string ramp(double u) {
  u = std::clamp(std::isfinite(u) ? u : 0.0, 0.0, 1.0);
  int r = static_cast<int>(std::lround(255 - 207 * u));
  int g = static_cast<int>(std::lround(255 - 165 * u));
  int b = static_cast<int>(std::lround(255 - 88 * u));
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

/// Diverging blue-white-red ramp for u in [-1, 1].
inline std::string diverging(double u) {
  u = std::clamp(std::isfinite(u) ? u : 0.0, -1.0, 1.0);
  int r, g, b;
  if (u >= 0) {
    r = 255;
    g = static_cast<int>(std::lround(255 - 200 * u));
    b = static_cast<int>(std::lround(255 - 200 * u));
  } else {
    r = static_cast<int>(std::lround(255 + 200 * u));
    g = static_cast<int>(std::lround(255 + 200 * u));
    b = 255;
  }
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

inline std::string header(double w, double h) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + f(w) + "\" height=\"" + f(h) + "\" viewBox=\"0 0 " +
         f(w) + " " + f(h) + "\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

inline void heat_panel(std::ostringstream& os, double x0, double y0, double size, const GridSpec& g,
                       const Eigen::MatrixXd& m, bool signed_scale, const std::string& title) {
  double lo = m.size() ? m.minCoeff() : 0.0, hi = m.size() ? m.maxCoeff() : 0.0;
  double amp = std::max(std::abs(lo), std::abs(hi));
  os << "<g>\n<text x=\"" << f(x0 + size / 2) << "\" y=\"" << f(y0 - 8)
     << "\" text-anchor=\"middle\" font-size=\"14\">" << escape(title) << "</text>\n";
  const double cw = size / static_cast<double>(g.nr()), ch = size / static_cast<double>(g.nh());
  for (std::size_t a = 0; a < g.nr(); ++a)
    for (std::size_t b = 0; b < g.nh(); ++b) {
      double v = m(a, b);
      std::string fill = signed_scale ? diverging(amp > 0 ? v / amp : 0.0) : ramp(hi > lo ? (v - lo) / (hi - lo) : 0.0);
      // r along x, h upwards along y.
      os << "<rect x=\"" << f(x0 + a * cw) << "\" y=\"" << f(y0 + size - (b + 1) * ch) << "\" width=\"" << f(cw)
         << "\" height=\"" << f(ch) << "\" fill=\"" << fill << "\"/>\n";
    }
  os << "<rect x=\"" << f(x0) << "\" y=\"" << f(y0) << "\" width=\"" << f(size) << "\" height=\"" << f(size)
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  os << "<text x=\"" << f(x0 + size / 2) << "\" y=\"" << f(y0 + size + 16)
     << "\" text-anchor=\"middle\" font-size=\"11\">r (0 to " << stopp::detail::fmt_g(g.r.back(), 4)
     << ")</text>\n";
  os << "<text x=\"" << f(x0 - 8) << "\" y=\"" << f(y0 + size / 2) << "\" text-anchor=\"middle\" font-size=\"11\""
     << " transform=\"rotate(-90 " << f(x0 - 8) << ' ' << f(y0 + size / 2) << ")\">h (0 to "
     << stopp::detail::fmt_g(g.h.back(), 4) << ")</text>\n";
  os << "<text x=\"" << f(x0 + size) << "\" y=\"" << f(y0 + size + 30) << "\" text-anchor=\"end\" font-size=\"10\">"
     << "range [" << stopp::detail::fmt_g(lo, 4) << ", " << stopp::detail::fmt_g(hi, 4)
     << "]</text>\n</g>\n";
}

}  // namespace detail

/// Three panels: estimated, theoretical and their difference.
inline std::string surface_plot(const GridSpec& g, const Eigen::MatrixXd& estimated, const Eigen::MatrixXd& theo) {
  const double size = 240, pad = 50;
  std::ostringstream os;
  os << detail::header(3 * size + 4 * pad, size + 2 * pad);
  detail::heat_panel(os, pad, pad, size, g, estimated, false, "estimated");
  detail::heat_panel(os, 2 * pad + size, pad, size, g, theo, false, "theoretical");
  detail::heat_panel(os, 3 * pad + 2 * size, pad, size, g, estimated - theo, true, "difference");
  os << "</svg>\n";
  return os.str();
}

inline std::string surface_plot(const KSurface& k) { return surface_plot(k.grid, k.values, k.theo); }

/// Spatial map of a pattern (and its network), with `highlight` points drawn
/// larger and in red. An empty pattern yields a single placeholder panel.
inline std::string pattern_plot(const PointPattern& p, std::span<const std::size_t> highlight = {},
                                const std::string& title = "") {
  const double size = 480, pad = 40;
  std::ostringstream os;
  os << detail::header(size + 2 * pad, size + 2 * pad);
  if (!title.empty())
    os << "<text x=\"" << detail::f(pad + size / 2) << "\" y=\"" << detail::f(pad - 12)
       << "\" text-anchor=\"middle\" font-size=\"14\">" << detail::escape(title) << "</text>\n";
  if (p.empty() && !p.is_network()) {
    os << "<rect x=\"" << detail::f(pad) << "\" y=\"" << detail::f(pad) << "\" width=\"" << detail::f(size)
       << "\" height=\"" << detail::f(size) << "\" fill=\"none\" stroke=\"black\"/>\n"
       << "<text x=\"" << detail::f(pad + size / 2) << "\" y=\"" << detail::f(pad + size / 2)
       << "\" text-anchor=\"middle\" font-size=\"14\">empty pattern</text>\n</svg>\n";
    return os.str();
  }
  double xlo, xhi, ylo, yhi;
  if (p.is_network()) {
    xlo = p.network()->bbox_min().x, xhi = p.network()->bbox_max().x;
    ylo = p.network()->bbox_min().y, yhi = p.network()->bbox_max().y;
  } else {
    xlo = p.window()->x().lo, xhi = p.window()->x().hi;
    ylo = p.window()->y().lo, yhi = p.window()->y().hi;
  }
  const double span = std::max({xhi - xlo, yhi - ylo, 1e-300});
  auto X = [&](double x) { return pad + (x - xlo) / span * size; };
  auto Y = [&](double y) { return pad + size - (y - ylo) / span * size; };
  if (p.is_network()) {
    for (const auto& s : p.network()->segments()) {
      const Point2 &a = p.network()->vertices()[s.from], &b = p.network()->vertices()[s.to];
      os << "<line x1=\"" << detail::f(X(a.x)) << "\" y1=\"" << detail::f(Y(a.y)) << "\" x2=\"" << detail::f(X(b.x))
         << "\" y2=\"" << detail::f(Y(b.y)) << "\" stroke=\"#999999\" stroke-width=\"1\"/>\n";
    }
  } else {
    os << "<rect x=\"" << detail::f(X(xlo)) << "\" y=\"" << detail::f(Y(yhi)) << "\" width=\""
       << detail::f(X(xhi) - X(xlo)) << "\" height=\"" << detail::f(Y(ylo) - Y(yhi))
       << "\" fill=\"none\" stroke=\"black\"/>\n";
  }
  std::set<std::size_t> hl(highlight.begin(), highlight.end());
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (hl.count(i)) continue;
    os << "<circle cx=\"" << detail::f(X(p[i].x)) << "\" cy=\"" << detail::f(Y(p[i].y))
       << "\" r=\"2.5\" fill=\"#333333\"/>\n";
  }
  for (std::size_t i : hl) {
    if (i >= p.size()) continue;
    os << "<circle class=\"highlight\" cx=\"" << detail::f(X(p[i].x)) << "\" cy=\"" << detail::f(Y(p[i].y))
       << "\" r=\"5\" fill=\"#d62728\" stroke=\"black\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

inline void write(const std::string& path, const std::string& svg) {
  auto out = io::detail::open_out(path);
  out << svg;
  if (!out) throw Error(Errc::IoError, "failed writing '" + path + "'");
}

}  // namespace stopp::svg
