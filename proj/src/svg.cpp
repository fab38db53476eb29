#include "catapult/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "catapult/error.hpp"

namespace catapult::svg {

namespace {

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};

std::string escape(const std::string& s) {
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

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(4) << v;
  return os.str();
}

// "nice" tick positions covering [lo, hi]
std::vector<double> ticks(double lo, double hi, int target = 6) {
  const double span = hi - lo;
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (step >= raw) break;
  }
  std::vector<double> out;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * span; t += step) out.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
  return out;
}

struct Frame {
  double x0, x1, y0, y1;  // data range
  double left, right, top, bottom;  // pixel box
  double px(double x) const { return left + (x - x0) / (x1 - x0) * (right - left); }
  double py(double y) const { return bottom - (y - y0) / (y1 - y0) * (bottom - top); }
};

void header(std::ostringstream& os, int w, int h) {
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 " << w
     << ' ' << h << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

void axes(std::ostringstream& os, const Frame& f, const std::string& title, const std::string& xl, const std::string& yl,
          bool log_y) {
  os << "<rect x=\"" << f.left << "\" y=\"" << f.top << "\" width=\"" << f.right - f.left << "\" height=\""
     << f.bottom - f.top << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double t : ticks(f.x0, f.x1)) {
    const double x = f.px(t);
    os << "<line x1=\"" << x << "\" y1=\"" << f.bottom << "\" x2=\"" << x << "\" y2=\"" << f.bottom + 5
       << "\" stroke=\"black\"/><text x=\"" << x << "\" y=\"" << f.bottom + 18 << "\" text-anchor=\"middle\">" << fmt(t)
       << "</text>\n";
  }
  for (double t : ticks(f.y0, f.y1)) {
    const double y = f.py(t);
    const std::string label = log_y ? "1e" + fmt(t) : fmt(t);
    os << "<line x1=\"" << f.left - 5 << "\" y1=\"" << y << "\" x2=\"" << f.left << "\" y2=\"" << y
       << "\" stroke=\"black\"/><text x=\"" << f.left - 8 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">" << label
       << "</text>\n";
  }
  const double cx = 0.5 * (f.left + f.right);
  os << "<text x=\"" << cx << "\" y=\"" << f.top - 10 << "\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
     << "</text>\n";
  os << "<text x=\"" << cx << "\" y=\"" << f.bottom + 36 << "\" text-anchor=\"middle\">" << escape(xl) << "</text>\n";
  const double cy = 0.5 * (f.top + f.bottom);
  os << "<text x=\"16\" y=\"" << cy << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << cy << ")\">"
     << escape(yl) << "</text>\n";
}

}  // namespace

std::string render(const LinePlot& plot) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  std::size_t points = 0;
  auto yv = [&](double y) { return plot.log_y ? std::log10(y) : y; };
  for (const auto& s : plot.series) {
    if (s.x.size() != s.y.size()) throw Error(ErrorCode::dimension_mismatch, "series '" + s.label + "' x/y length differ");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]) || (plot.log_y && s.y[i] <= 0.0)) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, yv(s.y[i]));
      y1 = std::max(y1, yv(s.y[i]));
      ++points;
    }
  }
  if (points == 0) throw Error(ErrorCode::invalid_argument, "nothing to plot in '" + plot.title + "'");
  if (x1 == x0) x1 = x0 + 1.0;
  if (y1 == y0) y1 = y0 + 1.0;
  const double pad = 0.05 * (y1 - y0);
  Frame f{x0, x1, y0 - pad, y1 + pad, 70.0, plot.width - 20.0, 30.0, plot.height - 50.0};

  std::ostringstream os;
  os << std::setprecision(6);
  header(os, plot.width, plot.height);
  axes(os, f, plot.title, plot.xlabel, plot.ylabel, plot.log_y);
  int k = 0;
  for (const auto& s : plot.series) {
    const std::string color = s.color.empty() ? kPalette[k % 8] : s.color;
    if (s.points) {
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (!std::isfinite(s.y[i]) || (plot.log_y && s.y[i] <= 0.0)) continue;
        os << "<circle cx=\"" << f.px(s.x[i]) << "\" cy=\"" << f.py(yv(s.y[i])) << "\" r=\"2.5\" fill=\"" << color
           << "\"/>\n";
      }
    } else {
      os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\""
         << (s.dashed ? " stroke-dasharray=\"5,3\"" : "") << " points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (!std::isfinite(s.y[i]) || (plot.log_y && s.y[i] <= 0.0)) continue;
        os << f.px(s.x[i]) << ',' << f.py(yv(s.y[i])) << ' ';
      }
      os << "\"/>\n";
    }
    if (!s.label.empty()) {
      const double ly = f.top + 16.0 * (k + 1);
      os << "<line x1=\"" << f.right - 130 << "\" y1=\"" << ly - 4 << "\" x2=\"" << f.right - 110 << "\" y2=\"" << ly - 4
         << "\" stroke=\"" << color << "\" stroke-width=\"2\"/><text x=\"" << f.right - 105 << "\" y=\"" << ly << "\">"
         << escape(s.label) << "</text>\n";
    }
    ++k;
  }
  os << "</svg>\n";
  return os.str();
}

std::string render(const Heatmap& map) {
  const auto& v = map.field.values;
  const auto& g = map.field.grid;
  if (v.size() == 0) throw Error(ErrorCode::invalid_argument, "empty field in '" + map.title + "'");
  double lo = v.minCoeff(), hi = v.maxCoeff();
  if (map.diverging) {
    hi = std::max(std::abs(lo), std::abs(hi));
    lo = -hi;
  }
  if (hi == lo) hi = lo + 1.0;
  const double dx = g.n_re > 1 ? g.d_re() : 1.0, dy = g.n_im > 1 ? g.d_im() : 1.0;
  Frame f{g.re_min - dx / 2, g.re_max + dx / 2, g.im_min - dy / 2, g.im_max + dy / 2,
          60.0, map.width - 60.0, 30.0, map.height - 50.0};

  auto colour = [&](double z) {
    const double u = std::clamp((z - lo) / (hi - lo), 0.0, 1.0);
    int r, gg, b;
    if (map.diverging) {
      // blue - white - red
      const double s = 2.0 * u - 1.0;
      r = s > 0 ? 255 : static_cast<int>(255 * (1 + s));
      b = s < 0 ? 255 : static_cast<int>(255 * (1 - s));
      gg = static_cast<int>(255 * (1 - std::abs(s)));
    } else {
      // white to dark blue
      r = static_cast<int>(255 * (1 - 0.9 * u));
      gg = static_cast<int>(255 * (1 - 0.75 * u));
      b = static_cast<int>(255 * (1 - 0.45 * u));
    }
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, gg, b);
    return std::string(buf);
  };

  std::ostringstream os;
  os << std::setprecision(6);
  header(os, map.width, map.height);
  const double w = std::abs(f.px(g.re_min + dx) - f.px(g.re_min)) + 0.3;
  const double h = std::abs(f.py(g.im_min + dy) - f.py(g.im_min)) + 0.3;
  for (int j = 0; j < v.rows(); ++j) {
    for (int i = 0; i < v.cols(); ++i) {
      os << "<rect x=\"" << f.px(g.re_at(i) - dx / 2) << "\" y=\"" << f.py(g.im_at(j) + dy / 2) << "\" width=\"" << w
         << "\" height=\"" << h << "\" fill=\"" << colour(v(j, i)) << "\"/>\n";
    }
  }
  axes(os, f, map.title, map.xlabel, map.ylabel, false);
  // colour bar
  const double bx = f.right + 15;
  for (int k = 0; k < 50; ++k) {
    const double z = lo + (hi - lo) * (k + 0.5) / 50;
    os << "<rect x=\"" << bx << "\" y=\"" << f.bottom - (k + 1) * (f.bottom - f.top) / 50 << "\" width=\"12\" height=\""
       << (f.bottom - f.top) / 50 + 0.3 << "\" fill=\"" << colour(z) << "\"/>\n";
  }
  os << "<text x=\"" << bx << "\" y=\"" << f.top - 4 << "\" font-size=\"10\">" << fmt(hi) << "</text>\n"
     << "<text x=\"" << bx << "\" y=\"" << f.bottom + 12 << "\" font-size=\"10\">" << fmt(lo) << "</text>\n";
  os << "</svg>\n";
  return os.str();
}

void save(const std::string& path, const std::string& document) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io, "cannot write " + path);
  out << document;
}

}  // namespace catapult::svg
