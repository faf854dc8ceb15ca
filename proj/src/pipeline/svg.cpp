#include "bladeenv/pipeline/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace bladeenv::pipeline::svg {

namespace {

constexpr double kWidth = 640, kHeight = 440;
constexpr double kLeft = 80, kRight = 150, kTop = 40, kBottom = 60;
const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  if (v != 0.0 && (std::abs(v) < 1e-3 || std::abs(v) >= 1e4)) std::snprintf(buf, sizeof(buf), "%.0e", v);
  else std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

std::vector<double> nice_ticks(double lo, double hi) {
  const double span = hi - lo;
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (step >= raw) break;
  }
  std::vector<double> t;
  for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * span; v += step) t.push_back(std::abs(v) < 1e-12 * span ? 0.0 : v);
  return t;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
    if (hi - lo <= 0.0) {
      const double pad = lo == 0.0 ? 1.0 : 0.05 * std::abs(lo);
      lo -= pad;
      hi += pad;
    } else {
      const double pad = 0.04 * (hi - lo);
      lo -= pad;
      hi += pad;
    }
  }
};

std::string header(double w, double h) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(w) + "\" height=\"" + fmt(h) + "\" viewBox=\"0 0 " +
         fmt(w) + " " + fmt(h) + "\" font-family=\"sans-serif\" font-size=\"12\">\n" +
         "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

}  // namespace

std::string render(const Plot& plot) {
  auto keep = [&](double x, double y) { return std::isfinite(x) && std::isfinite(y) && (!plot.log_y || y > 0.0); };
  Range xr, yr;
  for (const auto& s : plot.series)
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i)
      if (keep(s.x[i], s.y[i])) {
        xr.add(s.x[i]);
        yr.add(plot.log_y ? std::log10(s.y[i]) : s.y[i]);
      }
  for (double m : plot.x_marks)
    if (std::isfinite(m)) xr.add(m);
  xr.finish();
  yr.finish();
  if (plot.log_y) {
    yr.lo = std::floor(yr.lo);
    yr.hi = std::ceil(yr.hi);
  }

  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto py = [&](double y) {
    const double v = plot.log_y ? std::log10(y) : y;
    return kTop + ph - (v - yr.lo) / (yr.hi - yr.lo) * ph;
  };

  std::ostringstream os;
  os << header(kWidth, kHeight);
  os << "<text x=\"" << fmt(kLeft + pw / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
     << escape(plot.title) << "</text>\n";
  os << "<rect x=\"" << fmt(kLeft) << "\" y=\"" << fmt(kTop) << "\" width=\"" << fmt(pw) << "\" height=\"" << fmt(ph)
     << "\" fill=\"none\" stroke=\"black\"/>\n";

  for (double t : nice_ticks(xr.lo, xr.hi)) {
    os << "<line x1=\"" << fmt(px(t)) << "\" y1=\"" << fmt(kTop + ph) << "\" x2=\"" << fmt(px(t)) << "\" y2=\""
       << fmt(kTop + ph + 5) << "\" stroke=\"black\"/>";
    os << "<text x=\"" << fmt(px(t)) << "\" y=\"" << fmt(kTop + ph + 18) << "\" text-anchor=\"middle\">"
       << tick_label(t) << "</text>\n";
  }
  if (plot.log_y) {
    for (double e = yr.lo; e <= yr.hi + 1e-9; e += std::max(1.0, std::floor((yr.hi - yr.lo) / 6.0))) {
      const double y = kTop + ph - (e - yr.lo) / (yr.hi - yr.lo) * ph;
      os << "<line x1=\"" << fmt(kLeft - 5) << "\" y1=\"" << fmt(y) << "\" x2=\"" << fmt(kLeft) << "\" y2=\"" << fmt(y)
         << "\" stroke=\"black\"/>";
      os << "<text x=\"" << fmt(kLeft - 8) << "\" y=\"" << fmt(y + 4) << "\" text-anchor=\"end\">1e" << static_cast<int>(e)
         << "</text>\n";
    }
  } else {
    for (double t : nice_ticks(yr.lo, yr.hi)) {
      os << "<line x1=\"" << fmt(kLeft - 5) << "\" y1=\"" << fmt(py(t)) << "\" x2=\"" << fmt(kLeft) << "\" y2=\""
         << fmt(py(t)) << "\" stroke=\"black\"/>";
      os << "<text x=\"" << fmt(kLeft - 8) << "\" y=\"" << fmt(py(t) + 4) << "\" text-anchor=\"end\">" << tick_label(t)
         << "</text>\n";
    }
  }
  os << "<text x=\"" << fmt(kLeft + pw / 2) << "\" y=\"" << fmt(kHeight - 16) << "\" text-anchor=\"middle\">"
     << escape(plot.x_label) << "</text>\n";
  os << "<text transform=\"translate(18 " << fmt(kTop + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
     << escape(plot.y_label) << "</text>\n";

  for (double m : plot.x_marks) {
    if (!std::isfinite(m)) continue;
    os << "<line x1=\"" << fmt(px(m)) << "\" y1=\"" << fmt(kTop) << "\" x2=\"" << fmt(px(m)) << "\" y2=\""
       << fmt(kTop + ph) << "\" stroke=\"gray\" stroke-dasharray=\"5,4\"/>\n";
  }

  for (std::size_t k = 0; k < plot.series.size(); ++k) {
    const auto& s = plot.series[k];
    const char* colour = kPalette[k % std::size(kPalette)];
    const std::size_t n = std::min(s.x.size(), s.y.size());
    if (s.style == Style::kLine) {
      os << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
      bool first = true;
      for (std::size_t i = 0; i < n; ++i) {
        if (!keep(s.x[i], s.y[i])) continue;
        os << (first ? "" : " ") << fmt(px(s.x[i])) << "," << fmt(py(s.y[i]));
        first = false;
      }
      os << "\"/>\n";
    } else {
      os << "<g fill=\"" << colour << "\" fill-opacity=\"0.6\">\n";
      for (std::size_t i = 0; i < n; ++i) {
        if (!keep(s.x[i], s.y[i])) continue;
        os << "<circle cx=\"" << fmt(px(s.x[i])) << "\" cy=\"" << fmt(py(s.y[i])) << "\" r=\"2\"/>\n";
      }
      os << "</g>\n";
    }
    const double ly = kTop + 12 + 18 * static_cast<double>(k);
    const double lx = kLeft + pw + 12;
    if (s.style == Style::kLine) {
      os << "<line x1=\"" << fmt(lx) << "\" y1=\"" << fmt(ly - 4) << "\" x2=\"" << fmt(lx + 18) << "\" y2=\""
         << fmt(ly - 4) << "\" stroke=\"" << colour << "\" stroke-width=\"2\"/>";
    } else {
      os << "<circle cx=\"" << fmt(lx + 9) << "\" cy=\"" << fmt(ly - 4) << "\" r=\"3\" fill=\"" << colour << "\"/>";
    }
    os << "<text x=\"" << fmt(lx + 24) << "\" y=\"" << fmt(ly) << "\">" << escape(s.label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string heatmap(const Eigen::MatrixXd& full, const std::string& title) {
  // Block-average large matrices down to at most kMaxCells per side.
  constexpr Eigen::Index kMaxCells = 80;
  const Eigen::Index block = std::max<Eigen::Index>(1, (full.rows() + kMaxCells - 1) / kMaxCells);
  const Eigen::Index n = (full.rows() + block - 1) / block;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const Eigen::Index r0 = i * block, c0 = j * block;
      const Eigen::Index nr = std::min(block, full.rows() - r0), nc = std::min(block, full.cols() - c0);
      if (nr > 0 && nc > 0) m(i, j) = full.block(r0, c0, nr, nc).mean();
    }
  const double side = 480;
  const double left = 40, top = 40;
  const double w = left + side + 100, h = top + side + 30;
  const double cell = m.rows() > 0 ? side / static_cast<double>(m.rows()) : side;
  const double amax = m.size() ? m.cwiseAbs().maxCoeff() : 0.0;
  auto colour = [&](double v) {
    const double t = amax > 0.0 ? std::clamp(v / amax, -1.0, 1.0) : 0.0;
    // white at zero, red positive, blue negative
    const int r = t < 0 ? static_cast<int>(std::lround(255 * (1 + t))) : 255;
    const int g = static_cast<int>(std::lround(255 * (1 - std::abs(t))));
    const int b = t > 0 ? static_cast<int>(std::lround(255 * (1 - t))) : 255;
    char buf[8];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
    return std::string(buf);
  };
  std::ostringstream os;
  os << header(w, h);
  os << "<text x=\"" << fmt(left + side / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
     << "</text>\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      os << "<rect x=\"" << fmt(left + cell * static_cast<double>(j)) << "\" y=\"" << fmt(top + cell * static_cast<double>(i))
         << "\" width=\"" << fmt(cell + 0.05) << "\" height=\"" << fmt(cell + 0.05) << "\" fill=\"" << colour(m(i, j))
         << "\"/>\n";
  const double bx = left + side + 30;
  for (int k = 0; k <= 20; ++k) {
    const double v = amax * (1.0 - 0.1 * k);
    os << "<rect x=\"" << fmt(bx) << "\" y=\"" << fmt(top + side / 21.0 * k) << "\" width=\"16\" height=\""
       << fmt(side / 21.0 + 0.05) << "\" fill=\"" << colour(v) << "\"/>\n";
  }
  os << "<text x=\"" << fmt(bx + 20) << "\" y=\"" << fmt(top + 10) << "\">" << tick_label(amax) << "</text>\n";
  os << "<text x=\"" << fmt(bx + 20) << "\" y=\"" << fmt(top + side) << "\">" << tick_label(-amax) << "</text>\n";
  os << "</svg>\n";
  return os.str();
}

}  // namespace bladeenv::pipeline::svg
