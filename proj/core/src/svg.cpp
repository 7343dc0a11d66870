#include "rso/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "rso/error.hpp"

namespace rso::svg {
namespace {

constexpr double kWidth = 720;
constexpr double kHeight = 480;
constexpr double kLeft = 120, kRight = 150, kTop = 40, kBottom = 50;

constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                    "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
                                    "#bcbd22", "#17becf", "#393b79", "#637939"};

const char* colour(std::size_t i) { return kPalette[i % std::size(kPalette)]; }

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (const char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

struct Range {
  double lo = 0.0, hi = 1.0;
  void cover(double v) {
    if (!std::isfinite(v)) return;
    if (empty) {
      lo = hi = v;
      empty = false;
    } else {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  void pad() {
    if (empty) {
      lo = 0.0;
      hi = 1.0;
    } else if (hi == lo) {
      lo -= 0.5;
      hi += 0.5;
    } else {
      const double p = 0.05 * (hi - lo);
      lo -= p;
      hi += p;
    }
  }
  bool empty = true;
};

class Canvas {
 public:
  explicit Canvas(const Labels& text) {
    out_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
         << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight
         << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
         << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
         << "<text x=\"" << num(kWidth / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
         << escape(text.title) << "</text>\n"
         << "<text x=\"" << num(kLeft + plot_w() / 2) << "\" y=\"" << num(kHeight - 10)
         << "\" text-anchor=\"middle\">" << escape(text.x) << "</text>\n"
         << "<text x=\"16\" y=\"" << num(kTop + plot_h() / 2)
         << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << num(kTop + plot_h() / 2)
         << ")\">" << escape(text.y) << "</text>\n";
  }

  static double plot_w() { return kWidth - kLeft - kRight; }
  static double plot_h() { return kHeight - kTop - kBottom; }

  void axes(const Range& x, const Range& y, bool y_ticks = true) {
    out_ << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\"" << num(plot_w())
         << "\" height=\"" << num(plot_h()) << "\" fill=\"none\" stroke=\"#333\"/>\n";
    for (int i = 0; i <= 4; ++i) {
      const double xv = x.lo + (x.hi - x.lo) * i / 4.0;
      const double px = kLeft + plot_w() * i / 4.0;
      out_ << "<text x=\"" << num(px) << "\" y=\"" << num(kTop + plot_h() + 16)
           << "\" text-anchor=\"middle\">" << tick(xv) << "</text>\n";
      if (!y_ticks) continue;
      const double yv = y.lo + (y.hi - y.lo) * i / 4.0;
      const double py = kTop + plot_h() - plot_h() * i / 4.0;
      out_ << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(py + 4)
           << "\" text-anchor=\"end\">" << tick(yv) << "</text>\n";
    }
  }

  void legend(std::size_t index, const std::string& name, const char* fill) {
    const double y = kTop + 10 + 18 * static_cast<double>(index);
    out_ << "<rect x=\"" << num(kWidth - kRight + 12) << "\" y=\"" << num(y - 9)
         << "\" width=\"10\" height=\"10\" fill=\"" << fill << "\"/>\n"
         << "<text x=\"" << num(kWidth - kRight + 28) << "\" y=\"" << num(y) << "\">"
         << escape(name) << "</text>\n";
  }

  std::ostringstream& raw() { return out_; }

  std::string finish() {
    out_ << "</svg>\n";
    return out_.str();
  }

 private:
  std::ostringstream out_;
};

double map_x(const Range& r, double v) {
  return kLeft + (v - r.lo) / (r.hi - r.lo) * Canvas::plot_w();
}
double map_y(const Range& r, double v) {
  return kTop + Canvas::plot_h() - (v - r.lo) / (r.hi - r.lo) * Canvas::plot_h();
}

}  // namespace

std::string scatter(const Matrix& xy, std::span<const std::size_t> labels, const Labels& text,
                    const std::string& legend_prefix) {
  if (xy.cols() != 2 || labels.size() != xy.rows()) {
    throw ArgumentError("scatter: need n x 2 points and one label per point");
  }
  Range rx, ry;
  for (std::size_t i = 0; i < xy.rows(); ++i) {
    rx.cover(xy(i, 0));
    ry.cover(xy(i, 1));
  }
  rx.pad();
  ry.pad();
  Canvas c(text);
  c.axes(rx, ry);
  std::size_t max_label = 0;
  for (const auto l : labels) max_label = std::max(max_label, l);
  for (std::size_t i = 0; i < xy.rows(); ++i) {
    c.raw() << "<circle cx=\"" << num(map_x(rx, xy(i, 0))) << "\" cy=\""
            << num(map_y(ry, xy(i, 1))) << "\" r=\"2\" fill=\"" << colour(labels[i])
            << "\" fill-opacity=\"0.7\"/>\n";
  }
  if (!labels.empty() && !legend_prefix.empty()) {
    for (std::size_t l = 0; l <= max_label; ++l) {
      c.legend(l, legend_prefix + std::to_string(l), colour(l));
    }
  }
  return c.finish();
}

std::string lines(std::span<const double> x, std::span<const Series> series, const Labels& text,
                  std::optional<double> marker_x) {
  Range rx, ry;
  for (const double v : x) rx.cover(v);
  for (const auto& s : series) {
    if (s.y.size() != x.size()) throw ArgumentError("lines: series length differs from x");
    for (const double v : s.y) ry.cover(v);
  }
  rx.pad();
  ry.pad();
  Canvas c(text);
  c.axes(rx, ry);
  for (std::size_t k = 0; k < series.size(); ++k) {
    c.raw() << "<polyline fill=\"none\" stroke=\"" << colour(k) << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!std::isfinite(series[k].y[i])) continue;
      c.raw() << num(map_x(rx, x[i])) << ',' << num(map_y(ry, series[k].y[i])) << ' ';
    }
    c.raw() << "\"/>\n";
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!std::isfinite(series[k].y[i])) continue;
      c.raw() << "<circle cx=\"" << num(map_x(rx, x[i])) << "\" cy=\""
              << num(map_y(ry, series[k].y[i])) << "\" r=\"3\" fill=\"" << colour(k) << "\"/>\n";
    }
    c.legend(k, series[k].name, colour(k));
  }
  if (marker_x) {
    const double px = map_x(rx, *marker_x);
    c.raw() << "<line x1=\"" << num(px) << "\" y1=\"" << num(kTop) << "\" x2=\"" << num(px)
            << "\" y2=\"" << num(kTop + Canvas::plot_h())
            << "\" stroke=\"#555\" stroke-dasharray=\"4 4\"/>\n";
  }
  return c.finish();
}

std::string bars(std::span<const std::string> names, std::span<const double> values,
                 const Labels& text) {
  Matrix parts(values.size(), 1);
  for (std::size_t i = 0; i < values.size(); ++i) parts(i, 0) = values[i];
  const std::string none[] = {""};
  return stacked_bars(names, parts, std::span<const std::string>(none, 0), text);
}

std::string stacked_bars(std::span<const std::string> names, const Matrix& parts,
                         std::span<const std::string> segment_names, const Labels& text) {
  if (names.size() != parts.rows()) throw ArgumentError("bars: one name per row required");
  Range rx;
  rx.cover(0.0);
  for (std::size_t i = 0; i < parts.rows(); ++i) {
    double total = 0.0;
    for (const double v : parts.row(i)) total += std::max(0.0, v);
    rx.cover(total);
  }
  if (rx.hi == rx.lo) rx.hi = rx.lo + 1.0;
  rx.hi *= 1.05;
  Canvas c(text);
  c.axes(rx, Range{}, false);
  const double slot = Canvas::plot_h() / static_cast<double>(std::max<std::size_t>(1, names.size()));
  for (std::size_t i = 0; i < parts.rows(); ++i) {
    const double y = kTop + slot * static_cast<double>(i) + slot * 0.15;
    c.raw() << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(y + slot * 0.45)
            << "\" text-anchor=\"end\" font-size=\"10\">" << escape(names[i]) << "</text>\n";
    double acc = 0.0;
    for (std::size_t s = 0; s < parts.cols(); ++s) {
      const double v = std::max(0.0, parts(i, s));
      c.raw() << "<rect x=\"" << num(map_x(rx, acc)) << "\" y=\"" << num(y) << "\" width=\""
              << num(map_x(rx, acc + v) - map_x(rx, acc)) << "\" height=\"" << num(slot * 0.7)
              << "\" fill=\"" << colour(s) << "\"/>\n";
      acc += v;
    }
  }
  for (std::size_t s = 0; s < segment_names.size(); ++s) {
    c.legend(s, segment_names[s], colour(s));
  }
  return c.finish();
}

}  // namespace rso::svg
