#include "plots.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace gresnet::plots {
namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kMargin = 56.0;
const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!(lo <= hi)) lo = 0.0, hi = 1.0;
    if (lo == hi) {
      const double pad = lo == 0.0 ? 1.0 : std::fabs(lo) * 0.05;
      lo -= pad;
      hi += pad;
    }
  }
  double map(double v, double a, double b) const { return a + (v - lo) / (hi - lo) * (b - a); }
};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

void open_svg(std::ostringstream& out, const std::string& title) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
      << escape(title) << "</text>\n";
}

void axes(std::ostringstream& out, const Range& xr, const Range& yr, const std::string& xl,
          const std::string& yl) {
  const double x0 = kMargin, x1 = kWidth - kMargin / 2, y0 = kHeight - kMargin, y1 = kMargin / 1.5;
  out << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x1 << "\" y2=\"" << y0
      << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0 << "\" y2=\"" << y1
      << "\" stroke=\"black\"/>\n";
  out.precision(4);
  out << "<text x=\"" << x0 << "\" y=\"" << y0 + 16 << "\" text-anchor=\"start\">" << xr.lo << "</text>\n"
      << "<text x=\"" << x1 << "\" y=\"" << y0 + 16 << "\" text-anchor=\"end\">" << xr.hi << "</text>\n"
      << "<text x=\"" << x0 - 4 << "\" y=\"" << y0 << "\" text-anchor=\"end\">" << yr.lo << "</text>\n"
      << "<text x=\"" << x0 - 4 << "\" y=\"" << y1 + 8 << "\" text-anchor=\"end\">" << yr.hi << "</text>\n"
      << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\">"
      << escape(xl) << "</text>\n"
      << "<text x=\"14\" y=\"" << (y0 + y1) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
      << (y0 + y1) / 2 << ")\">" << escape(yl) << "</text>\n";
  out.precision(6);
}

}  // namespace

std::string line_chart(const std::string& title, const std::string& x_label,
                       const std::string& y_label, const std::vector<Series>& series) {
  Range xr, yr;
  for (const auto& s : series) {
    for (double v : s.x) xr.add(v);
    for (double v : s.y) yr.add(v);
  }
  xr.finish();
  yr.finish();
  std::ostringstream out;
  open_svg(out, title);
  axes(out, xr, yr, x_label, y_label);
  const double x0 = kMargin, x1 = kWidth - kMargin / 2, y0 = kHeight - kMargin, y1 = kMargin / 1.5;
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kColors[k % 5];
    if (s.points) {
      for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
        if (!std::isfinite(s.y[i])) continue;
        out << "<circle cx=\"" << xr.map(s.x[i], x0, x1) << "\" cy=\"" << yr.map(s.y[i], y0, y1)
            << "\" r=\"1.5\" fill=\"" << color << "\"/>\n";
      }
    } else {
      out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
        if (!std::isfinite(s.y[i])) continue;
        out << xr.map(s.x[i], x0, x1) << ',' << yr.map(s.y[i], y0, y1) << ' ';
      }
      out << "\"/>\n";
    }
    out << "<text x=\"" << x1 - 4 << "\" y=\"" << y1 + 14 * (k + 1) << "\" text-anchor=\"end\" fill=\""
        << color << "\">" << escape(s.label) << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

std::string disc_chart(const std::string& title, const std::vector<GershgorinDisc>& discs) {
  Range xr, yr;
  for (const auto& d : discs) {
    xr.add(d.lower());
    xr.add(d.upper());
    yr.add(d.radius);
  }
  xr.add(0.0);
  xr.finish();
  const double x0 = kMargin, x1 = kWidth - kMargin / 2, ymid = kHeight / 2;
  const double scale = (x1 - x0) / (xr.hi - xr.lo);
  std::ostringstream out;
  open_svg(out, title);
  out << "<line x1=\"" << x0 << "\" y1=\"" << ymid << "\" x2=\"" << x1 << "\" y2=\"" << ymid
      << "\" stroke=\"black\"/>\n";
  const double zero = xr.map(0.0, x0, x1);
  out << "<line x1=\"" << zero << "\" y1=\"" << kMargin << "\" x2=\"" << zero << "\" y2=\""
      << kHeight - kMargin << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
  for (const auto& d : discs) {
    out << "<circle cx=\"" << xr.map(d.center, x0, x1) << "\" cy=\"" << ymid << "\" r=\""
        << std::max(d.radius * scale, 0.5) << "\" fill=\"#1f77b4\" fill-opacity=\"0.08\" stroke=\"#1f77b4\"/>\n";
  }
  out.precision(4);
  out << "<text x=\"" << x0 << "\" y=\"" << kHeight - kMargin + 16 << "\">" << xr.lo << "</text>\n"
      << "<text x=\"" << x1 << "\" y=\"" << kHeight - kMargin + 16 << "\" text-anchor=\"end\">" << xr.hi
      << "</text>\n"
      << "<text x=\"" << zero << "\" y=\"" << kMargin - 4 << "\" text-anchor=\"middle\">0</text>\n"
      << "</svg>\n";
  return out.str();
}

std::string histogram(const std::string& title, const std::vector<double>& values, std::size_t bins) {
  Range xr;
  for (double v : values) xr.add(v);
  xr.finish();
  bins = std::max<std::size_t>(bins, 1);
  std::vector<std::size_t> counts(bins, 0);
  for (double v : values) {
    if (!std::isfinite(v)) continue;
    auto b = static_cast<std::size_t>((v - xr.lo) / (xr.hi - xr.lo) * static_cast<double>(bins));
    counts[std::min(b, bins - 1)]++;
  }
  Range yr;
  yr.add(0.0);
  for (std::size_t c : counts) yr.add(static_cast<double>(c));
  yr.finish();
  std::ostringstream out;
  open_svg(out, title);
  axes(out, xr, yr, "eigenvalue", "count");
  const double x0 = kMargin, x1 = kWidth - kMargin / 2, y0 = kHeight - kMargin, y1 = kMargin / 1.5;
  const double bw = (x1 - x0) / static_cast<double>(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    const double top = yr.map(static_cast<double>(counts[b]), y0, y1);
    out << "<rect x=\"" << x0 + bw * static_cast<double>(b) << "\" y=\"" << top << "\" width=\""
        << bw * 0.9 << "\" height=\"" << y0 - top << "\" fill=\"#1f77b4\"/>\n";
  }
  out << "</svg>\n";
  return out.str();
}

std::vector<double> clip_by_quartiles(std::vector<double> values, double factor) {
  if (values.size() < 4) return values;
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  auto quantile = [&sorted](double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto i = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i);
    return i + 1 < sorted.size() ? sorted[i] * (1.0 - frac) + sorted[i + 1] * frac : sorted[i];
  };
  const double q1 = quantile(0.25), q3 = quantile(0.75);
  const double iqr = q3 - q1;
  const double lo = q1 - factor * iqr, hi = q3 + factor * iqr;
  std::erase_if(values, [lo, hi](double v) { return v < lo || v > hi; });
  return values;
}

}  // namespace gresnet::plots
