#ifndef OTCONC_SVG_HPP_
#define OTCONC_SVG_HPP_

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "otconc/harness.hpp"

namespace otconc {

// Minimal log-log SVG plot: one polyline per series plus an optional dashed
// C/sqrt(N) reference curve. CSV remains the canonical artifact.
inline std::string loglog_svg(const std::vector<CurveTable>& series,
                              const std::string& title) {
  const double W = 640, H = 480, L = 70, R = 20, T = 40, B = 50;
  double xmin = kInf, xmax = -kInf, ymin = kInf, ymax = -kInf;
  double ref_C = 0.0;
  for (const auto& s : series) {
    ref_C = std::max(ref_C, s.reference_C);
    for (const auto& r : s.rows) {
      if (!(r.mean > 0.0)) continue;
      xmin = std::min(xmin, static_cast<double>(r.N));
      xmax = std::max(xmax, static_cast<double>(r.N));
      ymin = std::min(ymin, r.mean);
      ymax = std::max(ymax, r.mean);
    }
  }
  if (!(xmin < xmax)) {
    xmin = 1;
    xmax = 10;
  }
  if (!(ymin < ymax)) {
    ymin = 1e-3;
    ymax = 1;
  }
  if (ref_C > 0.0) {
    ymax = std::max(ymax, ref_C / std::sqrt(xmin));
    ymin = std::min(ymin, ref_C / std::sqrt(xmax));
  }
  const double lx0 = std::log10(xmin), lx1 = std::log10(xmax);
  const double ly0 = std::log10(ymin), ly1 = std::log10(ymax);
  auto px = [&](double n) {
    return L + (std::log10(n) - lx0) / (lx1 - lx0) * (W - L - R);
  };
  auto py = [&](double v) {
    return H - B - (std::log10(v) - ly0) / (ly1 - ly0) * (H - T - B);
  };

  static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                  "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
                                  "#bcbd22", "#17becf", "#aec7e8", "#ffbb78"};
  std::ostringstream os;
  os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W
     << "' height='" << H << "'>\n";
  os << "<rect width='100%' height='100%' fill='white'/>\n";
  os << "<text x='" << W / 2 << "' y='24' text-anchor='middle' "
        "font-family='sans-serif' font-size='15'>"
     << title << "</text>\n";
  // Axes.
  os << "<line x1='" << L << "' y1='" << H - B << "' x2='" << W - R
     << "' y2='" << H - B << "' stroke='black'/>\n";
  os << "<line x1='" << L << "' y1='" << T << "' x2='" << L << "' y2='"
     << H - B << "' stroke='black'/>\n";
  // Decade ticks.
  for (int e = static_cast<int>(std::ceil(lx0));
       e <= static_cast<int>(std::floor(lx1)); ++e) {
    const double v = std::pow(10.0, e);
    os << "<line x1='" << px(v) << "' y1='" << H - B << "' x2='" << px(v)
       << "' y2='" << H - B + 5 << "' stroke='black'/>\n";
    os << "<text x='" << px(v) << "' y='" << H - B + 20
       << "' text-anchor='middle' font-family='sans-serif' font-size='11'>1e"
       << e << "</text>\n";
  }
  for (int e = static_cast<int>(std::ceil(ly0));
       e <= static_cast<int>(std::floor(ly1)); ++e) {
    const double v = std::pow(10.0, e);
    os << "<line x1='" << L - 5 << "' y1='" << py(v) << "' x2='" << L
       << "' y2='" << py(v) << "' stroke='black'/>\n";
    os << "<text x='" << L - 8 << "' y='" << py(v) + 4
       << "' text-anchor='end' font-family='sans-serif' font-size='11'>1e"
       << e << "</text>\n";
  }
  // Reference curve C / sqrt(N).
  if (ref_C > 0.0) {
    os << "<polyline fill='none' stroke='black' stroke-dasharray='6,4' "
          "points='";
    for (int i = 0; i <= 64; ++i) {
      const double n = std::pow(10.0, lx0 + (lx1 - lx0) * i / 64.0);
      const double v = ref_C / std::sqrt(n);
      if (v < ymin || v > ymax) continue;
      os << px(n) << ',' << py(v) << ' ';
    }
    os << "'/>\n";
  }
  // Series.
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = palette[s % 12];
    os << "<polyline fill='none' stroke='" << color << "' points='";
    for (const auto& r : series[s].rows)
      if (r.mean > 0.0)
        os << px(static_cast<double>(r.N)) << ',' << py(r.mean) << ' ';
    os << "'/>\n";
    os << "<text x='" << W - R - 4 << "' y='" << T + 14 * (s + 1)
       << "' text-anchor='end' font-family='sans-serif' font-size='11' "
          "fill='"
       << color << "'>" << series[s].dist_name << ' ' << series[s].params
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace otconc

#endif  // OTCONC_SVG_HPP_
