#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iterator>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "shapdec/core.hpp"
#include "shapdec/errors.hpp"

namespace shapdec::viz {

namespace detail {

inline std::string num(double v, const char* format = "%.2f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  std::string s = buf;
  if (s == "-0.00" || s == "-0") s = s.substr(1);
  return s;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw RenderError(std::string("non-finite ") + what);
}

/// Round tick positions covering [lo, hi], spaced 1, 2 or 5 times a power of ten.
inline std::vector<double> nice_ticks(double lo, double hi, int target = 6) {
  if (!(hi > lo)) return {lo};
  const double raw = (hi - lo) / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double f : {1.0, 2.0, 5.0, 10.0})
    if (raw <= f * mag) {
      step = f * mag;
      break;
    }
  std::vector<double> out;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * step; t += step)
    out.push_back(std::fabs(t) < 1e-12 * step ? 0.0 : t);
  return out;
}

inline std::string svg_open(int width, int height) {
  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << width << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\">\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
  return os.str();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Force plot
// ---------------------------------------------------------------------------

inline constexpr const char* kPositiveColor = "#e0314b";
inline constexpr const char* kNegativeColor = "#1e88e5";

/// Secondary tick axis drawn above the bar; `forward` maps bar values to the
/// secondary scale and `inverse` maps back. Both must be increasing.
struct SecondaryAxis {
  std::string label;
  std::function<double(double)> forward;
  std::function<double(double)> inverse;
  std::vector<double> ticks;  // in secondary units; empty = automatic
};

/// Log-odds bar with a probability axis on top.
inline SecondaryAxis probability_axis() {
  SecondaryAxis a;
  a.label = "probability";
  a.forward = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
  a.inverse = [](double p) { return std::log(p / (1.0 - p)); };
  a.ticks = {0.001, 0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99, 0.999};
  return a;
}

struct ForceFeature {
  std::string name;
  std::string shown_value;
  double phi_int = 0.0;
  double phi_dep = 0.0;
  double phi() const { return phi_int + phi_dep; }
};

struct ForcePlotSpec {
  std::string title;
  std::string axis_label = "model output";
  double base = 0.0;
  std::vector<ForceFeature> features;
  std::optional<SecondaryAxis> secondary;
  int width = 960;
  int height = 300;
};

/// Builds a spec from a decomposition; `shown` are the feature values of
/// the explained sample. With `classic`, the dependent parts are folded
/// into solid segments (phi_int = phi, phi_dep = 0).
inline ForcePlotSpec force_spec(const Decomposition& d, const Sample& shown, bool classic = false) {
  ForcePlotSpec spec;
  spec.base = d.base;
  for (Eigen::Index i = 0; i < d.phi.size(); ++i) {
    ForceFeature f;
    f.name = static_cast<std::size_t>(i) < d.names.size() ? d.names[static_cast<std::size_t>(i)] : "x" + std::to_string(i);
    f.shown_value = i < shown.size() ? detail::num(shown[i], "%.4g") : "";
    f.phi_int = classic ? d.phi[i] : d.phi_int[i];
    f.phi_dep = classic ? 0.0 : d.phi_dep[i];
    spec.features.push_back(std::move(f));
  }
  return spec;
}

/// Order in which features are stacked: positive total contributions by
/// |phi| descending, then negative ones by |phi| descending. Ties keep
/// feature order.
inline std::vector<std::size_t> force_order(const std::vector<ForceFeature>& features) {
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < features.size(); ++i) (features[i].phi() >= 0.0 ? pos : neg).push_back(i);
  auto by_size = [&](std::size_t a, std::size_t b) {
    return std::fabs(features[a].phi()) > std::fabs(features[b].phi());
  };
  std::stable_sort(pos.begin(), pos.end(), by_size);
  std::stable_sort(neg.begin(), neg.end(), by_size);
  pos.insert(pos.end(), neg.begin(), neg.end());
  return pos;
}

/// SVG force plot. The bar starts at the base value; each feature adds a
/// solid segment for its interventional part followed by a hatched segment
/// for its dependent part, so the arrow tip ends at base + Σ phi. Colour
/// follows the sign of each segment.
inline std::string render_force_plot(const ForcePlotSpec& spec) {
  if (spec.features.empty()) throw RenderError("force plot needs at least one feature");
  detail::require_finite(spec.base, "base value");
  for (const auto& f : spec.features) {
    detail::require_finite(f.phi_int, "interventional part");
    detail::require_finite(f.phi_dep, "dependent part");
  }

  const auto order = force_order(spec.features);
  struct Segment {
    std::size_t feature;
    bool dependent;
    double start, end;
  };
  std::vector<Segment> segments;
  double cur = spec.base, lo = spec.base, hi = spec.base;
  for (auto i : order) {
    const auto& f = spec.features[i];
    for (int part = 0; part < 2; ++part) {
      const double extent = part == 0 ? f.phi_int : f.phi_dep;
      if (extent == 0.0) continue;
      segments.push_back({i, part == 1, cur, cur + extent});
      cur += extent;
      lo = std::min(lo, cur);
      hi = std::max(hi, cur);
    }
  }
  const double tip = cur;
  double span = hi - lo;
  if (span <= 0.0) span = std::max(1.0, std::fabs(hi));
  lo -= 0.08 * span;
  hi += 0.08 * span;

  const double left = 40.0, right = spec.width - 40.0;
  const double bar_y = spec.secondary ? 120.0 : 90.0, bar_h = 34.0;
  auto px = [&](double v) { return left + (v - lo) / (hi - lo) * (right - left); };

  bool hatch_pos = false, hatch_neg = false;
  for (const auto& s : segments)
    if (s.dependent) (s.end >= s.start ? hatch_pos : hatch_neg) = true;

  std::ostringstream os;
  os << detail::svg_open(spec.width, spec.height);
  if (hatch_pos || hatch_neg) {
    os << "<defs>\n";
    for (int sign = 0; sign < 2; ++sign) {
      if ((sign == 0 && !hatch_pos) || (sign == 1 && !hatch_neg)) continue;
      const char* color = sign == 0 ? kPositiveColor : kNegativeColor;
      os << "<pattern id=\"hatch-" << (sign == 0 ? "pos" : "neg")
         << "\" patternUnits=\"userSpaceOnUse\" width=\"8\" height=\"8\" patternTransform=\"rotate(45)\">"
         << "<rect width=\"8\" height=\"8\" fill=\"" << color << "\" fill-opacity=\"0.25\"/>"
         << "<line x1=\"0\" y1=\"0\" x2=\"0\" y2=\"8\" stroke=\"" << color << "\" stroke-width=\"4\"/></pattern>\n";
    }
    os << "</defs>\n";
  }
  if (!spec.title.empty())
    os << "<text x=\"" << spec.width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"16\">"
       << detail::escape(spec.title) << "</text>\n";

  // Primary axis below the bar.
  const double axis_y = bar_y + bar_h + 12.0;
  os << "<g id=\"axis\" font-size=\"11\">\n";
  os << "<line x1=\"" << detail::num(left) << "\" y1=\"" << detail::num(axis_y) << "\" x2=\"" << detail::num(right)
     << "\" y2=\"" << detail::num(axis_y) << "\" stroke=\"#555\"/>\n";
  for (double t : detail::nice_ticks(lo, hi)) {
    os << "<line x1=\"" << detail::num(px(t)) << "\" y1=\"" << detail::num(axis_y) << "\" x2=\"" << detail::num(px(t))
       << "\" y2=\"" << detail::num(axis_y + 5) << "\" stroke=\"#555\"/>";
    os << "<text x=\"" << detail::num(px(t)) << "\" y=\"" << detail::num(axis_y + 17)
       << "\" text-anchor=\"middle\">" << detail::num(t, "%.4g") << "</text>\n";
  }
  os << "<text x=\"" << detail::num(right) << "\" y=\"" << detail::num(axis_y + 32) << "\" text-anchor=\"end\">"
     << detail::escape(spec.axis_label) << "</text>\n</g>\n";

  if (spec.secondary) {
    const auto& ax = *spec.secondary;
    const double top_y = bar_y - 38.0;
    const double a = ax.forward(lo), b = ax.forward(hi);
    std::vector<double> ticks = ax.ticks.empty() ? detail::nice_ticks(a, b) : ax.ticks;
    os << "<g id=\"secondary-axis\" font-size=\"11\">\n";
    os << "<line x1=\"" << detail::num(left) << "\" y1=\"" << detail::num(top_y) << "\" x2=\"" << detail::num(right)
       << "\" y2=\"" << detail::num(top_y) << "\" stroke=\"#555\"/>\n";
    for (double t : ticks) {
      if (t < a || t > b) continue;
      const double v = ax.inverse(t);
      if (!std::isfinite(v)) continue;
      os << "<line x1=\"" << detail::num(px(v)) << "\" y1=\"" << detail::num(top_y - 5) << "\" x2=\""
         << detail::num(px(v)) << "\" y2=\"" << detail::num(top_y) << "\" stroke=\"#555\"/>";
      os << "<text x=\"" << detail::num(px(v)) << "\" y=\"" << detail::num(top_y - 9)
         << "\" text-anchor=\"middle\">" << detail::num(t, "%.4g") << "</text>\n";
    }
    os << "<text x=\"" << detail::num(left) << "\" y=\"" << detail::num(top_y + 14) << "\">"
       << detail::escape(ax.label) << "</text>\n</g>\n";
  }

  os << "<g id=\"segments\">\n";
  for (const auto& s : segments) {
    const bool positive = s.end >= s.start;
    const double x0 = px(std::min(s.start, s.end)), x1 = px(std::max(s.start, s.end));
    const std::string fill =
        s.dependent ? std::string("url(#hatch-") + (positive ? "pos" : "neg") + ")"
                    : std::string(positive ? kPositiveColor : kNegativeColor);
    os << "<rect class=\"segment\" data-feature=\"" << detail::escape(spec.features[s.feature].name)
       << "\" data-part=\"" << (s.dependent ? "dep" : "int") << "\" data-start=\"" << detail::num(s.start, "%.10g")
       << "\" data-end=\"" << detail::num(s.end, "%.10g") << "\" x=\"" << detail::num(x0) << "\" y=\""
       << detail::num(bar_y) << "\" width=\"" << detail::num(x1 - x0) << "\" height=\"" << detail::num(bar_h)
       << "\" fill=\"" << fill << "\" stroke=\"white\" stroke-width=\"0.5\"/>\n";
  }
  os << "</g>\n";

  // Labels under the bar, alternating rows to limit overlap.
  os << "<g id=\"labels\" font-size=\"11\">\n";
  double label_cur = spec.base;
  int row = 0;
  for (auto i : order) {
    const auto& f = spec.features[i];
    const double start = label_cur;
    label_cur += f.phi();
    if (f.phi_int == 0.0 && f.phi_dep == 0.0) continue;
    const double mid = px(0.5 * (start + label_cur));
    const double y = axis_y + 50.0 + 14.0 * (row++ % 4);
    std::string text = f.name;
    if (!f.shown_value.empty()) text += " = " + f.shown_value;
    os << "<text class=\"label\" x=\"" << detail::num(mid) << "\" y=\"" << detail::num(y)
       << "\" text-anchor=\"middle\" fill=\"" << (f.phi() >= 0.0 ? kPositiveColor : kNegativeColor) << "\">"
       << detail::escape(text) << "</text>\n";
  }
  os << "</g>\n";

  os << "<line id=\"base\" data-value=\"" << detail::num(spec.base, "%.10g") << "\" data-x=\""
     << detail::num(px(spec.base), "%.4f") << "\" x1=\"" << detail::num(px(spec.base)) << "\" y1=\""
     << detail::num(bar_y - 6) << "\" x2=\"" << detail::num(px(spec.base)) << "\" y2=\""
     << detail::num(bar_y + bar_h + 6) << "\" stroke=\"#333\" stroke-dasharray=\"3,2\"/>\n";
  os << "<text x=\"" << detail::num(px(spec.base)) << "\" y=\"" << detail::num(bar_y - 10)
     << "\" text-anchor=\"middle\" font-size=\"11\">base " << detail::num(spec.base, "%.4g") << "</text>\n";

  const double tx = px(tip);
  os << "<g id=\"tip\" data-value=\"" << detail::num(tip, "%.10g") << "\" data-x=\"" << detail::num(tx, "%.4f")
     << "\">";
  os << "<polygon points=\"" << detail::num(tx) << ',' << detail::num(bar_y - 4) << ' ' << detail::num(tx - 5) << ','
     << detail::num(bar_y - 14) << ' ' << detail::num(tx + 5) << ',' << detail::num(bar_y - 14)
     << "\" fill=\"#333\"/>";
  os << "<text x=\"" << detail::num(tx) << "\" y=\"" << detail::num(bar_y - 18)
     << "\" text-anchor=\"middle\" font-size=\"13\" font-weight=\"bold\">" << detail::num(tip, "%.4g")
     << "</text></g>\n";
  os << "</svg>\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Line chart
// ---------------------------------------------------------------------------

struct LineSeries {
  std::string label;
  std::vector<double> y;
  std::vector<double> std_band;                // optional, same length as y
  std::vector<std::vector<double>> overlays;   // optional see-through traces
};

struct LineChartSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<double> x;
  std::vector<LineSeries> series;
  int width = 720;
  int height = 440;
};

inline constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
inline constexpr const char* kDashes[] = {"", "8,4", "2,3", "10,3,2,3", "1,5", "14,4"};

inline std::string render_line_chart(const LineChartSpec& spec) {
  if (spec.series.empty()) throw RenderError("line chart needs at least one series");
  if (spec.x.empty()) throw RenderError("line chart needs a non-empty x grid");
  for (double v : spec.x) detail::require_finite(v, "x value");
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  auto widen = [&](double v) {
    detail::require_finite(v, "y value");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  };
  for (const auto& s : spec.series) {
    if (s.y.size() != spec.x.size()) throw RenderError("series '" + s.label + "' does not match the x grid");
    if (!s.std_band.empty() && s.std_band.size() != s.y.size())
      throw RenderError("std band of '" + s.label + "' does not match the x grid");
    for (std::size_t k = 0; k < s.y.size(); ++k) {
      widen(s.y[k]);
      if (!s.std_band.empty()) {
        widen(s.y[k] - s.std_band[k]);
        widen(s.y[k] + s.std_band[k]);
      }
    }
    for (const auto& o : s.overlays) {
      if (o.size() != spec.x.size()) throw RenderError("overlay of '" + s.label + "' does not match the x grid");
      for (double v : o) widen(v);
    }
  }
  if (hi - lo < 1e-12) {
    lo -= 1.0;
    hi += 1.0;
  } else {
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
  double xlo = *std::min_element(spec.x.begin(), spec.x.end());
  double xhi = *std::max_element(spec.x.begin(), spec.x.end());
  if (xhi - xlo < 1e-12) {
    xlo -= 1.0;
    xhi += 1.0;
  }

  const double left = 70.0, right = spec.width - 20.0, top = 40.0, bottom = spec.height - 60.0;
  auto px = [&](double v) { return left + (v - xlo) / (xhi - xlo) * (right - left); };
  auto py = [&](double v) { return bottom - (v - lo) / (hi - lo) * (bottom - top); };
  auto polyline = [&](const std::vector<double>& y) {
    std::string pts;
    for (std::size_t k = 0; k < y.size(); ++k) {
      if (k) pts += ' ';
      pts += detail::num(px(spec.x[k])) + ',' + detail::num(py(y[k]));
    }
    return pts;
  };

  std::ostringstream os;
  os << detail::svg_open(spec.width, spec.height);
  if (!spec.title.empty())
    os << "<text x=\"" << spec.width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
       << detail::escape(spec.title) << "</text>\n";

  os << "<g id=\"axes\" font-size=\"11\">\n";
  os << "<rect x=\"" << detail::num(left) << "\" y=\"" << detail::num(top) << "\" width=\"" << detail::num(right - left)
     << "\" height=\"" << detail::num(bottom - top) << "\" fill=\"none\" stroke=\"#555\"/>\n";
  for (double t : detail::nice_ticks(lo, hi)) {
    os << "<line x1=\"" << detail::num(left) << "\" y1=\"" << detail::num(py(t)) << "\" x2=\"" << detail::num(right)
       << "\" y2=\"" << detail::num(py(t)) << "\" stroke=\"#ddd\"/>";
    os << "<text x=\"" << detail::num(left - 6) << "\" y=\"" << detail::num(py(t) + 4) << "\" text-anchor=\"end\">"
       << detail::num(t, "%.4g") << "</text>\n";
  }
  for (double t : detail::nice_ticks(xlo, xhi)) {
    os << "<line x1=\"" << detail::num(px(t)) << "\" y1=\"" << detail::num(bottom) << "\" x2=\"" << detail::num(px(t))
       << "\" y2=\"" << detail::num(bottom + 5) << "\" stroke=\"#555\"/>";
    os << "<text x=\"" << detail::num(px(t)) << "\" y=\"" << detail::num(bottom + 18)
       << "\" text-anchor=\"middle\">" << detail::num(t, "%.4g") << "</text>\n";
  }
  os << "<text x=\"" << detail::num(0.5 * (left + right)) << "\" y=\"" << detail::num(bottom + 38)
     << "\" text-anchor=\"middle\">" << detail::escape(spec.x_label) << "</text>\n";
  os << "<text transform=\"translate(16," << detail::num(0.5 * (top + bottom)) << ") rotate(-90)\" text-anchor=\"middle\">"
     << detail::escape(spec.y_label) << "</text>\n";
  os << "</g>\n";

  const std::size_t palette = std::size(kPalette);
  for (std::size_t s = 0; s < spec.series.size(); ++s) {
    const auto& series = spec.series[s];
    const char* color = kPalette[s % palette];
    if (!series.std_band.empty()) {
      std::string pts;
      for (std::size_t k = 0; k < series.y.size(); ++k)
        pts += detail::num(px(spec.x[k])) + ',' + detail::num(py(series.y[k] + series.std_band[k])) + ' ';
      for (std::size_t k = series.y.size(); k-- > 0;)
        pts += detail::num(px(spec.x[k])) + ',' + detail::num(py(series.y[k] - series.std_band[k])) +
               (k ? " " : "");
      os << "<polygon class=\"band\" data-series=\"" << detail::escape(series.label) << "\" points=\"" << pts
         << "\" fill=\"" << color << "\" fill-opacity=\"0.18\" stroke=\"none\"/>\n";
    }
    for (const auto& o : series.overlays)
      os << "<polyline class=\"overlay\" points=\"" << polyline(o) << "\" fill=\"none\" stroke=\"" << color
         << "\" stroke-opacity=\"0.2\" stroke-width=\"1\"/>\n";
  }
  for (std::size_t s = 0; s < spec.series.size(); ++s) {
    const auto& series = spec.series[s];
    const char* dash = kDashes[s % std::size(kDashes)];
    os << "<polyline class=\"series\" data-series=\"" << detail::escape(series.label) << "\" points=\""
       << polyline(series.y) << "\" fill=\"none\" stroke=\"" << kPalette[s % palette] << "\" stroke-width=\"2\"";
    if (*dash) os << " stroke-dasharray=\"" << dash << "\"";
    os << "/>\n";
  }

  os << "<g id=\"legend\" font-size=\"12\">\n";
  for (std::size_t s = 0; s < spec.series.size(); ++s) {
    const double y = top + 16.0 + 18.0 * static_cast<double>(s);
    const char* dash = kDashes[s % std::size(kDashes)];
    os << "<line class=\"legend-entry\" x1=\"" << detail::num(left + 10) << "\" y1=\"" << detail::num(y) << "\" x2=\""
       << detail::num(left + 40) << "\" y2=\"" << detail::num(y) << "\" stroke=\"" << kPalette[s % palette]
       << "\" stroke-width=\"2\"";
    if (*dash) os << " stroke-dasharray=\"" << dash << "\"";
    os << "/><text x=\"" << detail::num(left + 46) << "\" y=\"" << detail::num(y + 4) << "\">"
       << detail::escape(spec.series[s].label) << "</text>\n";
  }
  os << "</g>\n</svg>\n";
  return os.str();
}

}  // namespace shapdec::viz
