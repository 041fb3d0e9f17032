#pragma once

// Small SVG line plots: sweep curves (DSC on the left axis, detection recall
// on the right) and stacked area-waveform panels.

#include <algorithm>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

namespace glottisgate::svg {

namespace detail {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string escape(const std::string& s) {
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

inline std::string polyline(std::span<const double> xs, std::span<const double> ys,
                            const std::string& color) {
  std::string s = "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < xs.size(); ++i) s += num(xs[i]) + "," + num(ys[i]) + " ";
  s += "\"/>\n";
  return s;
}

}  // namespace detail

/// Sweep plot over categorical x positions (labels), left axis in [0,1] for
/// DSC, right axis in [0,1] for recall.
inline std::string sweep_plot(const std::string& title, const std::string& x_title,
                              const std::vector<std::string>& labels,
                              std::span<const double> dsc, std::span<const double> recall) {
  using detail::num;
  const double W = 640, H = 360, L = 60, R = 60, T = 40, B = 50;
  const double pw = W - L - R, ph = H - T - B;
  const std::size_t n = labels.size();
  auto px = [&](std::size_t i) { return L + (n > 1 ? pw * static_cast<double>(i) / (n - 1) : pw / 2); };
  auto py = [&](double v) { return T + ph * (1.0 - std::clamp(v, 0.0, 1.0)); };

  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(W) + "\" height=\"" +
                  num(H) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + num(W / 2) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">" +
       detail::escape(title) + "</text>\n";
  s += "<rect x=\"" + num(L) + "\" y=\"" + num(T) + "\" width=\"" + num(pw) + "\" height=\"" +
       num(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double v = k / 4.0;
    s += "<text x=\"" + num(L - 6) + "\" y=\"" + num(py(v) + 4) + "\" text-anchor=\"end\" fill=\"#1f77b4\">" +
         num(v) + "</text>\n";
    s += "<text x=\"" + num(L + pw + 6) + "\" y=\"" + num(py(v) + 4) + "\" fill=\"#d62728\">" +
         num(v) + "</text>\n";
  }
  for (std::size_t i = 0; i < n; ++i) {
    s += "<text x=\"" + num(px(i)) + "\" y=\"" + num(T + ph + 16) + "\" text-anchor=\"middle\">" +
         detail::escape(labels[i]) + "</text>\n";
  }
  s += "<text x=\"" + num(L + pw / 2) + "\" y=\"" + num(H - 10) + "\" text-anchor=\"middle\">" +
       detail::escape(x_title) + "</text>\n";
  s += "<text x=\"14\" y=\"" + num(T + ph / 2) + "\" fill=\"#1f77b4\" transform=\"rotate(-90 14 " +
       num(T + ph / 2) + ")\" text-anchor=\"middle\">DSC</text>\n";
  s += "<text x=\"" + num(W - 14) + "\" y=\"" + num(T + ph / 2) +
       "\" fill=\"#d62728\" transform=\"rotate(90 " + num(W - 14) + " " + num(T + ph / 2) +
       ")\" text-anchor=\"middle\">Det.Recall</text>\n";
  std::vector<double> xs(n), yd(n), yr(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = px(i);
    yd[i] = py(dsc[i]);
    yr[i] = py(recall[i]);
  }
  s += detail::polyline(xs, yd, "#1f77b4");
  s += detail::polyline(xs, yr, "#d62728");
  s += "</svg>\n";
  return s;
}

struct WaveformPanel {
  std::string title;
  std::vector<double> areas;
  double fps = 4000.0;
};

/// One panel per recording: area (px^2) against time (ms).
inline std::string waveform_plot(std::span<const WaveformPanel> panels) {
  using detail::num;
  const double W = 720, PH = 160, L = 70, R = 20, T = 30, B = 30;
  const double pw = W - L - R;
  const double H = static_cast<double>(panels.size()) * (PH + T + B);
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(W) + "\" height=\"" +
                  num(H) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t p = 0; p < panels.size(); ++p) {
    const auto& panel = panels[p];
    const double top = static_cast<double>(p) * (PH + T + B) + T;
    const std::size_t n = panel.areas.size();
    const double max_a = n ? std::max(1.0, *std::ranges::max_element(panel.areas)) : 1.0;
    const double dur_ms = n ? 1000.0 * static_cast<double>(n) / panel.fps : 1.0;
    s += "<text x=\"" + num(L) + "\" y=\"" + num(top - 8) + "\">" + detail::escape(panel.title) +
         "</text>\n";
    s += "<rect x=\"" + num(L) + "\" y=\"" + num(top) + "\" width=\"" + num(pw) + "\" height=\"" +
         num(PH) + "\" fill=\"none\" stroke=\"black\"/>\n";
    s += "<text x=\"" + num(L - 6) + "\" y=\"" + num(top + 10) + "\" text-anchor=\"end\">" +
         num(max_a) + "</text>\n";
    s += "<text x=\"" + num(L - 6) + "\" y=\"" + num(top + PH) + "\" text-anchor=\"end\">0</text>\n";
    s += "<text x=\"" + num(L + pw) + "\" y=\"" + num(top + PH + 16) + "\" text-anchor=\"end\">" +
         num(dur_ms) + " ms</text>\n";
    std::vector<double> xs(n), ys(n);
    for (std::size_t i = 0; i < n; ++i) {
      xs[i] = L + pw * (n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.5);
      ys[i] = top + PH * (1.0 - panel.areas[i] / max_a);
    }
    s += detail::polyline(xs, ys, "#2ca02c");
  }
  s += "</svg>\n";
  return s;
}

}  // namespace glottisgate::svg
