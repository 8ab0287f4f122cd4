#include "cppo/plot.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "cppo/csv.hpp"
#include "cppo/harness.hpp"

namespace cppo {

namespace {

std::string xml_escape(const std::string& s) {
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

const char* kColors[] = {"#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

// Round step for about `n` ticks over `span`.
double tick_step(double span, int n) {
  const double raw = span / n;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (m * mag >= raw) return m * mag;
  }
  return 10.0 * mag;
}

}  // namespace

PlotSeries load_training_series(const std::filesystem::path& csv, const std::string& label, int window,
                                int poly_order) {
  const CsvTable t = read_csv(csv);
  PlotSeries s;
  s.label = label;
  s.episodes = t.numeric("episode");
  s.returns = t.numeric("return");
  if (t.has_column("stage")) {
    const auto stage = t.numeric("stage");
    for (std::size_t i = 1; i < stage.size(); ++i) {
      if (stage[i] != stage[i - 1]) s.stage_switches.push_back(s.episodes[i]);
    }
  }
  const int n = static_cast<int>(s.returns.size());
  if (n > 0) {
    int w = std::min(window, n % 2 == 1 ? n : n - 1);
    const int order = std::min(poly_order, w - 1);
    s.smoothed = savitzky_golay(s.returns, w, order);
  }
  return s;
}

std::string training_svg(const std::vector<PlotSeries>& series, const std::string& title) {
  const double width = 900, height = 520, left = 70, right = 20, top = 40, bottom = 60;
  double x_max = 1.0;
  double y_min = INFINITY;
  double y_max = -INFINITY;
  for (const PlotSeries& s : series) {
    for (double e : s.episodes) x_max = std::max(x_max, e);
    for (double r : s.returns) {
      y_min = std::min(y_min, r);
      y_max = std::max(y_max, r);
    }
  }
  if (!std::isfinite(y_min)) {
    y_min = 0.0;
    y_max = 1.0;
  }
  if (y_max - y_min < 1e-9) {
    y_min -= 1.0;
    y_max += 1.0;
  }
  const double pw = width - left - right;
  const double ph = height - top - bottom;
  auto sx = [&](double x) { return left + pw * x / x_max; };
  auto sy = [&](double y) { return top + ph * (1.0 - (y - y_min) / (y_max - y_min)); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << xml_escape(title)
      << "</text>\n";

  // axes and ticks
  svg << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  const double xs = tick_step(x_max, 8);
  for (double x = 0; x <= x_max + 1e-9; x += xs) {
    svg << "<line x1=\"" << sx(x) << "\" y1=\"" << top + ph << "\" x2=\"" << sx(x) << "\" y2=\"" << top + ph + 5
        << "\" stroke=\"black\"/><text x=\"" << sx(x) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">"
        << format_number(x) << "</text>\n";
  }
  const double ys = tick_step(y_max - y_min, 6);
  for (double y = std::ceil(y_min / ys) * ys; y <= y_max + 1e-9; y += ys) {
    svg << "<line x1=\"" << left - 5 << "\" y1=\"" << sy(y) << "\" x2=\"" << left << "\" y2=\"" << sy(y)
        << "\" stroke=\"black\"/><text x=\"" << left - 8 << "\" y=\"" << sy(y) + 4 << "\" text-anchor=\"end\">"
        << format_number(std::round(y / ys) * ys) << "</text>\n";
  }
  svg << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 15 << "\" text-anchor=\"middle\">episode</text>\n";
  svg << "<text x=\"18\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " << top + ph / 2
      << ")\">return</text>\n";

  std::set<double> switches;
  for (const PlotSeries& s : series) switches.insert(s.stage_switches.begin(), s.stage_switches.end());
  for (double e : switches) {
    svg << "<line x1=\"" << sx(e) << "\" y1=\"" << top << "\" x2=\"" << sx(e) << "\" y2=\"" << top + ph
        << "\" stroke=\"#555\" stroke-dasharray=\"6,4\"/>\n";
  }

  for (std::size_t k = 0; k < series.size(); ++k) {
    const PlotSeries& s = series[k];
    const char* color = kColors[k % (sizeof kColors / sizeof kColors[0])];
    auto polyline = [&](const std::vector<double>& ys_, const char* extra) {
      if (ys_.empty()) return;
      svg << "<polyline fill=\"none\" stroke=\"" << color << "\" " << extra << " points=\"";
      for (std::size_t i = 0; i < ys_.size(); ++i) svg << sx(s.episodes[i]) << ',' << sy(ys_[i]) << ' ';
      svg << "\"/>\n";
    };
    polyline(s.returns, "stroke-width=\"0.6\" stroke-opacity=\"0.25\"");
    polyline(s.smoothed, "stroke-width=\"2.2\"");
    const double ly = top + 16 + 18.0 * static_cast<double>(k);
    svg << "<line x1=\"" << left + 12 << "\" y1=\"" << ly << "\" x2=\"" << left + 40 << "\" y2=\"" << ly
        << "\" stroke=\"" << color << "\" stroke-width=\"2.2\"/><text x=\"" << left + 46 << "\" y=\"" << ly + 4
        << "\">" << xml_escape(s.label) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string smoothed_csv(const std::vector<PlotSeries>& series) {
  std::string out = "series,episode,return,smoothed\n";
  for (const PlotSeries& s : series) {
    for (std::size_t i = 0; i < s.returns.size(); ++i) {
      out += s.label + "," + format_number(s.episodes[i]) + "," + format_number(s.returns[i]) + "," +
             format_number(s.smoothed[i]) + "\n";
    }
  }
  return out;
}

}  // namespace cppo
