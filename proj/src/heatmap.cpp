#include "advdist/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "advdist/format.hpp"

namespace advdist {

namespace {

constexpr int kCell = 40;
constexpr int kLeft = 70;
constexpr int kTop = 50;
constexpr int kBarWidth = 18;
constexpr int kBarGap = 30;
constexpr Rgb kRed{178, 24, 43};
constexpr Rgb kBlue{33, 102, 172};
constexpr Rgb kGrey{160, 160, 160};

std::string hex(Rgb c) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", c.r, c.g, c.b);
  return buf;
}

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

}  // namespace

Rgb diverging_color(double value, double limit) {
  if (std::isnan(value)) return kGrey;
  if (!(limit > 0.0)) return Rgb{};
  const double t = std::clamp(value / limit, -1.0, 1.0);
  const Rgb end = t >= 0.0 ? kRed : kBlue;
  const double a = std::abs(t);
  auto mix = [a](int to) { return static_cast<int>(std::lround(255.0 + a * (to - 255.0))); };
  return Rgb{mix(end.r), mix(end.g), mix(end.b)};
}

std::string render_heatmap_svg(const GapGrid& grid) {
  const auto cols = static_cast<int>(grid.mu1_axis.size());
  const auto rows = static_cast<int>(grid.mu2_axis.size());
  double limit = 0.0;
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) {
      const double v = grid.value(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
      if (std::isfinite(v)) limit = std::max(limit, std::abs(v));
    }

  const int plot_w = cols * kCell;
  const int plot_h = rows * kCell;
  const int bar_x = kLeft + plot_w + kBarGap;
  const int width = bar_x + kBarWidth + 90;
  const int height = kTop + plot_h + 60;

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  os << "<text x=\"" << kLeft << "\" y=\"20\" font-size=\"13\">gap " << to_string(grid.pipeline) << ' '
     << to_string(grid.threat) << " zeta=" << format_double(grid.zeta) << " eps=" << format_double(grid.eps_inf)
     << "</text>\n";

  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) {
      const double v = grid.value(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
      const int x = kLeft + j * kCell;
      const int y = kTop + (rows - 1 - i) * kCell;  // mu2 grows upward
      os << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << kCell << "\" height=\"" << kCell
         << "\" fill=\"" << hex(diverging_color(v, limit)) << "\" stroke=\"#dddddd\"><title>mu1="
         << format_double(grid.mu1_axis[static_cast<std::size_t>(j)])
         << " mu2=" << format_double(grid.mu2_axis[static_cast<std::size_t>(i)]) << " gap=" << format_double(v)
         << "</title></rect>\n";
    }

  for (int j = 0; j < cols; ++j)
    os << "<text x=\"" << kLeft + j * kCell + kCell / 2 << "\" y=\"" << kTop + plot_h + 15
       << "\" text-anchor=\"middle\">" << label(grid.mu1_axis[static_cast<std::size_t>(j)]) << "</text>\n";
  for (int i = 0; i < rows; ++i)
    os << "<text x=\"" << kLeft - 6 << "\" y=\"" << kTop + (rows - 1 - i) * kCell + kCell / 2 + 4
       << "\" text-anchor=\"end\">" << label(grid.mu2_axis[static_cast<std::size_t>(i)]) << "</text>\n";
  os << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kTop + plot_h + 35 << "\" text-anchor=\"middle\">mu1</text>\n";
  os << "<text x=\"20\" y=\"" << kTop + plot_h / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 20 "
     << kTop + plot_h / 2 << ")\">mu2</text>\n";

  // colour bar, +limit at the top
  constexpr int steps = 64;
  const double step_h = static_cast<double>(plot_h) / steps;
  for (int k = 0; k < steps; ++k) {
    const double v = limit * (1.0 - 2.0 * (k + 0.5) / steps);
    os << "<rect x=\"" << bar_x << "\" y=\"" << format_double(kTop + k * step_h) << "\" width=\"" << kBarWidth
       << "\" height=\"" << format_double(step_h + 0.5) << "\" fill=\"" << hex(diverging_color(v, limit))
       << "\"/>\n";
  }
  os << "<rect x=\"" << bar_x << "\" y=\"" << kTop << "\" width=\"" << kBarWidth << "\" height=\"" << plot_h
     << "\" fill=\"none\" stroke=\"#555555\"/>\n";
  const int tx = bar_x + kBarWidth + 5;
  os << "<text x=\"" << tx << "\" y=\"" << kTop + 4 << "\">" << label(limit) << "</text>\n";
  os << "<text x=\"" << tx << "\" y=\"" << kTop + plot_h / 2 + 4 << "\">0</text>\n";
  os << "<text x=\"" << tx << "\" y=\"" << kTop + plot_h + 4 << "\">" << label(limit > 0.0 ? -limit : 0.0) << "</text>\n";
  os << "</svg>\n";
  return os.str();
}

void render_heatmap(const GapGrid& grid, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  out << render_heatmap_svg(grid);
  if (!out) throw std::runtime_error("failed to write heatmap " + path.string());
}

}  // namespace advdist
