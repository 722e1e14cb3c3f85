#pragma once

#include <filesystem>
#include <string>

#include "advdist/sweep.hpp"

namespace advdist {

/// Diverging scale centred on zero: red for gains, blue for losses, white at
/// zero, grey for invalid cells. mu1 runs left to right, mu2 bottom to top.
std::string render_heatmap_svg(const GapGrid& grid);

/// Throws std::runtime_error if the file cannot be written.
void render_heatmap(const GapGrid& grid, const std::filesystem::path& path);

struct Rgb {
  int r = 255;
  int g = 255;
  int b = 255;
  auto operator<=>(const Rgb&) const = default;
};

/// Colour of `value` on a scale saturating at +-limit. nan maps to grey.
Rgb diverging_color(double value, double limit);

}  // namespace advdist
