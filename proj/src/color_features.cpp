#include "cbir/color_features.hpp"

#include <cstdint>

namespace cbir {

std::string_view to_string(ColorGroup group) {
  switch (group) {
    case ColorGroup::kRed: return "Red";
    case ColorGroup::kGreen: return "Green";
    case ColorGroup::kBlue: return "Blue";
  }
  return "?";
}

std::optional<ColorGroup> parse_color_group(std::string_view name) {
  for (auto g : kAllColorGroups) {
    if (to_string(g) == name) return g;
  }
  return std::nullopt;
}

ColorFeature channel_averages(const RgbRaster& img) {
  // Integer sums are exact for any raster below ~7e16 pixels.
  std::uint64_t r = 0, g = 0, b = 0;
  const auto px = img.data();
  for (std::size_t i = 0; i < px.size(); i += 3) {
    r += px[i];
    g += px[i + 1];
    b += px[i + 2];
  }
  const auto n = static_cast<double>(img.pixel_count());
  return {static_cast<double>(r) / n, static_cast<double>(g) / n, static_cast<double>(b) / n};
}

ColorGroup dominant_channel(const ColorFeature& f) {
  if (f.r_avg >= f.g_avg && f.r_avg >= f.b_avg) return ColorGroup::kRed;
  if (f.g_avg >= f.b_avg) return ColorGroup::kGreen;
  return ColorGroup::kBlue;
}

}  // namespace cbir
