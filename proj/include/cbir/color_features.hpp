#pragma once

#include <optional>
#include <string_view>

#include "cbir/imaging.hpp"

namespace cbir {

// Mean channel intensities over every pixel, kept at full precision.
struct ColorFeature {
  double r_avg = 0.0;
  double g_avg = 0.0;
  double b_avg = 0.0;

  friend bool operator==(const ColorFeature&, const ColorFeature&) = default;
};

enum class ColorGroup { kRed, kGreen, kBlue };

inline constexpr ColorGroup kAllColorGroups[] = {ColorGroup::kRed, ColorGroup::kGreen,
                                                 ColorGroup::kBlue};

std::string_view to_string(ColorGroup group);
std::optional<ColorGroup> parse_color_group(std::string_view name);

ColorFeature channel_averages(const RgbRaster& img);

/// Argmax channel of the averages. Ties resolve Red > Green > Blue, so an
/// achromatic image lands in the Red group.
ColorGroup dominant_channel(const ColorFeature& f);

}  // namespace cbir
