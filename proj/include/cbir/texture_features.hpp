#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "cbir/imaging.hpp"

namespace cbir {

/// Gray levels mapped uniformly onto [0, levels): level = floor(gray * levels / 256).
class QuantizedRaster {
 public:
  QuantizedRaster(int width, int height, int levels, std::vector<std::uint8_t> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int levels() const noexcept { return levels_; }
  std::span<const std::uint8_t> data() const noexcept { return data_; }
  int at(int x, int y) const noexcept {
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }

 private:
  int width_;
  int height_;
  int levels_;
  std::vector<std::uint8_t> data_;
};

QuantizedRaster quantize(const GrayRaster& img, int levels);

/// Pixel displacement; the pair is (x, y) -> (x + dx, y + dy).
struct Offset {
  int dx = 1;
  int dy = 0;
  friend bool operator==(const Offset&, const Offset&) = default;
};

// Distance 1 at 0, 90, 45 and 135 degrees.
inline constexpr std::array<Offset, 4> kStandardOffsets = {
    Offset{1, 0}, Offset{0, 1}, Offset{1, 1}, Offset{1, -1}};

// Ordered pair counts before symmetrization, row-major levels x levels.
struct GlcmCounts {
  int levels = 0;
  Offset offset;
  std::vector<std::uint64_t> counts;
  std::uint64_t total = 0;

  std::uint64_t at(int i, int j) const { return counts[static_cast<std::size_t>(i) * levels + j]; }
};

/// Symmetric co-occurrence distribution: cells sum to 1 and cells(i,j) == cells(j,i)
/// when built by glcm(). Hand-built matrices are validated by glcm_features().
struct GlcmMatrix {
  int levels = 0;
  Offset offset;
  std::vector<double> cells;

  double at(int i, int j) const { return cells[static_cast<std::size_t>(i) * levels + j]; }
};

GlcmCounts glcm_counts(const QuantizedRaster& q, Offset offset);
GlcmMatrix glcm(const QuantizedRaster& q, Offset offset);

struct TextureFeature {
  double entropy = 0.0;
  double contrast = 0.0;
  double dissimilarity = 0.0;
  double homogeneity = 0.0;
  double energy = 0.0;
  double correlation = 0.0;
  double mean = 0.0;
  double variance = 0.0;
  double std_dev = 0.0;

  friend bool operator==(const TextureFeature&, const TextureFeature&) = default;
};

// Haralick statistics (entropy in bits). Throws kInvariantViolation if the cells
// are negative or do not sum to 1 within 1e-9.
TextureFeature glcm_features(const GlcmMatrix& m);

// Features averaged over kStandardOffsets; std_dev is recomputed as the square
// root of the averaged variance.
TextureFeature image_texture(const GrayRaster& img, int levels);

struct TextureActivity {
  std::vector<double> patch_energies;
  double activity_index = 0.0;
};

/// Tiles the raster into non-overlapping patch x patch blocks (ragged remainders
/// are dropped). A tile's energy is the mean of ((delta gray) / 255)^2 over all
/// horizontal and vertical neighbour pairs inside it; the activity index is the
/// mean tile energy.
TextureActivity texture_activity(const GrayRaster& img, int patch);

enum class TextureClass { kLow, kAverage, kHigh };

inline constexpr TextureClass kAllTextureClasses[] = {TextureClass::kLow, TextureClass::kAverage,
                                                      TextureClass::kHigh};

std::string_view to_string(TextureClass cls);
std::optional<TextureClass> parse_texture_class(std::string_view name);

struct TextureClassifierModel {
  double t_low = 0.0;
  double t_high = 0.0;
  // Exponential-rate MLE, 1 / mean(index). Infinity when every index is 0.
  double lambda_hat = 0.0;

  friend bool operator==(const TextureClassifierModel&, const TextureClassifierModel&) = default;
};

// Linear-interpolation percentile at position q * (n - 1) of the sorted values.
double percentile(std::vector<double> values, double q);

TextureClassifierModel fit_classifier(std::span<const double> corpus_indices);

// Low below t_low, High above t_high, Average on [t_low, t_high].
TextureClass classify_texture(double index, const TextureClassifierModel& model);

}  // namespace cbir
