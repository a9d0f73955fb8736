#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace cbir {

using Bytes = std::vector<std::uint8_t>;

/// Row-major interleaved 8-bit RGB image. Width and height are at least 1.
class RgbRaster {
 public:
  using Pixel = std::array<std::uint8_t, 3>;

  RgbRaster(int width, int height, std::vector<std::uint8_t> data);
  static RgbRaster filled(int width, int height, Pixel value);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }
  std::span<const std::uint8_t> data() const noexcept { return data_; }

  Pixel at(int x, int y) const noexcept {
    const std::size_t i = 3 * (static_cast<std::size_t>(y) * width_ + x);
    return {data_[i], data_[i + 1], data_[i + 2]};
  }

  friend bool operator==(const RgbRaster&, const RgbRaster&) = default;

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> data_;
};

/// Row-major 8-bit single-plane image. Width and height are at least 1.
class GrayRaster {
 public:
  GrayRaster(int width, int height, std::vector<std::uint8_t> data);
  static GrayRaster filled(int width, int height, std::uint8_t value);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }
  std::span<const std::uint8_t> data() const noexcept { return data_; }

  std::uint8_t at(int x, int y) const noexcept {
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }

  friend bool operator==(const GrayRaster&, const GrayRaster&) = default;

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> data_;
};

// Decodes PNG or JPEG bytes. Throws Error{kDecode} (message carries the byte
// offset reached) or Error{kUnsupportedFormat}.
RgbRaster decode_image(std::span<const std::uint8_t> bytes);

// Lossless PNG encoders; output is deterministic for identical input.
Bytes encode_png(const RgbRaster& img);
Bytes encode_png(const GrayRaster& img);

Bytes encode_jpeg(const RgbRaster& img, int quality = 90);

Bytes read_file(const std::string& path);
void write_file(const std::string& path, std::span<const std::uint8_t> bytes);

// BT.601 luma, rounded half away from zero.
GrayRaster to_gray(const RgbRaster& img);

// Both filters use replicate (edge-clamp) padding and keep dimensions.
// window must be odd, >= 3 and <= 2 * min(width, height) + 1.
GrayRaster median_filter(const GrayRaster& img, int window);
GrayRaster averaging_filter(const GrayRaster& img, int window);

// Replaces each pixel with 0 or 255 (equal odds) with probability density.
GrayRaster add_salt_pepper(const GrayRaster& img, double density, std::uint64_t seed);

inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();

// Peak signal-to-noise ratio in dB; kPsnrIdentical when the rasters match.
double psnr(const GrayRaster& a, const GrayRaster& b);

}  // namespace cbir
