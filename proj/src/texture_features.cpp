#include "cbir/texture_features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/core.h>

#include "cbir/error.hpp"

namespace cbir {

QuantizedRaster::QuantizedRaster(int width, int height, int levels, std::vector<std::uint8_t> data)
    : width_(width), height_(height), levels_(levels), data_(std::move(data)) {
  if (levels_ < 2 || levels_ > 256) {
    throw Error(ErrorCode::kInvalidArgument, fmt::format("levels {} not in [2,256]", levels_));
  }
  if (width_ < 1 || height_ < 1 ||
      data_.size() != static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_)) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("QuantizedRaster: bad shape {}x{} with {} values", width_, height_,
                            data_.size()));
  }
  for (auto v : data_) {
    if (v >= levels_) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("QuantizedRaster: level {} >= {}", v, levels_));
    }
  }
}

QuantizedRaster quantize(const GrayRaster& img, int levels) {
  if (levels < 2 || levels > 256) {
    throw Error(ErrorCode::kInvalidArgument, fmt::format("levels {} not in [2,256]", levels));
  }
  std::vector<std::uint8_t> out(img.pixel_count());
  const auto src = img.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(static_cast<int>(src[i]) * levels / 256);
  }
  return QuantizedRaster(img.width(), img.height(), levels, std::move(out));
}

GlcmCounts glcm_counts(const QuantizedRaster& q, Offset offset) {
  if (offset.dx == 0 && offset.dy == 0) {
    throw Error(ErrorCode::kInvalidArgument, "glcm offset must be non-zero");
  }
  GlcmCounts out;
  out.levels = q.levels();
  out.offset = offset;
  out.counts.assign(static_cast<std::size_t>(q.levels()) * q.levels(), 0);

  const int x0 = std::max(0, -offset.dx);
  const int x1 = std::min(q.width(), q.width() - offset.dx);
  const int y0 = std::max(0, -offset.dy);
  const int y1 = std::min(q.height(), q.height() - offset.dy);
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      const int a = q.at(x, y);
      const int b = q.at(x + offset.dx, y + offset.dy);
      ++out.counts[static_cast<std::size_t>(a) * q.levels() + b];
      ++out.total;
    }
  }
  if (out.total == 0) {
    throw Error(ErrorCode::kEmptyGlcm,
                fmt::format("offset ({},{}) admits no pixel pair in a {}x{} raster", offset.dx,
                            offset.dy, q.width(), q.height()));
  }
  return out;
}

GlcmMatrix glcm(const QuantizedRaster& q, Offset offset) {
  const GlcmCounts c = glcm_counts(q, offset);
  GlcmMatrix m;
  m.levels = c.levels;
  m.offset = offset;
  m.cells.resize(c.counts.size());
  const double denom = 2.0 * static_cast<double>(c.total);
  for (int i = 0; i < c.levels; ++i) {
    for (int j = 0; j < c.levels; ++j) {
      m.cells[static_cast<std::size_t>(i) * c.levels + j] =
          static_cast<double>(c.at(i, j) + c.at(j, i)) / denom;
    }
  }
  return m;
}

TextureFeature glcm_features(const GlcmMatrix& m) {
  const int n = m.levels;
  if (n < 1 || m.cells.size() != static_cast<std::size_t>(n) * n) {
    throw Error(ErrorCode::kInvariantViolation,
                fmt::format("glcm has {} cells for {} levels", m.cells.size(), n));
  }
  double total = 0.0;
  for (double p : m.cells) {
    if (!std::isfinite(p) || p < 0.0) {
      throw Error(ErrorCode::kInvariantViolation, "glcm cell is negative or non-finite");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw Error(ErrorCode::kInvariantViolation,
                fmt::format("glcm is not normalized (sum {:.12g})", total));
  }

  TextureFeature f;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double p = m.at(i, j);
      if (p == 0.0) continue;
      const double d = static_cast<double>(i - j);
      f.entropy -= p * std::log2(p);
      f.contrast += d * d * p;
      f.dissimilarity += std::abs(d) * p;
      f.homogeneity += p / (1.0 + d * d);
      f.energy += p * p;
      f.mean += i * p;
    }
  }
  double covariance = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double p = m.at(i, j);
      if (p == 0.0) continue;
      f.variance += (i - f.mean) * (i - f.mean) * p;
      covariance += (i - f.mean) * (j - f.mean) * p;
    }
  }
  f.std_dev = std::sqrt(f.variance);
  f.correlation = f.variance > 0.0 ? std::clamp(covariance / f.variance, -1.0, 1.0) : 0.0;
  return f;
}

TextureFeature image_texture(const GrayRaster& img, int levels) {
  const QuantizedRaster q = quantize(img, levels);
  TextureFeature sum;
  int used = 0;
  for (const Offset& off : kStandardOffsets) {
    // A 1-pixel-wide raster has no pairs along some directions.
    if (off.dx >= q.width() || off.dy >= q.height() || -off.dy >= q.height()) continue;
    const TextureFeature f = glcm_features(glcm(q, off));
    sum.entropy += f.entropy;
    sum.contrast += f.contrast;
    sum.dissimilarity += f.dissimilarity;
    sum.homogeneity += f.homogeneity;
    sum.energy += f.energy;
    sum.correlation += f.correlation;
    sum.mean += f.mean;
    sum.variance += f.variance;
    ++used;
  }
  if (used == 0) {
    throw Error(ErrorCode::kEmptyGlcm,
                fmt::format("{}x{} raster admits no co-occurrence pairs", img.width(), img.height()));
  }
  const double k = used;
  TextureFeature avg{sum.entropy / k,     sum.contrast / k, sum.dissimilarity / k,
                     sum.homogeneity / k, sum.energy / k,   sum.correlation / k,
                     sum.mean / k,        sum.variance / k, 0.0};
  avg.std_dev = std::sqrt(avg.variance);
  return avg;
}

TextureActivity texture_activity(const GrayRaster& img, int patch) {
  if (patch < 2) {
    throw Error(ErrorCode::kInvalidArgument, fmt::format("patch size {} < 2", patch));
  }
  if (img.width() < patch || img.height() < patch) {
    throw Error(ErrorCode::kImageTooSmall,
                fmt::format("{}x{} raster is smaller than one {}x{} patch", img.width(),
                            img.height(), patch, patch));
  }
  const int tiles_x = img.width() / patch;
  const int tiles_y = img.height() / patch;
  const double pairs_per_tile = 2.0 * patch * (patch - 1);

  TextureActivity out;
  out.patch_energies.reserve(static_cast<std::size_t>(tiles_x) * tiles_y);
  for (int ty = 0; ty < tiles_y; ++ty) {
    for (int tx = 0; tx < tiles_x; ++tx) {
      const int bx = tx * patch;
      const int by = ty * patch;
      // Sum of squared differences stays exact in an integer.
      std::uint64_t ssd = 0;
      for (int y = by; y < by + patch; ++y) {
        for (int x = bx; x < bx + patch; ++x) {
          const int v = img.at(x, y);
          if (x + 1 < bx + patch) {
            const int d = img.at(x + 1, y) - v;
            ssd += static_cast<std::uint64_t>(d * d);
          }
          if (y + 1 < by + patch) {
            const int d = img.at(x, y + 1) - v;
            ssd += static_cast<std::uint64_t>(d * d);
          }
        }
      }
      out.patch_energies.push_back(static_cast<double>(ssd) / (255.0 * 255.0) / pairs_per_tile);
    }
  }
  out.activity_index = std::accumulate(out.patch_energies.begin(), out.patch_energies.end(), 0.0) /
                       static_cast<double>(out.patch_energies.size());
  return out;
}

std::string_view to_string(TextureClass cls) {
  switch (cls) {
    case TextureClass::kLow: return "Low";
    case TextureClass::kAverage: return "Average";
    case TextureClass::kHigh: return "High";
  }
  return "?";
}

std::optional<TextureClass> parse_texture_class(std::string_view name) {
  for (auto c : kAllTextureClasses) {
    if (to_string(c) == name) return c;
  }
  return std::nullopt;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) {
    throw Error(ErrorCode::kInsufficientData, "percentile of an empty set");
  }
  if (!(q >= 0.0 && q <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, fmt::format("percentile fraction {} not in [0,1]", q));
  }
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

TextureClassifierModel fit_classifier(std::span<const double> corpus_indices) {
  if (corpus_indices.size() < 3) {
    throw Error(ErrorCode::kInsufficientData,
                fmt::format("classifier needs at least 3 activity indices, got {}",
                            corpus_indices.size()));
  }
  double sum = 0.0;
  for (double v : corpus_indices) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, fmt::format("activity index {} not in [0,1]", v));
    }
    sum += v;
  }
  const double mean = sum / static_cast<double>(corpus_indices.size());

  TextureClassifierModel model;
  model.lambda_hat = mean > 0.0 ? 1.0 / mean : std::numeric_limits<double>::infinity();
  const std::vector<double> values(corpus_indices.begin(), corpus_indices.end());
  model.t_low = percentile(values, 1.0 / 3.0);
  model.t_high = percentile(values, 2.0 / 3.0);
  return model;
}

TextureClass classify_texture(double index, const TextureClassifierModel& model) {
  if (index < model.t_low) return TextureClass::kLow;
  if (index > model.t_high) return TextureClass::kHigh;
  return TextureClass::kAverage;
}

}  // namespace cbir
