#include "cbir/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include <fmt/core.h>

#include "cbir/error.hpp"

namespace cbir {

namespace {

class Uniform {
 public:
  explicit Uniform(std::uint64_t seed) : rng_(seed) {}
  // [lo, hi)
  double operator()(double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(rng_() >> 11) * 0x1.0p-53);
  }

 private:
  std::mt19937_64 rng_;
};

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// Zero-mean luminance modulation whose busyness is set by the texture class.
std::vector<double> modulation(TextureClass texture, int size, Uniform& u) {
  std::vector<double> field(static_cast<std::size_t>(size) * size);
  if (texture == TextureClass::kLow) {
    const double amp = u(8.0, 16.0);
    const double period = u(48.0, 96.0);
    const double angle = u(0.0, std::numbers::pi);
    const double phase = u(0.0, 2.0 * std::numbers::pi);
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        const double t = x * std::cos(angle) + y * std::sin(angle);
        field[static_cast<std::size_t>(y) * size + x] =
            amp * std::sin(2.0 * std::numbers::pi * t / period + phase);
      }
    }
    return field;
  }
  // Random piecewise-constant blocks; block edges survive a 3x3 median.
  const int block = texture == TextureClass::kAverage ? 6 : 3;
  const double amp = texture == TextureClass::kAverage ? u(14.0, 22.0) : u(45.0, 60.0);
  const int blocks = (size + block - 1) / block;
  std::vector<double> levels(static_cast<std::size_t>(blocks) * blocks);
  for (double& v : levels) v = u(-amp, amp);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      field[static_cast<std::size_t>(y) * size + x] =
          levels[static_cast<std::size_t>(y / block) * blocks + x / block];
    }
  }
  return field;
}

}  // namespace

RgbRaster synthesize_image(ColorGroup group, TextureClass texture, int size, std::uint64_t seed) {
  if (size < 16) {
    throw Error(ErrorCode::kInvalidArgument, fmt::format("corpus image size {} < 16", size));
  }
  Uniform u(seed);
  std::array<double, 3> base{};
  const auto dominant = static_cast<std::size_t>(group);
  for (std::size_t c = 0; c < 3; ++c) base[c] = c == dominant ? u(160.0, 200.0) : u(40.0, 90.0);
  const std::vector<double> field = modulation(texture, size, u);

  std::vector<std::uint8_t> data(static_cast<std::size_t>(size) * size * 3);
  for (std::size_t i = 0; i < field.size(); ++i) {
    for (std::size_t c = 0; c < 3; ++c) {
      data[3 * i + c] = static_cast<std::uint8_t>(std::clamp(std::round(base[c] + field[i]), 0.0, 255.0));
    }
  }
  return RgbRaster(size, size, std::move(data));
}

std::vector<CorpusImage> generate_corpus(const CorpusSpec& spec) {
  if (spec.per_cell < 2) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("per-cell count {} < 2 leaves images without relevant peers",
                            spec.per_cell));
  }
  std::mt19937_64 seeds(spec.seed);
  std::vector<CorpusImage> out;
  for (ColorGroup group : kAllColorGroups) {
    for (TextureClass texture : kAllTextureClasses) {
      for (int i = 0; i < spec.per_cell; ++i) {
        std::string id = fmt::format("{}-{}-{:03}.png", lower(to_string(group)),
                                     lower(to_string(texture)), i);
        out.push_back({std::move(id), group, texture,
                       synthesize_image(group, texture, spec.size, seeds())});
      }
    }
  }
  return out;
}

GroundTruth corpus_ground_truth(const std::vector<CorpusImage>& corpus) {
  GroundTruth truth;
  for (const auto& q : corpus) {
    IdSet relevant;
    for (const auto& other : corpus) {
      if (other.group == q.group && other.texture == q.texture && other.image_id != q.image_id) {
        relevant.insert(other.image_id);
      }
    }
    truth.relevance.emplace(q.image_id, std::move(relevant));
  }
  return truth;
}

CorpusLayout write_corpus(const std::string& out_dir, const CorpusSpec& spec) {
  namespace fs = std::filesystem;
  const fs::path root(out_dir);
  const fs::path images = root / "images";
  std::error_code ec;
  fs::create_directories(images, ec);
  if (ec) {
    throw Error(ErrorCode::kIo, fmt::format("cannot create {}: {}", images.string(), ec.message()));
  }
  const auto corpus = generate_corpus(spec);
  for (const auto& img : corpus) {
    write_file((images / img.image_id).string(), encode_png(img.raster));
  }
  CorpusLayout layout{images.string(), (root / "ground_truth.tsv").string()};
  const std::string tsv = format_ground_truth(corpus_ground_truth(corpus));
  write_file(layout.ground_truth_path,
             std::span(reinterpret_cast<const std::uint8_t*>(tsv.data()), tsv.size()));
  return layout;
}

}  // namespace cbir
