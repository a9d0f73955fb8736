#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cbir/color_features.hpp"
#include "cbir/evaluation.hpp"
#include "cbir/imaging.hpp"
#include "cbir/texture_features.hpp"

namespace cbir {

// Synthetic labelled corpus: every (color group, texture class) cell holds
// per_cell images whose dominant channel and texture busyness match the cell.
struct CorpusSpec {
  int per_cell = 30;
  std::uint64_t seed = 7;
  int size = 128;
};

struct CorpusImage {
  std::string image_id;  // e.g. "green-high-007.png"
  ColorGroup group;
  TextureClass texture;
  RgbRaster raster;
};

RgbRaster synthesize_image(ColorGroup group, TextureClass texture, int size, std::uint64_t seed);

// Images ordered by (group, class, ordinal); deterministic for a fixed spec.
std::vector<CorpusImage> generate_corpus(const CorpusSpec& spec);

// Relevant set of each image: the other images of its cell.
GroundTruth corpus_ground_truth(const std::vector<CorpusImage>& corpus);

struct CorpusLayout {
  std::string image_dir;          // <out>/images
  std::string ground_truth_path;  // <out>/ground_truth.tsv
};

// Writes PNGs under <out>/images and the ground-truth TSV beside them.
CorpusLayout write_corpus(const std::string& out_dir, const CorpusSpec& spec);

}  // namespace cbir
