#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ovseg/errors.hpp"
#include "ovseg/mask.hpp"
#include "ovseg/metrics.hpp"
#include "ovseg/panoptic.hpp"
#include "ovseg/taxonomy.hpp"

namespace ovseg {

// Dense visual features, row-major, channel-last (fh x fw x dim).
struct DenseFeatureGrid {
  std::uint32_t fh = 0;
  std::uint32_t fw = 0;
  std::uint32_t dim = 0;
  std::vector<float> values;

  std::span<const float> at(std::uint32_t x, std::uint32_t y) const {
    return {values.data() + (static_cast<std::size_t>(y) * fw + x) * dim, dim};
  }

  void validate() const;
};

// One row per taxonomy class, in taxonomy order.
struct TextEmbeddings {
  std::uint32_t num_classes = 0;
  std::uint32_t dim = 0;
  std::vector<float> values;  // num_classes x dim, row-major

  std::span<const float> row(std::uint32_t c) const {
    return {values.data() + static_cast<std::size_t>(c) * dim, dim};
  }

  void validate() const;
};

inline constexpr double kDefaultTau = 0.01;

// Thrown by mask_pool when the resampled mask covers no feature cell; the
// caller decides between skipping and a uniform posterior.
class empty_mask_error : public validation_error {
 public:
  explicit empty_mask_error(const std::string& what) : validation_error(what) {}
};

// Mean feature vector over the mask's set pixels. The mask is resampled to
// the feature grid (nearest neighbor) when the shapes differ.
std::vector<double> mask_pool(const DenseFeatureGrid& features, const BinaryMask& mask);

// Cosine similarity of the pooled embedding against every text row.
std::vector<double> cosine_logits(std::span<const double> embed, const TextEmbeddings& texts);

// softmax(logits / tau); tau must be positive.
std::vector<double> softmax_temperature(std::span<const double> logits, double tau);

struct ZeroShotImage {
  DenseFeatureGrid features;
  PanopticMap gt;
};

struct SegmentationOracleResult {
  MatchReport pooled;               // per-class tallies summed over images
  std::vector<MatchReport> per_image;
  std::int64_t empty_mask_skips = 0;  // gt segments lost to feature-grid resampling
};

// Recognition-ceiling protocol: pool features inside every ground-truth
// mask, classify by cosine similarity against the text embeddings, keep the
// gt boundaries, and score the assembled prediction. Segments whose
// resampled mask is empty are dropped from the prediction (they become
// FN_seg) and counted in empty_mask_skips.
SegmentationOracleResult segmentation_oracle_eval(std::span<const ZeroShotImage> images,
                                                  const TextEmbeddings& texts, double tau,
                                                  const Taxonomy& taxonomy);

}  // namespace ovseg
