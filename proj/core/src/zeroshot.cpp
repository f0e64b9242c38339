#include "ovseg/zeroshot.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>

#include "ovseg/errors.hpp"

namespace ovseg {

void DenseFeatureGrid::validate() const {
  if (fh == 0 || fw == 0 || dim == 0) {
    throw validation_error("DenseFeatureGrid: all dimensions must be >= 1");
  }
  if (values.size() != static_cast<std::size_t>(fh) * fw * dim) {
    throw validation_error("DenseFeatureGrid: value count does not match dimensions");
  }
  for (float v : values) {
    if (!std::isfinite(v)) throw validation_error("DenseFeatureGrid: non-finite feature value");
  }
}

void TextEmbeddings::validate() const {
  if (num_classes == 0 || dim == 0) {
    throw validation_error("TextEmbeddings: dimensions must be >= 1");
  }
  if (values.size() != static_cast<std::size_t>(num_classes) * dim) {
    throw validation_error("TextEmbeddings: value count does not match dimensions");
  }
  for (std::uint32_t c = 0; c < num_classes; ++c) {
    double norm = 0.0;
    for (float v : row(c)) {
      if (!std::isfinite(v)) throw validation_error("TextEmbeddings: non-finite value");
      norm += static_cast<double>(v) * v;
    }
    if (norm == 0.0) {
      throw validation_error("TextEmbeddings: row " + std::to_string(c) + " has zero norm");
    }
  }
}

std::vector<double> mask_pool(const DenseFeatureGrid& features, const BinaryMask& mask) {
  features.validate();
  mask.validate();
  const BinaryMask& m = (mask.width == features.fw && mask.height == features.fh)
                            ? mask
                            : resample_nearest(mask, features.fw, features.fh);
  std::vector<double> sum(features.dim, 0.0);
  std::uint64_t count = 0;
  for (std::uint32_t y = 0; y < features.fh; ++y) {
    for (std::uint32_t x = 0; x < features.fw; ++x) {
      if (!m.at(x, y)) continue;
      std::span<const float> f = features.at(x, y);
      for (std::uint32_t d = 0; d < features.dim; ++d) sum[d] += f[d];
      ++count;
    }
  }
  if (count == 0) {
    throw empty_mask_error("mask_pool: mask is empty after resampling to the feature grid");
  }
  for (double& v : sum) v /= static_cast<double>(count);
  return sum;
}

std::vector<double> cosine_logits(std::span<const double> embed, const TextEmbeddings& texts) {
  texts.validate();
  if (embed.size() != texts.dim) {
    throw validation_error("cosine_logits: embedding dimension " + std::to_string(embed.size()) +
                           " does not match text dimension " + std::to_string(texts.dim));
  }
  double embed_norm = 0.0;
  for (double v : embed) embed_norm += v * v;
  embed_norm = std::sqrt(embed_norm);
  if (embed_norm == 0.0) {
    throw validation_error("cosine_logits: visual embedding has zero norm");
  }
  std::vector<double> logits(texts.num_classes);
  for (std::uint32_t c = 0; c < texts.num_classes; ++c) {
    std::span<const float> t = texts.row(c);
    double dot = 0.0, tnorm = 0.0;
    for (std::uint32_t d = 0; d < texts.dim; ++d) {
      dot += embed[d] * static_cast<double>(t[d]);
      tnorm += static_cast<double>(t[d]) * t[d];
    }
    tnorm = std::sqrt(tnorm);
    if (tnorm == 0.0) {
      throw validation_error("cosine_logits: text row " + std::to_string(c) + " has zero norm");
    }
    logits[c] = dot / (embed_norm * tnorm);
  }
  return logits;
}

std::vector<double> softmax_temperature(std::span<const double> logits, double tau) {
  if (!(tau > 0.0)) throw validation_error("softmax_temperature: tau must be positive");
  if (logits.empty()) throw validation_error("softmax_temperature: empty logits");
  double max_scaled = logits[0] / tau;
  for (double v : logits) max_scaled = std::max(max_scaled, v / tau);
  std::vector<double> out(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] / tau - max_scaled);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

SegmentationOracleResult segmentation_oracle_eval(std::span<const ZeroShotImage> images,
                                                  const TextEmbeddings& texts, double tau,
                                                  const Taxonomy& taxonomy) {
  texts.validate();
  taxonomy.validate();
  if (texts.num_classes != taxonomy.size()) {
    throw validation_error("segmentation_oracle_eval: text embedding rows (" +
                           std::to_string(texts.num_classes) + ") do not match taxonomy size (" +
                           std::to_string(taxonomy.size()) + ")");
  }
  if (!(tau > 0.0)) throw validation_error("segmentation_oracle_eval: tau must be positive");

  SegmentationOracleResult result;
  for (const ZeroShotImage& image : images) {
    image.gt.validate();
    image.features.validate();
    auto masks = panoptic_to_masks(image.gt);

    PanopticMap pred;
    pred.width = image.gt.width;
    pred.height = image.gt.height;
    pred.ids = image.gt.ids;
    std::unordered_set<std::uint32_t> skipped;
    for (std::size_t i = 0; i < masks.size(); ++i) {
      std::uint32_t seg_id = image.gt.segments[i].id;
      try {
        std::vector<double> embed = mask_pool(image.features, masks[i].first);
        std::vector<double> logits = cosine_logits(embed, texts);
        std::vector<double> probs = softmax_temperature(logits, tau);
        auto best = std::max_element(probs.begin(), probs.end());
        pred.segments.push_back(
            Segment{seg_id, static_cast<std::uint32_t>(best - probs.begin())});
      } catch (const empty_mask_error&) {
        skipped.insert(seg_id);
        ++result.empty_mask_skips;
      }
    }
    if (!skipped.empty()) {
      for (std::uint32_t& id : pred.ids) {
        if (skipped.count(id)) id = 0;
      }
    }

    MatchReport report = pq_match(pred, image.gt, taxonomy);
    stratify_false_negatives(report, pred, image.gt);
    result.per_image.push_back(std::move(report));
  }
  result.pooled = merge_match_reports(result.per_image);
  return result;
}

}  // namespace ovseg
