#include "ovseg/testkit/fixtures.hpp"

#include <vector>

#include "ovseg/errors.hpp"
#include "ovseg/testkit/scene.hpp"

namespace ovseg::testkit {

namespace {

SoftMask soften(const BinaryMask& mask, float inside, float outside) {
  SoftMask sigma{mask.width, mask.height, std::vector<float>(mask.bits.size())};
  for (std::size_t p = 0; p < mask.bits.size(); ++p) {
    sigma.values[p] = mask.bits[p] ? inside : outside;
  }
  return sigma;
}

}  // namespace

RegressionFixture no_object_regression_fixture() {
  constexpr std::uint32_t kSide = 16;
  RegressionFixture fx;

  fx.taxonomy.classes = {TaxonomyClass{"left_thing", {"left_thing"}, true},
                         TaxonomyClass{"right_thing", {"right_thing"}, true}};
  fx.taxonomy.seen = std::vector<std::uint8_t>{1, 0};

  fx.gt.width = kSide;
  fx.gt.height = kSide;
  fx.gt.ids.resize(kSide * kSide);
  BinaryMask left = BinaryMask::zeros(kSide, kSide);
  BinaryMask right = BinaryMask::zeros(kSide, kSide);
  for (std::uint32_t y = 0; y < kSide; ++y) {
    for (std::uint32_t x = 0; x < kSide; ++x) {
      std::size_t p = static_cast<std::size_t>(y) * kSide + x;
      bool is_left = x < kSide / 2;
      fx.gt.ids[p] = is_left ? 1 : 2;
      (is_left ? left : right).bits[p] = 1;
    }
  }
  fx.gt.segments = {Segment{1, 0}, Segment{2, 1}};
  fx.gt.validate();

  fx.candidates.width = kSide;
  fx.candidates.height = kSide;
  fx.candidates.num_classes = 2;
  fx.candidates.has_no_object = true;

  // Candidate 0: exact left mask, argmax no-object. It wins the Hungarian
  // match for segment 1 (sharpest sigma, lowest cost), so the keep policy
  // throws the segment away while the strip policy recovers it at class 0.
  fx.candidates.sigmas.push_back(soften(left, 0.95f, 0.05f));
  fx.candidates.posteriors.push_back({0.09f, 0.01f, 0.9f});

  // Candidate 1: eroded duplicate of the left mask with the correct class.
  // Only the baseline keeps it; selection discards it as unmatched.
  fx.candidates.sigmas.push_back(soften(erode(left, 1), 0.9f, 0.1f));
  fx.candidates.posteriors.push_back({0.9f, 0.05f, 0.05f});

  // Candidate 2: exact right mask, correct class.
  fx.candidates.sigmas.push_back(soften(right, 0.9f, 0.1f));
  fx.candidates.posteriors.push_back({0.05f, 0.9f, 0.05f});

  fx.candidates.validate();
  return fx;
}

TextEmbeddings orthonormal_embeddings(std::uint32_t num_classes) {
  TextEmbeddings texts;
  texts.num_classes = num_classes;
  texts.dim = num_classes;
  texts.values.assign(static_cast<std::size_t>(num_classes) * num_classes, 0.0f);
  for (std::uint32_t c = 0; c < num_classes; ++c) {
    texts.values[static_cast<std::size_t>(c) * num_classes + c] = 1.0f;
  }
  return texts;
}

DenseFeatureGrid class_aligned_features(const PanopticMap& gt, const TextEmbeddings& texts,
                                        std::span<const std::uint32_t> class_map) {
  gt.validate();
  texts.validate();
  if (class_map.size() != texts.num_classes) {
    throw validation_error("class_aligned_features: class_map size mismatch");
  }
  DenseFeatureGrid grid;
  grid.fh = gt.height;
  grid.fw = gt.width;
  grid.dim = texts.dim;
  grid.values.assign(static_cast<std::size_t>(grid.fh) * grid.fw * grid.dim, 0.0f);
  for (std::size_t p = 0; p < gt.ids.size(); ++p) {
    if (gt.ids[p] == 0) continue;
    const Segment* seg = gt.find_segment(gt.ids[p]);
    std::uint32_t mapped = class_map[seg->class_id];
    std::span<const float> row = texts.row(mapped);
    for (std::uint32_t d = 0; d < grid.dim; ++d) {
      grid.values[p * grid.dim + d] = row[d];
    }
  }
  return grid;
}

DenseFeatureGrid class_aligned_features(const PanopticMap& gt, const TextEmbeddings& texts) {
  std::vector<std::uint32_t> identity(texts.num_classes);
  for (std::uint32_t c = 0; c < texts.num_classes; ++c) identity[c] = c;
  return class_aligned_features(gt, texts, identity);
}

}  // namespace ovseg::testkit
