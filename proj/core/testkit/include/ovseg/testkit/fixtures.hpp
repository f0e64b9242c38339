#pragma once

#include <cstdint>
#include <span>

#include "ovseg/panoptic.hpp"
#include "ovseg/proposals.hpp"
#include "ovseg/taxonomy.hpp"
#include "ovseg/zeroshot.hpp"

namespace ovseg::testkit {

// Hand-built scene in which oracle mask selection with the keep policy
// scores strictly below the baseline, while the strip policy scores
// strictly above it: the cost-optimal candidate for the first segment is
// argmax no-object, and a slightly eroded duplicate (which only the
// baseline keeps) covers for it.
struct RegressionFixture {
  PanopticMap gt;
  CandidateSet candidates;
  Taxonomy taxonomy;
};

RegressionFixture no_object_regression_fixture();

// Identity-matrix text embeddings: one orthonormal row per class.
TextEmbeddings orthonormal_embeddings(std::uint32_t num_classes);

// Feature grid at gt resolution where every segment region holds the text
// embedding of `class_map[gt class]` as a constant vector. The identity
// class_map yields the perfectly aligned fixture; swapping two entries
// yields the misclassification fixture. Void pixels get the zero vector.
DenseFeatureGrid class_aligned_features(const PanopticMap& gt, const TextEmbeddings& texts,
                                        std::span<const std::uint32_t> class_map);

DenseFeatureGrid class_aligned_features(const PanopticMap& gt, const TextEmbeddings& texts);

}  // namespace ovseg::testkit
