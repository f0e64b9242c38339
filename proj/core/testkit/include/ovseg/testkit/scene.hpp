#pragma once

#include <cstdint>

#include "ovseg/panoptic.hpp"
#include "ovseg/proposals.hpp"
#include "ovseg/taxonomy.hpp"

namespace ovseg::testkit {

// Candidate corruption knobs. Boundary noise picks erosion or dilation per
// candidate when both radii are positive.
struct NoiseModel {
  std::uint32_t erosion_radius = 0;
  std::uint32_t dilation_radius = 0;
  double class_flip_prob = 0.0;
  double no_object_flip_prob = 0.0;
  std::uint32_t spurious_candidates = 0;
};

// Miniature stand-in for a real prediction dump: seeded Voronoi ground
// truth plus candidates derived from its segments under the noise model.
struct SceneSpec {
  std::uint32_t width = 32;
  std::uint32_t height = 32;
  std::uint32_t min_segments = 2;
  std::uint32_t max_segments = 6;
  std::uint32_t class_count = 8;  // >= max_segments; gt classes drawn without replacement
  NoiseModel noise;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Scene {
  PanopticMap gt;
  CandidateSet candidates;
  Taxonomy taxonomy;
};

// Deterministic from spec.seed, bit-identical across platforms.
Scene gen_scene(const SceneSpec& spec);

// Same geometry and candidates, but classes drawn against a shared
// taxonomy; multi-image dumps need one taxonomy across scenes.
Scene gen_scene(const SceneSpec& spec, const Taxonomy& taxonomy);

// The taxonomy gen_scene pairs with a given seed: generated names, mixed
// thing/stuff flags and a random seen split.
Taxonomy gen_taxonomy(std::uint32_t class_count, std::uint64_t seed);

BinaryMask erode(const BinaryMask& mask, std::uint32_t radius);
BinaryMask dilate(const BinaryMask& mask, std::uint32_t radius);

}  // namespace ovseg::testkit
