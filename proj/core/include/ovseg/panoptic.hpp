#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "ovseg/mask.hpp"

namespace ovseg {

struct Segment {
  std::uint32_t id = 0;        // positive; 0 is reserved for void
  std::uint32_t class_id = 0;  // index into a Taxonomy
};

// Per-pixel segment-id raster plus the segment table. Segments are
// non-overlapping by construction (one id per pixel); id 0 marks void.
struct PanopticMap {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint32_t> ids;
  std::vector<Segment> segments;

  std::size_t size() const { return ids.size(); }
  std::uint32_t at(std::uint32_t x, std::uint32_t y) const {
    return ids[static_cast<std::size_t>(y) * width + x];
  }
  const Segment* find_segment(std::uint32_t segment_id) const;

  void validate() const;
};

// One binary mask per segment-table entry, in table order, paired with the
// segment's class. Masks are pairwise disjoint and cover the nonzero region.
std::vector<std::pair<BinaryMask, std::uint32_t>> panoptic_to_masks(const PanopticMap& map);

}  // namespace ovseg
