#include "ovseg/panoptic.hpp"

#include <algorithm>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include "ovseg/errors.hpp"

namespace ovseg {

namespace {

std::string join_ids(const std::vector<std::uint32_t>& ids) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(ids[i]);
  }
  return out;
}

}  // namespace

const Segment* PanopticMap::find_segment(std::uint32_t segment_id) const {
  for (const Segment& s : segments) {
    if (s.id == segment_id) return &s;
  }
  return nullptr;
}

void PanopticMap::validate() const {
  if (width == 0 || height == 0) {
    throw validation_error("PanopticMap: width and height must be >= 1");
  }
  if (ids.size() != static_cast<std::size_t>(width) * height) {
    throw validation_error("PanopticMap: raster size does not match dimensions");
  }
  std::unordered_set<std::uint32_t> table;
  table.reserve(segments.size());
  for (const Segment& s : segments) {
    if (s.id == 0) throw validation_error("PanopticMap: segment id 0 is reserved for void");
    if (!table.insert(s.id).second) {
      throw validation_error("PanopticMap: duplicate segment id " + std::to_string(s.id));
    }
  }
  std::unordered_set<std::uint32_t> present;
  std::vector<std::uint32_t> orphans;
  for (std::uint32_t id : ids) {
    if (id == 0) continue;
    if (!present.insert(id).second) continue;
    if (!table.count(id)) orphans.push_back(id);
  }
  if (!orphans.empty()) {
    std::sort(orphans.begin(), orphans.end());
    throw validation_error("PanopticMap: raster ids missing from the segment table: " +
                           join_ids(orphans));
  }
  std::vector<std::uint32_t> unused;
  for (const Segment& s : segments) {
    if (!present.count(s.id)) unused.push_back(s.id);
  }
  if (!unused.empty()) {
    std::sort(unused.begin(), unused.end());
    throw validation_error("PanopticMap: segment-table ids absent from the raster: " +
                           join_ids(unused));
  }
}

std::vector<std::pair<BinaryMask, std::uint32_t>> panoptic_to_masks(const PanopticMap& map) {
  std::unordered_map<std::uint32_t, std::size_t> index;
  index.reserve(map.segments.size());
  std::vector<std::pair<BinaryMask, std::uint32_t>> out;
  out.reserve(map.segments.size());
  for (const Segment& s : map.segments) {
    index.emplace(s.id, out.size());
    out.emplace_back(BinaryMask::zeros(map.width, map.height), s.class_id);
  }
  std::vector<std::uint32_t> orphans;
  for (std::size_t p = 0; p < map.ids.size(); ++p) {
    std::uint32_t id = map.ids[p];
    if (id == 0) continue;
    auto it = index.find(id);
    if (it == index.end()) {
      if (std::find(orphans.begin(), orphans.end(), id) == orphans.end()) orphans.push_back(id);
      continue;
    }
    out[it->second].first.bits[p] = 1;
  }
  if (!orphans.empty()) {
    std::sort(orphans.begin(), orphans.end());
    throw validation_error("panoptic_to_masks: raster ids missing from the segment table: " +
                           join_ids(orphans));
  }
  return out;
}

}  // namespace ovseg
