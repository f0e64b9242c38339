#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "ovseg/mask.hpp"
#include "ovseg/panoptic.hpp"
#include "ovseg/proposals.hpp"
#include "ovseg/taxonomy.hpp"
#include "ovseg/zeroshot.hpp"

namespace ovseg {

// Binary container magics. All integers little-endian; rasters row-major.
//   OVPM  panoptic map: version u16, w u32, h u32, ids u32[w*h],
//         segment count u32, (segment_id u32, class_id u32) pairs
//   OVRL  rle mask: w u32, h u32, run count u32, runs u32[]
//   OVFT  feature grid: version u16, fh u32, fw u32, d u32, f32[fh*fw*d]
//         (channel-last)
//   OVTE  text embeddings: rows u32, d u32, f32[rows*d]
//   OVCD  candidates: n u32, c u32, w u32, h u32, flags u32 (bit0 = clip
//         posteriors present), then per candidate: sigma u8[w*h] quantized
//         as round(v*255), posterior f32[c+1], clip posterior f32[c] if
//         flagged

void save_panoptic_map(const PanopticMap& map, const std::filesystem::path& path);
PanopticMap load_panoptic_map(const std::filesystem::path& path);

void save_rle(const RleMask& rle, const std::filesystem::path& path);
RleMask load_rle(const std::filesystem::path& path);

void save_feature_grid(const DenseFeatureGrid& grid, const std::filesystem::path& path);
DenseFeatureGrid load_feature_grid(const std::filesystem::path& path);

void save_text_embeddings(const TextEmbeddings& texts, const std::filesystem::path& path);
TextEmbeddings load_text_embeddings(const std::filesystem::path& path);

// Sigmas are stored 8-bit quantized; a round-trip preserves posteriors
// bit-exactly and sigmas within 1/255 per pixel.
void save_candidates(const CandidateSet& cands, const std::filesystem::path& path);
CandidateSet load_candidates(const std::filesystem::path& path);

// Taxonomy JSON: either a bare array of
//   { "name": ..., "synonyms": [...], "is_thing": bool }
// or an object { "classes": [...], "seen": [indices] } when a curated
// seen/unseen split travels with the class list.
Taxonomy taxonomy_from_json(const nlohmann::json& j);
nlohmann::json taxonomy_to_json(const Taxonomy& taxonomy);
Taxonomy load_taxonomy(const std::filesystem::path& path);
void save_taxonomy(const Taxonomy& taxonomy, const std::filesystem::path& path);

// A prediction dump is a directory: manifest.json naming a taxonomy file
// and one candidate record per image, plus optional per-image ground-truth
// maps and feature grids.
struct DumpImage {
  std::string id;
  std::filesystem::path candidates_file;
  std::optional<std::filesystem::path> gt_file;
  std::optional<std::filesystem::path> features_file;
};

struct DumpManifest {
  std::filesystem::path root;
  std::filesystem::path taxonomy_file;
  nlohmann::json resolution;  // opaque metadata, carried through to reports
  std::vector<DumpImage> images;  // sorted by id
};

DumpManifest load_manifest(const std::filesystem::path& dump_dir);

struct PredictionDump {
  DumpManifest manifest;
  Taxonomy taxonomy;
  std::vector<CandidateSet> candidates;  // parallel to manifest.images
};

// Eager load of every image payload with full validation.
PredictionDump load_dump(const std::filesystem::path& dump_dir);

struct DumpImagePayload {
  std::string id;
  CandidateSet candidates;
  std::optional<PanopticMap> gt;
  std::optional<DenseFeatureGrid> features;
};

void save_dump(const std::filesystem::path& dump_dir, const Taxonomy& taxonomy,
               std::span<const DumpImagePayload> images,
               const nlohmann::json& resolution = nlohmann::json::object());

// Small helpers shared by the binary readers.
std::string read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::string_view bytes);

}  // namespace ovseg
