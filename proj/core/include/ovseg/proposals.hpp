#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ovseg/mask.hpp"
#include "ovseg/panoptic.hpp"
#include "ovseg/taxonomy.hpp"

namespace ovseg {

// Mask-decoder output: N soft localization maps with per-candidate class
// posteriors. While has_no_object holds, posteriors span C+1 entries and the
// last one is the no-object class; after drop_no_object or
// strip_no_object_logit they span C.
struct CandidateSet {
  std::uint32_t width = 0;  // shared sigma raster shape; kept even when empty
  std::uint32_t height = 0;
  std::size_t num_classes = 0;  // C
  bool has_no_object = true;
  std::vector<SoftMask> sigmas;
  std::vector<std::vector<float>> posteriors;
  std::optional<std::vector<std::vector<float>>> clip_posteriors;  // always over C
  std::vector<std::uint32_t> degenerate;  // flagged by strip_no_object_logit

  std::size_t size() const { return sigmas.size(); }
  std::size_t posterior_width() const { return num_classes + (has_no_object ? 1 : 0); }

  // Index of the most probable entry; first index wins ties.
  std::size_t argmax(std::size_t candidate) const;
  bool is_no_object(std::size_t candidate) const;

  void validate() const;
};

struct FusionParams {
  double object_score_threshold = 0.8;  // min class confidence to enter fusion
  double overlap_keep_ratio = 0.8;      // min claimed/binarized area to keep
  double sigma_threshold = 0.5;         // binarization threshold
  bool merge_stuff = true;

  void validate() const;
};

// Restriction of a candidate set to the given indices (posterior width kept).
CandidateSet select_candidates(const CandidateSet& cands, std::span<const std::size_t> indices);

// Discards candidates whose argmax lands on the no-object entry and
// renormalizes the surviving posteriors over the C real classes.
CandidateSet drop_no_object(const CandidateSet& cands);

// Keeps every candidate and renormalizes the first C entries. Candidates
// with zero real-class mass get a uniform distribution and are flagged in
// `degenerate`.
CandidateSet strip_no_object_logit(const CandidateSet& cands);

// Standard mask-transformer panoptic inference: each pixel goes to the
// candidate maximizing class_confidence * sigma; low-confidence candidates
// are skipped, candidates keeping less than overlap_keep_ratio of their
// binarized area are dropped, same-class stuff segments merge when
// merge_stuff is set. Requires posteriors over C (no-object already
// resolved). Zero surviving candidates yield an all-void map.
PanopticMap panoptic_fusion(const CandidateSet& cands, const Taxonomy& taxonomy,
                            const FusionParams& params);

// Geometric ensembling of the in-vocabulary and CLIP distributions with
// separate exponents for seen (alpha) and unseen (beta) classes. Inputs are
// clamped to [1e-12, 1] before powering; a degenerate total falls back to
// the CLIP distribution.
std::vector<float> geometric_ensemble(std::span<const float> p_in, std::span<const float> p_clip,
                                      std::span<const std::uint8_t> seen, double alpha,
                                      double beta);

}  // namespace ovseg
