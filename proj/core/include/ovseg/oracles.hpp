#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "ovseg/mask.hpp"
#include "ovseg/metrics.hpp"
#include "ovseg/panoptic.hpp"
#include "ovseg/proposals.hpp"

namespace ovseg {

struct AssignmentCostParams {
  double bce_weight = 5.0;
  double dice_weight = 5.0;
  double prob_clamp = 1e-7;  // keeps the BCE finite on saturated sigmas

  void validate() const;
};

// Minimum-cost injection between ground-truth segments (rows) and
// candidates (columns); |pairs| = min(rows, cols).
struct Assignment {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (gt index, candidate index)
  double total_cost = 0.0;
};

enum class NoObjectPolicy { kKeep, kStrip };

// Output of the mask-selection oracle. `selected` is the candidate set
// restricted to Hungarian-matched candidates with the no-object policy
// applied; pair i of `assignment` matches gt segment matched_gt_segments[i]
// to selected candidate i.
struct SelectionResult {
  CandidateSet selected;
  Assignment assignment;                          // indices into the original set
  std::vector<std::uint32_t> matched_gt_segments;  // gt segment ids, one per pair
  std::vector<std::size_t> matched_candidates;     // original candidate indices, one per pair
  std::vector<double> pair_costs;                  // matching cost, one per pair
  std::vector<std::uint8_t> was_no_object;         // per pair: argmax was no-object
  std::size_t unmatched_gt = 0;  // gt segments beyond the candidate budget (guaranteed FN)
};

// Matching cost of a soft mask against a binary target:
//   bce_weight * mean(-[g ln s + (1-g) ln(1-s)]) + dice_weight * (1 - dice)
// with s = clamp(sigma, prob_clamp, 1 - prob_clamp). The dice term is 0 when
// both masses vanish.
double bce_dice_cost(const SoftMask& sigma, const BinaryMask& gt_mask,
                     const AssignmentCostParams& params);

// cost[r][c], rows are gt segments, columns are candidates; rectangular
// inputs of either orientation are fine. Deterministic: the augmenting scan
// visits columns in increasing order, so equal-cost options resolve toward
// lower indices.
Assignment hungarian(const std::vector<std::vector<double>>& cost);

// Hungarian mask selection over the full candidate set (§ no-object
// filtering happens only downstream, which is exactly the effect the keep
// policy exposes). Ground-truth masks are resampled to sigma resolution
// when the shapes differ.
SelectionResult selection_oracle(const CandidateSet& cands, const PanopticMap& gt,
                                 const AssignmentCostParams& params, NoObjectPolicy policy);

// Relabels every predicted segment that overlaps some gt segment with
// class-agnostic iou > 0.5 to that segment's class. Boundaries unchanged.
PanopticMap classification_oracle(const PanopticMap& pred, const PanopticMap& gt);

// Replaces each matched candidate's sigma with the indicator of its matched
// gt segment; posteriors untouched.
CandidateSet segmentation_oracle_on_selection(const SelectionResult& selection,
                                              const PanopticMap& gt);

// Replaces each matched candidate's posterior with a one-hot at its matched
// gt class (no-object mass zero); sigmas untouched.
CandidateSet classification_oracle_on_selection(const SelectionResult& selection,
                                                const PanopticMap& gt);

}  // namespace ovseg
