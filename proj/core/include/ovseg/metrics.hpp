#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "ovseg/mask.hpp"
#include "ovseg/panoptic.hpp"
#include "ovseg/taxonomy.hpp"

namespace ovseg {

// A matched prediction / ground-truth segment pair. Matching requires
// iou > 0.5 strictly, so at most one prediction can match a ground-truth
// segment (and vice versa) on disjoint panoptic inputs.
struct SegmentMatch {
  std::uint32_t pred_segment_id = 0;
  std::uint32_t gt_segment_id = 0;
  double iou = 0.0;
};

// Raw per-class tallies. fn() = fn_seg + fn_cls; pq/sq/rq are derived by
// pq_scores and left zero until then.
struct ClassStats {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn_seg = 0;
  std::int64_t fn_cls = 0;
  double iou_sum = 0.0;

  std::int64_t fn() const { return fn_seg + fn_cls; }
  bool present() const { return tp + fp + fn() > 0; }
};

// Outcome of matching one prediction map against one ground-truth map.
// Every gt segment lands in exactly one of {tp, fn_seg, fn_cls}; every pred
// segment in exactly one of {tp, fp}. Before stratify_false_negatives runs,
// all false negatives sit in fn_seg.
struct MatchReport {
  std::vector<SegmentMatch> tp;
  std::vector<std::uint32_t> fp;
  std::vector<std::uint32_t> fn_seg;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> fn_cls;  // (gt id, offending pred id)
  std::map<std::uint32_t, ClassStats> per_class;
};

struct ClassScore {
  double pq = 0.0;
  double sq = 0.0;
  double rq = 0.0;
  ClassStats stats;
};

struct PqScores {
  std::map<std::uint32_t, ClassScore> per_class;  // present classes only
  double pq_all = 0.0;
  std::optional<double> pq_seen;    // absent when the taxonomy has no split
  std::optional<double> pq_unseen;  // absent when the split covers one side only
};

inline constexpr double kDefaultVoidOverlapThreshold = 0.5;

// |a ∩ b| / |a ∪ b|; 0 when both masks are empty. Dimensions must agree.
double iou(const BinaryMask& a, const BinaryMask& b);

// PQ matching: a (pred, gt) pair is TP iff the classes agree and iou > 0.5.
// Unmatched predictions whose overlap with the gt void region exceeds
// void_overlap_threshold of their own area are exempt from FP counting.
// All false negatives are reported as fn_seg; see stratify_false_negatives.
MatchReport pq_match(const PanopticMap& pred, const PanopticMap& gt, const Taxonomy& taxonomy,
                     double void_overlap_threshold = kDefaultVoidOverlapThreshold);

// Splits false negatives: fn_cls iff some predicted segment overlaps the gt
// segment with class-agnostic iou > 0.5 but carries a different class;
// fn_seg otherwise. Disjointness guarantees at most one such prediction.
void stratify_false_negatives(MatchReport& report, const PanopticMap& pred,
                              const PanopticMap& gt);

// Sums per-class tallies across reports (for multi-image evaluation).
// Segment-id lists are per image and therefore dropped from the result.
MatchReport merge_match_reports(std::span<const MatchReport> reports);

// Per class: sq = mean TP iou, rq = tp / (tp + fp/2 + fn/2), pq = sq * rq.
// Aggregates are unweighted means over classes present in gt or pred of the
// evaluated set; classes absent everywhere are excluded. Throws when no
// class was evaluated at all.
PqScores pq_scores(const MatchReport& report, const Taxonomy& taxonomy);

}  // namespace ovseg
