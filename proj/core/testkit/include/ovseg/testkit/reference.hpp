#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "ovseg/panoptic.hpp"

namespace ovseg::testkit {

struct BruteClassScore {
  double pq = 0.0;  // single-fraction form: iou_sum / (tp + fp/2 + fn/2)
  double sq = 0.0;
  double rq = 0.0;
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  double iou_sum = 0.0;
};

// Exhaustive PQ reference. Extracts per-segment masks and counts pixels
// pair by pair, taking the algebraic route pq = iou_sum / (tp + fp/2 +
// fn/2) rather than sq * rq, so it shares neither code nor arithmetic with
// the production matcher. Present classes only.
std::map<std::uint32_t, BruteClassScore> brute_pq(const PanopticMap& pred,
                                                  const PanopticMap& gt,
                                                  double void_overlap_threshold = 0.5);

double brute_pq_mean(const std::map<std::uint32_t, BruteClassScore>& per_class);

// Minimal total assignment cost by exhaustive enumeration of injections of
// the smaller side into the larger; min(rows, cols) <= 7 keeps this
// tractable. Reference for the production solver.
double brute_assignment(const std::vector<std::vector<double>>& cost);

}  // namespace ovseg::testkit
