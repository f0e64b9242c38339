#include "ovseg/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_map>

#include "ovseg/errors.hpp"

namespace ovseg {

void AssignmentCostParams::validate() const {
  if (bce_weight < 0.0 || dice_weight < 0.0) {
    throw validation_error("AssignmentCostParams: weights must be nonnegative");
  }
  if (bce_weight == 0.0 && dice_weight == 0.0) {
    throw validation_error("AssignmentCostParams: weights must not both be zero");
  }
  if (!(prob_clamp > 0.0 && prob_clamp < 0.5)) {
    throw validation_error("AssignmentCostParams: prob_clamp must lie in (0, 0.5)");
  }
}

double bce_dice_cost(const SoftMask& sigma, const BinaryMask& gt_mask,
                     const AssignmentCostParams& params) {
  params.validate();
  if (sigma.width != gt_mask.width || sigma.height != gt_mask.height) {
    throw validation_error("bce_dice_cost: shapes differ: " + std::to_string(sigma.width) +
                           "x" + std::to_string(sigma.height) + " vs " +
                           std::to_string(gt_mask.width) + "x" + std::to_string(gt_mask.height));
  }
  const std::size_t pixels = sigma.values.size();
  double bce_sum = 0.0;
  double inter = 0.0, sigma_sum = 0.0, gt_sum = 0.0;
  for (std::size_t p = 0; p < pixels; ++p) {
    double s = std::clamp(static_cast<double>(sigma.values[p]), params.prob_clamp,
                          1.0 - params.prob_clamp);
    double g = gt_mask.bits[p];
    bce_sum -= g * std::log(s) + (1.0 - g) * std::log(1.0 - s);
    inter += s * g;
    sigma_sum += s;
    gt_sum += g;
  }
  double cost = params.bce_weight * (bce_sum / static_cast<double>(pixels));
  if (params.dice_weight > 0.0) {
    double dice_term =
        (sigma_sum == 0.0 && gt_sum == 0.0) ? 0.0 : 1.0 - 2.0 * inter / (sigma_sum + gt_sum);
    cost += params.dice_weight * dice_term;
  }
  return cost;
}

namespace {

// Shortest-augmenting-path assignment for rows <= cols; 1-based internals.
Assignment solve_rows_leq_cols(const std::vector<std::vector<double>>& cost) {
  const std::size_t n = cost.size();
  const std::size_t m = cost[0].size();
  constexpr double kInf = std::numeric_limits<double>::infinity();

  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> col_row(m + 1, 0);  // column -> assigned row, 0 = free
  std::vector<std::size_t> way(m + 1, 0);

  for (std::size_t i = 1; i <= n; ++i) {
    col_row[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, kInf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      std::size_t i0 = col_row[j0], j1 = 0;
      double delta = kInf;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[col_row[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (col_row[j0] != 0);
    do {
      std::size_t j1 = way[j0];
      col_row[j0] = col_row[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  Assignment out;
  out.pairs.reserve(n);
  for (std::size_t j = 1; j <= m; ++j) {
    if (col_row[j] != 0) {
      out.pairs.emplace_back(col_row[j] - 1, j - 1);
    }
  }
  std::sort(out.pairs.begin(), out.pairs.end());
  for (const auto& [r, c] : out.pairs) out.total_cost += cost[r][c];
  return out;
}

}  // namespace

Assignment hungarian(const std::vector<std::vector<double>>& cost) {
  if (cost.empty() || cost[0].empty()) return Assignment{};
  const std::size_t rows = cost.size();
  const std::size_t cols = cost[0].size();
  for (const auto& row : cost) {
    if (row.size() != cols) throw validation_error("hungarian: ragged cost matrix");
    for (double v : row) {
      if (!std::isfinite(v)) throw validation_error("hungarian: non-finite cost entry");
    }
  }
  if (rows <= cols) return solve_rows_leq_cols(cost);

  std::vector<std::vector<double>> t(cols, std::vector<double>(rows));
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) t[c][r] = cost[r][c];
  }
  Assignment flipped = solve_rows_leq_cols(t);
  Assignment out;
  out.total_cost = flipped.total_cost;
  out.pairs.reserve(flipped.pairs.size());
  for (const auto& [c, r] : flipped.pairs) out.pairs.emplace_back(r, c);
  std::sort(out.pairs.begin(), out.pairs.end());
  return out;
}

SelectionResult selection_oracle(const CandidateSet& cands, const PanopticMap& gt,
                                 const AssignmentCostParams& params, NoObjectPolicy policy) {
  cands.validate();
  gt.validate();
  params.validate();
  if (gt.segments.empty()) {
    throw validation_error("selection_oracle: ground truth has no segments");
  }

  auto gt_masks = panoptic_to_masks(gt);
  std::vector<std::vector<double>> cost(gt_masks.size(),
                                        std::vector<double>(cands.size()));
  for (std::size_t r = 0; r < gt_masks.size(); ++r) {
    BinaryMask target = resample_nearest(gt_masks[r].first, cands.width, cands.height);
    for (std::size_t c = 0; c < cands.size(); ++c) {
      cost[r][c] = bce_dice_cost(cands.sigmas[c], target, params);
    }
  }

  SelectionResult result;
  result.assignment = hungarian(cost);
  result.unmatched_gt = gt_masks.size() - result.assignment.pairs.size();
  for (const auto& [r, c] : result.assignment.pairs) {
    result.matched_gt_segments.push_back(gt.segments[r].id);
    result.matched_candidates.push_back(c);
    result.pair_costs.push_back(cost[r][c]);
    result.was_no_object.push_back(cands.is_no_object(c) ? 1 : 0);
  }

  result.selected = select_candidates(cands, result.matched_candidates);
  if (policy == NoObjectPolicy::kStrip) {
    result.selected = strip_no_object_logit(result.selected);
  }
  return result;
}

PanopticMap classification_oracle(const PanopticMap& pred, const PanopticMap& gt) {
  pred.validate();
  gt.validate();
  if (pred.width != gt.width || pred.height != gt.height) {
    throw validation_error("classification_oracle: map shapes differ");
  }

  std::unordered_map<std::uint64_t, std::uint64_t> inter;
  std::unordered_map<std::uint32_t, std::uint64_t> pred_area, gt_area;
  for (std::size_t p = 0; p < pred.ids.size(); ++p) {
    std::uint32_t pid = pred.ids[p], gid = gt.ids[p];
    if (pid != 0) ++pred_area[pid];
    if (gid != 0) ++gt_area[gid];
    if (pid != 0 && gid != 0) {
      ++inter[(static_cast<std::uint64_t>(pid) << 32) | gid];
    }
  }

  PanopticMap out = pred;
  for (Segment& s : out.segments) {
    for (const Segment& g : gt.segments) {
      auto it = inter.find((static_cast<std::uint64_t>(s.id) << 32) | g.id);
      if (it == inter.end()) continue;
      double i = static_cast<double>(it->second);
      double u = static_cast<double>(pred_area.at(s.id) + gt_area.at(g.id)) - i;
      if (i / u > 0.5) {
        s.class_id = g.class_id;
        break;  // at most one gt overlaps above 0.5
      }
    }
  }
  return out;
}

CandidateSet segmentation_oracle_on_selection(const SelectionResult& selection,
                                              const PanopticMap& gt) {
  gt.validate();
  CandidateSet out = selection.selected;
  auto gt_masks = panoptic_to_masks(gt);
  std::unordered_map<std::uint32_t, std::size_t> by_id;
  for (std::size_t i = 0; i < gt.segments.size(); ++i) by_id.emplace(gt.segments[i].id, i);

  for (std::size_t k = 0; k < selection.matched_gt_segments.size(); ++k) {
    auto it = by_id.find(selection.matched_gt_segments[k]);
    if (it == by_id.end()) {
      throw validation_error("segmentation_oracle_on_selection: assignment references a gt "
                             "segment missing from the map");
    }
    BinaryMask target = resample_nearest(gt_masks[it->second].first, out.width, out.height);
    SoftMask sigma{out.width, out.height, std::vector<float>(target.bits.size())};
    for (std::size_t p = 0; p < target.bits.size(); ++p) {
      sigma.values[p] = target.bits[p] ? 1.0f : 0.0f;
    }
    out.sigmas[k] = std::move(sigma);
  }
  return out;
}

CandidateSet classification_oracle_on_selection(const SelectionResult& selection,
                                                const PanopticMap& gt) {
  gt.validate();
  CandidateSet out = selection.selected;
  for (std::size_t k = 0; k < selection.matched_gt_segments.size(); ++k) {
    const Segment* seg = gt.find_segment(selection.matched_gt_segments[k]);
    if (seg == nullptr) {
      throw validation_error("classification_oracle_on_selection: assignment references a gt "
                             "segment missing from the map");
    }
    if (seg->class_id >= out.num_classes) {
      throw validation_error("classification_oracle_on_selection: gt class outside the "
                             "candidate posterior");
    }
    std::vector<float> one_hot(out.posterior_width(), 0.0f);
    one_hot[seg->class_id] = 1.0f;
    out.posteriors[k] = std::move(one_hot);
  }
  return out;
}

}  // namespace ovseg
