#include "ovseg/testkit/reference.hpp"

#include <algorithm>
#include <limits>
#include <utility>

#include "ovseg/errors.hpp"

namespace ovseg::testkit {

namespace {

double mask_iou(const BinaryMask& a, const BinaryMask& b) {
  std::uint64_t inter = 0, uni = 0;
  for (std::size_t p = 0; p < a.bits.size(); ++p) {
    if (a.bits[p] && b.bits[p]) ++inter;
    if (a.bits[p] || b.bits[p]) ++uni;
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace

std::map<std::uint32_t, BruteClassScore> brute_pq(const PanopticMap& pred,
                                                  const PanopticMap& gt,
                                                  double void_overlap_threshold) {
  pred.validate();
  gt.validate();
  if (pred.width != gt.width || pred.height != gt.height) {
    throw validation_error("brute_pq: map shapes differ");
  }
  auto pred_masks = panoptic_to_masks(pred);
  auto gt_masks = panoptic_to_masks(gt);

  std::map<std::uint32_t, BruteClassScore> per_class;
  std::vector<char> pred_matched(pred_masks.size(), 0);
  std::vector<char> gt_matched(gt_masks.size(), 0);

  for (std::size_t g = 0; g < gt_masks.size(); ++g) {
    for (std::size_t p = 0; p < pred_masks.size(); ++p) {
      if (pred_masks[p].second != gt_masks[g].second) continue;
      double v = mask_iou(pred_masks[p].first, gt_masks[g].first);
      if (v > 0.5) {
        if (gt_matched[g] || pred_matched[p]) {
          throw internal_error("brute_pq: non-unique match above iou 0.5");
        }
        gt_matched[g] = pred_matched[p] = 1;
        BruteClassScore& cs = per_class[gt_masks[g].second];
        ++cs.tp;
        cs.iou_sum += v;
      }
    }
  }
  for (std::size_t g = 0; g < gt_masks.size(); ++g) {
    if (!gt_matched[g]) ++per_class[gt_masks[g].second].fn;
  }
  for (std::size_t p = 0; p < pred_masks.size(); ++p) {
    if (pred_matched[p]) continue;
    std::uint64_t area = 0, void_overlap = 0;
    const BinaryMask& m = pred_masks[p].first;
    for (std::size_t px = 0; px < m.bits.size(); ++px) {
      if (!m.bits[px]) continue;
      ++area;
      if (gt.ids[px] == 0) ++void_overlap;
    }
    if (static_cast<double>(void_overlap) >
        void_overlap_threshold * static_cast<double>(area)) {
      continue;
    }
    ++per_class[pred_masks[p].second].fp;
  }

  for (auto it = per_class.begin(); it != per_class.end();) {
    BruteClassScore& cs = it->second;
    if (cs.tp + cs.fp + cs.fn == 0) {
      it = per_class.erase(it);
      continue;
    }
    double denom = static_cast<double>(cs.tp) + 0.5 * static_cast<double>(cs.fp) +
                   0.5 * static_cast<double>(cs.fn);
    cs.pq = denom > 0.0 ? cs.iou_sum / denom : 0.0;
    cs.sq = cs.tp > 0 ? cs.iou_sum / static_cast<double>(cs.tp) : 0.0;
    cs.rq = denom > 0.0 ? static_cast<double>(cs.tp) / denom : 0.0;
    ++it;
  }
  return per_class;
}

double brute_pq_mean(const std::map<std::uint32_t, BruteClassScore>& per_class) {
  if (per_class.empty()) throw validation_error("brute_pq_mean: no classes evaluated");
  double sum = 0.0;
  for (const auto& [_, cs] : per_class) sum += cs.pq;
  return sum / static_cast<double>(per_class.size());
}

namespace {

void search(const std::vector<std::vector<double>>& cost, std::size_t row, double acc,
            std::uint64_t used, bool prune, double& best) {
  if (prune && acc >= best) return;  // valid only for nonnegative costs
  if (row == cost.size()) {
    best = std::min(best, acc);
    return;
  }
  for (std::size_t col = 0; col < cost[row].size(); ++col) {
    if (used & (1ull << col)) continue;
    search(cost, row + 1, acc + cost[row][col], used | (1ull << col), prune, best);
  }
}

}  // namespace

double brute_assignment(const std::vector<std::vector<double>>& cost) {
  if (cost.empty() || cost[0].empty()) return 0.0;
  std::size_t rows = cost.size(), cols = cost[0].size();
  const std::vector<std::vector<double>>* m = &cost;
  std::vector<std::vector<double>> t;
  if (rows > cols) {
    t.assign(cols, std::vector<double>(rows));
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) t[c][r] = cost[r][c];
    }
    m = &t;
    std::swap(rows, cols);
  }
  if (rows > 7) throw validation_error("brute_assignment: min side exceeds 7");
  if (cols > 63) throw validation_error("brute_assignment: too many columns");
  bool nonnegative = true;
  for (const auto& row : *m) {
    for (double v : row) nonnegative &= v >= 0.0;
  }
  double best = std::numeric_limits<double>::infinity();
  search(*m, 0, 0.0, 0, nonnegative, best);
  return best;
}

}  // namespace ovseg::testkit
