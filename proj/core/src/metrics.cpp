#include "ovseg/metrics.hpp"

#include <algorithm>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include "ovseg/errors.hpp"

namespace ovseg {

namespace {

std::uint64_t pair_key(std::uint32_t pred_id, std::uint32_t gt_id) {
  return (static_cast<std::uint64_t>(pred_id) << 32) | gt_id;
}

void check_same_shape(const PanopticMap& pred, const PanopticMap& gt) {
  if (pred.width != gt.width || pred.height != gt.height) {
    throw validation_error("panoptic maps differ in shape: prediction " +
                           std::to_string(pred.width) + "x" + std::to_string(pred.height) +
                           " vs ground truth " + std::to_string(gt.width) + "x" +
                           std::to_string(gt.height));
  }
}

void check_classes(const PanopticMap& map, const Taxonomy& taxonomy, const char* which) {
  for (const Segment& s : map.segments) {
    if (s.class_id >= taxonomy.size()) {
      throw validation_error(std::string(which) + " segment " + std::to_string(s.id) +
                             " has class " + std::to_string(s.class_id) +
                             " outside the taxonomy of size " + std::to_string(taxonomy.size()));
    }
  }
}

// Pixel-overlap table between two aligned panoptic rasters. gt id 0 rows
// accumulate each prediction's void overlap.
struct Contingency {
  std::unordered_map<std::uint64_t, std::uint64_t> inter;
  std::unordered_map<std::uint32_t, std::uint64_t> pred_area;
  std::unordered_map<std::uint32_t, std::uint64_t> gt_area;

  std::uint64_t intersection(std::uint32_t pred_id, std::uint32_t gt_id) const {
    auto it = inter.find(pair_key(pred_id, gt_id));
    return it == inter.end() ? 0 : it->second;
  }
};

Contingency build_contingency(const PanopticMap& pred, const PanopticMap& gt) {
  Contingency c;
  for (std::size_t p = 0; p < pred.ids.size(); ++p) {
    std::uint32_t pid = pred.ids[p];
    std::uint32_t gid = gt.ids[p];
    if (pid != 0) {
      ++c.pred_area[pid];
      ++c.inter[pair_key(pid, gid)];
    }
    if (gid != 0) ++c.gt_area[gid];
  }
  return c;
}

double pair_iou(const Contingency& c, std::uint32_t pred_id, std::uint32_t gt_id) {
  std::uint64_t inter = c.intersection(pred_id, gt_id);
  if (inter == 0) return 0.0;
  std::uint64_t uni = c.pred_area.at(pred_id) + c.gt_area.at(gt_id) - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace

double iou(const BinaryMask& a, const BinaryMask& b) {
  if (a.width != b.width || a.height != b.height) {
    throw validation_error("iou: mask shapes differ: " + std::to_string(a.width) + "x" +
                           std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                           std::to_string(b.height));
  }
  std::uint64_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.bits.size(); ++i) {
    inter += a.bits[i] & b.bits[i];
    uni += a.bits[i] | b.bits[i];
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

MatchReport pq_match(const PanopticMap& pred, const PanopticMap& gt, const Taxonomy& taxonomy,
                     double void_overlap_threshold) {
  pred.validate();
  gt.validate();
  check_same_shape(pred, gt);
  check_classes(pred, taxonomy, "prediction");
  check_classes(gt, taxonomy, "ground truth");

  Contingency c = build_contingency(pred, gt);
  MatchReport report;
  std::unordered_set<std::uint32_t> matched_pred, matched_gt;

  // Disjointness makes the > 0.5 match unique per segment, so scanning in
  // table order is order-independent by construction.
  for (const Segment& g : gt.segments) {
    for (const Segment& p : pred.segments) {
      if (p.class_id != g.class_id) continue;
      double v = pair_iou(c, p.id, g.id);
      if (v > 0.5) {
        if (matched_gt.count(g.id) || matched_pred.count(p.id)) {
          throw internal_error("pq_match: non-unique match above iou 0.5");
        }
        matched_gt.insert(g.id);
        matched_pred.insert(p.id);
        report.tp.push_back(SegmentMatch{p.id, g.id, v});
        ClassStats& cs = report.per_class[g.class_id];
        ++cs.tp;
        cs.iou_sum += v;
      }
    }
  }

  for (const Segment& g : gt.segments) {
    if (matched_gt.count(g.id)) continue;
    report.fn_seg.push_back(g.id);
    ++report.per_class[g.class_id].fn_seg;
  }

  for (const Segment& p : pred.segments) {
    if (matched_pred.count(p.id)) continue;
    std::uint64_t void_inter = c.intersection(p.id, 0);
    std::uint64_t area = c.pred_area.at(p.id);
    if (static_cast<double>(void_inter) >
        void_overlap_threshold * static_cast<double>(area)) {
      continue;  // mostly unlabeled region, exempt from FP
    }
    report.fp.push_back(p.id);
    ++report.per_class[p.class_id].fp;
  }

  return report;
}

void stratify_false_negatives(MatchReport& report, const PanopticMap& pred,
                              const PanopticMap& gt) {
  if (report.fn_seg.empty()) return;
  Contingency c = build_contingency(pred, gt);
  std::vector<std::uint32_t> still_seg;
  for (std::uint32_t gid : report.fn_seg) {
    const Segment* g = gt.find_segment(gid);
    if (g == nullptr) throw validation_error("stratify_false_negatives: unknown gt segment id");
    const Segment* offender = nullptr;
    for (const Segment& p : pred.segments) {
      if (pair_iou(c, p.id, gid) > 0.5) {
        offender = &p;
        break;  // at most one by disjointness
      }
    }
    if (offender != nullptr) {
      if (offender->class_id == g->class_id) {
        throw internal_error("stratify_false_negatives: same-class overlap left unmatched");
      }
      report.fn_cls.emplace_back(gid, offender->id);
      ClassStats& cs = report.per_class[g->class_id];
      --cs.fn_seg;
      ++cs.fn_cls;
    } else {
      still_seg.push_back(gid);
    }
  }
  report.fn_seg = std::move(still_seg);
}

MatchReport merge_match_reports(std::span<const MatchReport> reports) {
  MatchReport merged;
  for (const MatchReport& r : reports) {
    for (const auto& [class_id, stats] : r.per_class) {
      ClassStats& cs = merged.per_class[class_id];
      cs.tp += stats.tp;
      cs.fp += stats.fp;
      cs.fn_seg += stats.fn_seg;
      cs.fn_cls += stats.fn_cls;
      cs.iou_sum += stats.iou_sum;
    }
  }
  return merged;
}

PqScores pq_scores(const MatchReport& report, const Taxonomy& taxonomy) {
  taxonomy.validate();
  PqScores scores;
  double sum_all = 0.0, sum_seen = 0.0, sum_unseen = 0.0;
  std::int64_t n_all = 0, n_seen = 0, n_unseen = 0;

  for (const auto& [class_id, stats] : report.per_class) {
    if (class_id >= taxonomy.size()) {
      throw validation_error("pq_scores: class " + std::to_string(class_id) +
                             " outside the taxonomy of size " + std::to_string(taxonomy.size()));
    }
    if (!stats.present()) continue;
    ClassScore cs;
    cs.stats = stats;
    cs.sq = stats.tp > 0 ? stats.iou_sum / static_cast<double>(stats.tp) : 0.0;
    double denom = static_cast<double>(stats.tp) + 0.5 * static_cast<double>(stats.fp) +
                   0.5 * static_cast<double>(stats.fn());
    cs.rq = denom > 0.0 ? static_cast<double>(stats.tp) / denom : 0.0;
    cs.pq = cs.sq * cs.rq;
    scores.per_class.emplace(class_id, cs);

    sum_all += cs.pq;
    ++n_all;
    if (taxonomy.seen) {
      if ((*taxonomy.seen)[class_id]) {
        sum_seen += cs.pq;
        ++n_seen;
      } else {
        sum_unseen += cs.pq;
        ++n_unseen;
      }
    }
  }

  if (n_all == 0) {
    throw validation_error("pq_scores: no classes evaluated");
  }
  scores.pq_all = sum_all / static_cast<double>(n_all);
  if (taxonomy.seen) {
    if (n_seen > 0) scores.pq_seen = sum_seen / static_cast<double>(n_seen);
    if (n_unseen > 0) scores.pq_unseen = sum_unseen / static_cast<double>(n_unseen);
  }
  return scores;
}

}  // namespace ovseg
