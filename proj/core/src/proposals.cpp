#include "ovseg/proposals.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>

#include "ovseg/errors.hpp"

namespace ovseg {

namespace {

constexpr double kPosteriorSumTolerance = 1e-5;
constexpr double kEnsembleClamp = 1e-12;

std::vector<float> renormalized_head(const std::vector<float>& posterior, std::size_t c) {
  double mass = 0.0;
  for (std::size_t k = 0; k < c; ++k) mass += posterior[k];
  std::vector<float> out(c);
  for (std::size_t k = 0; k < c; ++k) {
    out[k] = static_cast<float>(posterior[k] / mass);
  }
  return out;
}

}  // namespace

std::size_t CandidateSet::argmax(std::size_t candidate) const {
  const std::vector<float>& p = posteriors[candidate];
  return static_cast<std::size_t>(
      std::max_element(p.begin(), p.end()) - p.begin());
}

bool CandidateSet::is_no_object(std::size_t candidate) const {
  return has_no_object && argmax(candidate) == num_classes;
}

void CandidateSet::validate() const {
  if (num_classes == 0) throw validation_error("CandidateSet: num_classes must be >= 1");
  if (width == 0 || height == 0) {
    throw validation_error("CandidateSet: raster shape must be >= 1x1");
  }
  if (posteriors.size() != sigmas.size()) {
    throw validation_error("CandidateSet: posterior count does not match sigma count");
  }
  if (clip_posteriors && clip_posteriors->size() != sigmas.size()) {
    throw validation_error("CandidateSet: clip posterior count does not match sigma count");
  }
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    sigmas[i].validate();
    if (sigmas[i].width != width || sigmas[i].height != height) {
      throw validation_error("CandidateSet: sigma " + std::to_string(i) +
                             " does not share the set's dimensions");
    }
    const std::vector<float>& p = posteriors[i];
    if (p.size() != posterior_width()) {
      throw validation_error("CandidateSet: posterior " + std::to_string(i) + " has " +
                             std::to_string(p.size()) + " entries, expected " +
                             std::to_string(posterior_width()));
    }
    double sum = 0.0;
    for (float v : p) {
      if (!(v >= 0.0f)) {
        throw validation_error("CandidateSet: posterior " + std::to_string(i) +
                               " has a negative or non-finite entry");
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > kPosteriorSumTolerance) {
      throw validation_error("CandidateSet: posterior " + std::to_string(i) + " sums to " +
                             std::to_string(sum));
    }
    if (clip_posteriors) {
      const std::vector<float>& q = (*clip_posteriors)[i];
      if (q.size() != num_classes) {
        throw validation_error("CandidateSet: clip posterior " + std::to_string(i) +
                               " has wrong width");
      }
      double qsum = 0.0;
      for (float v : q) {
        if (!(v >= 0.0f)) {
          throw validation_error("CandidateSet: clip posterior " + std::to_string(i) +
                                 " has a negative entry");
        }
        qsum += v;
      }
      if (std::abs(qsum - 1.0) > kPosteriorSumTolerance) {
        throw validation_error("CandidateSet: clip posterior " + std::to_string(i) +
                               " sums to " + std::to_string(qsum));
      }
    }
  }
}

void FusionParams::validate() const {
  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!in_unit(object_score_threshold) || !in_unit(overlap_keep_ratio) ||
      !in_unit(sigma_threshold)) {
    throw validation_error("FusionParams: thresholds must lie in [0, 1]");
  }
}

CandidateSet select_candidates(const CandidateSet& cands,
                               std::span<const std::size_t> indices) {
  CandidateSet out;
  out.width = cands.width;
  out.height = cands.height;
  out.num_classes = cands.num_classes;
  out.has_no_object = cands.has_no_object;
  out.sigmas.reserve(indices.size());
  out.posteriors.reserve(indices.size());
  if (cands.clip_posteriors) out.clip_posteriors.emplace();
  for (std::size_t i : indices) {
    if (i >= cands.size()) throw validation_error("select_candidates: index out of range");
    out.sigmas.push_back(cands.sigmas[i]);
    out.posteriors.push_back(cands.posteriors[i]);
    if (cands.clip_posteriors) out.clip_posteriors->push_back((*cands.clip_posteriors)[i]);
  }
  return out;
}

CandidateSet drop_no_object(const CandidateSet& cands) {
  cands.validate();
  if (!cands.has_no_object) return cands;
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    if (!cands.is_no_object(i)) kept.push_back(i);
  }
  CandidateSet out = select_candidates(cands, kept);
  out.has_no_object = false;
  for (std::vector<float>& p : out.posteriors) {
    p = renormalized_head(p, cands.num_classes);
  }
  return out;
}

CandidateSet strip_no_object_logit(const CandidateSet& cands) {
  cands.validate();
  if (!cands.has_no_object) return cands;
  CandidateSet out = cands;
  out.has_no_object = false;
  out.degenerate.clear();
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::vector<float>& p = out.posteriors[i];
    double mass = 0.0;
    for (std::size_t k = 0; k < out.num_classes; ++k) mass += p[k];
    p.resize(out.num_classes);
    if (mass <= 0.0) {
      std::fill(p.begin(), p.end(), static_cast<float>(1.0 / out.num_classes));
      out.degenerate.push_back(static_cast<std::uint32_t>(i));
    } else {
      for (float& v : p) v = static_cast<float>(v / mass);
    }
  }
  return out;
}

PanopticMap panoptic_fusion(const CandidateSet& cands, const Taxonomy& taxonomy,
                            const FusionParams& params) {
  cands.validate();
  params.validate();
  taxonomy.validate();
  if (cands.has_no_object) {
    throw validation_error(
        "panoptic_fusion: posteriors still carry the no-object entry; apply a "
        "no-object policy first");
  }
  if (cands.num_classes > taxonomy.size()) {
    throw validation_error("panoptic_fusion: candidate classes exceed the taxonomy");
  }

  PanopticMap out;
  out.width = cands.width;
  out.height = cands.height;
  out.ids.assign(static_cast<std::size_t>(out.width) * out.height, 0);

  std::vector<std::size_t> surviving;
  std::vector<double> confidence(cands.size(), 0.0);
  std::vector<std::uint32_t> label(cands.size(), 0);
  for (std::size_t i = 0; i < cands.size(); ++i) {
    std::size_t cls = cands.argmax(i);
    confidence[i] = cands.posteriors[i][cls];
    label[i] = static_cast<std::uint32_t>(cls);
    if (confidence[i] >= params.object_score_threshold) surviving.push_back(i);
  }
  if (surviving.empty()) return out;  // all-void map

  // Per-pixel winner of confidence * sigma over surviving candidates; ties
  // go to the lowest candidate index.
  const std::size_t pixels = out.ids.size();
  std::vector<std::uint32_t> winner(pixels, 0);
  std::vector<double> best(pixels, -1.0);
  for (std::size_t i : surviving) {
    const SoftMask& sigma = cands.sigmas[i];
    for (std::size_t p = 0; p < pixels; ++p) {
      double score = confidence[i] * static_cast<double>(sigma.values[p]);
      if (score > best[p]) {
        best[p] = score;
        winner[p] = static_cast<std::uint32_t>(i);
      }
    }
  }

  std::uint32_t next_id = 1;
  std::unordered_map<std::uint32_t, std::uint32_t> stuff_segment;  // class -> segment id
  for (std::size_t i : surviving) {
    const SoftMask& sigma = cands.sigmas[i];
    std::uint64_t binarized_area = 0;
    std::uint64_t claimed_area = 0;
    for (std::size_t p = 0; p < pixels; ++p) {
      if (sigma.values[p] >= params.sigma_threshold) {
        ++binarized_area;
        if (winner[p] == i) ++claimed_area;
      }
    }
    if (claimed_area == 0 || binarized_area == 0) continue;
    if (static_cast<double>(claimed_area) <
        params.overlap_keep_ratio * static_cast<double>(binarized_area)) {
      continue;
    }
    std::uint32_t cls = label[i];
    bool is_stuff = !taxonomy.classes[cls].is_thing;
    std::uint32_t seg_id;
    if (params.merge_stuff && is_stuff && stuff_segment.count(cls)) {
      seg_id = stuff_segment.at(cls);
    } else {
      seg_id = next_id++;
      out.segments.push_back(Segment{seg_id, cls});
      if (params.merge_stuff && is_stuff) stuff_segment.emplace(cls, seg_id);
    }
    for (std::size_t p = 0; p < pixels; ++p) {
      if (winner[p] == i && sigma.values[p] >= params.sigma_threshold) {
        out.ids[p] = seg_id;
      }
    }
  }
  return out;
}

std::vector<float> geometric_ensemble(std::span<const float> p_in,
                                      std::span<const float> p_clip,
                                      std::span<const std::uint8_t> seen, double alpha,
                                      double beta) {
  if (p_in.size() != p_clip.size() || p_in.size() != seen.size()) {
    throw validation_error("geometric_ensemble: input sizes disagree");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0) || !(beta >= 0.0 && beta <= 1.0)) {
    throw validation_error("geometric_ensemble: alpha and beta must lie in [0, 1]");
  }
  std::vector<double> score(p_in.size());
  double total = 0.0;
  for (std::size_t c = 0; c < p_in.size(); ++c) {
    double a = std::clamp(static_cast<double>(p_in[c]), kEnsembleClamp, 1.0);
    double b = std::clamp(static_cast<double>(p_clip[c]), kEnsembleClamp, 1.0);
    double w = seen[c] ? alpha : beta;
    score[c] = std::pow(a, 1.0 - w) * std::pow(b, w);
    total += score[c];
  }
  std::vector<float> out(p_in.size());
  if (!(total > 0.0) || !std::isfinite(total)) {
    // Degenerate mass; fall back to the CLIP distribution.
    double clip_total = 0.0;
    for (float v : p_clip) clip_total += v;
    if (!(clip_total > 0.0)) {
      throw validation_error("geometric_ensemble: both distributions carry zero mass");
    }
    for (std::size_t c = 0; c < p_clip.size(); ++c) {
      out[c] = static_cast<float>(p_clip[c] / clip_total);
    }
    return out;
  }
  for (std::size_t c = 0; c < score.size(); ++c) {
    out[c] = static_cast<float>(score[c] / total);
  }
  return out;
}

}  // namespace ovseg
