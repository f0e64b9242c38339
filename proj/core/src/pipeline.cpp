#include "ovseg/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <mutex>
#include <sstream>
#include <thread>

#include "ovseg/errors.hpp"
#include "ovseg/io.hpp"
#include "ovseg/metrics.hpp"
#include "ovseg/zeroshot.hpp"

namespace ovseg {

namespace {

const char* kSubcommands[] = {"evaluate", "oracle-select", "zeroshot", "diff", "synth"};

Taxonomy resolve_taxonomy(const DumpManifest& manifest, const RunConfig& config) {
  if (!config.taxonomy_path.empty()) return load_taxonomy(config.taxonomy_path);
  return load_taxonomy(manifest.taxonomy_file);
}

std::filesystem::path resolve_gt(const DumpImage& image, const RunConfig& config) {
  if (!config.gt_path.empty()) {
    return std::filesystem::path(config.gt_path) / (image.id + ".ovpm");
  }
  if (image.gt_file) return *image.gt_file;
  throw validation_error("image '" + image.id +
                         "': no ground-truth map in the manifest and no --gt directory");
}

std::vector<std::uint8_t> seen_flags(const Taxonomy& taxonomy) {
  if (taxonomy.seen) return *taxonomy.seen;
  return std::vector<std::uint8_t>(taxonomy.size(), 1);
}

CandidateSet apply_ensemble(CandidateSet cands, const Taxonomy& taxonomy, double alpha,
                            double beta, const std::string& image_id) {
  if (!cands.clip_posteriors) {
    throw validation_error("image '" + image_id +
                           "': --ensemble requested but the dump carries no CLIP posteriors");
  }
  if (cands.has_no_object) {
    throw internal_error("apply_ensemble: expects posteriors over C");
  }
  std::vector<std::uint8_t> seen = seen_flags(taxonomy);
  for (std::size_t i = 0; i < cands.size(); ++i) {
    cands.posteriors[i] = geometric_ensemble(cands.posteriors[i], (*cands.clip_posteriors)[i],
                                             seen, alpha, beta);
  }
  return cands;
}

MatchReport score_image(const PanopticMap& pred, const PanopticMap& gt,
                        const Taxonomy& taxonomy, const RunConfig& config) {
  MatchReport report = pq_match(pred, gt, taxonomy, config.void_overlap_threshold);
  stratify_false_negatives(report, pred, gt);
  return report;
}

nlohmann::json base_metadata(const RunConfig& config, std::size_t images) {
  nlohmann::json meta = nlohmann::json::object();
  meta["images"] = images;
  meta["subcommand"] = config.subcommand;
  return meta;
}

}  // namespace

void RunConfig::validate() const {
  if (std::find(std::begin(kSubcommands), std::end(kSubcommands), subcommand) ==
      std::end(kSubcommands)) {
    throw validation_error("unknown subcommand '" + subcommand + "'");
  }
  fusion.validate();
  cost.validate();
  if (!(void_overlap_threshold >= 0.0 && void_overlap_threshold <= 1.0)) {
    throw validation_error("--void-overlap must lie in [0, 1]");
  }
  if (no_object_policy != "keep" && no_object_policy != "strip") {
    throw validation_error("--no-object-policy must be 'keep' or 'strip', got '" +
                           no_object_policy + "'");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0) || !(beta >= 0.0 && beta <= 1.0)) {
    throw validation_error("--alpha and --beta must lie in [0, 1]");
  }
  if (!(tau > 0.0)) throw validation_error("--tau must be positive");
  if (jobs < 1) throw validation_error("--jobs must be >= 1");
  if (!(recall_threshold >= 0.0 && recall_threshold <= 1.0)) {
    throw validation_error("--recall-threshold must lie in [0, 1]");
  }

  bool is_select = subcommand == "oracle-select";
  if ((oracle_seg_on_selection || oracle_cls_on_selection) && !is_select) {
    throw validation_error(
        "--oracle-seg-on-selection/--oracle-cls-on-selection require the oracle-select "
        "subcommand");
  }
  if (oracle_cls_on_selection && ensemble) {
    throw validation_error(
        "--ensemble would mix the oracle one-hot posteriors back with CLIP; drop one of the "
        "two flags");
  }
  if (subcommand == "evaluate" || subcommand == "oracle-select") {
    if (dump_path.empty()) throw validation_error(subcommand + " requires --dump");
  } else if (subcommand == "zeroshot") {
    if (dump_path.empty()) throw validation_error("zeroshot requires --dump");
    if (text_embeddings_path.empty()) {
      throw validation_error("zeroshot requires --text-embeddings");
    }
  } else if (subcommand == "diff") {
    if (run_path.empty() || reference_path.empty()) {
      throw validation_error("diff requires --run and --reference");
    }
  } else if (subcommand == "synth") {
    if (out_path.empty()) throw validation_error("synth requires --out");
    if (synth.images == 0) throw validation_error("--images must be >= 1");
    if ((synth.swap_feature_a >= 0) != (synth.swap_feature_b >= 0)) {
      throw validation_error("--swap-features needs both class indices");
    }
  }
}

NoObjectPolicy RunConfig::policy() const {
  return no_object_policy == "strip" ? NoObjectPolicy::kStrip : NoObjectPolicy::kKeep;
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j;
  j["subcommand"] = subcommand;
  j["dump"] = dump_path;
  j["gt"] = gt_path;
  j["taxonomy"] = taxonomy_path;
  j["text_embeddings"] = text_embeddings_path;
  j["object_score_threshold"] = fusion.object_score_threshold;
  j["overlap_keep_ratio"] = fusion.overlap_keep_ratio;
  j["sigma_threshold"] = fusion.sigma_threshold;
  j["merge_stuff"] = fusion.merge_stuff;
  j["bce_weight"] = cost.bce_weight;
  j["dice_weight"] = cost.dice_weight;
  j["prob_clamp"] = cost.prob_clamp;
  j["void_overlap_threshold"] = void_overlap_threshold;
  j["oracle_cls"] = oracle_cls;
  j["no_object_policy"] = no_object_policy;
  j["oracle_seg_on_selection"] = oracle_seg_on_selection;
  j["oracle_cls_on_selection"] = oracle_cls_on_selection;
  j["ensemble"] = ensemble;
  j["alpha"] = alpha;
  j["beta"] = beta;
  j["tau"] = tau;
  j["recall_threshold"] = recall_threshold;
  j["seed"] = seed;
  if (subcommand == "synth") {
    j["synth"] = nlohmann::json{{"images", synth.images},
                                {"width", synth.width},
                                {"height", synth.height},
                                {"min_segments", synth.min_segments},
                                {"max_segments", synth.max_segments},
                                {"class_count", synth.class_count},
                                {"erosion_radius", synth.erosion_radius},
                                {"dilation_radius", synth.dilation_radius},
                                {"class_flip_prob", synth.class_flip_prob},
                                {"no_object_flip_prob", synth.no_object_flip_prob},
                                {"spurious_candidates", synth.spurious_candidates},
                                {"emit_features", synth.emit_features},
                                {"swap_feature_a", synth.swap_feature_a},
                                {"swap_feature_b", synth.swap_feature_b}};
  }
  return j;
}

void RunConfig::merge_json(const nlohmann::json& j) {
  if (!j.is_object()) throw validation_error("config file must hold a JSON object");
  dump_path = j.value("dump", dump_path);
  gt_path = j.value("gt", gt_path);
  taxonomy_path = j.value("taxonomy", taxonomy_path);
  text_embeddings_path = j.value("text_embeddings", text_embeddings_path);
  report_json_path = j.value("report_json", report_json_path);
  report_csv_path = j.value("report_csv", report_csv_path);
  audit_path = j.value("audit", audit_path);
  out_path = j.value("out", out_path);
  fusion.object_score_threshold =
      j.value("object_score_threshold", fusion.object_score_threshold);
  fusion.overlap_keep_ratio = j.value("overlap_keep_ratio", fusion.overlap_keep_ratio);
  fusion.sigma_threshold = j.value("sigma_threshold", fusion.sigma_threshold);
  fusion.merge_stuff = j.value("merge_stuff", fusion.merge_stuff);
  cost.bce_weight = j.value("bce_weight", cost.bce_weight);
  cost.dice_weight = j.value("dice_weight", cost.dice_weight);
  cost.prob_clamp = j.value("prob_clamp", cost.prob_clamp);
  void_overlap_threshold = j.value("void_overlap_threshold", void_overlap_threshold);
  oracle_cls = j.value("oracle_cls", oracle_cls);
  no_object_policy = j.value("no_object_policy", no_object_policy);
  oracle_seg_on_selection = j.value("oracle_seg_on_selection", oracle_seg_on_selection);
  oracle_cls_on_selection = j.value("oracle_cls_on_selection", oracle_cls_on_selection);
  ensemble = j.value("ensemble", ensemble);
  alpha = j.value("alpha", alpha);
  beta = j.value("beta", beta);
  tau = j.value("tau", tau);
  run_path = j.value("run", run_path);
  reference_path = j.value("reference", reference_path);
  recall_threshold = j.value("recall_threshold", recall_threshold);
  jobs = j.value("jobs", jobs);
  seed = j.value("seed", seed);
  if (j.contains("synth")) {
    const nlohmann::json& s = j.at("synth");
    synth.images = s.value("images", synth.images);
    synth.width = s.value("width", synth.width);
    synth.height = s.value("height", synth.height);
    synth.min_segments = s.value("min_segments", synth.min_segments);
    synth.max_segments = s.value("max_segments", synth.max_segments);
    synth.class_count = s.value("class_count", synth.class_count);
    synth.erosion_radius = s.value("erosion_radius", synth.erosion_radius);
    synth.dilation_radius = s.value("dilation_radius", synth.dilation_radius);
    synth.class_flip_prob = s.value("class_flip_prob", synth.class_flip_prob);
    synth.no_object_flip_prob = s.value("no_object_flip_prob", synth.no_object_flip_prob);
    synth.spurious_candidates = s.value("spurious_candidates", synth.spurious_candidates);
    synth.emit_features = s.value("emit_features", synth.emit_features);
    synth.swap_feature_a = s.value("swap_feature_a", synth.swap_feature_a);
    synth.swap_feature_b = s.value("swap_feature_b", synth.swap_feature_b);
  }
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  int workers = static_cast<int>(std::min<std::size_t>(std::max(jobs, 1), n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  auto body = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (int t = 0; t < workers; ++t) threads.emplace_back(body);
  for (std::thread& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

RunReport run_evaluate(const RunConfig& config) {
  config.validate();
  DumpManifest manifest = load_manifest(config.dump_path);
  Taxonomy taxonomy = resolve_taxonomy(manifest, config);
  const std::size_t n = manifest.images.size();

  std::vector<MatchReport> reports(n);
  parallel_for(n, config.jobs, [&](std::size_t i) {
    const DumpImage& image = manifest.images[i];
    CandidateSet cands = load_candidates(image.candidates_file);
    PanopticMap gt = load_panoptic_map(resolve_gt(image, config));
    CandidateSet working = drop_no_object(cands);
    if (config.ensemble) {
      working = apply_ensemble(std::move(working), taxonomy, config.alpha, config.beta,
                               image.id);
    }
    PanopticMap pred = panoptic_fusion(working, taxonomy, config.fusion);
    if (config.oracle_cls) pred = classification_oracle(pred, gt);
    reports[i] = score_image(pred, gt, taxonomy, config);
  });

  MatchReport pooled = merge_match_reports(reports);
  return build_report(pooled, taxonomy, config.to_json(), base_metadata(config, n));
}

RunReport run_oracle_select(const RunConfig& config) {
  config.validate();
  DumpManifest manifest = load_manifest(config.dump_path);
  Taxonomy taxonomy = resolve_taxonomy(manifest, config);
  const std::size_t n = manifest.images.size();

  std::vector<MatchReport> reports(n);
  std::vector<nlohmann::json> audits(n);
  const bool want_audit = !config.audit_path.empty();

  parallel_for(n, config.jobs, [&](std::size_t i) {
    const DumpImage& image = manifest.images[i];
    CandidateSet cands = load_candidates(image.candidates_file);
    PanopticMap gt = load_panoptic_map(resolve_gt(image, config));

    SelectionResult sel = selection_oracle(cands, gt, config.cost, config.policy());
    if (config.oracle_seg_on_selection) {
      sel.selected = segmentation_oracle_on_selection(sel, gt);
    }
    if (config.oracle_cls_on_selection) {
      sel.selected = classification_oracle_on_selection(sel, gt);
    }

    CandidateSet working =
        sel.selected.has_no_object ? drop_no_object(sel.selected) : sel.selected;
    if (config.ensemble) {
      working = apply_ensemble(std::move(working), taxonomy, config.alpha, config.beta,
                               image.id);
    }
    PanopticMap pred = panoptic_fusion(working, taxonomy, config.fusion);
    if (config.oracle_cls) pred = classification_oracle(pred, gt);
    reports[i] = score_image(pred, gt, taxonomy, config);

    if (want_audit) {
      nlohmann::json pairs = nlohmann::json::array();
      for (std::size_t k = 0; k < sel.matched_candidates.size(); ++k) {
        pairs.push_back(nlohmann::json{
            {"gt_segment", sel.matched_gt_segments[k]},
            {"candidate", sel.matched_candidates[k]},
            {"cost", sel.pair_costs[k]},
            {"argmax_no_object", sel.was_no_object[k] != 0}});
      }
      audits[i] = nlohmann::json{{"id", image.id},
                                 {"total_cost", sel.assignment.total_cost},
                                 {"unmatched_gt", sel.unmatched_gt},
                                 {"pairs", std::move(pairs)}};
    }
  });

  if (want_audit) {
    nlohmann::json audit{{"images", nlohmann::json(audits)}};
    write_file_bytes(config.audit_path, audit.dump(2) + "\n");
  }

  MatchReport pooled = merge_match_reports(reports);
  return build_report(pooled, taxonomy, config.to_json(), base_metadata(config, n));
}

RunReport run_zeroshot(const RunConfig& config) {
  config.validate();
  DumpManifest manifest = load_manifest(config.dump_path);
  Taxonomy taxonomy = resolve_taxonomy(manifest, config);
  TextEmbeddings texts = load_text_embeddings(config.text_embeddings_path);
  const std::size_t n = manifest.images.size();

  std::vector<MatchReport> reports(n);
  std::vector<std::int64_t> skips(n, 0);
  parallel_for(n, config.jobs, [&](std::size_t i) {
    const DumpImage& image = manifest.images[i];
    if (!image.features_file) {
      throw validation_error("image '" + image.id + "': manifest carries no feature grid");
    }
    ZeroShotImage zs;
    zs.features = load_feature_grid(*image.features_file);
    zs.gt = load_panoptic_map(resolve_gt(image, config));
    SegmentationOracleResult result =
        segmentation_oracle_eval(std::span<const ZeroShotImage>(&zs, 1), texts, config.tau,
                                 taxonomy);
    reports[i] = std::move(result.pooled);
    skips[i] = result.empty_mask_skips;
  });

  MatchReport pooled = merge_match_reports(reports);
  nlohmann::json meta = base_metadata(config, n);
  std::int64_t total_skips = 0;
  for (std::int64_t s : skips) total_skips += s;
  meta["empty_mask_skips"] = total_skips;
  return build_report(pooled, taxonomy, config.to_json(), std::move(meta));
}

std::vector<HardClassRow> run_diff(const RunConfig& config) {
  config.validate();
  RunReport run = read_report(config.run_path);
  RunReport reference = read_report(config.reference_path);
  return hard_class_diff(run, reference, config.recall_threshold);
}

std::string hard_class_table_to_csv(const std::vector<HardClassRow>& rows) {
  std::ostringstream out;
  out << "class_id,name,fn_seg,fn_cls,tp,tp_drop,recall\n";
  for (const HardClassRow& row : rows) {
    std::string name = row.name;
    if (name.find_first_of(",\"\n") != std::string::npos) {
      std::string quoted = "\"";
      for (char c : name) quoted += c == '"' ? std::string("\"\"") : std::string(1, c);
      name = quoted + "\"";
    }
    out << row.class_id << ',' << name << ',' << row.fn_seg << ',' << row.fn_cls << ','
        << row.tp << ',' << row.tp_drop << ',' << round6(row.recall) << "\n";
  }
  return out.str();
}

nlohmann::json hard_class_table_to_json(const std::vector<HardClassRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const HardClassRow& row : rows) {
    out.push_back(nlohmann::json{{"class_id", row.class_id},
                                 {"name", row.name},
                                 {"fn_seg", row.fn_seg},
                                 {"fn_cls", row.fn_cls},
                                 {"tp", row.tp},
                                 {"tp_drop", row.tp_drop},
                                 {"recall", round6(row.recall)}});
  }
  return out;
}

void write_configured_reports(const RunReport& report, const RunConfig& config) {
  if (!config.report_json_path.empty()) {
    write_report(report, ReportFormat::kJson, config.report_json_path);
  }
  if (!config.report_csv_path.empty()) {
    write_report(report, ReportFormat::kCsv, config.report_csv_path);
  }
}

}  // namespace ovseg
