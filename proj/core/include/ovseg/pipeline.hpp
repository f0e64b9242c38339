#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ovseg/oracles.hpp"
#include "ovseg/proposals.hpp"
#include "ovseg/report.hpp"

namespace ovseg {

struct SynthParams {
  std::uint32_t images = 4;
  std::uint32_t width = 64;
  std::uint32_t height = 64;
  std::uint32_t min_segments = 2;
  std::uint32_t max_segments = 6;
  std::uint32_t class_count = 8;
  std::uint32_t erosion_radius = 0;
  std::uint32_t dilation_radius = 0;
  double class_flip_prob = 0.0;
  double no_object_flip_prob = 0.0;
  std::uint32_t spurious_candidates = 0;
  bool emit_features = false;
  std::int64_t swap_feature_a = -1;  // swap these two classes' feature
  std::int64_t swap_feature_b = -1;  // constants to fake misclassification
};

// Resolved configuration of one run. Precedence at the CLI is flags >
// config file > OVSEG_JOBS (jobs only) > built-in defaults; the resolved
// snapshot (minus execution details like jobs and output paths) is embedded
// in every report.
struct RunConfig {
  std::string subcommand;

  std::string dump_path;
  std::string gt_path;        // directory of <image id>.ovpm; overrides manifest gt
  std::string taxonomy_path;  // overrides the manifest taxonomy
  std::string text_embeddings_path;

  std::string report_json_path;
  std::string report_csv_path;
  std::string audit_path;
  std::string out_path;  // synth output directory / diff table

  FusionParams fusion;
  AssignmentCostParams cost;
  double void_overlap_threshold = kDefaultVoidOverlapThreshold;

  bool oracle_cls = false;
  std::string no_object_policy = "keep";  // keep | strip
  bool oracle_seg_on_selection = false;
  bool oracle_cls_on_selection = false;

  bool ensemble = false;
  double alpha = 0.4;
  double beta = 0.8;
  double tau = kDefaultTau;

  std::string run_path;        // diff: open-vocab report
  std::string reference_path;  // diff: in-domain report
  double recall_threshold = 0.1;

  SynthParams synth;

  int jobs = 1;
  std::uint64_t seed = 0;

  void validate() const;
  NoObjectPolicy policy() const;
  nlohmann::json to_json() const;       // report-embedded snapshot
  void merge_json(const nlohmann::json& j);  // config-file layer
};

// Index-parallel loop with deterministic per-index output slots; the first
// worker exception is rethrown after join.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

RunReport run_evaluate(const RunConfig& config);
RunReport run_oracle_select(const RunConfig& config);
RunReport run_zeroshot(const RunConfig& config);
std::vector<HardClassRow> run_diff(const RunConfig& config);

std::string hard_class_table_to_csv(const std::vector<HardClassRow>& rows);
nlohmann::json hard_class_table_to_json(const std::vector<HardClassRow>& rows);

// Writes the configured report outputs (JSON and/or CSV).
void write_configured_reports(const RunReport& report, const RunConfig& config);

}  // namespace ovseg
