#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ovseg/metrics.hpp"
#include "ovseg/taxonomy.hpp"

namespace ovseg {

struct ReportRow {
  std::uint32_t class_id = 0;
  std::string name;
  bool seen = true;
  double pq = 0.0;
  double sq = 0.0;
  double rq = 0.0;
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn_seg = 0;
  std::int64_t fn_cls = 0;
  double recall = 0.0;  // tp / (tp + fn_seg + fn_cls), 0 on empty denominator
};

// Full outcome of one evaluation run. The config snapshot carries every
// resolved threshold, weight and oracle flag plus the taxonomy class list,
// so a report is self-describing and two reports are diffable.
struct RunReport {
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json metadata = nlohmann::json::object();
  std::vector<ReportRow> rows;  // present classes only, sorted by class_id
  double pq_all = 0.0;
  std::optional<double> pq_seen;
  std::optional<double> pq_unseen;
};

enum class ReportFormat { kJson, kCsv };

// Builds the rows and aggregates from pooled match tallies.
RunReport build_report(const MatchReport& pooled, const Taxonomy& taxonomy,
                       nlohmann::json config, nlohmann::json metadata);

// Canonical emission: sorted keys, floats rounded to 6 significant digits,
// so identical runs produce byte-identical files. CSV carries the config
// and metadata in leading comment lines and aggregate rows at the bottom.
std::string report_to_json_string(const RunReport& report);
std::string report_to_csv_string(const RunReport& report);
void write_report(const RunReport& report, ReportFormat format,
                  const std::filesystem::path& path);

// Inverse of write_report for both formats (format sniffed from content);
// recomputes the aggregates from the rows and rejects inconsistent files.
RunReport read_report(const std::filesystem::path& path);

struct HardClassRow {
  std::uint32_t class_id = 0;
  std::string name;
  std::int64_t fn_seg = 0;   // open-vocab run
  std::int64_t fn_cls = 0;   // open-vocab run
  std::int64_t tp = 0;       // open-vocab run
  std::int64_t tp_drop = 0;  // reference tp - open-vocab tp
  double recall = 0.0;       // open-vocab run
};

// Classes whose open-vocab recall falls below the threshold, ranked by the
// true-positive drop against the reference run (descending, positive drops
// only). Both reports must carry the same taxonomy.
std::vector<HardClassRow> hard_class_diff(const RunReport& run_openvocab,
                                          const RunReport& run_reference,
                                          double recall_threshold);

// 6-significant-digit rounding used for all floats in emitted reports.
double round6(double v);

}  // namespace ovseg
