#include "ovseg/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <set>
#include <sstream>

#include "ovseg/errors.hpp"
#include "ovseg/io.hpp"

namespace ovseg {

namespace {

constexpr double kAggregateTolerance = 1e-5;

nlohmann::json round_floats(const nlohmann::json& j) {
  if (j.is_number_float()) return round6(j.get<double>());
  if (j.is_object()) {
    nlohmann::json out = nlohmann::json::object();
    for (auto it = j.begin(); it != j.end(); ++it) out[it.key()] = round_floats(it.value());
    return out;
  }
  if (j.is_array()) {
    nlohmann::json out = nlohmann::json::array();
    for (const nlohmann::json& v : j) out.push_back(round_floats(v));
    return out;
  }
  return j;
}

std::string format6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string csv_quote(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

std::vector<std::string> csv_split(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

double parse_double(const std::string& s, const char* what) {
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') {
    throw format_error(std::string("report: cannot parse ") + what + " from '" + s + "'");
  }
  return v;
}

std::int64_t parse_int(const std::string& s, const char* what) {
  char* end = nullptr;
  long long v = std::strtoll(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0') {
    throw format_error(std::string("report: cannot parse ") + what + " from '" + s + "'");
  }
  return v;
}

bool split_present(const RunReport& report) {
  return report.pq_seen.has_value() || report.pq_unseen.has_value();
}

// Recomputes the aggregate means from the rows and checks them against the
// stored values; the emitted 6-digit rounding stays far inside tolerance.
void check_self_consistency(const RunReport& report) {
  if (report.rows.empty()) throw format_error("report: no class rows");
  double sum_all = 0.0, sum_seen = 0.0, sum_unseen = 0.0;
  std::int64_t n_seen = 0, n_unseen = 0;
  for (const ReportRow& row : report.rows) {
    for (double v : {row.pq, row.sq, row.rq, row.recall}) {
      if (!(v >= 0.0 && v <= 1.0)) {
        throw format_error("report: class " + std::to_string(row.class_id) +
                           " has a metric outside [0, 1]");
      }
    }
    std::int64_t denom = row.tp + row.fn_seg + row.fn_cls;
    double recall = denom > 0 ? static_cast<double>(row.tp) / static_cast<double>(denom) : 0.0;
    if (std::abs(recall - row.recall) > kAggregateTolerance) {
      throw format_error("report: recall of class " + std::to_string(row.class_id) +
                         " does not match its tallies");
    }
    sum_all += row.pq;
    if (row.seen) {
      sum_seen += row.pq;
      ++n_seen;
    } else {
      sum_unseen += row.pq;
      ++n_unseen;
    }
  }
  double mean_all = sum_all / static_cast<double>(report.rows.size());
  if (std::abs(mean_all - report.pq_all) > kAggregateTolerance) {
    throw format_error("report: pq_all does not match the mean over class rows");
  }
  if (split_present(report)) {
    if (report.pq_seen) {
      if (n_seen == 0 ||
          std::abs(sum_seen / static_cast<double>(n_seen) - *report.pq_seen) >
              kAggregateTolerance) {
        throw format_error("report: pq_seen does not match the seen class rows");
      }
    } else if (n_seen > 0) {
      throw format_error("report: pq_seen missing despite seen class rows");
    }
    if (report.pq_unseen) {
      if (n_unseen == 0 ||
          std::abs(sum_unseen / static_cast<double>(n_unseen) - *report.pq_unseen) >
              kAggregateTolerance) {
        throw format_error("report: pq_unseen does not match the unseen class rows");
      }
    } else if (n_unseen > 0) {
      throw format_error("report: pq_unseen missing despite unseen class rows");
    }
  }
}

}  // namespace

double round6(double v) {
  return std::strtod(format6(v).c_str(), nullptr);
}

RunReport build_report(const MatchReport& pooled, const Taxonomy& taxonomy,
                       nlohmann::json config, nlohmann::json metadata) {
  PqScores scores = pq_scores(pooled, taxonomy);
  RunReport report;
  report.config = std::move(config);
  report.metadata = std::move(metadata);
  report.metadata["aggregation"] = "present-classes";
  nlohmann::json names = nlohmann::json::array();
  for (const TaxonomyClass& cls : taxonomy.classes) names.push_back(cls.name);
  report.metadata["taxonomy"] = std::move(names);

  for (const auto& [class_id, score] : scores.per_class) {
    ReportRow row;
    row.class_id = class_id;
    row.name = taxonomy.classes[class_id].name;
    row.seen = taxonomy.is_seen(class_id);
    row.pq = score.pq;
    row.sq = score.sq;
    row.rq = score.rq;
    row.tp = score.stats.tp;
    row.fp = score.stats.fp;
    row.fn_seg = score.stats.fn_seg;
    row.fn_cls = score.stats.fn_cls;
    std::int64_t denom = row.tp + row.fn_seg + row.fn_cls;
    row.recall = denom > 0 ? static_cast<double>(row.tp) / static_cast<double>(denom) : 0.0;
    report.rows.push_back(std::move(row));
  }
  report.pq_all = scores.pq_all;
  report.pq_seen = scores.pq_seen;
  report.pq_unseen = scores.pq_unseen;
  return report;
}

std::string report_to_json_string(const RunReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const ReportRow& row : report.rows) {
    rows.push_back(nlohmann::json{{"class_id", row.class_id},
                                  {"name", row.name},
                                  {"seen", row.seen},
                                  {"pq", round6(row.pq)},
                                  {"sq", round6(row.sq)},
                                  {"rq", round6(row.rq)},
                                  {"tp", row.tp},
                                  {"fp", row.fp},
                                  {"fn_seg", row.fn_seg},
                                  {"fn_cls", row.fn_cls},
                                  {"recall", round6(row.recall)}});
  }
  nlohmann::json aggregates{{"pq_all", round6(report.pq_all)}};
  aggregates["pq_seen"] = report.pq_seen ? nlohmann::json(round6(*report.pq_seen))
                                         : nlohmann::json(nullptr);
  aggregates["pq_unseen"] = report.pq_unseen ? nlohmann::json(round6(*report.pq_unseen))
                                             : nlohmann::json(nullptr);
  nlohmann::json j{{"aggregates", aggregates},
                   {"classes", rows},
                   {"config", round_floats(report.config)},
                   {"metadata", round_floats(report.metadata)}};
  return j.dump(2) + "\n";
}

std::string report_to_csv_string(const RunReport& report) {
  std::ostringstream out;
  out << "# config " << round_floats(report.config).dump() << "\n";
  out << "# metadata " << round_floats(report.metadata).dump() << "\n";
  out << "class_id,name,seen,pq,sq,rq,tp,fp,fn_seg,fn_cls,recall\n";
  bool has_split = split_present(report);
  for (const ReportRow& row : report.rows) {
    out << row.class_id << ',' << csv_quote(row.name) << ','
        << (has_split ? (row.seen ? "1" : "0") : "") << ',' << format6(round6(row.pq)) << ','
        << format6(round6(row.sq)) << ',' << format6(round6(row.rq)) << ',' << row.tp << ','
        << row.fp << ',' << row.fn_seg << ',' << row.fn_cls << ','
        << format6(round6(row.recall)) << "\n";
  }
  out << "aggregate,pq_all,," << format6(round6(report.pq_all)) << ",,,,,,,\n";
  if (report.pq_seen) {
    out << "aggregate,pq_seen,," << format6(round6(*report.pq_seen)) << ",,,,,,,\n";
  }
  if (report.pq_unseen) {
    out << "aggregate,pq_unseen,," << format6(round6(*report.pq_unseen)) << ",,,,,,,\n";
  }
  return out.str();
}

void write_report(const RunReport& report, ReportFormat format,
                  const std::filesystem::path& path) {
  check_self_consistency(report);
  write_file_bytes(path, format == ReportFormat::kJson ? report_to_json_string(report)
                                                       : report_to_csv_string(report));
}

namespace {

RunReport report_from_json(const std::string& text, const std::string& name) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) throw format_error(name + ": invalid JSON");
  RunReport report;
  report.config = j.value("config", nlohmann::json::object());
  report.metadata = j.value("metadata", nlohmann::json::object());
  if (!j.contains("classes") || !j.contains("aggregates")) {
    throw format_error(name + ": missing 'classes' or 'aggregates'");
  }
  for (const nlohmann::json& r : j.at("classes")) {
    ReportRow row;
    row.class_id = r.at("class_id").get<std::uint32_t>();
    row.name = r.at("name").get<std::string>();
    row.seen = r.at("seen").get<bool>();
    row.pq = r.at("pq").get<double>();
    row.sq = r.at("sq").get<double>();
    row.rq = r.at("rq").get<double>();
    row.tp = r.at("tp").get<std::int64_t>();
    row.fp = r.at("fp").get<std::int64_t>();
    row.fn_seg = r.at("fn_seg").get<std::int64_t>();
    row.fn_cls = r.at("fn_cls").get<std::int64_t>();
    row.recall = r.at("recall").get<double>();
    report.rows.push_back(std::move(row));
  }
  const nlohmann::json& agg = j.at("aggregates");
  report.pq_all = agg.at("pq_all").get<double>();
  if (agg.contains("pq_seen") && !agg.at("pq_seen").is_null()) {
    report.pq_seen = agg.at("pq_seen").get<double>();
  }
  if (agg.contains("pq_unseen") && !agg.at("pq_unseen").is_null()) {
    report.pq_unseen = agg.at("pq_unseen").get<double>();
  }
  return report;
}

RunReport report_from_csv(const std::string& text, const std::string& name) {
  RunReport report;
  std::istringstream in(text);
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind("# config ", 0) == 0) {
      report.config = nlohmann::json::parse(line.substr(9), nullptr, false);
      if (report.config.is_discarded()) throw format_error(name + ": bad config comment");
      continue;
    }
    if (line.rfind("# metadata ", 0) == 0) {
      report.metadata = nlohmann::json::parse(line.substr(11), nullptr, false);
      if (report.metadata.is_discarded()) throw format_error(name + ": bad metadata comment");
      continue;
    }
    if (!header_seen) {
      if (line != "class_id,name,seen,pq,sq,rq,tp,fp,fn_seg,fn_cls,recall") {
        throw format_error(name + ": unexpected CSV header '" + line + "'");
      }
      header_seen = true;
      continue;
    }
    std::vector<std::string> f = csv_split(line);
    if (f.size() != 11) {
      throw format_error(name + ": expected 11 CSV fields, got " + std::to_string(f.size()));
    }
    if (f[0] == "aggregate") {
      double v = parse_double(f[3], "aggregate value");
      if (f[1] == "pq_all") report.pq_all = v;
      else if (f[1] == "pq_seen") report.pq_seen = v;
      else if (f[1] == "pq_unseen") report.pq_unseen = v;
      else throw format_error(name + ": unknown aggregate '" + f[1] + "'");
      continue;
    }
    ReportRow row;
    row.class_id = static_cast<std::uint32_t>(parse_int(f[0], "class_id"));
    row.name = f[1];
    row.seen = f[2].empty() ? true : f[2] == "1";
    row.pq = parse_double(f[3], "pq");
    row.sq = parse_double(f[4], "sq");
    row.rq = parse_double(f[5], "rq");
    row.tp = parse_int(f[6], "tp");
    row.fp = parse_int(f[7], "fp");
    row.fn_seg = parse_int(f[8], "fn_seg");
    row.fn_cls = parse_int(f[9], "fn_cls");
    row.recall = parse_double(f[10], "recall");
    report.rows.push_back(std::move(row));
  }
  if (!header_seen) throw format_error(name + ": missing CSV header");
  return report;
}

}  // namespace

RunReport read_report(const std::filesystem::path& path) {
  std::string text = read_file_bytes(path);
  std::size_t first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) throw format_error(path.string() + ": empty report");
  RunReport report = text[first] == '{' ? report_from_json(text, path.string())
                                        : report_from_csv(text, path.string());
  check_self_consistency(report);
  return report;
}

std::vector<HardClassRow> hard_class_diff(const RunReport& run_openvocab,
                                          const RunReport& run_reference,
                                          double recall_threshold) {
  const nlohmann::json& tax_a = run_openvocab.metadata.value("taxonomy", nlohmann::json());
  const nlohmann::json& tax_b = run_reference.metadata.value("taxonomy", nlohmann::json());
  if (tax_a != tax_b) {
    std::set<std::string> a, b;
    if (tax_a.is_array()) for (const auto& v : tax_a) a.insert(v.get<std::string>());
    if (tax_b.is_array()) for (const auto& v : tax_b) b.insert(v.get<std::string>());
    std::string unmatched;
    for (const std::string& s : a) {
      if (!b.count(s)) unmatched += (unmatched.empty() ? "" : ", ") + s;
    }
    for (const std::string& s : b) {
      if (!a.count(s)) unmatched += (unmatched.empty() ? "" : ", ") + s;
    }
    throw validation_error("hard_class_diff: reports cover different taxonomies; unmatched "
                           "classes: " + (unmatched.empty() ? "(ordering differs)" : unmatched));
  }

  std::map<std::uint32_t, const ReportRow*> ref_rows;
  for (const ReportRow& row : run_reference.rows) ref_rows.emplace(row.class_id, &row);
  std::map<std::uint32_t, const ReportRow*> ov_rows;
  for (const ReportRow& row : run_openvocab.rows) ov_rows.emplace(row.class_id, &row);

  std::set<std::uint32_t> class_ids;
  for (const auto& [id, _] : ref_rows) class_ids.insert(id);
  for (const auto& [id, _] : ov_rows) class_ids.insert(id);

  std::vector<HardClassRow> out;
  for (std::uint32_t id : class_ids) {
    const ReportRow* ov = ov_rows.count(id) ? ov_rows.at(id) : nullptr;
    const ReportRow* ref = ref_rows.count(id) ? ref_rows.at(id) : nullptr;
    HardClassRow row;
    row.class_id = id;
    row.name = ov ? ov->name : ref->name;
    row.fn_seg = ov ? ov->fn_seg : 0;
    row.fn_cls = ov ? ov->fn_cls : 0;
    row.tp = ov ? ov->tp : 0;
    row.recall = ov ? ov->recall : 0.0;
    row.tp_drop = (ref ? ref->tp : 0) - row.tp;
    if (row.recall < recall_threshold && row.tp_drop > 0) out.push_back(std::move(row));
  }
  std::sort(out.begin(), out.end(), [](const HardClassRow& a, const HardClassRow& b) {
    if (a.tp_drop != b.tp_drop) return a.tp_drop > b.tp_drop;
    return a.class_id < b.class_id;
  });
  return out;
}

}  // namespace ovseg
