#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace cogflow {

enum class CriterionStatus { pass, fail, inconclusive };

/// One checked claim. `threshold` is an upper bound unless `upper` is set,
/// in which case [threshold, upper] is the accepted range.
struct Criterion {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  std::optional<double> upper;
  CriterionStatus status = CriterionStatus::inconclusive;
  std::string detail;

  bool pass() const noexcept { return status == CriterionStatus::pass; }
  bool operator==(const Criterion&) const = default;
};

/// Result at one score point (or one configuration variant).
struct Record {
  std::string label;
  std::vector<double> score;
  std::map<std::string, std::vector<double>> metrics;
  std::uint64_t eval_count = 0;
  /// Informational; kept out of metrics.json so reruns compare equal.
  double wall_ms = 0.0;

  bool operator==(const Record&) const = default;
};

/// Plot-ready table written as series_<name>.csv.
struct Series {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  bool operator==(const Series&) const = default;
};

struct MetricsReport {
  std::string config_digest;
  std::string experiment;
  std::vector<Record> records;
  std::vector<Criterion> criteria;
  std::map<std::string, Series> series;
  std::vector<std::string> warnings;

  /// True when no criterion failed (inconclusive ones do not count as failures).
  bool passed() const;
  const Criterion* find(const std::string& name) const;
  bool operator==(const MetricsReport&) const = default;
};

nlohmann::json report_to_json(const MetricsReport& report);
MetricsReport report_from_json(const nlohmann::json& j);

/// Writes metrics.json, metrics.csv, timing.csv and series_*.csv into `dir`.
/// Files appear only once all of them were written; throws IoError otherwise.
void emit_report(const MetricsReport& report, const std::filesystem::path& dir);
/// Reads back what emit_report wrote (timing.csv restores wall_ms).
MetricsReport read_report(const std::filesystem::path& dir);

/// Writes all files or none: each goes to a temporary sibling, then renamed.
void write_files_atomically(const std::filesystem::path& dir, const std::map<std::string, std::string>& files);

}  // namespace cogflow
