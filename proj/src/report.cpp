#include "cogflow/report.hpp"

#include <fstream>
#include <sstream>

#include <unistd.h>

#include "cogflow/errors.hpp"
#include "cogflow/flow.hpp"

namespace cogflow {

using nlohmann::json;

namespace {

std::string_view status_label(CriterionStatus s) {
  switch (s) {
    case CriterionStatus::pass: return "pass";
    case CriterionStatus::fail: return "fail";
    case CriterionStatus::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

CriterionStatus status_from(const std::string& s) {
  if (s == "pass") return CriterionStatus::pass;
  if (s == "fail") return CriterionStatus::fail;
  return CriterionStatus::inconclusive;
}

std::string join_scores(const std::vector<double>& score) {
  std::string out;
  for (std::size_t i = 0; i < score.size(); ++i) out += (i ? ";" : "") + format_double(score[i]);
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

std::string digest_header(const MetricsReport& report) {
  return "# config_digest: " + report.config_digest + "\n";
}

}  // namespace

bool MetricsReport::passed() const {
  for (const auto& c : criteria) {
    if (c.status == CriterionStatus::fail) return false;
  }
  return true;
}

const Criterion* MetricsReport::find(const std::string& name) const {
  for (const auto& c : criteria) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

json report_to_json(const MetricsReport& report) {
  json records = json::array();
  for (const auto& r : report.records) {
    records.push_back({{"config_digest", report.config_digest},
                       {"label", r.label},
                       {"score", r.score},
                       {"metrics", r.metrics},
                       {"eval_count", r.eval_count}});
  }
  json criteria = json::array();
  for (const auto& c : report.criteria) {
    json threshold = c.threshold;
    if (c.upper) threshold = json::array({c.threshold, *c.upper});
    criteria.push_back({{"name", c.name},
                        {"value", c.value},
                        {"threshold", threshold},
                        {"pass", c.pass()},
                        {"status", status_label(c.status)},
                        {"detail", c.detail}});
  }
  json series = json::object();
  for (const auto& [name, s] : report.series) series[name] = {{"columns", s.columns}, {"rows", s.rows}};
  return {{"config_digest", report.config_digest},
          {"experiment", report.experiment},
          {"records", records},
          {"summary", {{"criteria", criteria}, {"passed", report.passed()}, {"warnings", report.warnings}}},
          {"series", series}};
}

MetricsReport report_from_json(const json& j) {
  MetricsReport report;
  try {
    report.config_digest = j.at("config_digest").get<std::string>();
    report.experiment = j.at("experiment").get<std::string>();
    for (const auto& r : j.at("records")) {
      Record rec;
      rec.label = r.at("label").get<std::string>();
      rec.score = r.at("score").get<std::vector<double>>();
      rec.metrics = r.at("metrics").get<std::map<std::string, std::vector<double>>>();
      rec.eval_count = r.at("eval_count").get<std::uint64_t>();
      report.records.push_back(std::move(rec));
    }
    const auto& summary = j.at("summary");
    for (const auto& c : summary.at("criteria")) {
      Criterion crit;
      crit.name = c.at("name").get<std::string>();
      crit.value = c.at("value").get<double>();
      const auto& th = c.at("threshold");
      if (th.is_array()) {
        crit.threshold = th.at(0).get<double>();
        crit.upper = th.at(1).get<double>();
      } else {
        crit.threshold = th.get<double>();
      }
      crit.status = status_from(c.at("status").get<std::string>());
      crit.detail = c.at("detail").get<std::string>();
      report.criteria.push_back(std::move(crit));
    }
    report.warnings = summary.at("warnings").get<std::vector<std::string>>();
    for (const auto& [name, s] : j.at("series").items()) {
      report.series[name] = Series{s.at("columns").get<std::vector<std::string>>(),
                                   s.at("rows").get<std::vector<std::vector<double>>>()};
    }
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed metrics report: ") + e.what());
  }
  return report;
}

void write_files_atomically(const std::filesystem::path& dir, const std::map<std::string, std::string>& files) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError("cannot create output directory " + dir.string() + (ec ? ": " + ec.message() : ""));
  }
  const std::string suffix = ".tmp" + std::to_string(::getpid());
  std::vector<fs::path> temps;
  auto cleanup = [&] {
    for (const auto& t : temps) fs::remove(t, ec);
  };
  for (const auto& [name, content] : files) {
    const auto tmp = dir / ("." + name + suffix);
    temps.push_back(tmp);
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << content;
    out.close();
    if (!out) {
      cleanup();
      throw IoError("cannot write " + (dir / name).string());
    }
  }
  for (const auto& entry : files) {
    if (fs::is_directory(dir / entry.first)) {
      cleanup();
      throw IoError("cannot write " + (dir / entry.first).string() + ": a directory is in the way");
    }
  }
  // Existing targets are set aside so a failed rename can restore them.
  std::vector<std::pair<fs::path, fs::path>> placed;  // target, backup (empty if none)
  auto rollback = [&] {
    for (auto it = placed.rbegin(); it != placed.rend(); ++it) {
      fs::remove(it->first, ec);
      if (!it->second.empty()) fs::rename(it->second, it->first, ec);
    }
    cleanup();
  };
  std::size_t i = 0;
  for (const auto& [name, content] : files) {
    const auto target = dir / name;
    fs::path backup;
    if (fs::exists(fs::symlink_status(target))) {
      backup = dir / ("." + name + suffix + ".bak");
      fs::rename(target, backup, ec);
      if (ec) {
        rollback();
        throw IoError("cannot replace " + target.string() + ": " + ec.message());
      }
    }
    fs::rename(temps[i++], target, ec);
    if (ec) {
      if (!backup.empty()) fs::rename(backup, target, ec);
      rollback();
      throw IoError("cannot move " + name + " into place");
    }
    placed.emplace_back(target, backup);
  }
  for (const auto& [target, backup] : placed) {
    if (!backup.empty()) fs::remove(backup, ec);
  }
}

void emit_report(const MetricsReport& report, const std::filesystem::path& dir) {
  std::map<std::string, std::string> files;
  files["metrics.json"] = report_to_json(report).dump(2) + "\n";

  std::ostringstream flat;
  flat << digest_header(report) << "label,score,metric,index,value\n";
  for (const auto& r : report.records) {
    for (const auto& [metric, values] : r.metrics) {
      for (std::size_t i = 0; i < values.size(); ++i) {
        flat << csv_field(r.label) << ',' << join_scores(r.score) << ',' << csv_field(metric) << ',' << i << ','
             << format_double(values[i]) << '\n';
      }
    }
  }
  files["metrics.csv"] = flat.str();

  std::ostringstream timing;
  timing << digest_header(report) << "label,eval_count,wall_ms\n";
  for (const auto& r : report.records) {
    timing << csv_field(r.label) << ',' << r.eval_count << ',' << format_double(r.wall_ms) << '\n';
  }
  files["timing.csv"] = timing.str();

  for (const auto& [name, s] : report.series) {
    std::ostringstream out;
    out << digest_header(report);
    for (std::size_t c = 0; c < s.columns.size(); ++c) out << (c ? "," : "") << csv_field(s.columns[c]);
    out << '\n';
    for (const auto& row : s.rows) {
      for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << format_double(row[c]);
      out << '\n';
    }
    files["series_" + name + ".csv"] = out.str();
  }
  write_files_atomically(dir, files);
}

MetricsReport read_report(const std::filesystem::path& dir) {
  std::ifstream in(dir / "metrics.json");
  if (!in) throw IoError("cannot read " + (dir / "metrics.json").string());
  MetricsReport report;
  try {
    report = report_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw IoError(std::string("metrics.json is not valid JSON: ") + e.what());
  }

  std::ifstream timing(dir / "timing.csv");
  std::string line;
  std::size_t row = 0;
  while (std::getline(timing, line)) {
    if (line.empty() || line.front() == '#' || line.starts_with("label,")) continue;
    const auto last = line.rfind(',');
    if (last == std::string::npos || row >= report.records.size()) break;
    report.records[row++].wall_ms = std::stod(line.substr(last + 1));
  }
  return report;
}

}  // namespace cogflow
