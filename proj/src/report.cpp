#include "jumpex/report.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace jumpex {

namespace {

std::string format_double(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

}  // namespace

bool ExperimentReport::all_pass() const {
  for (const CheckRow& row : rows)
    if (!row.pass) return false;
  return true;
}

std::string fnv1a_digest(const std::string& text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buffer[17];
  std::snprintf(buffer, sizeof(buffer), "%016llx",
                static_cast<unsigned long long>(hash));
  return buffer;
}

nlohmann::json report_to_json(const ExperimentReport& r, bool include_wall_clock) {
  nlohmann::json j;
  j["experiment"] = r.experiment;
  j["config_digest"] = r.config_digest;
  j["seed"] = r.seed;
  j["thresholds"] = nlohmann::json::object();
  for (const auto& [name, value] : r.thresholds) j["thresholds"][name] = value;
  j["rows"] = nlohmann::json::array();
  for (const CheckRow& row : r.rows) {
    nlohmann::json jr;
    jr["name"] = row.name;
    jr["estimate"] = row.estimate;
    jr["exact"] = row.exact;
    jr["se"] = row.se;
    jr["target"] = row.target;
    jr["tolerance"] = row.tolerance;
    jr["pass"] = row.pass;
    jr["note"] = row.note;
    j["rows"].push_back(std::move(jr));
  }
  j["all_pass"] = r.all_pass();
  if (include_wall_clock) j["wall_clock_seconds"] = r.wall_clock_seconds;
  return j;
}

std::string report_to_csv(const ExperimentReport& r) {
  std::ostringstream os;
  os << "# experiment: " << r.experiment << "\n";
  os << "# config_digest: " << r.config_digest << "\n";
  os << "# seed: " << r.seed << "\n";
  for (const auto& [name, value] : r.thresholds)
    os << "# threshold " << name << ": " << format_double(value) << "\n";
  os << "name,estimate,exact,se,target,tolerance,pass,note\n";
  for (const CheckRow& row : r.rows) {
    os << csv_escape(row.name) << "," << format_double(row.estimate) << ","
       << (row.exact ? "true" : "false") << "," << format_double(row.se) << ","
       << format_double(row.target) << "," << format_double(row.tolerance) << ","
       << (row.pass ? "true" : "false") << "," << csv_escape(row.note) << "\n";
  }
  return os.str();
}

std::string write_report_files(const ExperimentReport& r, const std::string& dir,
                               bool write_json, bool write_csv) {
  if (!write_json && !write_csv)
    throw std::invalid_argument("write_report_files: no format requested");
  namespace fs = std::filesystem;
  fs::create_directories(dir);

  // Append-only naming: report, report-2, report-3, ...; a basename is taken
  // if any requested extension already exists.
  std::string basename;
  for (int counter = 1;; ++counter) {
    basename = counter == 1 ? "report" : "report-" + std::to_string(counter);
    const bool json_taken =
        write_json && fs::exists(fs::path(dir) / (basename + ".json"));
    const bool csv_taken =
        write_csv && fs::exists(fs::path(dir) / (basename + ".csv"));
    if (!json_taken && !csv_taken) break;
  }

  if (write_json) {
    std::ofstream out(fs::path(dir) / (basename + ".json"));
    if (!out)
      throw std::runtime_error("write_report_files: cannot write JSON report");
    out << report_to_json(r, /*include_wall_clock=*/true).dump(2) << "\n";
  }
  if (write_csv) {
    std::ofstream out(fs::path(dir) / (basename + ".csv"));
    if (!out)
      throw std::runtime_error("write_report_files: cannot write CSV report");
    out << report_to_csv(r);
  }
  return basename;
}

}  // namespace jumpex
