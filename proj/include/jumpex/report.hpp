#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

namespace jumpex {

// One report row: a named estimate with either a standard error or an
// "exact" marker, its target and tolerance, and the pass flag.
struct CheckRow {
  std::string name;
  double estimate = 0.0;
  bool exact = false;  // true: no Monte Carlo error; se is meaningless
  double se = 0.0;
  double target = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string note;
};

struct ExperimentReport {
  std::string experiment;
  std::string config_digest;
  std::uint64_t seed = 0;
  std::map<std::string, double> thresholds;
  std::vector<CheckRow> rows;
  double wall_clock_seconds = 0.0;

  bool all_pass() const;
};

// FNV-1a 64-bit digest, hex-encoded.
std::string fnv1a_digest(const std::string& text);

// JSON body; wall clock excluded when include_wall_clock is false so bodies
// are byte-reproducible for a fixed seed.
nlohmann::json report_to_json(const ExperimentReport& r, bool include_wall_clock);

// CSV body with header comments recording seed and thresholds verbatim.
std::string report_to_csv(const ExperimentReport& r);

// Writes report files under dir without mutating prior outputs: picks the
// first free of report.json, report-2.json, ... (same for .csv).  Returns
// the basename used (without extension).
std::string write_report_files(const ExperimentReport& r, const std::string& dir,
                               bool write_json, bool write_csv);

}  // namespace jumpex
