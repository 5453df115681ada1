#pragma once

#include <Eigen/Dense>
#include <string>

#include "json.hpp"

#include "jumpex/market_model.hpp"

namespace jumpex {

// Full problem description loaded from a config file.
struct ProblemSpec {
  MarketModel model;
  double lambda = 0.0;
  double x0 = 0.0;
  double zhat = 0.0;
  Eigen::VectorXd y0;
};

// Parses a config from JSON text.  Unknown keys at any level raise
// std::invalid_argument naming the key; so do missing/ill-typed fields.
ProblemSpec parse_problem(const nlohmann::json& j);

// Loads TOML (subset: tables, key = value scalars/arrays, comments) or JSON,
// auto-detected by file extension (.toml / .json).
ProblemSpec load_problem(const std::string& path);

// Minimal TOML-subset reader producing the equivalent JSON document.
// Supported: [table.subtable] headers, key = string|number|bool|array
// (arrays may nest), full-line and trailing # comments.
nlohmann::json toml_to_json(const std::string& text);

// Canonical serialization (sorted keys, fixed float format) used for
// config digests.
std::string canonical_dump(const nlohmann::json& j);

}  // namespace jumpex
