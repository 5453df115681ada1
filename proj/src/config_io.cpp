#include "jumpex/config_io.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace jumpex {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& message) {
  throw std::invalid_argument("config: " + message);
}

void expect_object(const json& j, const std::string& context) {
  if (!j.is_object()) fail(context + " must be a table/object");
}

// Rejects unknown keys so typos are loud.
void check_keys(const json& j, const std::string& context,
                std::initializer_list<const char*> allowed) {
  expect_object(j, context);
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* key : allowed) ok = ok || item.key() == key;
    if (!ok) fail("unknown key \"" + item.key() + "\" in " + context);
  }
}

const json& require(const json& j, const std::string& context, const char* key) {
  expect_object(j, context);
  auto it = j.find(key);
  if (it == j.end()) fail(context + " is missing key \"" + key + "\"");
  return *it;
}

double as_number(const json& j, const std::string& where) {
  if (!j.is_number()) fail(where + " must be a number");
  return j.get<double>();
}

int as_int(const json& j, const std::string& where) {
  if (!j.is_number_integer()) fail(where + " must be an integer");
  return j.get<int>();
}

Eigen::VectorXd as_vector(const json& j, const std::string& where) {
  if (!j.is_array()) fail(where + " must be an array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  Eigen::Index i = 0;
  for (const auto& item : j) v[i++] = as_number(item, where + " entry");
  return v;
}

Eigen::MatrixXd as_matrix(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) fail(where + " must be an array of rows");
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  Eigen::Index cols = -1;
  Eigen::MatrixXd m;
  Eigen::Index r = 0;
  for (const auto& row : j) {
    const Eigen::VectorXd vec = as_vector(row, where + " row");
    if (cols < 0) {
      cols = vec.size();
      m.resize(rows, cols);
    } else if (vec.size() != cols) {
      fail(where + " rows have inconsistent lengths");
    }
    m.row(r++) = vec;
  }
  return m;
}

CoefficientField parse_coefficients(const json& j, int D) {
  const std::string variant =
      require(j, "coefficients", "variant").get<std::string>();
  if (variant == "constant") {
    check_keys(j, "coefficients", {"variant", "b", "a", "gamma"});
    const Eigen::VectorXd b = as_vector(require(j, "coefficients", "b"), "b");
    const Eigen::MatrixXd a = as_matrix(require(j, "coefficients", "a"), "a");
    const Eigen::MatrixXd g =
        as_matrix(require(j, "coefficients", "gamma"), "gamma");
    if (b.size() != D) fail("b length must equal dimension");
    return CoefficientField::constant(b, a, g);
  }
  if (variant == "proportional") {
    check_keys(j, "coefficients",
               {"variant", "u0", "u1", "b_tilde", "a_tilde", "gamma_tilde"});
    const double u0 = as_number(require(j, "coefficients", "u0"), "u0");
    const double u1 = as_number(require(j, "coefficients", "u1"), "u1");
    const Eigen::VectorXd b =
        as_vector(require(j, "coefficients", "b_tilde"), "b_tilde");
    const Eigen::MatrixXd a =
        as_matrix(require(j, "coefficients", "a_tilde"), "a_tilde");
    const Eigen::MatrixXd g =
        as_matrix(require(j, "coefficients", "gamma_tilde"), "gamma_tilde");
    if (b.size() != D) fail("b_tilde length must equal dimension");
    return CoefficientField::proportional(u0, u1, b, a, g);
  }
  fail("coefficients.variant must be \"constant\" or \"proportional\"");
}

JumpSpec parse_jumps(const json& j, int D) {
  check_keys(j, "jumps", {"intensity", "law"});
  const double intensity = as_number(require(j, "jumps", "intensity"), "intensity");
  if (intensity < 0.0) fail("jumps.intensity must be >= 0");
  const json& law = require(j, "jumps", "law");
  const std::string type = require(law, "jumps.law", "type").get<std::string>();
  if (type == "none") {
    check_keys(law, "jumps.law", {"type"});
    if (intensity != 0.0) fail("jumps.law \"none\" requires intensity 0");
    return JumpSpec::none(D);
  }
  if (intensity == 0.0) return JumpSpec::none(D);
  if (type == "atoms") {
    check_keys(law, "jumps.law", {"type", "sizes", "probs"});
    const json& sizes_json = require(law, "jumps.law", "sizes");
    if (!sizes_json.is_array() || sizes_json.empty())
      fail("jumps.law.sizes must be a non-empty array of vectors");
    std::vector<Eigen::VectorXd> sizes;
    for (const auto& s : sizes_json) {
      sizes.push_back(as_vector(s, "jump atom"));
      if (sizes.back().size() != D) fail("jump atom length must equal dimension");
    }
    const Eigen::VectorXd probs_vec =
        as_vector(require(law, "jumps.law", "probs"), "probs");
    std::vector<double> probs(probs_vec.data(), probs_vec.data() + probs_vec.size());
    return JumpSpec::atoms(intensity, std::move(sizes), std::move(probs));
  }
  if (type == "gaussian") {
    check_keys(law, "jumps.law", {"type", "mean", "sd"});
    const Eigen::VectorXd mean = as_vector(require(law, "jumps.law", "mean"), "mean");
    if (mean.size() != D) fail("jump mean length must equal dimension");
    const double sd = as_number(require(law, "jumps.law", "sd"), "sd");
    return JumpSpec::gaussian(intensity, mean, sd);
  }
  if (type == "uniform") {
    check_keys(law, "jumps.law", {"type", "low", "high"});
    const Eigen::VectorXd lo = as_vector(require(law, "jumps.law", "low"), "low");
    const Eigen::VectorXd hi = as_vector(require(law, "jumps.law", "high"), "high");
    if (lo.size() != D || hi.size() != D)
      fail("jump box bounds length must equal dimension");
    return JumpSpec::uniform_box(intensity, lo, hi);
  }
  fail("jumps.law.type must be one of \"atoms\", \"gaussian\", \"uniform\", \"none\"");
}

}  // namespace

ProblemSpec parse_problem(const nlohmann::json& j) {
  check_keys(j, "top level",
             {"dimension", "horizon", "coefficients", "jumps", "damping",
              "problem"});
  const int D = as_int(require(j, "top level", "dimension"), "dimension");
  if (D < 1) fail("dimension must be >= 1");
  const double T = as_number(require(j, "top level", "horizon"), "horizon");
  if (!(T > 0.0)) fail("horizon must be positive");

  ProblemSpec spec;
  spec.model.T = T;
  spec.model.coeffs = parse_coefficients(require(j, "top level", "coefficients"), D);
  spec.model.jumps = parse_jumps(require(j, "top level", "jumps"), D);

  const json& damping = require(j, "top level", "damping");
  check_keys(damping, "damping", {"c"});
  spec.model.damping.c = as_number(require(damping, "damping", "c"), "damping.c");
  if (!(spec.model.damping.c > 0.0)) fail("damping.c must be positive");

  const json& prob = require(j, "top level", "problem");
  check_keys(prob, "problem", {"lambda", "x0", "zhat", "y0"});
  spec.lambda = as_number(require(prob, "problem", "lambda"), "lambda");
  if (spec.lambda < 0.0) fail("lambda must be >= 0");
  spec.x0 = as_number(require(prob, "problem", "x0"), "x0");
  spec.zhat = as_number(require(prob, "problem", "zhat"), "zhat");
  spec.y0 = as_vector(require(prob, "problem", "y0"), "y0");
  if (spec.y0.size() != D) fail("y0 length must equal dimension");

  validate_model(spec.model, spec.y0);
  return spec;
}

ProblemSpec load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();

  auto ends_with = [&](const char* suffix) {
    const std::string s(suffix);
    return path.size() >= s.size() &&
           path.compare(path.size() - s.size(), s.size(), s) == 0;
  };
  nlohmann::json j;
  if (ends_with(".toml")) {
    j = toml_to_json(text);
  } else if (ends_with(".json")) {
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& err) {
      throw std::invalid_argument(std::string("config: JSON parse error: ") +
                                  err.what());
    }
  } else {
    throw std::invalid_argument(
        "config: unsupported file extension (want .toml or .json): " + path);
  }
  return parse_problem(j);
}

namespace {

struct TomlCursor {
  const std::string& text;
  size_t pos = 0;
  int line = 1;

  [[noreturn]] void fail(const std::string& message) const {
    std::ostringstream os;
    os << "config: TOML line " << line << ": " << message;
    throw std::invalid_argument(os.str());
  }
};

void skip_inline_ws(TomlCursor& c) {
  while (c.pos < c.text.size() &&
         (c.text[c.pos] == ' ' || c.text[c.pos] == '\t'))
    ++c.pos;
}

nlohmann::json parse_toml_value(TomlCursor& c);

nlohmann::json parse_toml_array(TomlCursor& c) {
  nlohmann::json arr = nlohmann::json::array();
  ++c.pos;  // consume '['
  skip_inline_ws(c);
  if (c.pos < c.text.size() && c.text[c.pos] == ']') {
    ++c.pos;
    return arr;
  }
  while (true) {
    arr.push_back(parse_toml_value(c));
    skip_inline_ws(c);
    if (c.pos >= c.text.size()) c.fail("unterminated array");
    if (c.text[c.pos] == ',') {
      ++c.pos;
      skip_inline_ws(c);
      continue;
    }
    if (c.text[c.pos] == ']') {
      ++c.pos;
      return arr;
    }
    c.fail("expected ',' or ']' in array");
  }
}

nlohmann::json parse_toml_string(TomlCursor& c) {
  ++c.pos;  // consume '"'
  std::string out;
  while (c.pos < c.text.size() && c.text[c.pos] != '"') {
    char ch = c.text[c.pos];
    if (ch == '\n') c.fail("unterminated string");
    if (ch == '\\') {
      ++c.pos;
      if (c.pos >= c.text.size()) c.fail("dangling escape");
      switch (c.text[c.pos]) {
        case '"': out.push_back('"'); break;
        case '\\': out.push_back('\\'); break;
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        default: c.fail("unsupported escape sequence");
      }
    } else {
      out.push_back(ch);
    }
    ++c.pos;
  }
  if (c.pos >= c.text.size()) c.fail("unterminated string");
  ++c.pos;  // closing quote
  return nlohmann::json(out);
}

nlohmann::json parse_toml_value(TomlCursor& c) {
  skip_inline_ws(c);
  if (c.pos >= c.text.size()) c.fail("missing value");
  const char ch = c.text[c.pos];
  if (ch == '[') return parse_toml_array(c);
  if (ch == '"') return parse_toml_string(c);
  // Bare token: bool or number.
  size_t end = c.pos;
  while (end < c.text.size() && c.text[end] != ',' && c.text[end] != ']' &&
         c.text[end] != '#' && c.text[end] != ' ' && c.text[end] != '\t' &&
         c.text[end] != '\n' && c.text[end] != '\r')
    ++end;
  const std::string token = c.text.substr(c.pos, end - c.pos);
  c.pos = end;
  if (token == "true") return nlohmann::json(true);
  if (token == "false") return nlohmann::json(false);
  if (token.empty()) c.fail("missing value");
  bool integral = true;
  for (size_t i = 0; i < token.size(); ++i) {
    const char t = token[i];
    if (i == 0 && (t == '+' || t == '-')) continue;
    if (!std::isdigit(static_cast<unsigned char>(t))) integral = false;
  }
  try {
    if (integral) return nlohmann::json(std::stoll(token));
    size_t used = 0;
    const double value = std::stod(token, &used);
    if (used != token.size()) c.fail("malformed number \"" + token + "\"");
    return nlohmann::json(value);
  } catch (const std::invalid_argument&) {
    c.fail("malformed value \"" + token + "\"");
  } catch (const std::out_of_range&) {
    c.fail("number out of range \"" + token + "\"");
  }
}

}  // namespace

nlohmann::json toml_to_json(const std::string& text) {
  nlohmann::json doc = nlohmann::json::object();
  nlohmann::json* table = &doc;
  TomlCursor c{text};
  while (c.pos < text.size()) {
    skip_inline_ws(c);
    if (c.pos >= text.size()) break;
    const char ch = text[c.pos];
    if (ch == '\n') {
      ++c.pos;
      ++c.line;
      continue;
    }
    if (ch == '\r') {
      ++c.pos;
      continue;
    }
    if (ch == '#') {
      while (c.pos < text.size() && text[c.pos] != '\n') ++c.pos;
      continue;
    }
    if (ch == '[') {
      const size_t close = text.find(']', c.pos);
      const size_t newline = text.find('\n', c.pos);
      if (close == std::string::npos || (newline != std::string::npos && close > newline))
        c.fail("unterminated table header");
      std::string header = text.substr(c.pos + 1, close - c.pos - 1);
      c.pos = close + 1;
      // Walk dotted path, creating nested objects.
      table = &doc;
      std::stringstream parts(header);
      std::string part;
      while (std::getline(parts, part, '.')) {
        // Trim spaces around the segment.
        const size_t first = part.find_first_not_of(" \t");
        const size_t last = part.find_last_not_of(" \t");
        if (first == std::string::npos) c.fail("empty table name segment");
        part = part.substr(first, last - first + 1);
        table = &(*table)[part];
        if (table->is_null()) *table = nlohmann::json::object();
        if (!table->is_object()) c.fail("table name collides with a value");
      }
      continue;
    }
    // key = value
    size_t key_end = c.pos;
    while (key_end < text.size() &&
           (std::isalnum(static_cast<unsigned char>(text[key_end])) ||
            text[key_end] == '_' || text[key_end] == '-'))
      ++key_end;
    if (key_end == c.pos) c.fail("expected a key");
    const std::string key = text.substr(c.pos, key_end - c.pos);
    c.pos = key_end;
    skip_inline_ws(c);
    if (c.pos >= text.size() || text[c.pos] != '=') c.fail("expected '=' after key");
    ++c.pos;
    nlohmann::json value = parse_toml_value(c);
    skip_inline_ws(c);
    if (c.pos < text.size() && text[c.pos] == '#')
      while (c.pos < text.size() && text[c.pos] != '\n') ++c.pos;
    if (c.pos < text.size() && text[c.pos] == '\r') ++c.pos;
    if (c.pos < text.size() && text[c.pos] != '\n')
      c.fail("unexpected trailing characters after value");
    if (table->contains(key)) c.fail("duplicate key \"" + key + "\"");
    (*table)[key] = std::move(value);
  }
  return doc;
}

std::string canonical_dump(const nlohmann::json& j) {
  // nlohmann::json already stores object keys sorted; the default dump is a
  // deterministic shortest-round-trip serialization.
  return j.dump();
}

}  // namespace jumpex
