#pragma once

// Configuration and artifact I/O.
//
// Configs are JSON or a small TOML subset selected by file extension; both
// land in the same ordered JSON document so downstream code has one schema.
// Every reader rejects unknown keys and reports the dotted path of the
// offending key.  Artifact writers (CSV, JSON) format numbers through one
// deterministic routine so identical runs produce identical bytes.

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "tiltdock/airframe.hpp"
#include "tiltdock/fsm.hpp"
#include "tiltdock/sim.hpp"

namespace tiltdock {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Deterministic number formatting (shared by CSV and hand-rolled text).

inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Minimal TOML subset -> Json.
//
// Supported: `#` comments, `[table.path]` headers, `key = value` with bare or
// dotted keys, strings with basic escapes, integers/floats, booleans, and
// flat arrays.  That covers the shipped configs; anything fancier should use
// the JSON form.

namespace toml_detail {

inline void fail(int line, const std::string& what) {
  throw ConfigError("toml line " + std::to_string(line) + ": " + what);
}

inline std::string strip(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Removes a trailing comment that is not inside a string literal.
inline std::string drop_comment(const std::string& s) {
  bool in_str = false;
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) in_str = !in_str;
    if (s[i] == '#' && !in_str) return s.substr(0, i);
  }
  return s;
}

inline std::vector<std::string> split_key(const std::string& key, int line) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : key) {
    if (c == '.') {
      if (cur.empty()) fail(line, "empty key segment in '" + key + "'");
      parts.push_back(cur);
      cur.clear();
    } else if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-') {
      cur += c;
    } else if (c == ' ' || c == '\t') {
      continue;
    } else {
      fail(line, std::string("unsupported character '") + c + "' in key");
    }
  }
  if (cur.empty()) fail(line, "empty key segment in '" + key + "'");
  parts.push_back(cur);
  return parts;
}

inline Json parse_scalar(const std::string& tok, int line) {
  if (tok.empty()) fail(line, "missing value");
  if (tok.front() == '"') {
    if (tok.size() < 2 || tok.back() != '"') fail(line, "unterminated string");
    std::string out;
    for (size_t i = 1; i + 1 < tok.size(); ++i) {
      char c = tok[i];
      if (c == '\\' && i + 2 < tok.size() + 1) {
        char n = tok[++i];
        switch (n) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          default: fail(line, std::string("unsupported escape '\\") + n + "'");
        }
      } else {
        out += c;
      }
    }
    return Json(out);
  }
  if (tok == "true") return Json(true);
  if (tok == "false") return Json(false);
  try {
    size_t used = 0;
    if (tok.find_first_of(".eE") == std::string::npos) {
      long long v = std::stoll(tok, &used);
      if (used == tok.size()) return Json(v);
    }
    double v = std::stod(tok, &used);
    if (used == tok.size()) return Json(v);
  } catch (const std::exception&) {
    // fall through to the error below
  }
  fail(line, "cannot parse value '" + tok + "'");
  return Json();
}

inline Json parse_value(const std::string& tok, int line) {
  if (!tok.empty() && tok.front() == '[') {
    if (tok.back() != ']') fail(line, "unterminated array");
    Json arr = Json::array();
    std::string inner = tok.substr(1, tok.size() - 2);
    std::string cur;
    bool in_str = false;
    int depth = 0;
    for (char c : inner) {
      if (c == '"' && (cur.empty() || cur.back() != '\\')) in_str = !in_str;
      if (c == '[' && !in_str) ++depth;
      if (c == ']' && !in_str) --depth;
      if (c == ',' && !in_str && depth == 0) {
        const std::string t = strip(cur);
        if (!t.empty()) arr.push_back(parse_value(t, line));
        cur.clear();
      } else {
        cur += c;
      }
    }
    const std::string t = strip(cur);
    if (!t.empty()) arr.push_back(parse_value(t, line));
    return arr;
  }
  return parse_scalar(tok, line);
}

}  // namespace toml_detail

inline Json parse_toml(const std::string& text) {
  using namespace toml_detail;
  Json root = Json::object();
  std::vector<std::string> table;

  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string s = strip(drop_comment(raw));
    if (s.empty()) continue;

    if (s.front() == '[') {
      if (s.back() != ']') fail(line, "unterminated table header");
      table = split_key(strip(s.substr(1, s.size() - 2)), line);
      Json* node = &root;
      for (const auto& part : table) {
        if (!node->contains(part)) (*node)[part] = Json::object();
        node = &(*node)[part];
        if (!node->is_object()) fail(line, "table path collides with a value");
      }
      continue;
    }

    const size_t eq = [&] {
      bool in_str = false;
      for (size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"') in_str = !in_str;
        if (s[i] == '=' && !in_str) return i;
      }
      return std::string::npos;
    }();
    if (eq == std::string::npos) fail(line, "expected 'key = value'");

    std::vector<std::string> key = table;
    for (const auto& part : split_key(strip(s.substr(0, eq)), line)) key.push_back(part);
    Json* node = &root;
    for (size_t i = 0; i + 1 < key.size(); ++i) {
      if (!node->contains(key[i])) (*node)[key[i]] = Json::object();
      node = &(*node)[key[i]];
      if (!node->is_object()) fail(line, "key path collides with a value");
    }
    if (node->contains(key.back())) fail(line, "duplicate key '" + key.back() + "'");
    (*node)[key.back()] = parse_value(strip(s.substr(eq + 1)), line);
  }
  return root;
}

// ---------------------------------------------------------------------------
// Json -> TOML subset (inverse of parse_toml for the config shapes we ship:
// scalar and flat-array leaves, nesting at most one table deep).

namespace toml_detail {

inline std::string emit_scalar(const Json& v) {
  if (v.is_string()) {
    std::string out = "\"";
    for (char c : v.get<std::string>()) {
      switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        default: out += c;
      }
    }
    return out + "\"";
  }
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer() || v.is_number_unsigned()) return v.dump();
  if (v.is_number_float()) {
    std::string s = format_number(v.get<double>());
    if (s.find_first_of(".eE") == std::string::npos) s += ".0";
    return s;
  }
  throw ConfigError("toml emitter: unsupported scalar type");
}

inline std::string emit_value(const Json& v) {
  if (v.is_array()) {
    std::string out = "[";
    for (size_t i = 0; i < v.size(); ++i) {
      if (i) out += ", ";
      out += emit_scalar(v[i]);
    }
    return out + "]";
  }
  return emit_scalar(v);
}

}  // namespace toml_detail

inline std::string emit_toml(const Json& j) {
  if (!j.is_object()) throw ConfigError("toml emitter: root must be an object");
  std::string out;
  // Scalars and arrays first, then one [table] per nested object.
  for (const auto& [key, value] : j.items()) {
    if (value.is_object()) continue;
    out += key + " = " + toml_detail::emit_value(value) + "\n";
  }
  for (const auto& [key, value] : j.items()) {
    if (!value.is_object()) continue;
    out += "\n[" + key + "]\n";
    for (const auto& [k2, v2] : value.items()) {
      if (v2.is_object()) throw ConfigError("toml emitter: nesting deeper than one table");
      out += k2 + " = " + toml_detail::emit_value(v2) + "\n";
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// File loading

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write file: " + path);
  out << content;
  if (!out) throw ConfigError("write failed: " + path);
}

inline bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// Parses .json or .toml by extension.
inline Json load_config_file(const std::string& path) {
  const std::string text = read_text_file(path);
  if (ends_with(path, ".toml")) return parse_toml(text);
  if (ends_with(path, ".json")) {
    try {
      return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError(path + ": " + e.what());
    }
  }
  throw ConfigError("unsupported config extension (want .json or .toml): " + path);
}

// ---------------------------------------------------------------------------
// Schema helpers

namespace schema {

inline std::string join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

// Rejects keys outside `allowed`, reporting the dotted path of the intruder.
inline void check_keys(const Json& obj, const std::vector<std::string>& allowed,
                       const std::string& prefix) {
  if (!obj.is_object()) {
    throw ConfigError("expected an object at '" + (prefix.empty() ? "<root>" : prefix) + "'");
  }
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const auto& a : allowed) {
      if (it.key() == a) { ok = true; break; }
    }
    if (!ok) throw ConfigError("unknown key '" + join(prefix, it.key()) + "'");
  }
}

inline double get_number(const Json& obj, const std::string& key, double fallback,
                         const std::string& prefix) {
  if (!obj.contains(key)) return fallback;
  const Json& v = obj.at(key);
  if (!v.is_number()) throw ConfigError("'" + join(prefix, key) + "' must be a number");
  return v.get<double>();
}

inline bool get_bool(const Json& obj, const std::string& key, bool fallback,
                     const std::string& prefix) {
  if (!obj.contains(key)) return fallback;
  const Json& v = obj.at(key);
  if (!v.is_boolean()) throw ConfigError("'" + join(prefix, key) + "' must be a boolean");
  return v.get<bool>();
}

inline std::string get_string(const Json& obj, const std::string& key,
                              const std::string& fallback, const std::string& prefix) {
  if (!obj.contains(key)) return fallback;
  const Json& v = obj.at(key);
  if (!v.is_string()) throw ConfigError("'" + join(prefix, key) + "' must be a string");
  return v.get<std::string>();
}

inline std::vector<double> get_array(const Json& obj, const std::string& key, size_t n,
                                     const std::vector<double>& fallback,
                                     const std::string& prefix) {
  if (!obj.contains(key)) return fallback;
  const Json& v = obj.at(key);
  if (!v.is_array() || v.size() != n) {
    throw ConfigError("'" + join(prefix, key) + "' must be an array of " + std::to_string(n) +
                      " numbers");
  }
  std::vector<double> out;
  out.reserve(n);
  for (const auto& e : v) {
    if (!e.is_number()) {
      throw ConfigError("'" + join(prefix, key) + "' must contain only numbers");
    }
    out.push_back(e.get<double>());
  }
  return out;
}

inline void check_schema_version(const Json& obj, const std::string& prefix) {
  if (!obj.contains("schema_version")) return;  // optional on input
  const Json& v = obj.at("schema_version");
  if (!v.is_number_integer() || v.get<int>() != kSchemaVersion) {
    throw ConfigError("'" + join(prefix, "schema_version") + "' must be " +
                      std::to_string(kSchemaVersion));
  }
}

}  // namespace schema

// ---------------------------------------------------------------------------
// Unit airframe config
//
// User-facing description of one unit craft: frame parameters plus the four
// rotor tilt-angle pairs.  `mechanism_mass` adds the docking hardware as a
// point mass at the CoG (a declared simplification; the hardware sits near
// the port but its offset is small against the frame span).

struct UnitConfig {
  UnitParams params;
  UnitDesign design = reference_design();
  bool counter_torque = true;
  double mechanism_mass = 0.0;  // kg, added to the unit mass when configured
  std::string name = "unit";

  AirframeModel build() const {
    UnitParams p = params;
    p.mass += mechanism_mass;
    AirframeModel m = make_unit(design, p, name, counter_torque);
    m.validate();
    return m;
  }
};

inline UnitConfig unit_config_from_json(const Json& j, const std::string& prefix = "airframe") {
  schema::check_keys(j, {"schema_version", "name", "mass", "arm", "max_thrust", "sigma",
                         "body_height", "alpha", "beta", "counter_torque", "mechanism_mass"},
                     prefix);
  schema::check_schema_version(j, prefix);
  UnitConfig c;
  c.name = schema::get_string(j, "name", c.name, prefix);
  c.params.mass = schema::get_number(j, "mass", c.params.mass, prefix);
  c.params.arm = schema::get_number(j, "arm", c.params.arm, prefix);
  c.params.max_thrust = schema::get_number(j, "max_thrust", c.params.max_thrust, prefix);
  c.params.sigma = schema::get_number(j, "sigma", c.params.sigma, prefix);
  c.params.body_height = schema::get_number(j, "body_height", c.params.body_height, prefix);
  c.counter_torque = schema::get_bool(j, "counter_torque", c.counter_torque, prefix);
  c.mechanism_mass = schema::get_number(j, "mechanism_mass", c.mechanism_mass, prefix);
  const std::vector<double> da(c.design.alpha, c.design.alpha + 4);
  const std::vector<double> db(c.design.beta, c.design.beta + 4);
  const auto alpha = schema::get_array(j, "alpha", 4, da, prefix);
  const auto beta = schema::get_array(j, "beta", 4, db, prefix);
  for (int i = 0; i < 4; ++i) {
    c.design.alpha[i] = alpha[static_cast<size_t>(i)];
    c.design.beta[i] = beta[static_cast<size_t>(i)];
  }
  return c;
}

inline Json unit_config_to_json(const UnitConfig& c) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["name"] = c.name;
  j["mass"] = c.params.mass;
  j["arm"] = c.params.arm;
  j["max_thrust"] = c.params.max_thrust;
  j["sigma"] = c.params.sigma;
  j["body_height"] = c.params.body_height;
  j["alpha"] = std::vector<double>(c.design.alpha, c.design.alpha + 4);
  j["beta"] = std::vector<double>(c.design.beta, c.design.beta + 4);
  j["counter_torque"] = c.counter_torque;
  j["mechanism_mass"] = c.mechanism_mass;
  return j;
}

// Full airframe snapshot (any rotor count), used for optimizer outputs and
// feasibility inputs where the craft may not be a four-rotor unit.
inline Json airframe_to_json(const AirframeModel& m) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["name"] = m.name;
  j["mass"] = m.mass;
  j["gravity"] = m.gravity;
  j["counter_torque"] = m.counter_torque;
  std::vector<double> inertia;
  inertia.reserve(9);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) inertia.push_back(m.inertia(r, c));
  }
  j["inertia"] = inertia;
  Json rotors = Json::array();
  for (const auto& r : m.rotors) {
    Json jr;
    jr["position"] = std::vector<double>{r.position.x(), r.position.y(), r.position.z()};
    jr["direction"] = std::vector<double>{r.direction.x(), r.direction.y(), r.direction.z()};
    jr["alpha"] = r.alpha;
    jr["beta"] = r.beta;
    jr["sigma"] = r.sigma;
    jr["max_thrust"] = r.max_thrust;
    rotors.push_back(jr);
  }
  j["rotors"] = rotors;
  return j;
}

inline AirframeModel airframe_from_json(const Json& j, const std::string& prefix = "airframe") {
  schema::check_keys(j, {"schema_version", "name", "mass", "gravity", "counter_torque",
                         "inertia", "rotors"},
                     prefix);
  schema::check_schema_version(j, prefix);
  AirframeModel m;
  m.name = schema::get_string(j, "name", "airframe", prefix);
  m.mass = schema::get_number(j, "mass", 0.0, prefix);
  m.gravity = schema::get_number(j, "gravity", kGravity, prefix);
  m.counter_torque = schema::get_bool(j, "counter_torque", false, prefix);
  const auto inertia = schema::get_array(j, "inertia", 9, {}, prefix);
  if (inertia.empty()) throw ConfigError("'" + prefix + ".inertia' is required");
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) m.inertia(r, c) = inertia[static_cast<size_t>(3 * r + c)];
  }
  if (!j.contains("rotors") || !j.at("rotors").is_array()) {
    throw ConfigError("'" + prefix + ".rotors' must be an array");
  }
  int idx = 0;
  for (const auto& jr : j.at("rotors")) {
    const std::string rp = prefix + ".rotors[" + std::to_string(idx++) + "]";
    schema::check_keys(jr, {"position", "direction", "alpha", "beta", "sigma", "max_thrust"}, rp);
    RotorGeometry r;
    const auto pos = schema::get_array(jr, "position", 3, {}, rp);
    if (pos.empty()) throw ConfigError("'" + rp + ".position' is required");
    r.position = Vec3(pos[0], pos[1], pos[2]);
    r.alpha = schema::get_number(jr, "alpha", 0.0, rp);
    r.beta = schema::get_number(jr, "beta", 0.0, rp);
    const auto dir = schema::get_array(jr, "direction", 3, {}, rp);
    r.direction = dir.empty() ? rotor_direction_from_angles(r.alpha, r.beta)
                              : Vec3(dir[0], dir[1], dir[2]);
    r.sigma = schema::get_number(jr, "sigma", 0.0, rp);
    r.max_thrust = schema::get_number(jr, "max_thrust", 0.0, rp);
    m.rotors.push_back(r);
  }
  m.validate();
  return m;
}

// ---------------------------------------------------------------------------
// CSV (RFC 4180: CRLF row endings, quoting only when needed)

class CsvWriter {
 public:
  void header(const std::vector<std::string>& cols) { row_strings(cols); }

  void row_strings(const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ += ',';
      out_ += escape(cells[i]);
    }
    out_ += "\r\n";
  }

  const std::string& str() const { return out_; }

  static std::string escape(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += "\"\"";
      else q += c;
    }
    q += '"';
    return q;
  }

 private:
  std::string out_;
};

// Parses one CSV text into rows of cells (used by the plot command).
inline std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string cell;
  bool quoted = false;
  for (size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          cell += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      row.push_back(cell);
      cell.clear();
    } else if (c == '\n') {
      if (!cell.empty() || !row.empty()) {
        row.push_back(cell);
        rows.push_back(row);
      }
      cell.clear();
      row.clear();
    } else if (c != '\r') {
      cell += c;
    }
  }
  if (!cell.empty() || !row.empty()) {
    row.push_back(cell);
    rows.push_back(row);
  }
  return rows;
}

inline std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace tiltdock
