#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "picard/errors.hpp"
#include "picard/expression.hpp"
#include "picard/functional.hpp"
#include "picard/message.hpp"
#include "picard/presets.hpp"

namespace picard {

/// Experiment description, read from a JSON document:
///
///   {
///     "preset":    {"name": "linear-feedback", "params": {"a": 0.5}},   // or
///     "drift":     {"expression": "0.5*y + x"},
///     "message":   {"kind": "constant_gaussian", "params": {"sigma": 1}},
///     "constants": {"K": 2, "L": 8, "M": null},
///     "grid":      {"T": 1, "steps": 64},
///     "budgets":   {"n_outer": 2000, "n_inner": 200, "n_max": 6, "n_ref_extra": 10},
///     "seed": 1, "workers": 1, "p": 2, "mi_multiplier": 1,
///     "output":    {"dir": "results", "json": false},
///     "strict": false
///   }
///
/// Exactly one of "preset" and "drift" is required, as is "grid". "message" and
/// "constants" override the preset's law and declared constants; an expression
/// drift needs "constants" and defaults to no message.
struct ExperimentConfig {
  std::optional<std::string> preset;
  PresetParams preset_params;
  std::optional<std::string> drift_expression;

  std::optional<std::string> message_kind;
  std::map<std::string, double> message_params;

  std::optional<double> K;
  std::optional<double> L;
  std::optional<double> M;

  double horizon = 1.0;
  std::size_t steps = 64;

  std::size_t n_outer = 2000;
  std::size_t n_inner = 200;
  std::size_t n_max = 6;
  std::size_t n_ref_extra = 10;

  std::uint64_t seed = 1;
  std::size_t workers = 1;
  double p = 2.0;
  double mi_multiplier = 1.0;

  std::string output_dir;
  bool json = false;
  bool strict = false;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;

  void validate() const {
    if (preset.has_value() == drift_expression.has_value()) {
      throw ConfigError("config needs exactly one of 'preset' and 'drift'", preset ? "drift" : "preset");
    }
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigError("grid.T must be positive", "grid.T");
    if (steps == 0) throw ConfigError("grid.steps must be positive", "grid.steps");
    if (n_outer < 2) throw ConfigError("budgets.n_outer must be at least 2", "budgets.n_outer");
    if (n_inner == 0) throw ConfigError("budgets.n_inner must be positive", "budgets.n_inner");
    if (n_max == 0) throw ConfigError("budgets.n_max must be positive", "budgets.n_max");
    if (!(p >= 1.0)) throw ConfigError("p must be >= 1", "p");
    if (!(mi_multiplier > 0.0)) throw ConfigError("mi_multiplier must be positive", "mi_multiplier");
    if (drift_expression && (!K || !L)) {
      throw ConfigError("an expression drift needs constants.K and constants.L", K ? "constants.L" : "constants.K");
    }
  }
};

namespace detail {

using nlohmann::json;

inline const json* member(const json& j, const char* key) {
  const auto it = j.find(key);
  return it == j.end() || it->is_null() ? nullptr : &*it;
}

inline const json& require(const json& j, const char* key, const std::string& path) {
  const json* v = member(j, key);
  if (v == nullptr) throw ConfigError("missing field '" + path + "'", path);
  return *v;
}

inline double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError("field '" + path + "' must be a number", path);
  return v.get<double>();
}

inline std::size_t as_count(const json& v, const std::string& path) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    throw ConfigError("field '" + path + "' must be a nonnegative integer", path);
  }
  return v.get<std::size_t>();
}

inline std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError("field '" + path + "' must be a string", path);
  return v.get<std::string>();
}

inline bool as_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) throw ConfigError("field '" + path + "' must be true or false", path);
  return v.get<bool>();
}

inline std::map<std::string, double> as_params(const json& v, const std::string& path) {
  if (!v.is_object()) throw ConfigError("field '" + path + "' must be an object", path);
  std::map<std::string, double> out;
  for (const auto& [key, value] : v.items()) out[key] = as_number(value, path + "." + key);
  return out;
}

inline void require_object(const json& v, const std::string& path) {
  if (!v.is_object()) throw ConfigError("field '" + path + "' must be an object", path);
}

inline void reject_unknown(const json& v, std::initializer_list<const char*> known, const std::string& prefix) {
  for (const auto& [key, value] : v.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!ok) throw ConfigError("unknown field '" + path + "'", path);
  }
}

// Byte offset -> "line L, column C" (1-based).
inline std::string locate(std::string_view text, std::size_t offset) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace detail

[[nodiscard]] inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  using namespace detail;
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(j,
                 {"preset", "drift", "message", "constants", "grid", "budgets", "seed", "workers", "p",
                  "mi_multiplier", "output", "strict"},
                 "");
  ExperimentConfig c;

  if (const json* v = member(j, "preset")) {
    require_object(*v, "preset");
    reject_unknown(*v, {"name", "params"}, "preset");
    c.preset = as_string(require(*v, "name", "preset.name"), "preset.name");
    if (const json* p = member(*v, "params")) c.preset_params = as_params(*p, "preset.params");
  }
  if (const json* v = member(j, "drift")) {
    require_object(*v, "drift");
    reject_unknown(*v, {"expression"}, "drift");
    c.drift_expression = as_string(require(*v, "expression", "drift.expression"), "drift.expression");
  }
  if (const json* v = member(j, "message")) {
    require_object(*v, "message");
    reject_unknown(*v, {"kind", "params"}, "message");
    c.message_kind = as_string(require(*v, "kind", "message.kind"), "message.kind");
    if (const json* p = member(*v, "params")) c.message_params = as_params(*p, "message.params");
  }
  if (const json* v = member(j, "constants")) {
    require_object(*v, "constants");
    reject_unknown(*v, {"K", "L", "M"}, "constants");
    if (const json* k = member(*v, "K")) c.K = as_number(*k, "constants.K");
    if (const json* l = member(*v, "L")) c.L = as_number(*l, "constants.L");
    if (const json* m = member(*v, "M")) c.M = as_number(*m, "constants.M");
  }

  const json& grid = require(j, "grid", "grid");
  require_object(grid, "grid");
  reject_unknown(grid, {"T", "steps"}, "grid");
  c.horizon = as_number(require(grid, "T", "grid.T"), "grid.T");
  c.steps = as_count(require(grid, "steps", "grid.steps"), "grid.steps");

  if (const json* v = member(j, "budgets")) {
    require_object(*v, "budgets");
    reject_unknown(*v, {"n_outer", "n_inner", "n_max", "n_ref_extra"}, "budgets");
    if (const json* b = member(*v, "n_outer")) c.n_outer = as_count(*b, "budgets.n_outer");
    if (const json* b = member(*v, "n_inner")) c.n_inner = as_count(*b, "budgets.n_inner");
    if (const json* b = member(*v, "n_max")) c.n_max = as_count(*b, "budgets.n_max");
    if (const json* b = member(*v, "n_ref_extra")) c.n_ref_extra = as_count(*b, "budgets.n_ref_extra");
  }
  if (const json* v = member(j, "seed")) c.seed = as_count(*v, "seed");
  if (const json* v = member(j, "workers")) c.workers = as_count(*v, "workers");
  if (const json* v = member(j, "p")) c.p = as_number(*v, "p");
  if (const json* v = member(j, "mi_multiplier")) c.mi_multiplier = as_number(*v, "mi_multiplier");
  if (const json* v = member(j, "output")) {
    require_object(*v, "output");
    reject_unknown(*v, {"dir", "json"}, "output");
    if (const json* d = member(*v, "dir")) c.output_dir = as_string(*d, "output.dir");
    if (const json* b = member(*v, "json")) c.json = as_bool(*b, "output.json");
  }
  if (const json* v = member(j, "strict")) c.strict = as_bool(*v, "strict");

  c.validate();
  return c;
}

[[nodiscard]] inline ExperimentConfig parse_config(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const std::size_t offset = e.byte > 0 ? e.byte - 1 : 0;
    throw ConfigError("config is not valid JSON at " + detail::locate(text, offset) + ": " + e.what());
  }
  return config_from_json(j);
}

[[nodiscard]] inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path + "'", "--config");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

[[nodiscard]] inline nlohmann::json to_json(const ExperimentConfig& c) {
  using nlohmann::json;
  json j = json::object();
  if (c.preset) j["preset"] = {{"name", *c.preset}, {"params", c.preset_params}};
  if (c.drift_expression) j["drift"] = {{"expression", *c.drift_expression}};
  if (c.message_kind) j["message"] = {{"kind", *c.message_kind}, {"params", c.message_params}};
  if (c.K || c.L || c.M) {
    json k = json::object();
    if (c.K) k["K"] = *c.K;
    if (c.L) k["L"] = *c.L;
    if (c.M) k["M"] = *c.M;
    j["constants"] = k;
  }
  j["grid"] = {{"T", c.horizon}, {"steps", c.steps}};
  j["budgets"] = {{"n_outer", c.n_outer}, {"n_inner", c.n_inner}, {"n_max", c.n_max}, {"n_ref_extra", c.n_ref_extra}};
  j["seed"] = c.seed;
  j["workers"] = c.workers;
  j["p"] = c.p;
  j["mi_multiplier"] = c.mi_multiplier;
  j["output"] = {{"dir", c.output_dir}, {"json", c.json}};
  j["strict"] = c.strict;
  return j;
}

[[nodiscard]] inline std::string serialize(const ExperimentConfig& c) { return to_json(c).dump(2); }

/// FNV-1a over the canonical serialization, output settings excluded.
[[nodiscard]] inline std::uint64_t config_hash(const ExperimentConfig& c) {
  nlohmann::json j = to_json(c);
  j.erase("output");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

[[nodiscard]] inline MessageLaw make_message_law(const std::string& kind, const std::map<std::string, double>& params) {
  const auto get = [&](const char* key, double fallback) {
    const auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  };
  const auto only = [&](std::initializer_list<const char*> keys) {
    for (const auto& [key, value] : params) {
      bool ok = false;
      for (const char* k : keys) ok = ok || key == k;
      if (!ok) throw ConfigError("message '" + kind + "' has no parameter '" + key + "'", "message.params." + key);
    }
  };
  if (kind == "none") {
    only({});
    return MessageLaw::none();
  }
  if (kind == "constant") {
    only({"value"});
    return MessageLaw::constant(get("value", 1.0));
  }
  if (kind == "constant_gaussian") {
    only({"sigma"});
    return MessageLaw::constant_gaussian(get("sigma", 1.0));
  }
  if (kind == "brownian") {
    only({"sigma"});
    return MessageLaw::brownian(get("sigma", 1.0));
  }
  throw ConfigError("unknown message kind '" + kind + "'", "message.kind");
}

/// The channel a config describes, with overrides applied.
[[nodiscard]] inline Channel make_channel(const ExperimentConfig& c) {
  c.validate();
  if (c.drift_expression) {
    MessageLaw law = c.message_kind ? make_message_law(*c.message_kind, c.message_params) : MessageLaw::none();
    try {
      return {"expression", expression_drift(*c.drift_expression, {*c.K, *c.L, c.M}), DiffusionFunctional::unit(),
              law};
    } catch (const DomainError& e) {
      throw ConfigError(std::string("constants: ") + e.what(), "constants");
    }
  }
  Channel ch = make_preset(*c.preset, c.preset_params, c.horizon);
  if (c.message_kind) ch.law = make_message_law(*c.message_kind, c.message_params);
  if (c.K || c.L || c.M) {
    Constants k = ch.drift.constants();
    if (c.K) k.K = *c.K;
    if (c.L) k.L = *c.L;
    if (c.M) k.M = *c.M;
    try {
      ch.drift = ch.drift.with_constants(k);
    } catch (const DomainError& e) {
      throw ConfigError(std::string("constants: ") + e.what(), "constants");
    }
  }
  return ch;
}

}  // namespace picard
