#include "pml/config.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <toml.hpp>

#include "pml/errors.hpp"

namespace pml {

using json = nlohmann::ordered_json;

namespace {

json defaults() {
  return json::parse(R"({
    "dim": 2,
    "p": 2.0,
    "radii": [8.0, 16.0, 32.0],
    "seeds": 4,
    "seed": 1,
    "intensity": 1.0,
    "statistics": ["torus_cost"],
    "window": 8.0,
    "exceedance_length": 2.0,
    "threads": 0,
    "solver": {
      "backend": "exact",
      "spacing": 0.25,
      "exact_point_limit": 0,
      "epsilon": 0.001,
      "tolerance": 1e-6,
      "max_iterations": 20000,
      "scaling": 0.5,
      "candidates": 8,
      "dense_arc_limit": 200000,
      "cost_resolution": 1099511627776.0
    },
    "output": {
      "csv": "scaling.csv",
      "json": "summary.json",
      "svg": ""
    }
  })");
}

bool integral(const json& v) {
  if (v.is_number_integer()) return true;
  return v.is_number_float() && std::isfinite(v.get<double>()) &&
         v.get<double>() == std::floor(v.get<double>());
}

// Checks `value` against the type of `schema`, normalizing integral floats
// for integer keys.
json conform(const json& schema, const json& value, const std::string& key) {
  auto bad = [&](const char* want) {
    return InvalidArgument("config: key '" + key + "' expects " + want + ", got " + value.dump());
  };
  if (schema.is_object()) {
    if (!value.is_object()) throw bad("a table");
    json out = schema;
    for (auto it = value.begin(); it != value.end(); ++it) {
      const std::string sub = key.empty() ? it.key() : key + "." + it.key();
      if (!schema.contains(it.key())) throw InvalidArgument("config: unknown key '" + sub + "'");
      out[it.key()] = conform(schema[it.key()], it.value(), sub);
    }
    return out;
  }
  if (schema.is_array()) {
    if (!value.is_array()) throw bad("a list");
    json out = json::array();
    const json elem = schema.empty() ? json(0.0) : schema.front();
    for (const auto& v : value) out.push_back(conform(elem, v, key + "[]"));
    return out;
  }
  if (schema.is_number_integer()) {
    if (!integral(value)) throw bad("an integer");
    if (value.is_number_float()) return json(static_cast<std::int64_t>(value.get<double>()));
    return value;
  }
  if (schema.is_number()) {
    if (!value.is_number()) throw bad("a number");
    return json(value.get<double>());
  }
  if (schema.is_string()) {
    if (!value.is_string()) throw bad("a string");
    return value;
  }
  if (schema.is_boolean()) {
    if (!value.is_boolean()) throw bad("a boolean");
    return value;
  }
  return value;
}

json parse_scalar(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
    return json(text);
  }
}

void apply_override(json& schema_tree, json& tree, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw InvalidArgument("config override '" + assignment + "' is not key=value");
  }
  const std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
  json* node = &tree;
  const json* schema = &schema_tree;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!schema->is_object() || !schema->contains(part)) {
      throw InvalidArgument("config: unknown key '" + key + "'");
    }
    schema = &(*schema)[part];
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  json value = parse_scalar(text);
  if (schema->is_array() && !value.is_array()) {
    value = json::array();
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!item.empty()) value.push_back(parse_scalar(item));
    }
  }
  if (schema->is_string() && !value.is_string()) value = json(text);
  *node = conform(*schema, value, key);
}

Backend backend_from(const std::string& s) {
  if (s == "exact") return Backend::Exact;
  if (s == "entropic") return Backend::Entropic;
  throw InvalidArgument("config: solver.backend must be 'exact' or 'entropic'");
}

}  // namespace

std::string default_config_json() { return defaults().dump(2); }

std::string config_text_to_json(const std::string& text, const std::string& format) {
  if (format == "json") {
    try {
      return json::parse(text).dump();
    } catch (const json::parse_error& e) {
      throw InvalidArgument(std::string("config: invalid JSON: ") + e.what());
    }
  }
  if (format == "toml") {
    try {
      const toml::table tbl = toml::parse(text);
      std::ostringstream ss;
      ss << toml::json_formatter{tbl};
      return ss.str();
    } catch (const toml::parse_error& e) {
      throw InvalidArgument(std::string("config: invalid TOML: ") + std::string(e.description()));
    }
  }
  throw InvalidArgument("config: unknown format '" + format + "'");
}

std::string resolve_config(const std::optional<std::string>& path,
                           const std::vector<std::string>& overrides) {
  json schema = defaults();
  json tree = schema;
  if (path) {
    std::ifstream in(*path);
    if (!in) throw InvalidArgument("cannot open config " + *path);
    std::stringstream ss;
    ss << in.rdbuf();
    const bool toml_file = path->size() >= 5 && path->compare(path->size() - 5, 5, ".toml") == 0;
    tree = conform(schema, json::parse(config_text_to_json(ss.str(), toml_file ? "toml" : "json")), "");
  }
  for (const auto& o : overrides) apply_override(schema, tree, o);
  // Validate the merged result once more through the typed view.
  experiment_from_json(tree.dump()).validate();
  return tree.dump(2);
}

ExperimentConfig experiment_from_json(const std::string& json_text) {
  const json j = conform(defaults(), json::parse(json_text), "");
  ExperimentConfig c;
  c.dim = j["dim"].get<std::size_t>();
  c.p = j["p"].get<double>();
  c.radii = j["radii"].get<std::vector<double>>();
  c.seeds = j["seeds"].get<std::size_t>();
  c.seed = j["seed"].get<std::uint64_t>();
  c.intensity = j["intensity"].get<double>();
  c.statistics.clear();
  for (const auto& s : j["statistics"]) c.statistics.push_back(statistic_from_string(s.get<std::string>()));
  c.window = j["window"].get<double>();
  c.exceedance_length = j["exceedance_length"].get<double>();
  c.threads = j["threads"].get<std::size_t>();
  const json& s = j["solver"];
  c.backend = backend_from(s["backend"].get<std::string>());
  c.transport.backend = c.backend;
  c.transport.spacing = s["spacing"].get<double>();
  c.exact_point_limit = s["exact_point_limit"].get<std::size_t>();
  c.transport.entropic.epsilon = s["epsilon"].get<double>();
  c.transport.entropic.tolerance = s["tolerance"].get<double>();
  c.transport.entropic.max_iterations = s["max_iterations"].get<int>();
  c.transport.entropic.scaling = s["scaling"].get<double>();
  c.transport.exact.candidates = s["candidates"].get<std::size_t>();
  c.transport.exact.dense_arc_limit = s["dense_arc_limit"].get<std::size_t>();
  c.transport.exact.cost_resolution = s["cost_resolution"].get<double>();
  const json& o = j["output"];
  c.csv_path = o["csv"].get<std::string>();
  c.json_path = o["json"].get<std::string>();
  c.svg_path = o["svg"].get<std::string>();
  return c;
}

std::string experiment_to_json(const ExperimentConfig& c) {
  json j = defaults();
  j["dim"] = c.dim;
  j["p"] = c.p;
  j["radii"] = c.radii;
  j["seeds"] = c.seeds;
  j["seed"] = c.seed;
  j["intensity"] = c.intensity;
  j["statistics"] = json::array();
  for (Statistic s : c.statistics) j["statistics"].push_back(to_string(s));
  j["window"] = c.window;
  j["exceedance_length"] = c.exceedance_length;
  j["threads"] = c.threads;
  json& s = j["solver"];
  s["backend"] = c.backend == Backend::Exact ? "exact" : "entropic";
  s["spacing"] = c.transport.spacing;
  s["exact_point_limit"] = c.exact_point_limit;
  s["epsilon"] = c.transport.entropic.epsilon;
  s["tolerance"] = c.transport.entropic.tolerance;
  s["max_iterations"] = c.transport.entropic.max_iterations;
  s["scaling"] = c.transport.entropic.scaling;
  s["candidates"] = c.transport.exact.candidates;
  s["dense_arc_limit"] = c.transport.exact.dense_arc_limit;
  s["cost_resolution"] = c.transport.exact.cost_resolution;
  json& o = j["output"];
  o["csv"] = c.csv_path;
  o["json"] = c.json_path;
  o["svg"] = c.svg_path;
  return j.dump(2);
}

}  // namespace pml
