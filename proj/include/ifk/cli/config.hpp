#pragma once

// Experiment configs: JSON or TOML text, validated against one schema and
// normalized to a canonical JSON tree whose FNV-1a hash identifies the run.

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>
#include <toml.hpp>

#include "ifk/dynamics.hpp"
#include "ifk/models.hpp"

namespace ifk::cli {

using json = nlohmann::json;

enum class Task {
  essential_spectrum,
  truncation_spectrum,
  convergence,
  index,
  domain_wall_decomposition,
  cone_decomposition,
  non_propagation
};

inline const std::vector<std::pair<Task, std::string>>& task_names() {
  static const std::vector<std::pair<Task, std::string>> names{
      {Task::essential_spectrum, "essential_spectrum"},
      {Task::truncation_spectrum, "truncation_spectrum"},
      {Task::convergence, "convergence"},
      {Task::index, "index"},
      {Task::domain_wall_decomposition, "domain_wall_decomposition"},
      {Task::cone_decomposition, "cone_decomposition"},
      {Task::non_propagation, "non_propagation"}};
  return names;
}

inline std::string to_string(Task t) {
  for (const auto& [k, v] : task_names())
    if (k == t) return v;
  return "";
}

struct Numerics {
  std::optional<int> grid;  // Bloch points per direction
  int sphere_points = 360;
  std::optional<int> box;  // truncation half-width
  std::vector<int> sizes{25, 50, 100};
  std::optional<Interval> window;
  std::optional<double> zero_window;
  std::optional<int> stability_half_width;
};

struct FilterSpec {
  Interval support;
  double edge_fraction = 0.25;
  double budget = default_filter_budget;
};

struct DynamicsSpec {
  std::string target;
  double duration = 100.0;
  double epsilon = 1e-3;
  std::vector<int> site;  // empty: origin
  int component = 0;
  std::vector<double> radii;
  double aperture = std::numbers::pi / 12;
};

struct ExperimentConfig {
  std::string model;
  ModelParams params;
  std::vector<ModelParams> sweep;
  Task task = Task::essential_spectrum;
  Numerics numerics;
  std::optional<FilterSpec> filter;
  std::optional<DynamicsSpec> dynamics;
  std::string prefix;
  json canonical;
  std::string hash;
};

inline std::string fnv1a(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace detail {

inline json from_toml(const toml::node& n) {
  if (auto t = n.as_table()) {
    json o = json::object();
    for (const auto& [k, v] : *t) o[std::string(k.str())] = from_toml(v);
    return o;
  }
  if (auto a = n.as_array()) {
    json o = json::array();
    for (const auto& v : *a) o.push_back(from_toml(v));
    return o;
  }
  if (auto v = n.as_integer()) return v->get();
  if (auto v = n.as_floating_point()) return v->get();
  if (auto v = n.as_boolean()) return v->get();
  if (auto v = n.as_string()) return v->get();
  throw config_error("unsupported TOML value (dates and times are not part of the schema)");
}

inline std::string where(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

inline void only_keys(const json& j, const std::string& path, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw config_error("'" + path + "' must be a table/object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw config_error("unknown key '" + where(path, k) + "'");
}

inline double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw config_error("'" + path + "' must be a number");
  return j.get<double>();
}

inline int integer(const json& j, const std::string& path) {
  if (!j.is_number_integer() && !(j.is_number_float() && j.get<double>() == std::floor(j.get<double>())))
    throw config_error("'" + path + "' must be an integer");
  const double v = j.get<double>();
  if (std::abs(v) > 1e9) throw config_error("'" + path + "' is out of range");
  return static_cast<int>(v);
}

inline int positive(const json& j, const std::string& path) {
  const int v = integer(j, path);
  if (v <= 0) throw config_error("'" + path + "' must be positive");
  return v;
}

inline std::string text(const json& j, const std::string& path) {
  if (!j.is_string()) throw config_error("'" + path + "' must be a string");
  return j.get<std::string>();
}

inline Interval interval(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2) throw config_error("'" + path + "' must be a two-element array [lower, upper]");
  Interval iv{number(j[0], path + "[0]"), number(j[1], path + "[1]")};
  if (!(iv.upper > iv.lower)) throw config_error("'" + path + "' must have lower < upper");
  return iv;
}

inline ModelParams params(const json& j, const std::string& path) {
  if (!j.is_object()) throw config_error("'" + path + "' must be a table/object");
  ModelParams p;
  for (const auto& [k, v] : j.items()) {
    if (v.is_number()) p[k] = v.get<double>();
    else if (v.is_string()) p[k] = v.get<std::string>();
    else if (v.is_boolean()) p[k] = v.get<bool>() ? 1.0 : 0.0;
    else throw config_error("'" + where(path, k) + "' must be a number or string");
  }
  return p;
}

inline json params_json(const ModelParams& p) {
  json o = json::object();
  for (const auto& [k, v] : p) {
    if (std::holds_alternative<double>(v)) o[k] = std::get<double>(v);
    else o[k] = std::get<std::string>(v);
  }
  return o;
}

}  // namespace detail

// Validates a parsed tree and fills defaults; model parameters are checked
// against the catalog so unknown names and keys fail here.
inline ExperimentConfig parse_config(const json& root) {
  using namespace detail;
  only_keys(root, "", {"model", "task", "sweep", "numerics", "filter", "dynamics", "output"});
  ExperimentConfig c;
  if (!root.contains("model")) throw config_error("missing required key 'model'");
  if (!root.contains("task")) throw config_error("missing required key 'task'");

  const json& m = root["model"];
  only_keys(m, "model", {"name", "params"});
  if (!m.contains("name")) throw config_error("missing required key 'model.name'");
  c.model = text(m["name"], "model.name");
  const ModelDescriptor& desc = models::descriptor(c.model);
  if (m.contains("params")) c.params = params(m["params"], "model.params");
  c.params = models::resolve(desc, c.params);

  const std::string task = text(root["task"], "task");
  bool found = false;
  for (const auto& [k, v] : task_names())
    if (v == task) {
      c.task = k;
      found = true;
    }
  if (!found) throw config_error("unknown task '" + task + "'");

  if (root.contains("sweep")) {
    const json& s = root["sweep"];
    if (!s.is_array() || s.empty()) throw config_error("'sweep' must be a non-empty array of parameter tables");
    if (c.task != Task::index && c.task != Task::domain_wall_decomposition && c.task != Task::cone_decomposition)
      throw config_error("'sweep' is only supported for index tasks");
    for (std::size_t i = 0; i < s.size(); ++i) {
      const std::string path = "sweep[" + std::to_string(i) + "]";
      ModelParams row = c.params;
      for (const auto& [k, v] : params(s[i], path)) row[k] = v;
      c.sweep.push_back(models::resolve(desc, row));
    }
  }

  if (root.contains("numerics")) {
    const json& n = root["numerics"];
    only_keys(n, "numerics", {"grid", "sphere_points", "box", "sizes", "window", "zero_window", "stability_half_width"});
    if (n.contains("grid")) c.numerics.grid = positive(n["grid"], "numerics.grid");
    if (n.contains("sphere_points")) c.numerics.sphere_points = positive(n["sphere_points"], "numerics.sphere_points");
    if (n.contains("box")) c.numerics.box = positive(n["box"], "numerics.box");
    if (n.contains("sizes")) {
      if (!n["sizes"].is_array()) throw config_error("'numerics.sizes' must be an array");
      c.numerics.sizes.clear();
      for (std::size_t i = 0; i < n["sizes"].size(); ++i)
        c.numerics.sizes.push_back(positive(n["sizes"][i], "numerics.sizes[" + std::to_string(i) + "]"));
    }
    if (n.contains("window")) c.numerics.window = interval(n["window"], "numerics.window");
    if (n.contains("zero_window")) {
      c.numerics.zero_window = number(n["zero_window"], "numerics.zero_window");
      if (*c.numerics.zero_window <= 0.0) throw config_error("'numerics.zero_window' must be positive");
    }
    if (n.contains("stability_half_width"))
      c.numerics.stability_half_width = positive(n["stability_half_width"], "numerics.stability_half_width");
  }

  if (root.contains("filter")) {
    const json& f = root["filter"];
    only_keys(f, "filter", {"support", "edge_fraction", "budget"});
    if (!f.contains("support")) throw config_error("missing required key 'filter.support'");
    FilterSpec fs;
    fs.support = interval(f["support"], "filter.support");
    if (f.contains("edge_fraction")) fs.edge_fraction = number(f["edge_fraction"], "filter.edge_fraction");
    if (f.contains("budget")) fs.budget = number(f["budget"], "filter.budget");
    if (!(fs.edge_fraction > 0.0 && fs.edge_fraction <= 0.5)) throw config_error("'filter.edge_fraction' must lie in (0, 0.5]");
    if (!(fs.budget > 0.0)) throw config_error("'filter.budget' must be positive");
    c.filter = fs;
  }
  if (root.contains("dynamics")) {
    const json& d = root["dynamics"];
    only_keys(d, "dynamics", {"target", "duration", "epsilon", "site", "component", "radii", "aperture"});
    if (!d.contains("target")) throw config_error("missing required key 'dynamics.target'");
    DynamicsSpec ds;
    ds.target = text(d["target"], "dynamics.target");
    if (d.contains("duration")) ds.duration = number(d["duration"], "dynamics.duration");
    if (d.contains("epsilon")) ds.epsilon = number(d["epsilon"], "dynamics.epsilon");
    if (d.contains("component")) ds.component = integer(d["component"], "dynamics.component");
    if (d.contains("aperture")) ds.aperture = number(d["aperture"], "dynamics.aperture");
    if (d.contains("site")) {
      if (!d["site"].is_array()) throw config_error("'dynamics.site' must be an array");
      for (std::size_t i = 0; i < d["site"].size(); ++i)
        ds.site.push_back(integer(d["site"][i], "dynamics.site[" + std::to_string(i) + "]"));
    }
    if (d.contains("radii")) {
      if (!d["radii"].is_array()) throw config_error("'dynamics.radii' must be an array");
      for (std::size_t i = 0; i < d["radii"].size(); ++i)
        ds.radii.push_back(number(d["radii"][i], "dynamics.radii[" + std::to_string(i) + "]"));
    }
    if (!(ds.duration >= 0.0)) throw config_error("'dynamics.duration' must be non-negative");
    if (!(ds.epsilon > 0.0)) throw config_error("'dynamics.epsilon' must be positive");
    if (ds.component < 0 || ds.component >= desc.fiber_dim) throw config_error("'dynamics.component' out of range");
    c.dynamics = ds;
  }
  if (c.task == Task::non_propagation && (!c.filter || !c.dynamics))
    throw config_error("task 'non_propagation' needs 'filter' and 'dynamics' tables");
  if (c.task == Task::convergence && c.numerics.sizes.size() < 3)
    throw config_error("'numerics.sizes' needs at least three box sizes");

  c.prefix = to_string(c.task);
  if (root.contains("output")) {
    only_keys(root["output"], "output", {"prefix"});
    if (root["output"].contains("prefix")) c.prefix = text(root["output"]["prefix"], "output.prefix");
    if (c.prefix.empty() || c.prefix.find_first_of("/\\") != std::string::npos)
      throw config_error("'output.prefix' must be a plain file name prefix");
  }

  // Canonical form: every default explicit, numbers typed by the schema.
  json k = json::object();
  k["model"] = {{"name", c.model}, {"params", params_json(c.params)}};
  k["task"] = to_string(c.task);
  if (!c.sweep.empty()) {
    k["sweep"] = json::array();
    for (const auto& row : c.sweep) k["sweep"].push_back(params_json(row));
  }
  json n = {{"sphere_points", c.numerics.sphere_points}, {"sizes", c.numerics.sizes}};
  if (c.numerics.grid) n["grid"] = *c.numerics.grid;
  if (c.numerics.box) n["box"] = *c.numerics.box;
  if (c.numerics.window) n["window"] = {c.numerics.window->lower, c.numerics.window->upper};
  if (c.numerics.zero_window) n["zero_window"] = *c.numerics.zero_window;
  if (c.numerics.stability_half_width) n["stability_half_width"] = *c.numerics.stability_half_width;
  k["numerics"] = n;
  if (c.filter)
    k["filter"] = {{"support", {c.filter->support.lower, c.filter->support.upper}},
                   {"edge_fraction", c.filter->edge_fraction},
                   {"budget", c.filter->budget}};
  if (c.dynamics)
    k["dynamics"] = {{"target", c.dynamics->target},       {"duration", c.dynamics->duration},
                     {"epsilon", c.dynamics->epsilon},     {"site", c.dynamics->site},
                     {"component", c.dynamics->component}, {"radii", c.dynamics->radii},
                     {"aperture", c.dynamics->aperture}};
  k["output"] = {{"prefix", c.prefix}};
  c.canonical = k;
  c.hash = fnv1a(k.dump());
  return c;
}

inline json parse_text(const std::string& text, bool toml_syntax) {
  if (toml_syntax) {
    try {
      return detail::from_toml(toml::parse(text));
    } catch (const toml::parse_error& e) {
      std::ostringstream os;
      os << "TOML syntax error: " << e.description() << " at line " << e.source().begin.line;
      throw config_error(os.str());
    }
  }
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw config_error(std::string("JSON syntax error: ") + e.what());
  }
}

// `.toml` files use TOML syntax, everything else JSON.
inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  const bool toml_syntax = path.size() >= 5 && path.substr(path.size() - 5) == ".toml";
  return parse_config(parse_text(ss.str(), toml_syntax));
}

}  // namespace ifk::cli
