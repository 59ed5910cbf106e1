#ifndef ERGOTEST_CONFIG_HPP
#define ERGOTEST_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ergotest/hypotheses.hpp"
#include "ergotest/processes.hpp"

namespace ergotest {

using Json = nlohmann::json;

/// Command-line values that take precedence over the config file.
struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> depth;
};

struct ExperimentConfig {
  Alphabet alphabet;
  std::size_t depth = 0;
  std::uint64_t seed = 0;
  std::uint64_t experiment_id = 0;
  std::string type;
  Json experiment;
  std::map<std::string, ProcessPtr> processes;
  std::map<std::string, HypothesisPtr> hypotheses;
  std::filesystem::path base_dir;
  std::string raw;  // config bytes as read
};

namespace detail {

inline const Json& require(const Json& j, const std::string& key, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + " must be an object");
  auto it = j.find(key);
  if (it == j.end()) throw ValidationError("missing key '" + key + "' in " + where);
  return *it;
}

template <class T>
T get_as(const Json& j, const std::string& what) {
  try {
    return j.get<T>();
  } catch (const Json::exception& e) {
    throw ValidationError(what + " has the wrong type: " + e.what());
  }
}

template <class T>
T field(const Json& j, const std::string& key, const std::string& where) {
  return get_as<T>(require(j, key, where), where + "." + key);
}

template <class T>
T field_or(const Json& j, const std::string& key, const std::string& where, T fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  return get_as<T>(j.at(key), where + "." + key);
}

// Accepts [[row], [row], ...] or a flat list.
inline std::vector<double> matrix_field(const Json& j, const std::string& key, const std::string& where) {
  const Json& v = require(j, key, where);
  if (!v.is_array()) throw ValidationError(where + "." + key + " must be an array");
  std::vector<double> out;
  for (const auto& row : v) {
    if (row.is_array()) {
      for (const auto& x : row) out.push_back(get_as<double>(x, where + "." + key));
    } else {
      out.push_back(get_as<double>(row, where + "." + key));
    }
  }
  return out;
}

class ProcessResolver {
 public:
  ProcessResolver(const Json& defs, const Alphabet& alphabet) : defs_(defs), alphabet_(alphabet) {}

  ProcessPtr get(const std::string& name, const std::string& referrer) {
    if (auto it = done_.find(name); it != done_.end()) return it->second;
    if (!defs_.is_object() || !defs_.contains(name)) {
      throw ValidationError("missing key '" + name + "' in processes (referenced by " + referrer + ")");
    }
    if (!active_.insert(name).second) throw ValidationError("process " + name + " refers to itself");
    ProcessPtr p = build(name, defs_.at(name));
    active_.erase(name);
    done_.emplace(name, p);
    return p;
  }

 private:
  ProcessPtr build(const std::string& name, const Json& def) {
    const std::string where = "processes." + name;
    if (def.contains("alphabet") && Alphabet(field<std::string>(def, "alphabet", where)) != alphabet_) {
      throw ValidationError(where + " is over alphabet '" + field<std::string>(def, "alphabet", where) +
                            "', not '" + std::string(alphabet_.symbols()) + "'");
    }
    const auto type = field<std::string>(def, "type", where);
    if (type == "iid") return std::make_shared<const IIDProcess>(alphabet_, matrix_field(def, "probabilities", where));
    if (type == "markov") {
      return std::make_shared<const MarkovProcess>(alphabet_, field<std::size_t>(def, "order", where),
                                                   matrix_field(def, "transition", where),
                                                   field_or<double>(def, "gamma", where, kDefaultGamma));
    }
    if (type == "mixture") {
      std::vector<ProcessPtr> parts;
      for (const auto& c : field<std::vector<std::string>>(def, "components", where)) parts.push_back(get(c, where));
      return std::make_shared<const FiniteMixture>(parts, field<std::vector<double>>(def, "weights", where));
    }
    if (type == "switching") {
      ProcessPtr x = get(field<std::string>(def, "x", where), where);
      ProcessPtr y = get(field<std::string>(def, "y", where), where);
      if (def.contains("dwell")) {
        return SwitchingProcess::with_share(x, y, field<double>(def, "dwell", where),
                                            field<double>(def, "y_share", where));
      }
      return std::make_shared<const SwitchingProcess>(field<double>(def, "p", where), field<double>(def, "q", where),
                                                      x, y);
    }
    throw ValidationError(where + ".type '" + type + "' is not one of iid, markov, mixture, switching");
  }

  const Json& defs_;
  const Alphabet& alphabet_;
  std::map<std::string, ProcessPtr> done_;
  std::set<std::string> active_;
};

inline HypothesisPtr build_hypothesis(const std::string& name, const Json& def, ProcessResolver& processes,
                                      const Alphabet& alphabet, const TupleEnumeration& enumeration,
                                      std::size_t depth) {
  const std::string where = "hypotheses." + name;
  const auto type = field<std::string>(def, "type", where);
  auto members = [&](const char* key) {
    std::vector<ProcessPtr> out;
    for (const auto& m : field_or<std::vector<std::string>>(def, key, where, {})) out.push_back(processes.get(m, where));
    return out;
  };
  if (type == "finite") {
    require(def, "members", where);
    return std::make_shared<const FiniteHypothesis>(members("members"));
  }
  if (type == "markov_family") {
    SearchOptions o;
    o.resolution = field_or<double>(def, "resolution", where, o.resolution);
    o.refine_budget = field_or<std::size_t>(def, "refine_budget", where, o.refine_budget);
    o.min_step = field_or<double>(def, "min_step", where, o.min_step);
    o.max_grid_points = field_or<std::size_t>(def, "max_grid_points", where, o.max_grid_points);
    return std::make_shared<const MarkovFamilyHypothesis>(alphabet, field<std::size_t>(def, "order", where),
                                                          matrix_field(def, "lower", where),
                                                          matrix_field(def, "upper", where), o,
                                                          field_or<double>(def, "gamma", where, kDefaultGamma));
  }
  if (type == "ball") {
    return std::make_shared<const BallHypothesis>(processes.get(field<std::string>(def, "center", where), where),
                                                  field<double>(def, "radius", where), members("members"),
                                                  enumeration, depth);
  }
  throw ValidationError(where + ".type '" + type + "' is not one of finite, markov_family, ball");
}

}  // namespace detail

/// Builds every named process and hypothesis. All names are resolved here,
/// so a dangling reference fails before any work is done.
inline ExperimentConfig parse_config(const Json& root, const std::filesystem::path& base_dir = {},
                                     const ConfigOverrides& overrides = {}) {
  using namespace detail;
  ExperimentConfig cfg;
  cfg.base_dir = base_dir;
  cfg.alphabet = Alphabet(field<std::string>(root, "alphabet", "config"));
  cfg.depth = overrides.depth ? *overrides.depth : field<std::size_t>(root, "depth", "config");
  if (cfg.depth == 0) throw ValidationError("depth must be at least 1");
  if (overrides.seed) {
    cfg.seed = *overrides.seed;
  } else {
    cfg.seed = field<std::uint64_t>(root, "seed", "config");
  }
  cfg.experiment = require(root, "experiment", "config");
  cfg.type = field<std::string>(cfg.experiment, "type", "experiment");
  cfg.experiment_id = field_or<std::uint64_t>(cfg.experiment, "id", "experiment", 0);

  TupleEnumeration enumeration(cfg.alphabet, cfg.depth);
  const Json no_defs = Json::object();
  const Json& pdefs = root.contains("processes") ? root.at("processes") : no_defs;
  const Json& hdefs = root.contains("hypotheses") ? root.at("hypotheses") : no_defs;
  if (!pdefs.is_object() || !hdefs.is_object()) throw ValidationError("processes and hypotheses must be objects");
  ProcessResolver resolver(pdefs, cfg.alphabet);
  for (const auto& [name, def] : pdefs.items()) cfg.processes[name] = resolver.get(name, "processes");
  for (const auto& [name, def] : hdefs.items()) {
    cfg.hypotheses[name] = build_hypothesis(name, def, resolver, cfg.alphabet, enumeration, cfg.depth);
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path, const ConfigOverrides& overrides = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read config " + path.string());
  std::ostringstream bytes;
  bytes << in.rdbuf();
  Json root;
  try {
    root = Json::parse(bytes.str());
  } catch (const Json::parse_error& e) {
    throw ValidationError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  ExperimentConfig cfg = parse_config(root, path.parent_path(), overrides);
  cfg.raw = bytes.str();
  return cfg;
}

/// Looks up a name the experiment refers to.
inline ProcessPtr process_ref(const ExperimentConfig& cfg, const std::string& name) {
  auto it = cfg.processes.find(name);
  if (it == cfg.processes.end()) throw ValidationError("missing key '" + name + "' in processes");
  return it->second;
}

inline HypothesisPtr hypothesis_ref(const ExperimentConfig& cfg, const std::string& name) {
  auto it = cfg.hypotheses.find(name);
  if (it == cfg.hypotheses.end()) throw ValidationError("missing key '" + name + "' in hypotheses");
  return it->second;
}

}  // namespace ergotest

#endif  // ERGOTEST_CONFIG_HPP
