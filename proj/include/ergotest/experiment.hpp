#ifndef ERGOTEST_EXPERIMENT_HPP
#define ERGOTEST_EXPERIMENT_HPP

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "ergotest/config.hpp"
#include "ergotest/sample_io.hpp"
#include "ergotest/tester.hpp"

namespace ergotest {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kExitOk = 0, kExitValidation = 2, kExitRuntime = 3 };

/// 64-bit FNV-1a, printed as 16 hex digits.
inline std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Round-trip formatting so CSV output is reproducible bit for bit.
inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : width_(header.size()) { rows_.push_back(std::move(header)); }

  void add(std::vector<std::string> row) {
    if (row.size() != width_) throw std::logic_error("csv row width mismatch");
    rows_.push_back(std::move(row));
  }

  std::string str() const {
    std::string out;
    for (const auto& row : rows_) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out += ',';
        bool quote = row[i].find_first_of(",\"\n") != std::string::npos;
        if (!quote) {
          out += row[i];
          continue;
        }
        out += '"';
        for (char c : row[i]) out += c == '"' ? std::string("\"\"") : std::string(1, c);
        out += '"';
      }
      out += '\n';
    }
    return out;
  }

 private:
  std::size_t width_;
  std::vector<std::vector<std::string>> rows_;
};

struct ExperimentResult {
  Json report;
  CsvTable csv{{}};
};

namespace detail {

inline Json distance_json(const DistanceValue& d) {
  return Json{{"value", d.value}, {"tail_bound", d.tail_bound}, {"upper", d.upper()}, {"depth", d.depth}};
}

inline Json set_distance_json(const SetDistance& s) {
  Json j = distance_json(s.distance);
  j["witness"] = s.witness ? s.witness->describe() : "";
  j["witness_index"] = s.witness_index;
  j["tolerance"] = s.tolerance;
  j["evaluations"] = s.evaluations;
  return j;
}

inline Json proportion_json(const Proportion& p) {
  return Json{{"trials", p.trials}, {"hits", p.hits}, {"rate", p.rate()}, {"ci_halfwidth", p.half_width()}};
}

/// Either "sample": path (relative to the config) or
/// "generate": {"process": name, "n": length}.
inline Sample sample_source(const ExperimentConfig& cfg, const Json& e, Json& report) {
  if (e.contains("sample")) {
    auto path = std::filesystem::path(field<std::string>(e, "sample", "experiment"));
    if (path.is_relative()) path = cfg.base_dir / path;
    report["sample"] = path.filename().string();
    return read_sample(path, cfg.alphabet);
  }
  const Json& g = require(e, "generate", "experiment (or give 'sample')");
  auto name = field<std::string>(g, "process", "experiment.generate");
  auto n = field<std::size_t>(g, "n", "experiment.generate");
  if (n == 0) throw ValidationError("experiment.generate.n must be positive");
  report["generated_from"] = name;
  return process_ref(cfg, name)->sample(n, make_stream(cfg.seed, {cfg.experiment_id}));
}

inline const std::vector<std::string> kCurveColumns{"experiment", "generator", "label",      "n",
                                                   "trials",     "errors",    "error_rate", "ci_halfwidth"};

inline void curve_rows(const std::string& experiment, const ConsistencyReport& r, Json& report, CsvTable& csv) {
  Json cells = Json::array();
  for (const auto& c : r.cells) {
    cells.push_back(Json{{"generator", c.generator},
                         {"label", c.label},
                         {"n", c.n},
                         {"trials", c.errors.trials},
                         {"errors", c.errors.hits},
                         {"error_rate", c.errors.rate()},
                         {"ci_halfwidth", c.errors.half_width()}});
    csv.add({experiment, c.generator, std::to_string(c.label), std::to_string(c.n), std::to_string(c.errors.trials),
             std::to_string(c.errors.hits), fmt(c.errors.rate()), fmt(c.errors.half_width())});
  }
  report["cells"] = std::move(cells);
  report["sizes"] = r.sizes;
  report["alpha"] = r.alpha;
  report["n_alpha"] = r.n_alpha ? Json(*r.n_alpha) : Json(nullptr);
}

inline std::vector<Generator> generators_of(const ExperimentConfig& cfg, const Json& e) {
  const Json& list = require(e, "generators", "experiment");
  if (!list.is_array() || list.empty()) throw ValidationError("experiment.generators must be a non-empty array");
  std::vector<Generator> out;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string where = "experiment.generators[" + std::to_string(i) + "]";
    auto process = field<std::string>(list[i], "process", where);
    out.push_back(Generator{field_or<std::string>(list[i], "name", where, process), process_ref(cfg, process),
                            field<int>(list[i], "label", where)});
  }
  return out;
}

}  // namespace detail

/// Executes the configured experiment. Validation of the experiment block
/// happens before any sampling.
inline ExperimentResult execute(const ExperimentConfig& cfg, std::size_t threads) {
  using namespace detail;
  const Json& e = cfg.experiment;
  const std::string& type = cfg.type;
  TupleEnumeration enumeration(cfg.alphabet, cfg.depth);
  MonteCarloOptions mc{cfg.seed, cfg.experiment_id, threads};
  ExperimentResult out;
  out.report["experiment"] = type;
  out.report["depth"] = cfg.depth;
  out.report["seed"] = cfg.seed;

  if (type == "distance") {
    out.csv = CsvTable({"experiment", "kind", "first", "second", "depth", "value", "tail_bound", "upper"});
    DistanceValue d;
    std::string first, second, kind;
    if (e.contains("sample") || e.contains("generate")) {
      second = field<std::string>(e, "process", "experiment");
      ProcessPtr p = process_ref(cfg, second);
      Sample x = sample_source(cfg, e, out.report);
      kind = "empirical";
      first = "sample";
      d = empirical_distance(x, *p, enumeration, cfg.depth);
      out.report["n"] = x.size();
    } else {
      first = field<std::string>(e, "first", "experiment");
      second = field<std::string>(e, "second", "experiment");
      kind = "exact";
      d = exact_distance(*process_ref(cfg, first), *process_ref(cfg, second), enumeration, cfg.depth);
    }
    out.report["kind"] = kind;
    out.report["first"] = first;
    out.report["second"] = second;
    out.report["distance"] = distance_json(d);
    out.csv.add({type, kind, first, second, std::to_string(cfg.depth), fmt(d.value), fmt(d.tail_bound),
                 fmt(d.upper())});
  } else if (type == "test") {
    auto h0 = hypothesis_ref(cfg, field<std::string>(e, "h0", "experiment"));
    auto h1 = hypothesis_ref(cfg, field<std::string>(e, "h1", "experiment"));
    Sample x = sample_source(cfg, e, out.report);
    TestVerdict v = uniform_test(x, *h0, *h1, enumeration, cfg.depth);
    out.report["n"] = x.size();
    out.report["decision"] = v.decision;
    out.report["d0"] = set_distance_json(v.d0);
    out.report["d1"] = set_distance_json(v.d1);
    out.csv = CsvTable({"experiment", "n", "depth", "decision", "d0", "d0_tolerance", "d1", "d1_tolerance"});
    out.csv.add({type, std::to_string(x.size()), std::to_string(cfg.depth), std::to_string(v.decision),
                 fmt(v.d0.distance.value), fmt(v.d0.tolerance), fmt(v.d1.distance.value), fmt(v.d1.tolerance)});
  } else if (type == "curve") {
    auto h0 = hypothesis_ref(cfg, field<std::string>(e, "h0", "experiment"));
    auto h1 = hypothesis_ref(cfg, field<std::string>(e, "h1", "experiment"));
    auto generators = generators_of(cfg, e);
    auto sizes = field<std::vector<std::size_t>>(e, "sizes", "experiment");
    auto trials = field<std::size_t>(e, "trials", "experiment");
    double alpha = field_or<double>(e, "alpha", "experiment", 0.05);
    auto r = consistency_curve(*h0, *h1, generators, sizes, trials, enumeration, cfg.depth, alpha, mc);
    out.csv = CsvTable(kCurveColumns);
    out.report["h0"] = h0->describe();
    out.report["h1"] = h1->describe();
    curve_rows(type, r, out.report, out.csv);
  } else if (type == "lemma1") {
    auto rho_name = field<std::string>(e, "rho", "experiment");
    auto xi_name = field<std::string>(e, "xi", "experiment");
    auto rho = process_ref(cfg, rho_name);
    auto xi = process_ref(cfg, xi_name);
    auto sizes = field<std::vector<std::size_t>>(e, "sizes", "experiment");
    auto trials = field<std::size_t>(e, "trials", "experiment");
    auto t = validate_lemma1(*rho, *xi, sizes, trials, enumeration, cfg.depth, mc);
    out.report["rho"] = rho_name;
    out.report["xi"] = xi_name;
    out.report["exact"] = distance_json(t.exact);
    out.report["rows"] = Json::array();
    out.csv = CsvTable({"experiment", "n", "trials", "exact_distance", "percentile95", "mean", "max"});
    for (const auto& row : t.rows) {
      out.report["rows"].push_back(
          Json{{"n", row.n}, {"percentile95", row.percentile95}, {"mean", row.mean}, {"max", row.max}});
      out.csv.add({type, std::to_string(row.n), std::to_string(trials), fmt(t.exact.value), fmt(row.percentile95),
                   fmt(row.mean), fmt(row.max)});
    }
  } else if (type == "lemma2") {
    auto rho_name = field<std::string>(e, "rho", "experiment");
    auto h_name = field<std::string>(e, "hypothesis", "experiment");
    auto rho = process_ref(cfg, rho_name);
    auto h = hypothesis_ref(cfg, h_name);
    auto m = field<std::size_t>(e, "m", "experiment");
    auto k = field<std::size_t>(e, "k", "experiment");
    auto eps = field<std::vector<double>>(e, "epsilons", "experiment");
    auto trials = field<std::size_t>(e, "trials", "experiment");
    auto checks = validate_lemma2(*rho, *h, m, k, eps, trials, enumeration, cfg.depth, mc);
    out.report["rho"] = rho_name;
    out.report["hypothesis"] = h_name;
    out.report["checks"] = Json::array();
    std::size_t violated = 0;
    out.csv = CsvTable({"experiment", "inequality", "m", "k", "epsilon", "threshold", "trials", "left_hits",
                        "left_rate", "left_ci_halfwidth", "right_hits", "right_rate", "right_ci_halfwidth",
                        "verdict"});
    for (const auto& c : checks) {
      violated += c.verdict == DeviationVerdict::violated;
      out.report["checks"].push_back(Json{{"inequality", c.inequality},
                                          {"m", c.m},
                                          {"k", c.k},
                                          {"epsilon", c.epsilon},
                                          {"threshold", c.threshold},
                                          {"left", proportion_json(c.left)},
                                          {"right", proportion_json(c.right)},
                                          {"verdict", to_string(c.verdict)}});
      out.csv.add({type, c.inequality, std::to_string(c.m), std::to_string(c.k), fmt(c.epsilon), fmt(c.threshold),
                   std::to_string(trials), std::to_string(c.left.hits), fmt(c.left.rate()),
                   fmt(c.left.half_width()), std::to_string(c.right.hits), fmt(c.right.rate()),
                   fmt(c.right.half_width()), to_string(c.verdict)});
    }
    out.report["violated"] = violated;
  } else if (type == "prop1") {
    auto rho_name = field<std::string>(e, "rho", "experiment");
    auto nu_name = field<std::string>(e, "nu", "experiment");
    auto rho = process_ref(cfg, rho_name);
    auto nu = process_ref(cfg, nu_name);
    auto r = impossibility_demo(rho, nu, field<double>(e, "epsilon", "experiment"),
                                field<double>(e, "delta", "experiment"),
                                field<std::vector<double>>(e, "dwell_times", "experiment"),
                                field<std::vector<std::size_t>>(e, "sizes", "experiment"),
                                field<std::size_t>(e, "trials", "experiment"), enumeration, cfg.depth, mc);
    out.report["rho"] = rho_name;
    out.report["nu"] = nu_name;
    out.report["rho_nu"] = distance_json(r.rho_nu);
    out.report["epsilon"] = r.epsilon;
    out.report["delta"] = r.delta;
    auto members = [](const std::vector<SwitchingMember>& list) {
      Json a = Json::array();
      for (const auto& m : list) {
        a.push_back(Json{{"dwell", m.dwell},
                         {"p", m.process->p()},
                         {"q", m.process->q()},
                         {"distance_to_nu", distance_json(m.distance_to_center)}});
      }
      return a;
    };
    out.report["admitted"] = members(r.admitted);
    out.report["rejected"] = members(r.rejected);
    out.csv = CsvTable(kCurveColumns);
    curve_rows(type, r.curve, out.report, out.csv);
    Json worst = Json::array();
    for (const auto& c : r.worst) {
      worst.push_back(Json{{"n", c.n},
                           {"generator", c.generator},
                           {"error_rate", c.errors.rate()},
                           {"ci_lower", c.errors.lower()}});
    }
    out.report["worst"] = std::move(worst);
  } else {
    throw ValidationError("experiment.type '" + type + "' is not one of distance, test, curve, lemma1, lemma2, prop1");
  }
  return out;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

/// Loads, runs and persists one experiment; returns the process exit code.
/// Validation problems give 2, anything failing later gives 3.
inline int run_experiment(const std::filesystem::path& config, const std::filesystem::path& out_dir,
                          const ConfigOverrides& overrides, std::size_t threads, std::ostream& log = std::cerr) {
  auto start = std::chrono::steady_clock::now();
  ExperimentConfig cfg;
  try {
    cfg = load_config(config, overrides);
  } catch (const ValidationError& e) {
    log << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  ExperimentResult result;
  try {
    result = execute(cfg, threads);
    std::filesystem::create_directories(out_dir);
    write_text(out_dir / "report.json", result.report.dump(2) + "\n");
    write_text(out_dir / "report.csv", result.csv.str());
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    Json manifest{{"config", config.filename().string()},
                  {"config_hash", fnv1a_hex(cfg.raw)},
                  {"seed", cfg.seed},
                  {"depth", cfg.depth},
                  {"version", kVersion},
                  {"threads", threads},
                  {"wall_time_seconds", wall}};
    write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");
  } catch (const ValidationError& e) {
    log << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    log << "runtime error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace ergotest

#endif  // ERGOTEST_EXPERIMENT_HPP
