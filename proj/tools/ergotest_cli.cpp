#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "ergotest/experiment.hpp"

using namespace ergotest;

namespace {

std::size_t thread_count(const std::optional<std::size_t>& flag) {
  if (flag) return std::max<std::size_t>(*flag, 1);
  if (const char* env = std::getenv("ERGOTEST_THREADS")) {
    try {
      return std::max<std::size_t>(std::stoul(env), 1);
    } catch (const std::exception&) {
      std::cerr << "warning: ignoring ERGOTEST_THREADS=" << env << '\n';
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// Runs body and maps exceptions to exit codes the same way `run` does.
template <class F>
int guarded(F&& body) {
  try {
    body();
    return kExitOk;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hypothesis tests for stationary ergodic processes"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  std::string config, out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> depth, threads;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "experiment configuration (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "master seed, overrides the config");
    sub->add_option("--depth", depth, "maximum tuple length, overrides the config");
    sub->add_option("--threads", threads, "worker threads (speed only; default $ERGOTEST_THREADS or all cores)");
  };

  auto* run = app.add_subcommand("run", "run the configured experiment and write report.json, report.csv, manifest.json");
  common(run);
  run->add_option("--out", out, "output directory")->required();

  std::string process;
  std::size_t n = 0;
  auto* sample = app.add_subcommand("sample", "draw a sample from a named process");
  common(sample);
  sample->add_option("--process", process, "process name from the config")->required();
  sample->add_option("-n,--length", n, "sample length")->required()->check(CLI::PositiveNumber);
  sample->add_option("--out", out, "output file")->required();

  std::vector<std::string> between;
  std::string sample_path;
  auto* distance = app.add_subcommand("distance", "print an exact or empirical distance with its tail bound");
  common(distance);
  distance->add_option("--between", between, "two process names: exact distance")->expected(2);
  distance->add_option("--sample", sample_path, "sample file: empirical distance to --process")
      ->check(CLI::ExistingFile);
  distance->add_option("--process", process, "process compared against --sample");

  CLI11_PARSE(app, argc, argv);
  ConfigOverrides overrides{seed, depth};

  if (run->parsed()) return run_experiment(config, out, overrides, thread_count(threads));

  if (sample->parsed()) {
    return guarded([&] {
      ExperimentConfig cfg = load_config(config, overrides);
      Sample x = process_ref(cfg, process)->sample(n, make_stream(cfg.seed, {cfg.experiment_id}));
      write_sample(out, x);
    });
  }

  return guarded([&] {
    ExperimentConfig cfg = load_config(config, overrides);
    TupleEnumeration enumeration(cfg.alphabet, cfg.depth);
    DistanceValue d;
    Json j;
    if (!between.empty()) {
      d = exact_distance(*process_ref(cfg, between[0]), *process_ref(cfg, between[1]), enumeration, cfg.depth);
      j["kind"] = "exact";
    } else if (!sample_path.empty() && !process.empty()) {
      d = empirical_distance(read_sample(sample_path, cfg.alphabet), *process_ref(cfg, process), enumeration,
                             cfg.depth);
      j["kind"] = "empirical";
    } else {
      throw ValidationError("distance needs --between A B, or --sample FILE with --process NAME");
    }
    j["value"] = d.value;
    j["tail_bound"] = d.tail_bound;
    j["upper"] = d.upper();
    j["depth"] = d.depth;
    std::cout << j.dump() << '\n';
  });
}
