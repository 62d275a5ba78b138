// Batch experiment runner: <task> run <config.json> executes one experiment
// and writes machine-readable results; catalogue lists the bundled
// reproductions. Bundled names are accepted in place of a config path.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "polchinski/experiment.hpp"

namespace {

using nlohmann::json;
using polchinski::experiment_catalogue;

json load_config(const std::string& path_or_name) {
  for (const auto& entry : experiment_catalogue())
    if (entry.name == path_or_name) return entry.config;
  std::ifstream is(path_or_name);
  if (!is) throw std::runtime_error("cannot open config: " + path_or_name);
  json config;
  try {
    is >> config;
  } catch (const json::parse_error& err) {
    throw std::runtime_error("malformed config " + path_or_name + ": " + err.what());
  }
  return config;
}

int run_task(const std::string& task, const std::string& config_path, const std::string& out_dir,
             std::optional<std::uint64_t> seed, int threads) {
  json config;
  try {
    config = load_config(config_path);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  if (config.value("task", task) != task) {
    std::cerr << "error: config task '" << config.value("task", "") << "' does not match '"
              << task << "'\n";
    return 1;
  }
  const auto outcome = polchinski::run_experiment(config, out_dir, seed, threads);
  if (outcome.exit_code == 1) {
    std::cerr << "error: " << outcome.results.value("error", "unknown failure") << "\n";
    return 1;
  }
  std::cout << outcome.results.dump(2) << "\n";
  return outcome.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Renormalisation-flow laboratory: samplers, functional-inequality bounds, "
               "transport flows and mean-field pipelines"};
  app.require_subcommand(1);

  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  int threads = 0;

  const std::vector<std::string> tasks = {"flow", "lsi", "sample", "ising",
                                          "cw",   "hj",  "transport"};
  for (const auto& task : tasks) {
    auto* sub = app.add_subcommand(task, "run a " + task + " experiment");
    auto* run = sub->add_subcommand("run", "execute a config (path or bundled name)");
    auto config = std::make_shared<std::string>();
    auto seed_value = std::make_shared<std::uint64_t>(0);
    run->add_option("config", *config, "config JSON path or bundled experiment name")
        ->required();
    run->add_option("--out", out_dir, "output directory for results JSON and CSV tables");
    auto* seed_opt = run->add_option("--seed", *seed_value, "override the config seed");
    run->add_option("--threads", threads,
                    "cap worker threads (env POLCHINSKI_THREADS as fallback)");
    run->callback([&out_dir, &threads, config, seed_value, seed_opt, task]() {
      std::optional<std::uint64_t> seed_arg;
      if (seed_opt->count() > 0) seed_arg = *seed_value;
      std::exit(run_task(task, *config, out_dir, seed_arg, threads));
    });
  }

  auto* cat = app.add_subcommand("catalogue", "list the bundled reproduction experiments");
  cat->callback([]() {
    for (const auto& entry : experiment_catalogue()) {
      std::cout << entry.name << "\n  task: " << entry.task
                << "\n  runtime: " << entry.expected_runtime
                << "\n  verifies: " << entry.verifies << "\n";
    }
    std::cout << experiment_catalogue().size() << " experiments\n";
  });

  CLI11_PARSE(app, argc, argv);
  return 0;
}
