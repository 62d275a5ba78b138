#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace polchinski {

// One bundled, reproducible experiment. The config embeds every knob
// (model, schedule, grids, seeds, tolerances); runs are deterministic per
// seed and each declared check carries its tolerance and pass/fail.
struct CatalogueEntry {
  std::string name;
  std::string task;  // flow | lsi | sample | ising | cw | hj | transport
  std::string verifies;
  std::string expected_runtime;
  nlohmann::json config;
};

const std::vector<CatalogueEntry>& experiment_catalogue();

struct RunOutcome {
  nlohmann::json results;
  int exit_code = 0;  // 0 ok, 2 declared check failed, 1 error
};

// Executes a validated config; writes results JSON and CSV artifacts under
// out_dir when non-empty.
RunOutcome run_experiment(const nlohmann::json& config, const std::string& out_dir,
                          std::optional<std::uint64_t> seed_override = std::nullopt,
                          int threads = 0);

// Schema validation; throws with a JSON-pointer message on unknown keys or
// missing fields.
void validate_config(const nlohmann::json& config);

std::string build_stamp();

}  // namespace polchinski
