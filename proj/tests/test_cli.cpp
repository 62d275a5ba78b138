#include <doctest.h>

#include <filesystem>
#include <set>
#include <fstream>
#include <sstream>

#include "polchinski/experiment.hpp"

using namespace polchinski;
using nlohmann::json;

TEST_CASE("catalogue is complete and deterministic") {
  const auto& entries = experiment_catalogue();
  CHECK(entries.size() >= 12);
  std::set<std::string> names;
  for (const auto& e : entries) {
    CHECK(!e.verifies.empty());
    CHECK(!e.expected_runtime.empty());
    CHECK(names.insert(e.name).second);  // unique
    CHECK_NOTHROW(validate_config(e.config));
  }
  // The bundled reproduction named in the docs exists.
  CHECK(names.count("ising-ring-n8-beta0.3") == 1);
  // Stable ordering across calls.
  CHECK(experiment_catalogue().front().name == entries.front().name);
}

TEST_CASE("config validation rejects unknown keys with a JSON pointer") {
  json config = experiment_catalogue().front().config;
  config["bogus"] = 1;
  CHECK_THROWS_WITH_AS(validate_config(config), doctest::Contains("\"/bogus\""),
                       std::invalid_argument);

  json config2 = experiment_catalogue().front().config;
  config2["params"]["not_a_knob"] = 2;
  CHECK_THROWS_WITH_AS(validate_config(config2), doctest::Contains("/params/not_a_knob"),
                       std::invalid_argument);

  json config3 = experiment_catalogue().front().config;
  config3.erase("task");
  CHECK_THROWS_WITH_AS(validate_config(config3), doctest::Contains("\"/task\""),
                       std::invalid_argument);

  json config4 = experiment_catalogue().front().config;
  config4["task"] = "transport";
  CHECK_THROWS_AS(validate_config(config4), std::invalid_argument);
}

TEST_CASE("run: results schema, exit codes, and byte-identical reruns") {
  json config;
  for (const auto& e : experiment_catalogue())
    if (e.name == "reparametrisation-invariance") config = e.config;

  const std::string dir_a = "cli_test_out_a";
  const std::string dir_b = "cli_test_out_b";
  const RunOutcome a = run_experiment(config, dir_a);
  CHECK(a.exit_code == 0);
  CHECK(a.results.at("git_describe").is_string());
  CHECK(a.results.at("seed").get<std::uint64_t>() == 1);
  CHECK(a.results.at("results").at("pass").get<bool>());

  const RunOutcome b = run_experiment(config, dir_b);
  const auto strip_timestamp = [](const std::string& path) {
    std::ifstream is(path);
    std::ostringstream out;
    std::string line;
    while (std::getline(is, line))
      if (line.find("\"timestamp\"") == std::string::npos) out << line << "\n";
    return out.str();
  };
  CHECK(strip_timestamp(dir_a + "/results.json") == strip_timestamp(dir_b + "/results.json"));
  std::filesystem::remove_all(dir_a);
  std::filesystem::remove_all(dir_b);

  // Seed override is recorded.
  const RunOutcome c = run_experiment(config, "", 42);
  CHECK(c.results.at("seed").get<std::uint64_t>() == 42);

  // Malformed config: exit 1 with the validation message.
  json bad = config;
  bad["mystery"] = true;
  const RunOutcome err = run_experiment(bad, "");
  CHECK(err.exit_code == 1);
  CHECK(err.results.at("error").get<std::string>().find("/mystery") != std::string::npos);
}

TEST_CASE("documented divergence exits cleanly") {
  json config;
  for (const auto& e : experiment_catalogue())
    if (e.name == "ising-divergence") config = e.config;
  const RunOutcome out = run_experiment(config, "");
  CHECK(out.exit_code == 0);
  CHECK(out.results.at("results").at("report").at("divergent").get<bool>());
}
