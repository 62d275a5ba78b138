// Acceptance suite: runs each bundled criterion experiment at its pinned
// tolerances and prints one pass/fail line per criterion.

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "polchinski/experiment.hpp"

int main() {
  using clock = std::chrono::steady_clock;
  const std::vector<std::string> criteria = {
      "gaussian-exactness",       // 1
      "bakry-emery-recovery",     // 2
      "pde-vs-quadrature",        // 3
      "entropy-decomposition",    // 4
      "sampler-fidelity",         // 5
      "follmer-cost",             // 6
      "martingale-diagnostics",   // 7
      "ising-high-temperature",   // 8
      "ising-gap-vs-bound",       // 9
      "dss-domination",           // 10
      "meanfield-scaling",        // 11
      "curie-weiss-pipeline",     // 12
      "transport-monitor",        // 13
      "reparametrisation-invariance",  // 14
  };

  int failures = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    nlohmann::json config;
    for (const auto& entry : polchinski::experiment_catalogue())
      if (entry.name == criteria[i]) config = entry.config;
    const auto t0 = clock::now();
    const auto outcome = polchinski::run_experiment(config, "");
    const double secs = std::chrono::duration<double>(clock::now() - t0).count();
    const bool pass = outcome.exit_code == 0;
    failures += pass ? 0 : 1;
    std::printf("[%2zu/14] %-4s %-30s (%.1f s)\n", i + 1, pass ? "PASS" : "FAIL",
                criteria[i].c_str(), secs);
    if (!pass) {
      if (outcome.results.contains("error")) {
        std::printf("        error: %s\n",
                    outcome.results["error"].get<std::string>().c_str());
      } else {
        for (const auto& check : outcome.results["results"]["checks"]) {
          if (!check["pass"].get<bool>())
            std::printf("        failed check: %s = %.6g (target %.6g, tol %.3g)\n",
                        check["name"].get<std::string>().c_str(),
                        check["value"].get<double>(), check["target"].get<double>(),
                        check["tolerance"].get<double>());
        }
      }
    }
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
