// Runs the shipped configs for the eleven acceptance criteria and prints one line each.
// Optional arguments restrict the run to the given criterion numbers.

#include "wmcf/cli/config.hpp"
#include "wmcf/cli/experiments.hpp"
#include "wmcf/errors.hpp"
#include "wmcf/parallel.hpp"

#include <chrono>
#include <cstdio>
#include <set>
#include <string>
#include <vector>

namespace {

struct Criterion {
  int id;
  const char* title;
  const char* config;
};

const std::vector<Criterion> kCriteria = {
    {1, "surface tension oracle", "surface_tension"},
    {2, "equipartition", "equipartition"},
    {3, "first-variation convergence", "first_variation"},
    {4, "Gibbs-Thomson", "gibbs_thomson"},
    {5, "minimizing movements", "minmov"},
    {6, "dissipation", "dissipation"},
    {7, "Allen-Cahn to weighted MCF, radial", "ac_to_mcf_radial"},
    {8, "Allen-Cahn to weighted MCF, 1D drift", "ac_to_mcf_1d_drift"},
    {9, "BV residuals", "bv_residuals"},
    {10, "calibration", "calibration"},
    {11, "weak-strong", "weak_strong"},
};

}  // namespace

int main(int argc, char** argv) {
  using namespace wmcf::cli;
  std::set<int> only;
  for (int k = 1; k < argc; ++k) only.insert(std::stoi(argv[k]));
  wmcf::configure_threads();

  int failures = 0;
  for (const auto& c : kCriteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const std::string path = std::string(WMCF_CONFIG_DIR) + "/" + c.config + ".cfg";
    const auto start = std::chrono::steady_clock::now();
    bool passed = false;
    std::string why;
    try {
      const Config cfg = Config::load(path);
      const auto issues = validate_config(cfg);
      if (!issues.empty()) {
        why = issues.front();
      } else {
        const ExperimentResult res = run_experiment(cfg);
        passed = res.passed();
        for (const auto& check : res.checks) {
          if (!check.passed) {
            why = check.name + ": " + check.detail;
            break;
          }
        }
      }
    } catch (const std::exception& e) {
      why = e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s  criterion %2d  %-38s %7.1fs\n", passed ? "PASS" : "FAIL", c.id, c.title, secs);
    if (!passed) {
      std::printf("      %s\n", why.c_str());
      ++failures;
    }
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
