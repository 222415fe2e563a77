#pragma once

#include "wmcf/cli/config.hpp"

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace wmcf::cli {

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct Table {
  std::string tag;  // empty for the main table
  std::string csv;
};

struct ExperimentResult {
  std::vector<Check> checks;
  std::vector<Table> tables;
  std::vector<std::string> notes;

  bool passed() const;
};

struct Experiment {
  std::string name;
  std::string reference;
  std::string summary;
  std::map<std::string, std::string> defaults;
  std::function<ExperimentResult(const Config&)> run;
  // Invariant checks that need no computation; returns the violations.
  std::function<std::vector<std::string>(const Config&)> validate;
};

const std::vector<Experiment>& experiment_registry();
const Experiment* find_experiment(const std::string& name);

// Schema and invariant report for a parsed config; empty when valid.
std::vector<std::string> validate_config(const Config& cfg);

// Looks up the experiment, fills defaults and runs it.
ExperimentResult run_experiment(const Config& cfg);

}  // namespace wmcf::cli
