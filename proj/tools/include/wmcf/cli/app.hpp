#pragma once

#include "wmcf/cli/experiments.hpp"

#include <iosfwd>
#include <string>

namespace wmcf::cli {

enum ExitCode : int { ok = 0, check_failed = 1, bad_config = 2, run_error = 3 };

int command_list(std::ostream& out);
int command_validate(const std::string& path, std::ostream& out, std::ostream& err);
// Writes <experiment>_<timestamp>.csv (plus _<tag> tables) and summary.txt under output.dir.
int command_run(const std::string& path, std::ostream& out, std::ostream& err);

// Human-readable check lines and notes.
void print_result(const ExperimentResult& res, std::ostream& out);

int main_cli(int argc, char** argv);

}  // namespace wmcf::cli
