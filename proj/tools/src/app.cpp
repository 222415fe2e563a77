#include "wmcf/cli/app.hpp"

#include "wmcf/errors.hpp"
#include "wmcf/parallel.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace wmcf::cli {

namespace fs = std::filesystem;

namespace {

std::string timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y%m%dT%H%M%SZ");
  return s.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

}  // namespace

void print_result(const ExperimentResult& res, std::ostream& out) {
  for (const auto& c : res.checks) {
    out << (c.passed ? "PASS  " : "FAIL  ") << c.name;
    if (!c.detail.empty()) out << "\n      " << c.detail;
    out << '\n';
  }
  for (const auto& n : res.notes) out << "note  " << n << '\n';
}

int command_list(std::ostream& out) {
  for (const auto& e : experiment_registry()) {
    out << std::left << std::setw(20) << e.name << "  " << e.reference << "\n  " << e.summary << '\n';
  }
  return ok;
}

int command_validate(const std::string& path, std::ostream& out, std::ostream& err) {
  try {
    const auto issues = validate_config(Config::load(path));
    if (issues.empty()) {
      out << path << ": ok\n";
      return ok;
    }
    for (const auto& i : issues) err << path << ": " << i << '\n';
    return bad_config;
  } catch (const ConfigError& e) {
    err << e.what() << '\n';
    return bad_config;
  }
}

int command_run(const std::string& path, std::ostream& out, std::ostream& err) {
  Config cfg;
  try {
    cfg = Config::load(path);
    const auto issues = validate_config(cfg);
    if (!issues.empty()) {
      for (const auto& i : issues) err << path << ": " << i << '\n';
      return bad_config;
    }
  } catch (const ConfigError& e) {
    err << e.what() << '\n';
    return bad_config;
  }

  configure_threads();
  const std::string name = cfg.str("experiment");
  ExperimentResult res;
  try {
    res = run_experiment(cfg);
  } catch (const Error& e) {
    err << name << ": " << e.what() << '\n';
    return run_error;
  }

  const fs::path dir = cfg.str("output.dir", "output");
  fs::create_directories(dir);
  const std::string stem = name + "_" + timestamp();
  std::vector<std::string> written;
  for (const auto& t : res.tables) {
    const std::string file = stem + (t.tag.empty() ? "" : "_" + t.tag) + ".csv";
    write_file(dir / file, t.csv);
    written.push_back(file);
  }
  std::ostringstream summary;
  summary << "experiment " << name << " (" << find_experiment(name)->reference << ")\nconfig " << path << "\n\n";
  print_result(res, summary);
  summary << "\nresult " << (res.passed() ? "PASS" : "FAIL") << '\n';
  for (const auto& f : written) summary << "wrote " << f << '\n';
  write_file(dir / "summary.txt", summary.str());
  out << summary.str();
  return res.passed() ? ok : check_failed;
}

int main_cli(int argc, char** argv) {
  CLI::App app{"Diffuse-interface and mean curvature flow experiments"};
  app.require_subcommand(1);
  std::string path;
  auto* run = app.add_subcommand("run", "run an experiment config");
  run->add_option("config", path, "config file")->required();
  auto* list = app.add_subcommand("list", "list experiments");
  auto* validate = app.add_subcommand("validate", "check a config without running it");
  validate->add_option("config", path, "config file")->required();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : bad_config;
  }
  if (list->parsed()) return command_list(std::cout);
  if (validate->parsed()) return command_validate(path, std::cout, std::cerr);
  if (run->parsed()) return command_run(path, std::cout, std::cerr);
  return bad_config;
}

}  // namespace wmcf::cli
