#include "wmcf/cli/app.hpp"
#include "wmcf/cli/config.hpp"
#include "wmcf/cli/experiments.hpp"
#include "wmcf/cli/well_registry.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace wmcf::cli;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("wmcf_test_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "run.cfg";
  std::ofstream(p) << text;
  return p;
}

std::vector<std::string> issues_of(const std::string& text) { return validate_config(Config::parse(text)); }

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

std::vector<fs::path> csvs(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".csv") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool line_maps(const std::string& text, const std::string& name, const std::string& ref) {
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind(name + " ", 0) == 0 && line.find(ref) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

TEST(List, MapsTheoremsAndCountsExperiments) {
  std::ostringstream out;
  EXPECT_EQ(command_list(out), ok);
  const std::string text = out.str();
  EXPECT_TRUE(line_maps(text, "first_variation", "Theorem 3.1"));
  EXPECT_TRUE(line_maps(text, "weak_strong", "Theorem 5.2"));
  EXPECT_GE(experiment_registry().size(), 6u);
}

TEST(List, MinimumRegistry) {
  for (const char* name : {"equipartition", "first_variation", "gibbs_thomson", "ac_to_mcf_radial",
                           "ac_to_mcf_1d_drift", "bv_residuals", "calibration", "weak_strong"}) {
    EXPECT_NE(find_experiment(name), nullptr) << name;
  }
  EXPECT_EQ(find_experiment("no_such_experiment"), nullptr);
}

TEST(Config, ParsesCommentsAndDottedKeys) {
  const auto cfg = Config::parse("# comment\nexperiment = equipartition\n\ngrid.n = 64  # trailing\neps = 0.1, 0.05\n");
  EXPECT_EQ(cfg.str("experiment"), "equipartition");
  EXPECT_EQ(cfg.integer("grid.n"), 64);
  EXPECT_EQ(cfg.reals("eps"), (std::vector<double>{0.1, 0.05}));
  EXPECT_EQ(cfg.section("grid").count("n"), 1u);
}

TEST(Config, RejectsMalformedInput) {
  EXPECT_THROW(Config::parse("experiment equipartition\n"), ConfigError);
  EXPECT_THROW(Config::parse("a = 1\na = 2\n"), ConfigError);
  EXPECT_THROW(Config::parse("x = abc\n").real("x"), ConfigError);
  EXPECT_THROW(Config::parse("x = 1\n").str("y"), ConfigError);
}

TEST(Validate, EpsBelowFourHReported) {
  const auto issues = issues_of("experiment = ac_to_mcf_radial\neps = 0.04,0.001\n");
  bool found = false;
  for (const auto& i : issues) found = found || i.find("eps = 0.001 is below 4h") != std::string::npos;
  EXPECT_TRUE(found);
  // Sweeps choose their grids; an eps beyond the cell budget is reported instead.
  EXPECT_FALSE(issues_of("experiment = equipartition\neps = 0.08,0.04,0.0001\n").empty());
}

TEST(Validate, UnknownWellNamesTheRegistry) {
  const auto issues = issues_of("experiment = equipartition\nwell.name = no_such_well\n");
  ASSERT_FALSE(issues.empty());
  const std::string& msg = issues.front();
  EXPECT_NE(msg.find("no_such_well"), std::string::npos);
  EXPECT_NE(msg.find("registry"), std::string::npos);
  for (const auto& w : well_registry()) EXPECT_NE(msg.find(w.name), std::string::npos) << w.name;
}

TEST(Validate, ValidFileGivesEmptyReport) {
  EXPECT_TRUE(issues_of("experiment = equipartition\n").empty());
  std::ostringstream out, err;
  const fs::path dir = scratch("valid");
  EXPECT_EQ(command_validate(write_config(dir, "experiment = equipartition\n").string(), out, err), ok);
  EXPECT_TRUE(err.str().empty());
}

TEST(Validate, ShippedConfigsAreValid) {
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(WMCF_CONFIG_DIR)) {
    if (e.path().extension() != ".cfg") continue;
    ++n;
    EXPECT_TRUE(validate_config(Config::load(e.path().string())).empty()) << e.path();
  }
  EXPECT_GE(n, 8u);
}

TEST(Validate, UnknownKeysAndExperiments) {
  EXPECT_FALSE(issues_of("experiment = equipartition\nbogus.key = 1\n").empty());
  const auto issues = issues_of("experiment = nope\n");
  ASSERT_EQ(issues.size(), 1u);
  EXPECT_NE(issues.front().find("registry"), std::string::npos);
  EXPECT_FALSE(issues_of("eps = 0.1\n").empty());
}

TEST(Run, MalformedConfigExitsTwo) {
  const fs::path dir = scratch("malformed");
  std::ostringstream out, err;
  EXPECT_EQ(command_run(write_config(dir, "experiment equipartition\n").string(), out, err), bad_config);
  EXPECT_FALSE(err.str().empty());
  EXPECT_EQ(command_run((dir / "missing.cfg").string(), out, err), bad_config);
  EXPECT_EQ(command_validate(write_config(dir, "experiment = equipartition\neps = 0.08,0.04,0.001\n").string(),
                             out, err),
            bad_config);
}

TEST(Run, EquipartitionDefectDecreasesExitZero) {
  const fs::path dir = scratch("equipartition");
  const fs::path cfg = write_config(
      dir, "experiment = equipartition\nwell.name = canonical_quartic\neps = 0.08,0.04,0.02\noutput.dir = " +
               (dir / "out").string() + "\n");
  std::ostringstream out, err;
  EXPECT_EQ(command_run(cfg.string(), out, err), ok) << out.str() << err.str();
  EXPECT_TRUE(fs::exists(dir / "out" / "summary.txt"));
  const auto files = csvs(dir / "out");
  ASSERT_FALSE(files.empty());
  EXPECT_EQ(files.front().filename().string().rfind("equipartition_", 0), 0u);
  EXPECT_NE(slurp(dir / "out" / "summary.txt").find("result PASS"), std::string::npos);
}

TEST(Run, GibbsThomsonExitZero) {
  const fs::path dir = scratch("gibbs_thomson");
  const fs::path cfg =
      write_config(dir, "experiment = gibbs_thomson\ndisk.R = 0.25\noutput.dir = " + (dir / "out").string() + "\n");
  std::ostringstream out, err;
  EXPECT_EQ(command_run(cfg.string(), out, err), ok) << out.str() << err.str();
}

TEST(Run, DeterministicWithParallelismDisabled) {
  setenv("WMCF_THREADS", "1", 1);
  std::vector<std::string> tables;
  for (int k = 0; k < 2; ++k) {
    const fs::path dir = scratch("determinism" + std::to_string(k));
    const fs::path cfg = write_config(
        dir, "experiment = equipartition\neps = 0.08,0.04\noutput.dir = " + (dir / "out").string() + "\n");
    std::ostringstream out, err;
    ASSERT_EQ(command_run(cfg.string(), out, err), ok) << err.str();
    std::string all;
    for (const auto& f : csvs(dir / "out")) all += slurp(f);
    tables.push_back(all);
  }
  unsetenv("WMCF_THREADS");
  ASSERT_FALSE(tables[0].empty());
  EXPECT_EQ(tables[0], tables[1]);
}

TEST(MainCli, DispatchesSubcommands) {
  char prog[] = "wmcf";
  char list[] = "list";
  char* argv_list[] = {prog, list};
  EXPECT_EQ(main_cli(2, argv_list), ok);
  char bogus[] = "bogus";
  char* argv_bad[] = {prog, bogus};
  EXPECT_NE(main_cli(2, argv_bad), ok);
}
