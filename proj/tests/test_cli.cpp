#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "alr/cli.hpp"

using namespace alr;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  explicit TempDir(const std::string& name) : path_(fs::temp_directory_path() / name) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }
  std::string file(const std::string& name, const std::string& text) const {
    const fs::path p = path_ / name;
    std::ofstream(p) << text;
    return p.string();
  }

 private:
  fs::path path_;
};

struct RunResult {
  int code;
  std::string out;
  std::string err;
};

RunResult run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string config_error(std::string_view text) {
  try {
    cli::parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

// Coarse, short quasistatic run for end-to-end checks.
const char* kCheapConfig = R"(# coarse quasistatic run
[geometry]
r1 = 1
r2 = 2

[sweep]
delta_from_exp = 1
delta_to_exp = 2
per_decade = 2

[mesh]
h_target = 0.5
refine_levels = 0
)";

}  // namespace

TEST(ParseConfig, MinimalQuasistaticConfig) {
  const cli::RunConfig rc = cli::parse_config("[geometry]\nr1 = 1\nr2 = 2\n");
  EXPECT_EQ(rc.scenario.kind, ScenarioKind::kQuasistaticCloak);
  EXPECT_DOUBLE_EQ(rc.scenario.geometry.r3(), 4.0);
  EXPECT_EQ(rc.output.prefix, "quasistatic-cloak");
}

TEST(ParseConfig, DefaultsEqualBuiltInScenario) {
  for (ScenarioKind kind : kAllScenarios) {
    const ScenarioConfig def = ScenarioConfig::defaults(kind);
    std::ostringstream doc;
    doc << "[geometry]\nr1 = " << def.geometry.r1 << "\nr2 = " << def.geometry.r2 << "\n";
    doc << "[medium]\naccept_experimental_slab = true\n";
    const cli::RunConfig rc = cli::parse_config(doc.str(), kind);
    ScenarioConfig expected = def;
    expected.accept_experimental_slab = true;
    EXPECT_EQ(cli::canonical_text(rc.scenario), cli::canonical_text(expected)) << to_string(kind);
  }
}

TEST(ParseConfig, ErrorsNameTheProblem) {
  EXPECT_NE(config_error("").find("missing required key r1"), std::string::npos);
  EXPECT_NE(config_error("[geometry]\nr0 = 0.5\nr1 = 0.4\nr2 = 2\n").find("0 < r0 < r1"), std::string::npos);
  EXPECT_NE(config_error("[geometry]\nr1 = 1\nr2 = 2\nbogus = 3\n").find("line 4: unknown key 'bogus'"),
            std::string::npos);
  EXPECT_NE(config_error("[nowhere]\n").find("line 1:"), std::string::npos);
  EXPECT_NE(config_error("[geometry]\nr1 = 1\nr1 = 2\n").find("line 3:"), std::string::npos);
  EXPECT_NE(config_error("[geometry]\nr1 = one\nr2 = 2\n").find("line 2:"), std::string::npos);
  EXPECT_FALSE(config_error("[geometry]\nr1 = 1\nr2 = 2\n[sweep]\ndeltas = 0.01, 0.1\n").empty());
}

TEST(ParseConfig, ListsPointsAndOutputSection) {
  const cli::RunConfig rc = cli::parse_config(
      "[geometry]\nr1 = 1\nr2 = 2\n[medium]\nscenario = freq-cloak\nk = 0.25\n"
      "[source]\ntype = ring\nring_radius = 5\nring_modes = 2, 3\nring_amplitudes = 1, 0.5\n"
      "[sweep]\ndeltas = 1e-1, 1e-2\n[output]\ndirectory = out\nprefix = run1\nvtk = true\n");
  EXPECT_EQ(rc.scenario.kind, ScenarioKind::kFreqCloak);
  EXPECT_DOUBLE_EQ(rc.scenario.k, 0.25);
  EXPECT_EQ(rc.scenario.source.kind, SourceSpec::Kind::kRing);
  ASSERT_EQ(rc.scenario.source.modes.size(), 2u);
  EXPECT_EQ(rc.scenario.source.modes[1].n, 3);
  EXPECT_DOUBLE_EQ(rc.scenario.source.modes[1].amplitude, 0.5);
  EXPECT_EQ(rc.scenario.deltas, (std::vector<double>{1e-1, 1e-2}));
  EXPECT_EQ(rc.output.directory, "out");
  EXPECT_EQ(rc.output.prefix, "run1");
  EXPECT_TRUE(rc.output.vtk);
}

TEST(ParseConfig, DefaultsScaleWithCoreRadius) {
  const cli::RunConfig rc = cli::parse_config("[geometry]\nr1 = 2\nr2 = 4\n");
  const GeometryConfig& g = rc.scenario.geometry;
  EXPECT_DOUBLE_EQ(g.r3(), 8.0);
  EXPECT_LT(g.r3(), g.R0);
  EXPECT_LT(g.R0, g.R_out);
  EXPECT_NEAR(norm(g.x1), g.r1, 1e-12);
  EXPECT_NEAR(norm(g.x2), g.r2, 1e-12);
  EXPECT_NEAR(norm(g.x3), g.r3(), 1e-12);
  EXPECT_NO_THROW(rc.scenario.validate());
}

TEST(Overrides, ReplaceOrAddKeys) {
  const std::string base = "[geometry]\nr1 = 1\nr2 = 2\n";
  const std::string text = cli::apply_overrides(base, {"geometry.r2=1.8", "mesh.h_target=0.4"});
  const cli::RunConfig rc = cli::parse_config(text);
  EXPECT_DOUBLE_EQ(rc.scenario.geometry.r2, 1.8);
  EXPECT_DOUBLE_EQ(rc.scenario.mesh.h_target, 0.4);
  EXPECT_THROW(cli::apply_overrides(base, {"noequals"}), ConfigError);
}

TEST(ConfigHash, StableAndSensitive) {
  const cli::RunConfig a = cli::parse_config("[geometry]\nr1 = 1\nr2 = 2\n");
  const cli::RunConfig b = cli::parse_config("# same values, different text\n[geometry]\nr2 = 2.0\nr1 = 1.0\n");
  EXPECT_EQ(cli::config_hash(a.scenario), cli::config_hash(b.scenario));
  const cli::RunConfig c = cli::parse_config("[geometry]\nr1 = 1\nr2 = 2\n[medium]\nobject_contrast = 100\n");
  EXPECT_NE(cli::config_hash(a.scenario), cli::config_hash(c.scenario));
}

TEST(Main, UsageAndExitCodes) {
  RunResult r = run_cli({"frobnicate"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("usage:"), std::string::npos);
  EXPECT_EQ(run_cli({}).code, 2);
  EXPECT_EQ(run_cli({"--help"}).code, 0);
  TempDir dir("alr_cli_codes");
  const std::string bad = dir.file("bad.txt", "[geometry]\nr0 = 0.5\nr1 = 0.4\nr2 = 2\n");
  r = run_cli({"mesh", "--config", bad});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("0 < r0 < r1"), std::string::npos);
  EXPECT_EQ(run_cli({"mesh", "--config", (dir.path() / "missing.txt").string()}).code, 2);
  EXPECT_EQ(run_cli({"mesh", "--set", "geometry.r1=1"}).code, 2);
}

TEST(Main, SuiteWritesOneRowPerDeltaAndManifests) {
  TempDir dir("alr_cli_suite");
  const std::string cfg = dir.file("c.txt", kCheapConfig);
  const std::string out = (dir.path() / "out").string();
  const RunResult r = run_cli({"suite", "quasistatic-cloak", "--config", cfg, "--out", out});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  std::ifstream csv(fs::path(out) / "quasistatic-cloak_suite.csv");
  ASSERT_TRUE(csv.good());
  std::string line;
  int rows = 0;
  while (std::getline(csv, line)) ++rows;
  EXPECT_EQ(rows, 1 + 3);  // header plus 1e-1, 10^-1.5, 1e-2
  EXPECT_NE(r.out.find("\"verdict\""), std::string::npos);

  // A second command in the same directory gets its own manifest.
  EXPECT_EQ(run_cli({"mesh", "quasistatic-cloak", "--config", cfg, "--out", out}).code, 0);
  std::map<std::string, int> listed;
  int manifests = 0;
  for (const auto& entry : fs::directory_iterator(out)) {
    const std::string name = entry.path().filename().string();
    if (name.find("_manifest.txt") == std::string::npos) continue;
    ++manifests;
    std::ifstream m(entry.path());
    std::string text((std::istreambuf_iterator<char>(m)), {});
    EXPECT_NE(text.find("config_hash"), std::string::npos);
    EXPECT_NE(text.find("mesh_hash"), std::string::npos);
    for (const auto& other : fs::directory_iterator(out)) {
      const std::string f = other.path().filename().string();
      if (f.find("_manifest.txt") == std::string::npos && text.find(f) != std::string::npos) ++listed[f];
    }
  }
  EXPECT_EQ(manifests, 2);
  for (const auto& entry : fs::directory_iterator(out)) {
    const std::string f = entry.path().filename().string();
    if (f.find("_manifest.txt") != std::string::npos) continue;
    EXPECT_EQ(listed[f], 1) << f;
  }
}

TEST(Main, SweepCsvIsByteIdenticalAcrossRuns) {
  TempDir dir("alr_cli_repeat");
  const std::string cfg = dir.file("c.txt", kCheapConfig);
  auto read_csv = [&](const std::string& sub) {
    const std::string out = (dir.path() / sub).string();
    EXPECT_EQ(run_cli({"sweep", "--config", cfg, "--set", "sweep.delta_to_exp=1.5", "--out", out}).code, 0);
    std::ifstream f(fs::path(out) / "quasistatic-cloak_sweep.csv", std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(f)), {});
  };
  const std::string a = read_csv("a"), b = read_csv("b");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, b);
}

TEST(Main, VerifyMediumOnFrequencyLayout) {
  TempDir dir("alr_cli_verify");
  const std::string cfg = dir.file("c.txt", "[geometry]\nr1 = 1\nr2 = 2\n[medium]\nscenario = freq-cloak\n");
  const RunResult r = run_cli({"verify-medium", "--config", cfg, "--out", dir.path().string()});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_NE(r.out.find("PASS"), std::string::npos);
}

TEST(Main, OracleAndSolveSubcommands) {
  TempDir dir("alr_cli_oracle");
  const std::string cfg = dir.file("c.txt", std::string(kCheapConfig) + "[source]\ntype = ring\nring_radius = 5\n");
  RunResult r = run_cli({"oracle", "--config", cfg, "--set", "geometry.r0=0", "--delta", "0.01", "--out",
                         dir.path().string()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("fem_relative_h1_error"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir.path() / "quasistatic-cloak_oracle_modes.csv"));
  r = run_cli({"solve", "--config", cfg, "--delta", "0.01", "--out", dir.path().string()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir.path() / "quasistatic-cloak_solve.vtk"));
}
