#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

#include "ifk/cli/runner.hpp"

using namespace ifk;
using namespace ifk::cli;
namespace fs = std::filesystem;

namespace {

const fs::path samples = IFK_SAMPLES_DIR;

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("ifk_cli_test_" + std::to_string(::getpid())) / name;
  fs::create_directories(p.parent_path());
  return p;
}

fs::path write_file(const std::string& name, const std::string& body) {
  fs::path p = scratch(name);
  std::ofstream(p) << body;
  return p;
}

int run_cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " + std::string(IFK_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const ResultFile& file(const RunResult& r, const std::string& name) {
  for (const auto& f : r.files)
    if (f.name == name) return f;
  throw std::runtime_error("missing result file " + name);
}

}  // namespace

TEST(Config, JsonAndTomlAreTheSameExperiment) {
  auto a = load_config((samples / "ssh_essential.json").string());
  auto b = load_config((samples / "ssh_essential.toml").string());
  EXPECT_EQ(a.hash, b.hash);
  EXPECT_EQ(a.canonical, b.canonical);
  EXPECT_EQ(a.hash.size(), 16u);
}

TEST(Config, HashIsFnv1a) {
  EXPECT_EQ(fnv1a(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a("a"), "af63dc4c8601ec8c");
}

TEST(Config, SchemaViolations) {
  auto bad = [](const std::string& text) { return parse_config(json::parse(text)); };
  EXPECT_THROW(parse_text("{\"model\": ", false), config_error);
  EXPECT_THROW(parse_text("task = = 1", true), config_error);
  EXPECT_THROW(bad(R"({"task": "index"})"), config_error);
  EXPECT_THROW(bad(R"({"model": {"name": "ssh_wall"}, "task": "index", "colour": 1})"), config_error);
  EXPECT_THROW(bad(R"({"model": {"name": "ssh_wall"}, "task": "sing"})"), config_error);
  EXPECT_THROW(bad(R"({"model": {"name": "kagome"}, "task": "index"})"), config_error);
  EXPECT_THROW(bad(R"({"model": {"name": "ssh_wall", "params": {"mass": 1}}, "task": "index"})"), config_error);
  EXPECT_THROW(bad(R"({"model": {"name": "ssh_wall"}, "task": "index", "numerics": {"box": -3}})"), config_error);
  EXPECT_THROW(bad(R"({"model": {"name": "ssh_wall"}, "task": "index", "numerics": {"box": 2.5}})"), config_error);
  EXPECT_THROW(bad(R"({"model": {"name": "ssh_wall"}, "task": "non_propagation"})"), config_error);
  EXPECT_THROW(bad(R"({"model": {"name": "ssh_wall"}, "task": "essential_spectrum", "sweep": [{"m_left": 0.3}]})"),
               config_error);
  EXPECT_THROW(bad(R"({"model": {"name": "ssh_wall"}, "task": "convergence", "numerics": {"sizes": [10, 20]}})"),
               config_error);
  EXPECT_THROW(bad(R"({"model": {"name": "ssh_wall"}, "task": "index", "output": {"prefix": "../x"}})"), config_error);
  EXPECT_NO_THROW(bad(R"({"model": {"name": "ssh_wall"}, "task": "index"})"));
}

TEST(Run, EssentialSpectrumHull) {
  auto r = run_experiment(load_config((samples / "ssh_essential.json").string()));
  const std::string& hull = file(r, "ssh_essential_hull.csv").body;
  EXPECT_EQ(hull.rfind("# config_hash=", 0), 0u);
  auto summary = json::parse(file(r, "ssh_essential.json").body);
  const double pitch = 2 * std::numbers::pi / 1024;
  std::vector<std::pair<double, double>> expected{{-3.0, -0.5}, {0.5, 3.0}};
  ASSERT_EQ(summary["hull"].size(), 2u);
  for (std::size_t k = 0; k < 2; ++k) {
    EXPECT_NEAR(summary["hull"][k][0].get<double>(), expected[k].first, 2 * pitch);
    EXPECT_NEAR(summary["hull"][k][1].get<double>(), expected[k].second, 2 * pitch);
  }
  EXPECT_EQ(summary["config_hash"], load_config((samples / "ssh_essential.json").string()).hash);
  EXPECT_EQ(summary["certificates"]["asymptotics"], "DomainWall1D");
}

TEST(Run, IndexGridHasZeroResidual) {
  auto r = run_experiment(load_config((samples / "ssh_index_grid.json").string()));
  auto table = json::parse(r.files.front().body);
  ASSERT_EQ(table["rows"].size(), 12u);
  for (const auto& row : table["rows"]) {
    EXPECT_EQ(row["identity_residual"], 0);
    const double ml = row["params"]["m_left"], mr = row["params"]["m_right"];
    EXPECT_EQ(row["interface_index"].get<int>(), int(std::abs(ml) < 1) - int(std::abs(mr) < 1));
  }
  EXPECT_EQ(table["max_abs_residual"], 0);
}

TEST(Run, ReproducibleAcrossWorkerCounts) {
  for (const char* name : {"ssh_index_grid.json", "ssh_convergence.json", "ssh_essential.toml"}) {
    const auto c = load_config((samples / name).string());
    set_workers(1);
    auto a = run_experiment(c);
    set_workers(8);
    auto b = run_experiment(c);
    set_workers(0);
    ASSERT_EQ(a.files.size(), b.files.size());
    for (std::size_t k = 0; k < a.files.size(); ++k) {
      EXPECT_EQ(a.files[k].name, b.files[k].name);
      EXPECT_EQ(a.files[k].body, b.files[k].body) << name << " " << a.files[k].name;
    }
  }
}

TEST(Run, NonChiralModelRejectedForIndex) {
  auto c = parse_config(json::parse(R"({"model": {"name": "laplacian"}, "task": "index"})"));
  EXPECT_THROW(run_experiment(c), config_error);
}

TEST(Binary, ExitCodes) {
  const fs::path out = scratch("out");
  EXPECT_EQ(run_cli("list-models"), 0);
  EXPECT_EQ(run_cli("validate " + (samples / "ssh_essential.toml").string()), 0);
  EXPECT_EQ(run_cli("run " + (samples / "ssh_essential.json").string() + " --out " + out.string()), 0);
  EXPECT_TRUE(fs::exists(out / "ssh_essential_hull.csv"));
  EXPECT_EQ(run_cli("run " + write_file("broken.json", "{ not json").string()), 2);
  EXPECT_EQ(run_cli("validate " + write_file("unknown.json", R"({"model": {"name": "ssh_wall"}, "task": "x"})").string()), 2);
  EXPECT_EQ(run_cli("run /nonexistent/config.json"), 2);
  EXPECT_EQ(run_cli("frobnicate"), 2);
  // A closed bulk gap is a numerical failure, not a config error.
  const auto gapless = write_file(
      "gapless.json", R"({"model": {"name": "ssh_wall", "params": {"m_left": 1.0, "gap": 0}}, "task": "index",
                          "numerics": {"box": 30}})");
  EXPECT_EQ(run_cli("run " + gapless.string() + " --out " + out.string()), 1);
}

TEST(Binary, CacheReturnsIdenticalBodies) {
  const fs::path cache = scratch("cache"), a = scratch("a"), b = scratch("b");
  const std::string env = "IFK_CACHE_DIR=" + cache.string();
  const std::string cfg = (samples / "ssh_convergence.json").string();
  ASSERT_EQ(run_cli("run " + cfg + " --out " + a.string() + " --workers 1", env), 0);
  const auto hash = load_config(cfg).hash;
  EXPECT_TRUE(fs::exists(cache / hash / "MANIFEST"));
  ASSERT_EQ(run_cli("run " + cfg + " --out " + b.string() + " --workers 8", env), 0);
  for (const char* f : {"convergence_convergence.csv", "convergence.json"}) EXPECT_EQ(slurp(a / f), slurp(b / f));
}
