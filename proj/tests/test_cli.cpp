#include "insindy/experiment.hpp"
#include "support.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace insindy;
namespace fs = std::filesystem;

namespace {

fs::path freshDir(std::string const &name)
{
  auto const dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<std::string> lines(fs::path const &path)
{
  std::ifstream in(path);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

} // namespace

TEST_CASE("config parse, defaults and round trip")
{
  auto const cfg = ExperimentConfig::parse(R"(
# comment
[experiment]
system = lorenz
seed = 42
methods = ineural, stls

[data]
initial_conditions = -8 7 27; -6 6 25
sigma = 0, 0.05
[training]
max_iter = 100
init_iter = 50
threshold_period = 10
)");
  CHECK(cfg.system == "lorenz");
  CHECK(cfg.seed == 42);
  CHECK(cfg.methods == std::vector<std::string>{"ineural", "stls"});
  CHECK(cfg.initialConditions.rows() == 2);
  CHECK(cfg.initialConditions(1, 2) == 25.0);
  CHECK(cfg.sigmas == std::vector<double>{0.0, 0.05});
  // untouched keys fall back to the Lorenz defaults
  auto const lor = ExperimentConfig::defaultsFor("lorenz");
  CHECK(cfg.alpha == lor.alpha);
  CHECK(cfg.alpha == 0.1);
  CHECK(cfg.hidden == lor.hidden);
  CHECK(cfg.schedule.lrXiPost == lor.schedule.lrXiPost);

  auto const again = ExperimentConfig::parse(cfg.serialize());
  CHECK(again == cfg);
  CHECK(again.serialize() == cfg.serialize());

  for (auto const &name : benchmarkNames()) {
    auto const d = ExperimentConfig::defaultsFor(name);
    CHECK_NOTHROW(d.validate());
    CHECK(ExperimentConfig::parse(d.serialize()) == d);
  }
}

TEST_CASE("config errors name the problem")
{
  auto message = [](std::string const &text) {
    try {
      ExperimentConfig::parse(text).validate();
    } catch (ConfigError const &e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message("[training]\nlearning_rate = 1\n").find("learning_rate") != std::string::npos);
  CHECK(message("[training]\nmax_iter = 10\nmax_iter = 20\n").find("max_iter") != std::string::npos);
  CHECK(message("[data]\nsamples = many\n").find("samples") != std::string::npos);
  CHECK_FALSE(message("[training]\nmax_iter = 100\ninit_iter = 100\n").empty());
  CHECK_FALSE(message("[experiment]\nsystem = duffing\n").empty());
  CHECK_FALSE(message("[experiment]\nmethods = lasso\n").empty());
  CHECK_FALSE(message("[bogus]\n").empty());
  CHECK_THROWS_AS(ExperimentConfig::load("/nonexistent/insindy.ini"), ConfigError);
}

TEST_CASE("sweep sub-seeds")
{
  CHECK(cellSeed(5, 0, 0) == (5 ^ mix64(0)));
  CHECK(cellSeed(5, 1, 2) == (5 ^ mix64((std::uint64_t(1) << 32) | 2)));
  std::set<std::uint64_t> seen;
  for (std::size_t r = 0; r < 8; ++r)
    for (std::size_t c = 0; c < 8; ++c) seen.insert(cellSeed(9, r, c));
  CHECK(seen.size() == 64);
}

TEST_CASE("tiny sweep covers the grid and does not depend on the job count")
{
  auto cfg = ExperimentConfig::defaultsFor("linear_oscillator");
  cfg.methods = {"stls", "rk4_direct"};
  cfg.sweepSigmas = {0.0, 0.02};
  cfg.sweepSamples = {50, 80};
  cfg.schedule.maxIter = 60;
  cfg.schedule.initIter = 30;
  cfg.schedule.thresholdPeriod = 10;
  std::ostringstream log;
  auto const one = runSweep(cfg, 1, log);
  auto const two = runSweep(cfg, 2, log);
  REQUIRE(one.cells.size() == 8);
  for (std::size_t i = 0; i < one.cells.size(); ++i) {
    CHECK(one.cells[i].row == two.cells[i].row);
    CHECK(one.cells[i].method == two.cells[i].method);
    CHECK(one.cells[i].error == two.cells[i].error);
  }
  CHECK(one.cells[0].method == "rk4_direct");
  CHECK(one.cells[1].method == "stls");
  CHECK(one.cells[2].size == 80);

  auto const dir = freshDir("insindy_sweep_test");
  cfg.outDir = dir.string();
  CHECK(cmdSweep(cfg, 2, log) == 0);
  auto const rows = lines(dir / "sweep.csv");
  REQUIRE(rows.size() == 9);
  CHECK(rows[0] == "sigma,samples_or_neurons,method,E_total");
  CHECK(fs::exists(dir / "heatmap_stls.svg"));
  fs::remove_all(dir);
}

TEST_CASE("generate, discover and report")
{
  auto const dir = freshDir("insindy_cli_test");
  auto cfg = ExperimentConfig::defaultsFor("linear_oscillator");
  cfg.outDir = dir.string();
  cfg.methods = {"stls", "rk4_direct"};
  cfg.sigmas = {0.0};
  cfg.samples = 200;
  cfg.schedule.maxIter = 200;
  cfg.schedule.initIter = 100;
  cfg.schedule.thresholdPeriod = 50;
  std::ostringstream out;

  CHECK(cmdGenerate(cfg, out) == 0);
  auto const csv = lines(dir / "dataset_sigma_0.csv");
  CHECK(csv.size() == 1 + 3 * 200);
  CHECK(cmdGenerate(cfg, out) == 0);
  CHECK(lines(dir / "dataset_sigma_0.csv") == csv);

  CHECK(cmdDiscover(cfg, out) == 0);
  CHECK(fs::exists(dir / "sigma_0" / "stls" / "result.json"));
  CHECK(fs::exists(dir / "sigma_0" / "rk4_direct" / "xi.csv"));
  CHECK_FALSE(fs::exists(dir / "sigma_0" / "rk4_direct" / "network.json"));
  auto const stls = readResultJson(dir / "sigma_0" / "stls" / "result.json");
  CHECK(stls.equations[0].find("x1") != std::string::npos);
  REQUIRE(stls.error.size() == 2);
  CHECK(stls.error[0] < 0.05);

  // a result without ground truth
  auto extra = stls;
  DiscoveryResult r;
  r.method = "ineural";
  r.system = "custom";
  r.labels = {"x1"};
  r.xi = CoefficientMatrix(Eigen::MatrixXd::Ones(1, 1));
  fs::create_directories(dir / "custom");
  writeResultJson(dir / "custom" / "result.json", r, "xi.csv");

  std::ostringstream rep;
  CHECK(cmdReport(dir, rep) == 0);
  auto const table = lines(dir / "report.csv");
  REQUIRE(table.size() == 4);
  CHECK(table[1].rfind("custom,0,ineural,", 0) == 0);
  CHECK(table[1].find(",,,") != std::string::npos); // blank E columns
  CHECK(table[2].find(",rk4_direct,") != std::string::npos);
  CHECK(table[3].find(",stls,") != std::string::npos);

  // neural methods also leave a loadable network checkpoint
  auto const ndir = freshDir("insindy_cli_neural");
  auto neural = cfg;
  neural.outDir = ndir.string();
  neural.methods = {"ineural"};
  neural.samples = 40;
  CHECK(cmdDiscover(neural, out) == 0);
  auto const ckpt = ndir / "sigma_0" / "ineural" / "network.json";
  REQUIRE(fs::exists(ckpt));
  auto const net = SirenNetwork::load(ckpt);
  CHECK(net.parameters().size() == 2 * (neural.hidden.size() + 1));
  fs::remove_all(ndir);

  auto const empty = freshDir("insindy_cli_empty");
  CHECK_THROWS_AS(cmdReport(empty, rep), ConfigError);
  CHECK_THROWS_AS(cmdReport(empty / "missing", rep), ConfigError);
  fs::remove_all(empty);
  fs::remove_all(dir);
}
