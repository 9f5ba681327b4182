// insindy: generate data, discover equations, run sweeps, collate reports.
#include "insindy/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <thread>

namespace {

struct Overrides
{
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string methods;
};

insindy::ExperimentConfig loadConfig(Overrides const &o, std::string const &system)
{
  using insindy::ExperimentConfig;
  ExperimentConfig cfg = o.config.empty() ? ExperimentConfig::defaultsFor(system) : ExperimentConfig::load(o.config);
  if (!o.out.empty()) cfg.outDir = o.out;
  if (o.seed) cfg.seed = *o.seed;
  if (!o.methods.empty()) {
    cfg.methods.clear();
    std::string m;
    for (char c : o.methods + ",") {
      if (c == ',') {
        if (!m.empty()) cfg.methods.push_back(m);
        m.clear();
      } else if (c != ' ') {
        m += c;
      }
    }
  }
  cfg.validate();
  return cfg;
}

} // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Sparse equation discovery with an implicit neural representation"};
  app.require_subcommand(1);

  Overrides o;
  std::string system = "linear_oscillator";
  int jobs = int(std::max(1u, std::thread::hardware_concurrency()));
  std::string reportDir;

  auto addCommon = [&](CLI::App *cmd) {
    cmd->add_option("--config", o.config, "Experiment config file");
    cmd->add_option("--out", o.out, "Output directory (overrides the config)");
    cmd->add_option("--seed", o.seed, "Random seed (overrides the config)");
    cmd->add_option("--system", system, "Benchmark defaults to use when no config is given");
  };
  auto *gen = app.add_subcommand("generate", "Write noisy benchmark datasets");
  addCommon(gen);
  auto *disc = app.add_subcommand("discover", "Run discovery methods on a dataset");
  addCommon(disc);
  disc->add_option("--method", o.methods, "Comma-separated methods: ineural,deri_only,rk4_only,rk4_direct,stls");
  auto *sweep = app.add_subcommand("sweep", "Noise x samples (scene_a) or noise x width (scene_b) grid");
  addCommon(sweep);
  sweep->add_option("--method", o.methods, "Comma-separated methods");
  sweep->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  auto *rep = app.add_subcommand("report", "Collate result.json files into report.md / report.csv");
  rep->add_option("dir", reportDir, "Results directory");
  rep->add_option("--out", o.out, "Results directory (same as the positional argument)");

  try {
    app.parse(argc, argv);
  } catch (CLI::ParseError const &e) {
    int const code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) return insindy::cmdGenerate(loadConfig(o, system), std::cout);
    if (disc->parsed()) return insindy::cmdDiscover(loadConfig(o, system), std::cout);
    if (sweep->parsed()) return insindy::cmdSweep(loadConfig(o, system), jobs, std::cout);
    if (rep->parsed()) {
      std::string const dir = !reportDir.empty() ? reportDir : o.out;
      if (dir.empty()) throw insindy::ConfigError("report needs a results directory");
      return insindy::cmdReport(dir, std::cout);
    }
  } catch (insindy::ConfigError const &e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (insindy::NumericalError const &e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (std::exception const &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
