#pragma once

#include "insindy/config.hpp"
#include "insindy/metrics.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace insindy {

/// The configured dataset at noise level `sigma`: loaded from
/// `datasetPath` when set, generated otherwise.
Dataset datasetFor(ExperimentConfig const &config, double sigma);

/// Runs one discovery method. Numerical failures are caught and reported in
/// `failure`; configuration problems propagate as ConfigError.
DiscoveryResult runMethod(std::string const &method, Dataset const &dataset, ExperimentConfig const &config);

/// Writes result.json, xi.csv, trace.csv, equations.txt and (when
/// available) simulation.csv into `dir`.
void writeResult(std::filesystem::path const &dir, DiscoveryResult const &result);

/// Sub-seed of sweep cell (row, col): seed XOR mix64(row << 32 | col).
std::uint64_t cellSeed(std::uint64_t seed, std::size_t row, std::size_t col);

struct SweepCell
{
  std::size_t row = 0; // sigma index
  std::size_t col = 0; // samples or width index
  double sigma = 0.0;
  Index size = 0;      // samples (scene_a) or hidden width (scene_b)
  std::string method;
  Eigen::RowVectorXd error; // NaN entries when the cell failed
  std::string failure;

  double errorTotal() const { return error.size() ? error.sum() : std::nan(""); }
};

struct SweepOutcome
{
  std::vector<SweepCell> cells; // sorted by (row, col, method order)
  Eigen::MatrixXd initialConditions; // what every cell used
};

/// Runs every (sigma, size, method) cell on `jobs` worker threads.
SweepOutcome runSweep(ExperimentConfig const &config, int jobs, std::ostream &log);

// Command bodies; each returns the process exit code.
int cmdGenerate(ExperimentConfig const &config, std::ostream &out);
int cmdDiscover(ExperimentConfig const &config, std::ostream &out);
int cmdSweep(ExperimentConfig const &config, int jobs, std::ostream &out);
int cmdReport(std::filesystem::path const &dir, std::ostream &out);

} // namespace insindy
