#pragma once

#include "insindy/dictionary.hpp"
#include "insindy/dynamics.hpp"
#include "insindy/optim.hpp"
#include "insindy/training.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace insindy {

enum class SweepMode
{
  SceneA, // sigma x samples
  SceneB, // sigma x hidden width
};

/// Discovery methods in report order.
std::vector<std::string> const &knownMethods();

/// Plain-text experiment description. Files hold `key = value` lines grouped
/// under [experiment], [data], [dictionary], [network], [training] and
/// [sweep]; '#' starts a comment. `system` picks the defaults every other key
/// overrides. Lists are comma separated; initial conditions are rows
/// separated by ';'.
struct ExperimentConfig
{
  // [experiment]
  std::string system = "linear_oscillator";
  std::uint64_t seed = 0;
  std::string outDir = "results";
  std::vector<std::string> methods{"ineural"};

  // [data]
  Eigen::MatrixXd initialConditions; // rows, unscaled
  double tStart = 0.0;
  double tEnd = 10.0;
  Index samples = 400;
  std::vector<double> sigmas{0.0};
  double alpha = 1.0;
  int refinement = 10;
  std::string datasetPath; // load this CSV instead of generating

  // [dictionary]
  int degree = 2;
  bool includeConstant = true;
  std::vector<int> trigHarmonics;

  // [network]
  std::vector<Index> hidden{32, 32, 32};
  double omegaFirst = 30.0;
  double omegaHidden = 30.0;

  // [training]
  TrainSchedule schedule;
  LossWeights weights;
  LossSpace space = LossSpace::Physical;
  int traceEvery = 100;
  int stlsMaxIter = 10;

  // [sweep]
  SweepMode sweepMode = SweepMode::SceneA;
  std::vector<double> sweepSigmas{0.0, 0.02};
  std::vector<Index> sweepSamples{100, 400};
  std::vector<Index> sweepNeurons{16, 32};
  // when set, the sweep draws one initial condition uniformly from this box
  std::optional<std::pair<double, double>> sweepIcRange;

  /// Settings used for `system` before any key is applied.
  static ExperimentConfig defaultsFor(std::string_view system);

  static ExperimentConfig parse(std::string_view text);
  static ExperimentConfig load(std::filesystem::path const &path);
  std::string serialize() const;

  /// Cross-field checks; throws ConfigError.
  void validate() const;

  DictionarySpec dictionarySpec() const;
  GenerationSettings generation(double sigma) const;
  TrainingOptions training() const;

  bool operator==(ExperimentConfig const &) const;
};

} // namespace insindy
