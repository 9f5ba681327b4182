#pragma once

#include "insindy/dictionary.hpp"
#include "insindy/network.hpp"
#include "insindy/optim.hpp"
#include "insindy/regression.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace insindy {

/// Trajectory of a discovered model. When a state leaves the |x| <= 1e8 box
/// the trajectory stops there and `divergent` is set.
struct Simulation
{
  Eigen::VectorXd times;
  Eigen::MatrixXd states;
  bool divergent = false;
};

struct DiscoveryResult
{
  std::string method;
  std::string system;
  double sigma = 0.0;
  double alpha = 1.0;
  std::uint64_t seed = 0;
  std::vector<std::string> labels;
  CoefficientMatrix xi;
  std::optional<Eigen::RowVectorXd> error; // E(x_i), only with ground truth
  std::optional<Simulation> simulation;
  std::optional<SirenNetwork> network; // neural methods only
  TrainingTrace trace;
  std::string config; // serialized config snapshot
  double runtimeSeconds = 0.0;
  std::string failure; // empty unless the method failed

  bool failed() const { return !failure.empty(); }
  double errorTotal() const;
};

/// Per-state l1 distance between coefficient columns. Both matrices must be
/// expressed in the same labels, in the same order.
Eigen::RowVectorXd coeffError(std::vector<std::string> const &truthLabels, Eigen::MatrixXd const &truth,
                              std::vector<std::string> const &estimateLabels, Eigen::MatrixXd const &estimate);

/// RK4 integration of dx/dt = Theta(x) Xi. Each output interval is split
/// into `refinement` equal steps, the way the data generator does it.
Simulation simulateDiscovered(Dictionary const &dict, Eigen::MatrixXd const &xi, Eigen::VectorXd const &x0,
                              Eigen::VectorXd const &times, int refinement = 10);

/// One "dxi/dt = ..." line per state. Inactive (or, without a mask, exactly
/// zero) terms are left out.
std::vector<std::string> formatEquations(CoefficientMatrix const &xi, std::vector<std::string> const &labels,
                                         int precision = 3);
std::vector<std::string> formatEquations(Eigen::MatrixXd const &xi, std::vector<std::string> const &labels,
                                         int precision = 3);

// feature,x1..xn,mask_x1..mask_xn
void writeCoefficientCsv(std::filesystem::path const &path, std::vector<std::string> const &labels,
                         CoefficientMatrix const &xi);
// iter,loss_total,loss_mse,loss_deri,loss_rk4,active_terms
void writeTraceCsv(std::filesystem::path const &path, TrainingTrace const &trace);

/// {method, system, sigma, alpha, seed, equations[], coeff_csv_path, E[],
/// runtime_s} plus "failure" when the method did not finish. E is an empty
/// array without ground truth.
void writeResultJson(std::filesystem::path const &path, DiscoveryResult const &result,
                     std::string const &coeffCsvPath);

/// The subset of a result file the report needs.
struct ResultSummary
{
  std::string method;
  std::string system;
  double sigma = 0.0;
  double alpha = 1.0;
  std::uint64_t seed = 0;
  std::vector<std::string> equations;
  std::vector<double> error; // empty without ground truth
  double runtimeSeconds = 0.0;
  std::string failure;
  std::filesystem::path source;
};

ResultSummary readResultJson(std::filesystem::path const &path);

} // namespace insindy
