#pragma once

#include "insindy/dictionary.hpp"
#include "insindy/dynamics.hpp"
#include "insindy/errors.hpp"
#include "insindy/losses.hpp"
#include "insindy/network.hpp"
#include "insindy/optim.hpp"
#include "insindy/regression.hpp"

#include <cstdint>
#include <vector>

namespace insindy {

/// Weights of the data-fit, derivative-matching and RK4 one-step terms.
struct LossWeights
{
  double mse = 1.0;
  double deri = 0.1;
  double rk4 = 0.1;

  void validate() const;
  bool operator==(LossWeights const &) const = default;
};

/// Coordinates the three loss terms are evaluated in. Physical makes Xi
/// directly comparable with the ground-truth coefficients.
enum class LossSpace
{
  Physical,
  Normalized,
};

struct NetworkSettings
{
  std::vector<Index> hidden{32, 32, 32};
  double omegaFirst = 30.0;
  double omegaHidden = 30.0;
};

struct TrainingOptions
{
  LossWeights weights;
  TrainSchedule schedule;
  NetworkSettings network;
  LossSpace space = LossSpace::Physical;
  std::uint64_t seed = 0;
  int traceEvery = 1;
};

/// Everything about a dataset the objective needs, prepared once per run.
/// Rows are all (trajectory, sample) pairs stacked trajectory-major.
struct TrainingProblem
{
  TrainingProblem(Dataset const &dataset, LossSpace space);

  Tensor input;   // rows x (1 or 1+n): normalized time [, normalized y0]
  Tensor targets; // noisy data in loss coordinates
  StepPairs pairs;
  Eigen::RowVectorXd stateScale;  // loss-space state = net * stateScale + stateOffset
  Eigen::RowVectorXd stateOffset;
  Eigen::RowVectorXd rateScale;   // loss-space d/dt = d net / d t_norm * rateScale
  bool multiTrajectory = false;
  Index stateDim = 0;

  Index rows() const { return input.rows(); }
  Index inputDim() const { return input.cols(); }
};

struct RecordedObjective
{
  std::vector<ad::Var> networkParams;
  ad::Var xi;
  ad::Var state; // loss-space prediction
  ad::Var rate;
  ad::Var mse;
  ad::Var deri;
  ad::Var rk4;
  ad::Var total;
};

/// Records mu1 * L_mse + mu2 * L_deri + mu3 * L_rk4 for the current network
/// and coefficients. Network parameters are registered first, Xi last.
RecordedObjective recordObjective(ad::Tape &tape, TrainingProblem const &problem, Dictionary const &dict,
                                  SirenNetwork const &network, Eigen::MatrixXd const &xi,
                                  LossWeights const &weights);

// Single loss terms evaluated on plain matrices (rows stacked trajectory-major).
double lossMse(Eigen::MatrixXd const &prediction, Eigen::MatrixXd const &data);
double lossDeri(Dictionary const &dict, Eigen::MatrixXd const &states, Eigen::MatrixXd const &rates,
                Eigen::MatrixXd const &xi);
double lossRk4(Dictionary const &dict, Eigen::MatrixXd const &states, Eigen::MatrixXd const &xi,
               StepPairs const &pairs);

struct TrainingOutcome
{
  CoefficientMatrix xi;
  SirenNetwork network;
  TrainingTrace trace;
};

/// Thrown when the objective becomes non-finite; carries the trace so far.
class TrainingDiverged : public NumericalError
{
public:
  TrainingDiverged(std::string const &what, TrainingTrace trace) : NumericalError(what), trace_(std::move(trace)) {}
  TrainingTrace const &trace() const { return trace_; }

private:
  TrainingTrace trace_;
};

/// Joint full-batch Adam on (theta, Xi): Xi starts at zero, no thresholding
/// before initIter, then threshold + learning-rate reset every
/// thresholdPeriod iterations. Multi-trajectory datasets feed the
/// normalized initial condition as extra network inputs.
TrainingOutcome trainINeural(Dataset const &dataset, Dictionary const &dict, TrainingOptions const &options);

} // namespace insindy
