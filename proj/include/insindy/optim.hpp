#pragma once

#include "insindy/autodiff.hpp"

#include <Eigen/Core>

#include <string>
#include <vector>

namespace insindy {

using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

struct AdamSettings
{
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Moment estimates for one parameter tensor.
struct AdamState
{
  Tensor m;
  Tensor v;
  long step = 0;

  AdamState() = default;
  AdamState(Index rows, Index cols) : m(Tensor::Zero(rows, cols)), v(Tensor::Zero(rows, cols)) {}
};

/// One bias-corrected Adam update in place. Entries where `frozen` is true
/// keep value 0 and have their moments cleared.
void adamStep(Tensor &param, Tensor const &grad, AdamState &state, double lr, AdamSettings const &settings,
              Mask const *frozen = nullptr);

/// Iteration schedule shared by the network-based methods and the direct
/// RK4 regression: no thresholding up to initIter, then thresholding at
/// every multiple of thresholdPeriod strictly above initIter, each followed
/// by a reset of both learning rates to their post-threshold values.
struct TrainSchedule
{
  int maxIter = 15000;
  int initIter = 5000;
  int thresholdPeriod = 2000;
  double tol = 0.05;
  double lrNet = 1e-4;
  double lrXi = 1e-3;
  double lrNetPost = 5e-6;
  double lrXiPost = 1e-2;
  AdamSettings adam;

  void validate() const;
  bool thresholdsAt(int iteration) const
  {
    return iteration > initIter && iteration % thresholdPeriod == 0;
  }
};

struct TraceRow
{
  int iter = 0;
  double total = 0;
  double mse = 0;
  double deri = 0;
  double rk4 = 0;
  Index activeTerms = 0;
};

struct ThresholdEvent
{
  int iteration = 0;
  std::vector<std::string> pruned; // "label:xi" entries
};

struct TrainingTrace
{
  std::vector<TraceRow> rows;
  std::vector<ThresholdEvent> thresholds;
};

} // namespace insindy
