#pragma once

#include "insindy/dictionary.hpp"
#include "insindy/dynamics.hpp"
#include "insindy/optim.hpp"

#include <Eigen/Core>

#include <optional>

namespace insindy {

/// Xi (D x n) with its sparsity mask (true = active). Inactive entries hold
/// exactly 0.0.
struct CoefficientMatrix
{
  Eigen::MatrixXd values;
  Mask mask;

  CoefficientMatrix() = default;
  explicit CoefficientMatrix(Eigen::MatrixXd v) : values(std::move(v)), mask(Mask::Constant(values.rows(), values.cols(), true)) {}
  CoefficientMatrix(Eigen::MatrixXd v, Mask m);

  static CoefficientMatrix zeros(Index features, Index states)
  {
    return CoefficientMatrix(Eigen::MatrixXd::Zero(features, states));
  }

  Index features() const { return values.rows(); }
  Index states() const { return values.cols(); }
  Index activeCount() const { return mask.count(); }
  /// Zeroes every inactive entry.
  void enforceMask();
};

/// Entries with |value| < tol become 0 and inactive; inactive entries stay so.
CoefficientMatrix threshold(CoefficientMatrix xi, double tol);

/// "label:xj" for every entry active in `before` but not in `after`.
std::vector<std::string> prunedEntries(Mask const &before, Mask const &after, std::vector<std::string> const &labels);

struct StlsResult
{
  CoefficientMatrix xi;
  int iterations = 0;
  /// Some active sub-problem was solved by the minimum-norm QR fallback.
  bool rankDeficient = false;
};

/// Sequentially thresholded least squares. Each active sub-problem is solved
/// through the normal equations, falling back to a complete orthogonal
/// decomposition (minimum-norm) when the reciprocal condition estimate of
/// Theta^T Theta drops below 1e-12. Stops after maxIter iterations or once
/// the mask has been unchanged for two consecutive iterations.
StlsResult stlsSindy(Eigen::MatrixXd const &theta, Eigen::MatrixXd const &derivatives, double tol, int maxIter,
                     std::optional<Mask> const &initialMask = std::nullopt);

struct Rk4DirectResult
{
  CoefficientMatrix xi;
  TrainingTrace trace;
};

/// RK4-SINDy on raw (noisy) data: Adam on Xi alone minimizing the
/// 1/h-scaled one-step RK4 residual over within-trajectory pairs, with the
/// schedule's thresholding. Xi starts at zero. Network learning rates in
/// `schedule` are ignored. Throws NumericalError on a non-finite loss.
Rk4DirectResult rk4SindyDirect(Dataset const &dataset, Dictionary const &dict, TrainSchedule const &schedule,
                               int traceEvery = 1);

/// Value of the direct RK4 loss for a given Xi (no optimization).
double rk4DirectLoss(Dataset const &dataset, Dictionary const &dict, Eigen::MatrixXd const &xi);

} // namespace insindy
