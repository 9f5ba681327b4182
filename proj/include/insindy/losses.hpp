#pragma once

#include "insindy/autodiff.hpp"
#include "insindy/dictionary.hpp"

#include <Eigen/Core>

#include <vector>

namespace insindy {

/// Consecutive-sample pairs (k, k+1) of trajectories stacked row-wise.
/// Pairs never straddle a trajectory boundary.
struct StepPairs
{
  std::vector<Index> current;
  std::vector<Index> next;
  Eigen::VectorXd step; // h_k > 0

  Index size() const { return Index(current.size()); }
};

/// `times[j]` holds trajectory j's sample times; rows are assumed stacked in
/// that order. Throws std::invalid_argument when some h_k <= 0.
StepPairs consecutivePairs(std::vector<Eigen::VectorXd> const &times);

namespace loss {

/// (1/N) sum_k ||y_k - x_k||^2 over all stacked rows.
ad::Var mse(ad::Var prediction, ad::Var data);

/// (1/N) sum_k ||rate_k - Theta(x_k) Xi||^2.
ad::Var derivative(ad::Var rate, ad::Var theta, ad::Var xi);

/// Classical RK4 advance of x (rows are independent states) under
/// dx/dt = Theta(x) Xi with per-row step h (rows x 1), all four stages
/// recorded on the tape.
ad::Var rk4Predict(Dictionary const &dict, ad::Var x, ad::Var xi, ad::Var h);

/// (1/P) sum_pairs ||(x_{k+1} - F_RK4(x_k, h_k)) / h_k||^2.
ad::Var rk4(Dictionary const &dict, ad::Var states, ad::Var xi, StepPairs const &pairs);

} // namespace loss
} // namespace insindy
