#include "insindy/optim.hpp"

#include "insindy/errors.hpp"

#include <cmath>
#include <stdexcept>

namespace insindy {

void adamStep(Tensor &param, Tensor const &grad, AdamState &state, double lr, AdamSettings const &s,
              Mask const *frozen)
{
  if (grad.rows() != param.rows() || grad.cols() != param.cols())
    throw ShapeError("adam: gradient shape does not match parameter");
  if (state.m.rows() != param.rows() || state.m.cols() != param.cols()) state = AdamState(param.rows(), param.cols());
  ++state.step;
  state.m = s.beta1 * state.m + (1.0 - s.beta1) * grad;
  state.v = s.beta2 * state.v + (1.0 - s.beta2) * grad.cwiseAbs2();
  double const c1 = 1.0 - std::pow(s.beta1, double(state.step));
  double const c2 = 1.0 - std::pow(s.beta2, double(state.step));
  param.array() -= lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + s.epsilon);
  if (frozen != nullptr) {
    param = frozen->select(0.0, param.array()).matrix();
    state.m = frozen->select(0.0, state.m.array()).matrix();
    state.v = frozen->select(0.0, state.v.array()).matrix();
  }
}

void TrainSchedule::validate() const
{
  if (maxIter <= 0) throw ConfigError("max_iter must be positive");
  if (initIter < 0 || initIter >= maxIter) throw ConfigError("init_iter must satisfy 0 <= init_iter < max_iter");
  if (thresholdPeriod <= 0) throw ConfigError("threshold period q must be positive");
  if (tol < 0) throw ConfigError("tol must be non-negative");
  for (double lr : {lrNet, lrXi, lrNetPost, lrXiPost})
    if (!(lr >= 0)) throw ConfigError("learning rates must be non-negative");
  if (!(adam.beta1 >= 0 && adam.beta1 < 1 && adam.beta2 >= 0 && adam.beta2 < 1 && adam.epsilon > 0))
    throw ConfigError("invalid Adam constants");
}

} // namespace insindy
