#include "insindy/training.hpp"

#include <cmath>
#include <sstream>

namespace insindy {

void LossWeights::validate() const
{
  for (double mu : {mse, deri, rk4})
    if (!(mu >= 0.0 && mu <= 1.0)) throw ConfigError("loss weights must lie in [0, 1]");
}

TrainingProblem::TrainingProblem(Dataset const &dataset, LossSpace space)
{
  if (dataset.trajectories.empty()) throw std::invalid_argument("training needs a nonempty dataset");
  auto const &rec = dataset.normalization;
  stateDim = dataset.stateDim();
  multiTrajectory = dataset.trajectoryCount() > 1;
  Index const rowsTotal = dataset.totalSamples();
  input.resize(rowsTotal, multiTrajectory ? 1 + stateDim : 1);
  targets.resize(rowsTotal, stateDim);
  std::vector<Eigen::VectorXd> times;
  Index offset = 0;
  for (auto const &tr : dataset.trajectories) {
    Index const N = tr.times.size();
    input.block(offset, 0, N, 1) = rec.normalizeTimes(tr.times);
    if (multiTrajectory) {
      Eigen::RowVectorXd const y0 = rec.normalizeStates(tr.initialCondition.transpose());
      input.block(offset, 1, N, stateDim) = y0.replicate(N, 1);
    }
    targets.middleRows(offset, N) = space == LossSpace::Physical ? tr.noisy : rec.normalizeStates(tr.noisy);
    times.push_back(space == LossSpace::Physical ? tr.times : Eigen::VectorXd(rec.normalizeTimes(tr.times)));
    offset += N;
  }
  pairs = consecutivePairs(times);
  if (space == LossSpace::Physical) {
    stateScale = rec.stateHalfRange();
    stateOffset = rec.stateMidpoint();
    rateScale = rec.stateHalfRange() * rec.timeScale();
  } else {
    stateScale = Eigen::RowVectorXd::Ones(stateDim);
    stateOffset = Eigen::RowVectorXd::Zero(stateDim);
    rateScale = Eigen::RowVectorXd::Ones(stateDim);
  }
}

RecordedObjective recordObjective(ad::Tape &tape, TrainingProblem const &problem, Dictionary const &dict,
                                  SirenNetwork const &network, Eigen::MatrixXd const &xi,
                                  LossWeights const &weights)
{
  RecordedObjective r;
  r.networkParams = network.registerParameters(tape);
  r.xi = tape.parameter("Xi", xi);
  auto const net = network.record(tape, r.networkParams, problem.input);
  r.state = net.state * tape.constant(Tensor(problem.stateScale)) + tape.constant(Tensor(problem.stateOffset));
  r.rate = net.rate * tape.constant(Tensor(problem.rateScale));
  r.mse = loss::mse(r.state, tape.constant(problem.targets));
  r.deri = loss::derivative(r.rate, dict.record(r.state), r.xi);
  r.rk4 = loss::rk4(dict, r.state, r.xi, problem.pairs);
  r.total = weights.mse * r.mse + weights.deri * r.deri + weights.rk4 * r.rk4;
  return r;
}

double lossMse(Eigen::MatrixXd const &prediction, Eigen::MatrixXd const &data)
{
  if (prediction.rows() != data.rows() || prediction.cols() != data.cols())
    throw ShapeError("MSE loss: prediction and data shapes differ");
  ad::Tape tape;
  return tape.forward(loss::mse(tape.constant(prediction), tape.constant(data)))(0, 0);
}

double lossDeri(Dictionary const &dict, Eigen::MatrixXd const &states, Eigen::MatrixXd const &rates,
                Eigen::MatrixXd const &xi)
{
  ad::Tape tape;
  ad::Var x = tape.constant(states);
  return tape.forward(loss::derivative(tape.constant(rates), dict.record(x), tape.constant(xi)))(0, 0);
}

double lossRk4(Dictionary const &dict, Eigen::MatrixXd const &states, Eigen::MatrixXd const &xi,
               StepPairs const &pairs)
{
  ad::Tape tape;
  return tape.forward(loss::rk4(dict, tape.constant(states), tape.constant(xi), pairs))(0, 0);
}

TrainingOutcome trainINeural(Dataset const &dataset, Dictionary const &dict, TrainingOptions const &options)
{
  options.weights.validate();
  options.schedule.validate();
  if (dict.stateDim() != dataset.stateDim()) throw std::invalid_argument("dictionary does not match dataset");
  auto const &schedule = options.schedule;

  TrainingProblem const problem(dataset, options.space);
  std::vector<Index> dims{problem.inputDim()};
  dims.insert(dims.end(), options.network.hidden.begin(), options.network.hidden.end());
  dims.push_back(problem.stateDim);

  TrainingOutcome out;
  out.network = SirenNetwork::init(dims, options.network.omegaFirst, options.network.omegaHidden, options.seed);
  out.xi = CoefficientMatrix::zeros(dict.size(), problem.stateDim);
  auto const labels = dict.labels();

  std::vector<Tensor> params = out.network.parameters();
  std::vector<AdamState> netState;
  for (auto const &p : params) netState.emplace_back(p.rows(), p.cols());
  AdamState xiState(out.xi.features(), out.xi.states());
  double lrNet = schedule.lrNet;
  double lrXi = schedule.lrXi;
  int const traceEvery = std::max(1, options.traceEvery);

  // The graph never changes shape, so it is recorded once and re-run with
  // fresh parameter values each iteration.
  ad::Tape tape;
  auto const obj = recordObjective(tape, problem, dict, out.network, out.xi.values, options.weights);
  for (int iter = 1; iter <= schedule.maxIter; ++iter) {
    if (iter > 1) {
      for (std::size_t i = 0; i < params.size(); ++i) tape.setParameter(obj.networkParams[i], params[i]);
      tape.setParameter(obj.xi, out.xi.values);
    }
    double const total = tape.forward(obj.total)(0, 0);
    TraceRow row{iter,
                 total,
                 tape.value(obj.mse)(0, 0),
                 tape.value(obj.deri)(0, 0),
                 tape.value(obj.rk4)(0, 0),
                 out.xi.activeCount()};
    if (!std::isfinite(total)) {
      out.trace.rows.push_back(row);
      std::ostringstream os;
      os << "training loss became non-finite at iteration " << iter;
      throw TrainingDiverged(os.str(), std::move(out.trace));
    }
    auto const &grads = tape.backward(obj.total);
    for (std::size_t i = 0; i < params.size(); ++i) adamStep(params[i], grads[i], netState[i], lrNet, schedule.adam);
    out.network.setParameters(params);

    Mask const frozen = !out.xi.mask;
    Tensor gxi = frozen.select(0.0, grads.back().array()).matrix();
    adamStep(out.xi.values, gxi, xiState, lrXi, schedule.adam, &frozen);

    if (iter == 1 || iter % traceEvery == 0 || iter == schedule.maxIter) out.trace.rows.push_back(row);

    if (schedule.thresholdsAt(iter)) {
      Mask const before = out.xi.mask;
      out.xi = threshold(std::move(out.xi), schedule.tol);
      out.trace.thresholds.push_back({iter, prunedEntries(before, out.xi.mask, labels)});
      lrNet = schedule.lrNetPost;
      lrXi = schedule.lrXiPost;
    }
  }
  return out;
}

} // namespace insindy
