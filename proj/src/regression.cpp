#include "insindy/regression.hpp"

#include "insindy/losses.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <cmath>
#include <sstream>

namespace insindy {

CoefficientMatrix::CoefficientMatrix(Eigen::MatrixXd v, Mask m) : values(std::move(v)), mask(std::move(m))
{
  if (mask.rows() != values.rows() || mask.cols() != values.cols())
    throw ShapeError("coefficient mask shape does not match values");
  enforceMask();
}

void CoefficientMatrix::enforceMask() { values = mask.select(values.array(), 0.0).matrix(); }

CoefficientMatrix threshold(CoefficientMatrix xi, double tol)
{
  if (tol < 0) throw std::invalid_argument("threshold tolerance must be non-negative");
  xi.mask = xi.mask && (xi.values.array().abs() >= tol);
  xi.enforceMask();
  return xi;
}

namespace {

// Least squares restricted to the active columns of one equation.
Eigen::VectorXd solveActive(Eigen::MatrixXd const &theta, Eigen::VectorXd const &rhs, Eigen::Array<bool, Eigen::Dynamic, 1> const &active,
                            bool &rankDeficient)
{
  Eigen::VectorXd out = Eigen::VectorXd::Zero(theta.cols());
  std::vector<Index> idx;
  for (Index i = 0; i < active.size(); ++i)
    if (active(i)) idx.push_back(i);
  if (idx.empty()) return out;
  Eigen::MatrixXd A(theta.rows(), Index(idx.size()));
  for (std::size_t c = 0; c < idx.size(); ++c) A.col(Index(c)) = theta.col(idx[c]);

  Eigen::MatrixXd const gram = A.transpose() * A;
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  Eigen::VectorXd coef;
  if (llt.info() == Eigen::Success && llt.rcond() >= 1e-12) {
    coef = llt.solve(A.transpose() * rhs);
  } else {
    rankDeficient = true;
    coef = Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(A).solve(rhs);
  }
  for (std::size_t c = 0; c < idx.size(); ++c) out(idx[c]) = coef(Index(c));
  return out;
}

void solveAll(Eigen::MatrixXd const &theta, Eigen::MatrixXd const &derivatives, CoefficientMatrix &xi,
              bool &rankDeficient)
{
  for (Index s = 0; s < derivatives.cols(); ++s)
    xi.values.col(s) = solveActive(theta, derivatives.col(s), xi.mask.col(s), rankDeficient);
}

} // namespace

StlsResult stlsSindy(Eigen::MatrixXd const &theta, Eigen::MatrixXd const &derivatives, double tol, int maxIter,
                     std::optional<Mask> const &initialMask)
{
  if (theta.rows() != derivatives.rows()) throw ShapeError("STLS: dictionary and derivative row counts differ");
  if (!(tol > 0)) throw std::invalid_argument("STLS: tol must be positive");
  if (maxIter < 1) throw std::invalid_argument("STLS: max_iter must be at least 1");

  StlsResult result;
  result.xi = CoefficientMatrix::zeros(theta.cols(), derivatives.cols());
  if (initialMask) {
    if (initialMask->rows() != theta.cols() || initialMask->cols() != derivatives.cols())
      throw ShapeError("STLS: initial mask has the wrong shape");
    result.xi.mask = *initialMask;
  }
  solveAll(theta, derivatives, result.xi, result.rankDeficient);

  int stable = 0;
  int k = 1;
  while (k < maxIter) {
    Mask const before = result.xi.mask;
    result.xi = threshold(std::move(result.xi), tol);
    solveAll(theta, derivatives, result.xi, result.rankDeficient);
    ++k;
    stable = (result.xi.mask == before).all() ? stable + 1 : 0;
    if (stable >= 2) break;
  }
  result.iterations = k;
  return result;
}

namespace {

struct DirectProblem
{
  Eigen::MatrixXd stacked;
  StepPairs pairs;
};

DirectProblem directProblem(Dataset const &dataset)
{
  DirectProblem p;
  std::vector<Eigen::VectorXd> times;
  p.stacked.resize(dataset.totalSamples(), dataset.stateDim());
  Index offset = 0;
  for (auto const &tr : dataset.trajectories) {
    if (tr.times.size() < 2) throw std::invalid_argument("RK4-SINDy needs at least 2 samples per trajectory");
    p.stacked.middleRows(offset, tr.noisy.rows()) = tr.noisy;
    offset += tr.noisy.rows();
    times.push_back(tr.times);
  }
  p.pairs = consecutivePairs(times);
  return p;
}

} // namespace

std::vector<std::string> prunedEntries(Mask const &before, Mask const &after, std::vector<std::string> const &labels)
{
  std::vector<std::string> out;
  for (Index s = 0; s < before.cols(); ++s)
    for (Index f = 0; f < before.rows(); ++f)
      if (before(f, s) && !after(f, s)) out.push_back(labels[std::size_t(f)] + ":x" + std::to_string(s + 1));
  return out;
}

double rk4DirectLoss(Dataset const &dataset, Dictionary const &dict, Eigen::MatrixXd const &xi)
{
  auto const problem = directProblem(dataset);
  ad::Tape tape;
  ad::Var x = tape.constant(problem.stacked);
  ad::Var coef = tape.constant(xi);
  ad::Var L = loss::rk4(dict, x, coef, problem.pairs);
  return tape.forward(L)(0, 0);
}

Rk4DirectResult rk4SindyDirect(Dataset const &dataset, Dictionary const &dict, TrainSchedule const &schedule,
                               int traceEvery)
{
  schedule.validate();
  auto const problem = directProblem(dataset);
  auto const labels = dict.labels();

  Rk4DirectResult result;
  result.xi = CoefficientMatrix::zeros(dict.size(), dataset.stateDim());
  AdamState state(result.xi.features(), result.xi.states());
  double lr = schedule.lrXi;

  ad::Tape tape;
  ad::Var x = tape.constant(problem.stacked);
  ad::Var coef = tape.parameter("Xi", result.xi.values);
  ad::Var L = loss::rk4(dict, x, coef, problem.pairs);
  for (int iter = 1; iter <= schedule.maxIter; ++iter) {
    if (iter > 1) tape.setParameter(coef, result.xi.values);
    double const value = tape.forward(L)(0, 0);
    if (!std::isfinite(value)) {
      std::ostringstream os;
      os << "RK4-SINDy diverged at iteration " << iter << "; last finite coefficients kept";
      throw NumericalError(os.str());
    }
    Tensor grad = tape.backward(L)[0];
    Mask const frozen = !result.xi.mask;
    grad = frozen.select(0.0, grad.array()).matrix();
    adamStep(result.xi.values, grad, state, lr, schedule.adam, &frozen);

    if (iter == 1 || iter % traceEvery == 0 || iter == schedule.maxIter)
      result.trace.rows.push_back({iter, value, 0.0, 0.0, value, result.xi.activeCount()});

    if (schedule.thresholdsAt(iter)) {
      Mask const before = result.xi.mask;
      result.xi = threshold(std::move(result.xi), schedule.tol);
      result.trace.thresholds.push_back({iter, prunedEntries(before, result.xi.mask, labels)});
      lr = schedule.lrXiPost;
    }
  }
  return result;
}

} // namespace insindy
