#include "insindy/regression.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>

using namespace insindy;

namespace {

Eigen::MatrixXd analyticRates(OdeSystem const &sys, Eigen::MatrixXd const &states)
{
  Eigen::MatrixXd d(states.rows(), states.cols());
  for (Index r = 0; r < states.rows(); ++r) d.row(r) = sys.rhs(states.row(r).transpose()).transpose();
  return d;
}

Dataset linearData(double sigma, Index samples = 400)
{
  Eigen::MatrixXd ics(3, 2);
  ics << 2, 0, -1, 1.5, 0.5, -2;
  GenerationSettings g;
  g.samples = samples;
  g.sigma = sigma;
  g.seed = 1;
  return generateDataset(linearOscillator(), ics, g);
}

Eigen::MatrixXd stackClean(Dataset const &d)
{
  Eigen::MatrixXd out(d.totalSamples(), d.stateDim());
  Index row = 0;
  for (auto const &tr : d.trajectories) {
    out.middleRows(row, tr.clean.rows()) = tr.clean;
    row += tr.clean.rows();
  }
  return out;
}

} // namespace

TEST_CASE("threshold")
{
  Eigen::MatrixXd v(1, 2);
  v << 0.04, 0.2;
  auto const t = threshold(CoefficientMatrix(v), 0.05);
  CHECK(t.values(0, 0) == 0.0);
  CHECK(t.values(0, 1) == 0.2);
  CHECK_FALSE(t.mask(0, 0));
  CHECK(t.mask(0, 1));

  CoefficientMatrix const r(testing::randomTensor(6, 3, 8, -0.2, 0.2));
  auto const same = threshold(r, 0.0);
  CHECK(same.values == r.values);
  CHECK((same.mask == r.mask).all());

  auto const once = threshold(r, 0.1);
  auto const twice = threshold(once, 0.1);
  CHECK(once.values == twice.values);
  CHECK((once.mask == twice.mask).all());

  // masked entries stay masked even at tol 0
  auto const loose = threshold(once, 0.0);
  CHECK((loose.mask == once.mask).all());
  CHECK_THROWS(threshold(r, -1.0));

  auto const labels = std::vector<std::string>{"1", "x1", "x2", "x1^2", "x1*x2", "x2^2"};
  auto const pruned = prunedEntries(r.mask, once.mask, labels);
  CHECK(Index(pruned.size()) == r.activeCount() - once.activeCount());
}

TEST_CASE("STLS recovers exact synthetic coefficients")
{
  Dictionary dict({3, 2, true, {}});
  Eigen::MatrixXd const X = testing::randomTensor(200, 3, 12, -2, 2);
  Eigen::MatrixXd truth = Eigen::MatrixXd::Zero(dict.size(), 3);
  truth(1, 0) = 1.5;
  truth(5, 0) = -0.3;
  truth(0, 1) = 0.7;
  truth(9, 2) = 2.2;
  truth(3, 2) = -0.15;
  Eigen::MatrixXd const theta = dict.evaluate(X);
  auto const res = stlsSindy(theta, theta * truth, 0.1, 10);
  CHECK((res.xi.values - truth).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(res.xi.activeCount() == 5);
  CHECK_FALSE(res.rankDeficient);

  auto const all = stlsSindy(theta, theta * truth, 100.0, 10);
  CHECK(all.xi.values.isZero(0.0));
  CHECK(all.xi.activeCount() == 0);

  // fixed point
  auto const again = stlsSindy(theta, theta * truth, 0.1, 10, res.xi.mask);
  CHECK(again.xi.values == res.xi.values);
  CHECK((again.xi.mask == res.xi.mask).all());
}

TEST_CASE("STLS on the clean linear oscillator with analytic derivatives")
{
  auto const sys = linearOscillator();
  auto const data = linearData(0.0);
  Eigen::MatrixXd const X = stackClean(data);
  Dictionary dict({2, 2, true, {}});
  auto const res = stlsSindy(dict.evaluate(X), analyticRates(sys, X), 0.05, 10);
  Eigen::MatrixXd const truth = sys.groundTruth(dict);
  CHECK((res.xi.values - truth).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(res.xi.activeCount() == 4);
}

TEST_CASE("STLS flags a rank-deficient library")
{
  Eigen::MatrixXd theta(20, 3);
  Eigen::VectorXd const a = testing::randomTensor(20, 1, 2);
  theta.col(0) = a;
  theta.col(1) = 2.0 * a; // duplicate direction
  theta.col(2) = testing::randomTensor(20, 1, 3);
  Eigen::MatrixXd const y = 3.0 * theta.col(0) + theta.col(2);
  auto const res = stlsSindy(theta, y, 0.01, 5);
  CHECK(res.rankDeficient);
  CHECK((theta * res.xi.values - y).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK_THROWS_AS(stlsSindy(theta, Eigen::MatrixXd::Zero(5, 1), 0.1, 5), ShapeError);
  CHECK_THROWS(stlsSindy(theta, y, 0.0, 5));
}

TEST_CASE("direct RK4 loss is tiny at the truth and ignores trajectory order")
{
  auto const sys = linearOscillator();
  auto data = linearData(0.0);
  Dictionary dict({2, 2, true, {}});
  Eigen::MatrixXd const truth = sys.groundTruth(dict);
  double const base = rk4DirectLoss(data, dict, truth);
  CHECK(base < 1e-8);

  Eigen::MatrixXd const other = testing::randomTensor(dict.size(), 2, 4);
  double const a = rk4DirectLoss(data, dict, other);
  std::reverse(data.trajectories.begin(), data.trajectories.end());
  CHECK(rk4DirectLoss(data, dict, other) == doctest::Approx(a).epsilon(1e-13));
  CHECK(rk4DirectLoss(data, dict, truth) == doctest::Approx(base).epsilon(1e-9).scale(1e-12));
}

TEST_CASE("direct RK4 regression recovers the clean linear oscillator")
{
  auto const data = linearData(0.0);
  Dictionary dict({2, 2, true, {}});
  TrainSchedule s;
  s.maxIter = 4000;
  s.initIter = 2000;
  s.thresholdPeriod = 500;
  auto const res = rk4SindyDirect(data, dict, s, 100);
  Eigen::MatrixXd const truth = linearOscillator().groundTruth(dict);
  CHECK((res.xi.values - truth).cwiseAbs().maxCoeff() <= 0.01);
  CHECK(res.xi.activeCount() == 4);
  CHECK_FALSE(res.trace.thresholds.empty());
  for (auto const &ev : res.trace.thresholds) CHECK(s.thresholdsAt(ev.iteration));
}
