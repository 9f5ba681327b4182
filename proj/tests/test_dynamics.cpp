#include "insindy/dynamics.hpp"
#include "support.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>

using namespace insindy;

namespace {

Eigen::VectorXd decay(Eigen::VectorXd const &x) { return -x; }

double rk4GlobalError(double h)
{
  auto const steps = Index(std::lround(1.0 / h));
  Eigen::VectorXd const t = linspace(0.0, 1.0, steps + 1);
  Eigen::VectorXd x0(1);
  x0 << 1.0;
  auto const states = integrateRk4(decay, x0, t);
  return std::abs(states(steps, 0) - std::exp(-1.0));
}

} // namespace

TEST_CASE("single RK4 step on exponential decay")
{
  Eigen::VectorXd x(1);
  x << 1.0;
  auto grow = [](Eigen::VectorXd const &v) { return Eigen::VectorXd(v); };
  // 1 + h + h^2/2 + h^3/6 + h^4/24 at h = 0.1
  CHECK(rk4Step(grow, x, 0.1)(0) == doctest::Approx(1.1051708333333333).epsilon(1e-15));
}

TEST_CASE("RK4 step on a linear system equals the degree-4 matrix polynomial")
{
  Eigen::MatrixXd A(3, 3);
  A << -0.1, 2.0, 0.3, -2.0, -0.1, 0.0, 0.5, -0.7, -1.2;
  auto f = [&](Eigen::VectorXd const &v) { return Eigen::VectorXd(A * v); };
  Eigen::VectorXd x(3);
  x << 0.7, -1.3, 2.1;
  for (double h : {0.01, 0.1, 0.37}) {
    Eigen::MatrixXd const hA = h * A;
    Eigen::MatrixXd const I = Eigen::MatrixXd::Identity(3, 3);
    Eigen::MatrixXd const P = I + hA + hA * hA / 2.0 + hA * hA * hA / 6.0 + hA * hA * hA * hA / 24.0;
    CHECK((rk4Step(f, x, h) - P * x).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("RK4 is fourth order")
{
  for (double h : {0.1, 0.05, 0.025}) {
    double const ratio = rk4GlobalError(h) / rk4GlobalError(h / 2);
    CAPTURE(h);
    CHECK(ratio >= 16.0 * 0.8);
    CHECK(ratio <= 16.0 * 1.2);
  }
}

TEST_CASE("integrateRk4 rejects bad grids and non-finite states")
{
  Eigen::VectorXd x0 = Eigen::VectorXd::Ones(1);
  Eigen::VectorXd bad(3);
  bad << 0, 1, 1;
  CHECK_THROWS_AS(integrateRk4(decay, x0, bad), std::invalid_argument);
  auto blowup = [](Eigen::VectorXd const &v) { return Eigen::VectorXd(v.array().square() * 1e200); };
  CHECK_THROWS_AS(integrateRk4(blowup, x0, linspace(0, 1, 50)), NumericalError);
}

TEST_CASE("ground truth reproduces each benchmark right-hand side")
{
  for (auto const &name : benchmarkNames()) {
    auto const sys = systemByName(name);
    Dictionary dict({sys.stateDim, sys.polynomialDegree, true, {}});
    Eigen::MatrixXd const truth = sys.groundTruth(dict);
    Eigen::MatrixXd const X = testing::randomTensor(100, sys.stateDim, 17, -3, 3);
    Eigen::MatrixXd const pred = dict.apply(X, truth);
    for (Index r = 0; r < X.rows(); ++r) {
      Eigen::VectorXd const f = sys.rhs(X.row(r).transpose());
      CAPTURE(name);
      CHECK((pred.row(r).transpose() - f).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, f.cwiseAbs().maxCoeff()));
    }
  }
  CHECK_THROWS_AS(systemByName("duffing"), ConfigError);
}

TEST_CASE("alpha-scaled Lorenz coefficients")
{
  auto const sys = lorenz();
  Dictionary dict({3, 2, true, {}});
  Eigen::MatrixXd const truth = sys.groundTruth(dict, 0.1);
  CHECK(truth(dict.indexOf("x1"), 0) == doctest::Approx(-10.0));
  CHECK(truth(dict.indexOf("x2"), 0) == doctest::Approx(10.0));
  CHECK(truth(dict.indexOf("x1"), 1) == doctest::Approx(28.0));
  CHECK(truth(dict.indexOf("x2"), 1) == doctest::Approx(-1.0));
  CHECK(truth(dict.indexOf("x1*x3"), 1) == doctest::Approx(-10.0));
  CHECK(truth(dict.indexOf("x3"), 2) == doctest::Approx(-8.0 / 3.0));
  CHECK(truth(dict.indexOf("x1*x2"), 2) == doctest::Approx(10.0));
  CHECK((truth.array() != 0.0).count() == 7);

  // the scaled field agrees with the scaled coefficients
  Eigen::MatrixXd const Z = testing::randomTensor(20, 3, 3, -2, 2);
  Eigen::MatrixXd const pred = dict.apply(Z, truth);
  for (Index r = 0; r < Z.rows(); ++r)
    CHECK((pred.row(r).transpose() - sys.scaledRhs(Z.row(r).transpose(), 0.1)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("generated data: grid, scaling, noise statistics and determinism")
{
  auto const sys = linearOscillator();
  Eigen::MatrixXd ics(2, 2);
  ics << 2, 0, -1, 1.5;
  GenerationSettings g;
  g.samples = 2000;
  g.tEnd = 10;
  auto const clean = generateDataset(sys, ics, g);
  REQUIRE(clean.trajectoryCount() == 2);
  auto const &t = clean.trajectories[0].times;
  double const h = t(1) - t(0);
  for (Index k = 0; k + 1 < t.size(); ++k) CHECK(std::abs(t(k + 1) - t(k) - h) <= 1e-12);
  CHECK(clean.trajectories[0].noisy == clean.trajectories[0].clean);
  CHECK(clean.trajectories[1].clean(0, 1) == 1.5);

  // agrees with a very fine reference integration at the sample times
  GenerationSettings fine = g;
  fine.refinement = 40;
  auto const ref = generateDataset(sys, ics, fine);
  CHECK((clean.trajectories[0].clean - ref.trajectories[0].clean).cwiseAbs().maxCoeff() <= 1e-8);

  g.alpha = 0.5;
  auto const scaled = generateDataset(sys, ics, g);
  CHECK((scaled.trajectories[1].clean - 0.5 * clean.trajectories[1].clean).cwiseAbs().maxCoeff() <= 1e-12);

  g.alpha = 1.0;
  g.sigma = 0.05;
  g.seed = 11;
  auto const noisy = generateDataset(sys, ics, g);
  Eigen::MatrixXd eps(4000, 2);
  eps << noisy.trajectories[0].noisy - noisy.trajectories[0].clean,
      noisy.trajectories[1].noisy - noisy.trajectories[1].clean;
  double const mean = eps.mean();
  double const sd = std::sqrt((eps.array() - mean).square().sum() / double(eps.size() - 1));
  CHECK(std::abs(sd - 0.05) <= 0.005);
  CHECK(std::abs(mean) <= 0.005);
  CHECK(noisy.trajectories[0].clean == clean.trajectories[0].clean);

  auto const again = generateDataset(sys, ics, g);
  CHECK(again.trajectories[1].noisy == noisy.trajectories[1].noisy);
  g.seed = 12;
  CHECK(generateDataset(sys, ics, g).trajectories[1].noisy != noisy.trajectories[1].noisy);

  g.samples = 1;
  CHECK_THROWS_AS(generateDataset(sys, ics, g), std::invalid_argument);
}

TEST_CASE("finite differences")
{
  Eigen::VectorXd const t = linspace(0.0, 2.0, 41);
  Eigen::MatrixXd S(41, 3);
  S.col(0) = t;
  S.col(1) = t.array().square();
  S.col(2) = t.array().sin();
  Eigen::MatrixXd const d = finiteDifference(t, S);
  CHECK((d.col(0).array() - 1.0).abs().maxCoeff() <= 1e-12);
  CHECK((d.col(1) - 2.0 * t).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK((d.col(2) - Eigen::VectorXd(t.array().cos())).cwiseAbs().maxCoeff() <= 1e-3);

  // non-uniform grid, quadratic is still exact
  Eigen::VectorXd u(5);
  u << 0.0, 0.1, 0.35, 0.4, 1.0;
  Eigen::MatrixXd q(5, 1);
  q.col(0) = u.array().square();
  CHECK((finiteDifference(u, q).col(0) - 2.0 * u).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("dataset CSV round trip")
{
  Eigen::MatrixXd ics(2, 3);
  ics << -8, 7, 27, -6, 6, 25;
  GenerationSettings g;
  g.samples = 50;
  g.sigma = 0.1;
  g.alpha = 0.1;
  g.seed = 4;
  g.tEnd = 1;
  auto const data = generateDataset(lorenz(), ics, g);
  auto const path = std::filesystem::temp_directory_path() / "insindy_dataset_test.csv";
  writeDataset(data, path);
  auto const back = readDataset(path);
  CHECK(back.system == "lorenz");
  CHECK(back.sigma == data.sigma);
  CHECK(back.alpha == data.alpha);
  CHECK(back.seed == data.seed);
  CHECK(back.normalization == data.normalization);
  REQUIRE(back.trajectoryCount() == 2);
  for (Index i = 0; i < 2; ++i) {
    auto const &a = data.trajectories[std::size_t(i)];
    auto const &b = back.trajectories[std::size_t(i)];
    CHECK(a.times == b.times);
    CHECK(a.clean == b.clean);
    CHECK(a.noisy == b.noisy);
    CHECK(a.initialCondition == b.initialCondition);
  }
  std::filesystem::remove(path);
  std::filesystem::remove(path.parent_path() / "insindy_dataset_test.json");
}
