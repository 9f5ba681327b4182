#include "insindy/metrics.hpp"
#include "insindy/dynamics.hpp"
#include "support.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace insindy;

TEST_CASE("coefficient error")
{
  std::vector<std::string> const labels{"x1", "x2"};
  Eigen::MatrixXd truth(2, 1), est(2, 1);
  truth << -0.1, 2.0;
  est << -0.105, 2.007;
  CHECK(coeffError(labels, truth, labels, est)(0) == doctest::Approx(0.012).epsilon(1e-12));
  CHECK(coeffError(labels, truth, labels, truth)(0) == 0.0);

  std::vector<std::string> const wide{"1", "x1", "x2"};
  Eigen::MatrixXd t3(3, 1), e3(3, 1);
  t3 << 0, -0.1, 2.0;
  e3 << 0.03, -0.105, 2.007;
  CHECK(coeffError(wide, t3, wide, e3)(0) == doctest::Approx(0.042).epsilon(1e-12));

  CHECK_THROWS_AS(coeffError(labels, truth, std::vector<std::string>{"x2", "x1"}, est), std::invalid_argument);
  CHECK_THROWS_AS(coeffError(labels, truth, labels, Eigen::MatrixXd::Zero(2, 2)), ShapeError);
}

TEST_CASE("coefficient error is a metric")
{
  std::vector<std::string> const labels{"1", "x1", "x2", "x1^2"};
  for (std::uint64_t s = 0; s < 20; ++s) {
    Eigen::MatrixXd const a = testing::randomTensor(4, 2, 3 * s);
    Eigen::MatrixXd const b = testing::randomTensor(4, 2, 3 * s + 1);
    Eigen::MatrixXd const c = testing::randomTensor(4, 2, 3 * s + 2);
    auto const ab = coeffError(labels, a, labels, b);
    CHECK((ab - coeffError(labels, b, labels, a)).cwiseAbs().maxCoeff() == 0.0);
    CHECK((ab.array() <= (coeffError(labels, a, labels, c) + coeffError(labels, c, labels, b)).array() + 1e-15).all());
    CHECK((ab.array() > 0).all());
    CHECK(coeffError(labels, a, labels, a).isZero(0.0));
  }
}

TEST_CASE("simulating the true model reproduces the generator")
{
  auto const sys = linearOscillator();
  Dictionary dict({2, 2, true, {}});
  Eigen::MatrixXd ics(1, 2);
  ics << 2, 0;
  GenerationSettings g;
  auto const data = generateDataset(sys, ics, g);
  auto const sim = simulateDiscovered(dict, sys.groundTruth(dict), data.trajectories[0].initialCondition,
                                      data.trajectories[0].times);
  CHECK_FALSE(sim.divergent);
  CHECK((sim.states - data.trajectories[0].clean).cwiseAbs().maxCoeff() <= 1e-6);

  Eigen::VectorXd x0(2);
  x0 << 0.3, -0.7;
  auto const still = simulateDiscovered(dict, Eigen::MatrixXd::Zero(6, 2), x0, linspace(0, 5, 11));
  for (Index r = 0; r < 11; ++r) CHECK(still.states.row(r) == x0.transpose());
}

TEST_CASE("simulated Lorenz stays bounded and is sensitive to the coefficients")
{
  auto const sys = lorenz();
  Dictionary dict({3, 2, true, {}});
  Eigen::MatrixXd const truth = sys.groundTruth(dict, 0.1);
  Eigen::VectorXd x0(3);
  x0 << -0.8, 0.7, 2.7;
  Eigen::VectorXd const t = linspace(0, 20, 4001);
  auto const a = simulateDiscovered(dict, truth, x0, t);
  Eigen::MatrixXd bumped = truth;
  bumped(dict.indexOf("x1"), 1) *= 1.001;
  auto const b = simulateDiscovered(dict, bumped, x0, t);
  CHECK_FALSE(a.divergent);
  CHECK(a.states.cwiseAbs().maxCoeff() <= 1e3);
  CHECK(b.states.cwiseAbs().maxCoeff() <= 1e3);
  CHECK((a.states.bottomRows(200) - b.states.bottomRows(200)).cwiseAbs().maxCoeff() > 0.1);
}

TEST_CASE("runaway models are truncated and flagged")
{
  Dictionary dict({1, 2, true, {}});
  Eigen::MatrixXd xi = Eigen::MatrixXd::Zero(3, 1);
  xi(2, 0) = 1.0; // dx/dt = x^2 blows up at t = 1 from x0 = 1
  Eigen::VectorXd x0 = Eigen::VectorXd::Ones(1);
  auto const sim = simulateDiscovered(dict, xi, x0, linspace(0, 2, 201));
  CHECK(sim.divergent);
  CHECK(sim.states.rows() < 201);
  CHECK(sim.states.rows() == sim.times.size());
}

TEST_CASE("equation formatting")
{
  Dictionary dict({2, 2, true, {}});
  auto const labels = dict.labels();
  Eigen::MatrixXd const truth = linearOscillator().groundTruth(dict);
  auto const eq = formatEquations(truth, labels);
  REQUIRE(eq.size() == 2);
  CHECK(eq[0] == "dx1/dt = -0.100*x1 + 2.000*x2");
  CHECK(eq[1] == "dx2/dt = -2.000*x1 - 0.100*x2");
  CHECK(formatEquations(Eigen::MatrixXd::Zero(6, 2), labels)[0] == "dx1/dt = 0");

  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(6, 2);
  x(2, 0) = 2.007;
  x(0, 0) = 0.1;
  CHECK(formatEquations(x, labels, 2)[0] == "dx1/dt = 0.10 + 2.01*x2");

  // with a mask, inactive entries are omitted and active ones are printed
  CoefficientMatrix cm(truth, truth.array() != 0.0);
  cm.mask(1, 0) = false;
  cm.enforceMask();
  CHECK(formatEquations(cm, labels)[0] == "dx1/dt = 2.000*x2");
  CHECK(formatEquations(CoefficientMatrix(truth), labels)[0].find("0.000*x1^2") != std::string::npos);
}

TEST_CASE("coefficient, trace and result files")
{
  auto const dir = std::filesystem::temp_directory_path() / "insindy_metrics_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);

  Dictionary dict({2, 1, false, {}});
  CoefficientMatrix xi(Eigen::MatrixXd::Zero(2, 2));
  xi.values(0, 0) = -0.1;
  xi.values(1, 0) = 2.0;
  xi.mask(0, 1) = false;
  writeCoefficientCsv(dir / "xi.csv", dict.labels(), xi);
  std::ifstream in(dir / "xi.csv");
  std::string header, first;
  std::getline(in, header);
  std::getline(in, first);
  CHECK(header == "feature,x1,x2,mask_x1,mask_x2");
  CHECK(first.rfind("x1,-0.1,0,1,0", 0) == 0);

  TrainingTrace trace;
  trace.rows.push_back({1, 3.0, 1.0, 10.0, 10.0, 4});
  writeTraceCsv(dir / "trace.csv", trace);
  std::ifstream tin(dir / "trace.csv");
  std::getline(tin, header);
  CHECK(header == "iter,loss_total,loss_mse,loss_deri,loss_rk4,active_terms");

  DiscoveryResult r;
  r.method = "ineural";
  r.system = "linear_oscillator";
  r.sigma = 0.02;
  r.seed = 7;
  r.labels = dict.labels();
  r.xi = xi;
  r.error = Eigen::RowVectorXd::Constant(2, 0.25);
  writeResultJson(dir / "result.json", r, "xi.csv");
  auto const back = readResultJson(dir / "result.json");
  CHECK(back.method == "ineural");
  CHECK(back.sigma == 0.02);
  CHECK(back.seed == 7);
  CHECK(back.error == std::vector<double>{0.25, 0.25});
  CHECK(back.equations.size() == 2);
  CHECK(back.failure.empty());
  std::filesystem::remove_all(dir);
}
