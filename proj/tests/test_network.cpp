#include "insindy/network.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>

using namespace insindy;
using testing::relativeError;

TEST_CASE("init is deterministic and respects the uniform bounds")
{
  auto const a = SirenNetwork::init({1, 32, 32, 32, 2}, 30.0, 1.0, 0);
  auto const b = SirenNetwork::init({1, 32, 32, 32, 2}, 30.0, 1.0, 0);
  auto const c = SirenNetwork::init({1, 32, 32, 32, 2}, 30.0, 1.0, 1);
  auto const pa = a.parameters();
  auto const pb = b.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i] == pb[i]);
  CHECK(pa[0] != c.parameters()[0]);

  // wide layers so the sampled extremes approach the bounds (> 10^4 draws)
  auto const wide = SirenNetwork::init({3, 128, 128, 2}, 30.0, 2.0, 9);
  auto const &L = wide.layers();
  REQUIRE(L.size() == 3);
  CHECK(L[0].omega == 30.0);
  CHECK(L[0].weight.cwiseAbs().maxCoeff() <= 1.0 / 3.0);
  CHECK(L[0].weight.cwiseAbs().maxCoeff() > 0.9 / 3.0);
  double const hiddenBound = std::sqrt(6.0 / 128.0) / 2.0;
  CHECK(L[1].omega == 2.0);
  CHECK(L[1].weight.cwiseAbs().maxCoeff() <= hiddenBound);
  CHECK(L[1].weight.cwiseAbs().maxCoeff() > 0.99 * hiddenBound);
  CHECK(L[1].weight.mean() == doctest::Approx(0.0).epsilon(0.01 * hiddenBound).scale(1.0));
  CHECK_FALSE(L[2].sine);
  CHECK(L[1].sine);
}

TEST_CASE("init structure and argument checks")
{
  auto const single = SirenNetwork::init({1, 2}, 30.0, 1.0, 3);
  REQUIRE(single.layers().size() == 1);
  CHECK_FALSE(single.layers()[0].sine);
  CHECK_THROWS(SirenNetwork::init({1, 0, 2}, 30.0, 1.0, 0));
  CHECK_THROWS(SirenNetwork::init({1}, 30.0, 1.0, 0));
}

TEST_CASE("zero parameters give zero output and zero rate")
{
  std::vector<SirenLayer> layers{{Tensor::Zero(1, 4), Eigen::RowVectorXd::Zero(4), 30.0, true},
                                 {Tensor::Zero(4, 2), Eigen::RowVectorXd::Zero(2), 1.0, false}};
  SirenNetwork net(layers);
  auto const p = net.predict(Eigen::VectorXd::LinSpaced(7, -1, 1));
  CHECK(p.state.cwiseAbs().maxCoeff() == 0.0);
  CHECK(p.rate.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("a dead initial-condition input changes nothing")
{
  auto const plain = SirenNetwork::init({1, 8, 8, 2}, 30.0, 1.0, 5);
  auto layers = plain.layers();
  Tensor W(3, 8);
  W.row(0) = layers[0].weight.row(0);
  W.bottomRows(2).setZero();
  layers[0].weight = W;
  SirenNetwork wired(layers);
  Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(5, -1, 1);
  Eigen::MatrixXd y0 = Eigen::MatrixXd::Constant(5, 2, 0.4);
  auto const a = plain.predict(t);
  auto const b = wired.predict(t, y0);
  CHECK(a.state == b.state);
  CHECK(a.rate == b.rate);
  CHECK_THROWS_AS(wired.predict(t), ShapeError);
}

TEST_CASE("predict derivative matches finite differences")
{
  auto const net = SirenNetwork::init({3, 32, 32, 32, 2}, 30.0, 30.0, 77);
  Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(9, -0.95, 0.95);
  Eigen::MatrixXd y0(9, 2);
  y0.col(0).setConstant(0.2);
  y0.col(1).setConstant(-0.6);
  auto const p = net.predict(t, y0);
  double const h = 1e-5;
  Eigen::VectorXd tp = t.array() + h;
  Eigen::VectorXd tm = t.array() - h;
  Tensor const fd = (net.predict(tp, y0).state - net.predict(tm, y0).state) / (2 * h);
  CHECK(relativeError(p.rate, fd, 1e-2) <= 1e-6);
}

TEST_CASE("tape recording agrees with plain evaluation")
{
  auto const net = SirenNetwork::init({1, 8, 8, 2}, 30.0, 1.0, 8);
  Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(6, -1, 1);
  Tensor const input = net.assembleInput(t);
  ad::Tape tape;
  auto params = net.registerParameters(tape);
  auto rec = net.record(tape, params, input);
  tape.forward(rec.rate);
  auto const p = net.predict(t);
  CHECK((tape.value(rec.state) - p.state).cwiseAbs().maxCoeff() <= 1e-13);
  CHECK((tape.value(rec.rate) - p.rate).cwiseAbs().maxCoeff() <= 1e-11);
}

TEST_CASE("normalization record")
{
  Eigen::VectorXd lo(2), hi(2);
  lo << -2, 0;
  hi << 2, 10;
  NormalizationRecord rec(lo, hi, 0.0, 10.0);
  Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(1, 2);
  Eigen::MatrixXd one = Eigen::MatrixXd::Ones(1, 2);
  CHECK(rec.denormalizeStates(zero)(0, 0) == 0.0);
  CHECK(rec.denormalizeStates(one)(0, 0) == 2.0);
  CHECK(rec.denormalizeStates(one)(0, 1) == 10.0);

  Eigen::MatrixXd X = testing::randomTensor(20, 2, 4, -3, 12);
  CHECK((rec.denormalizeStates(rec.normalizeStates(X)) - X).cwiseAbs().maxCoeff() <= 1e-12);
  Eigen::VectorXd ts = Eigen::VectorXd::LinSpaced(11, 0, 10);
  CHECK((rec.denormalizeTimes(rec.normalizeTimes(ts)) - ts).cwiseAbs().maxCoeff() <= 1e-12);

  // x(t) = t on [0, 10]: normalized signal has slope 1 in t_norm units of the
  // state range; the chain factors bring it back to 1.
  Eigen::MatrixXd states(11, 2);
  states.col(0) = ts;
  states.col(1) = ts;
  auto const r = NormalizationRecord::fromData(states, ts);
  Eigen::MatrixXd xn = r.normalizeStates(states);
  Eigen::VectorXd tn = r.normalizeTimes(ts);
  Eigen::MatrixXd rateNorm(11, 2);
  rateNorm.col(0).setConstant((xn(10, 0) - xn(0, 0)) / (tn(10) - tn(0)));
  rateNorm.col(1) = rateNorm.col(0);
  auto const [xp, dxp] = r.denormalizeStateAndDerivative(xn, rateNorm);
  CHECK((xp - states).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK((dxp.array() - 1.0).abs().maxCoeff() <= 1e-9);

  Eigen::VectorXd same = Eigen::VectorXd::Ones(2);
  CHECK_THROWS(NormalizationRecord(same, same, 0.0, 1.0));
  CHECK_THROWS(NormalizationRecord(lo, hi, 1.0, 1.0));
}

TEST_CASE("checkpoint round trip")
{
  auto const net = SirenNetwork::init({3, 8, 8, 2}, 30.0, 1.0, 21);
  auto const path = std::filesystem::temp_directory_path() / "insindy_ckpt_test.json";
  net.save(path);
  auto const back = SirenNetwork::load(path);
  REQUIRE(back.layers().size() == net.layers().size());
  for (std::size_t i = 0; i < net.layers().size(); ++i) {
    CHECK(back.layers()[i].weight == net.layers()[i].weight);
    CHECK(back.layers()[i].bias == net.layers()[i].bias);
    CHECK(back.layers()[i].omega == net.layers()[i].omega);
    CHECK(back.layers()[i].sine == net.layers()[i].sine);
  }
  std::filesystem::remove(path);
  CHECK_THROWS(SirenNetwork::load(path));
}
