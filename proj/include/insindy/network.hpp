#pragma once

#include "insindy/autodiff.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

namespace insindy {

/// Per-channel min/max used to map network inputs and outputs to [-1, 1].
/// States are recorded after alpha-scaling, so "physical" below means the
/// scaled coordinates the coefficients are reported in.
class NormalizationRecord
{
public:
  NormalizationRecord() = default;
  NormalizationRecord(Eigen::VectorXd stateMin, Eigen::VectorXd stateMax, double timeMin, double timeMax,
                      double alpha = 1.0);

  /// Record spanning the data in `states` (rows = samples) and `times`.
  static NormalizationRecord fromData(Eigen::MatrixXd const &states, Eigen::VectorXd const &times,
                                      double alpha = 1.0);

  Index stateDim() const { return stateMin_.size(); }
  Eigen::VectorXd const &stateMin() const { return stateMin_; }
  Eigen::VectorXd const &stateMax() const { return stateMax_; }
  double timeMin() const { return timeMin_; }
  double timeMax() const { return timeMax_; }
  double alpha() const { return alpha_; }

  /// (max - min) / 2 per channel, as a row vector.
  Eigen::RowVectorXd stateHalfRange() const;
  /// (max + min) / 2 per channel, as a row vector.
  Eigen::RowVectorXd stateMidpoint() const;
  /// d t_norm / d t.
  double timeScale() const { return 2.0 / (timeMax_ - timeMin_); }

  Eigen::MatrixXd normalizeStates(Eigen::MatrixXd const &states) const;
  Eigen::MatrixXd denormalizeStates(Eigen::MatrixXd const &states) const;
  Eigen::VectorXd normalizeTimes(Eigen::VectorXd const &times) const;
  Eigen::VectorXd denormalizeTimes(Eigen::VectorXd const &times) const;

  /// Maps a normalized prediction and its derivative in normalized time to
  /// physical state and d/dt in physical time (chain rule through both maps).
  std::pair<Eigen::MatrixXd, Eigen::MatrixXd> denormalizeStateAndDerivative(Eigen::MatrixXd const &stateNorm,
                                                                            Eigen::MatrixXd const &rateNorm) const;

  bool operator==(NormalizationRecord const &) const = default;

private:
  Eigen::VectorXd stateMin_;
  Eigen::VectorXd stateMax_;
  double timeMin_ = -1.0;
  double timeMax_ = 1.0;
  double alpha_ = 1.0;
};

struct SirenLayer
{
  Eigen::MatrixXd weight;  // fan_in x fan_out
  Eigen::RowVectorXd bias; // 1 x fan_out
  double omega = 1.0;
  bool sine = true;
};

/// SIREN multilayer perceptron: sin(omega * (x W + b)) hidden layers and an
/// affine output layer. Input column 0 is normalized time; in multi-trajectory
/// mode columns 1..n carry the normalized initial condition.
class SirenNetwork
{
public:
  SirenNetwork() = default;
  explicit SirenNetwork(std::vector<SirenLayer> layers);

  /// dims = {input, hidden..., output}. The first layer uses omegaFirst with
  /// weights in U(-1/fan_in, 1/fan_in); later layers use omegaHidden with
  /// weights in U(+-sqrt(6/fan_in)/omega). Biases are U(+-1/sqrt(fan_in)).
  static SirenNetwork init(std::vector<Index> const &dims, double omegaFirst, double omegaHidden,
                           std::uint64_t seed);

  Index inputDim() const { return layers_.front().weight.rows(); }
  Index outputDim() const { return layers_.back().weight.cols(); }
  std::vector<SirenLayer> const &layers() const { return layers_; }
  std::vector<Index> dims() const;

  /// Plain evaluation on a batch (rows x inputDim). Scalar may be double or
  /// ad::Dual.
  template <typename Derived>
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>
  evaluate(Eigen::MatrixBase<Derived> const &input) const;

  struct Prediction
  {
    Eigen::MatrixXd state; // rows x n, normalized
    Eigen::MatrixXd rate;  // d state / d t_norm
  };

  /// Prediction and its exact derivative in normalized time via forward-mode
  /// duals. `initialNorm` is rows x n in multi-trajectory mode, empty otherwise.
  Prediction predict(Eigen::VectorXd const &timeNorm, Eigen::MatrixXd const &initialNorm = {}) const;

  /// Builds the (rows x inputDim) input matrix.
  Eigen::MatrixXd assembleInput(Eigen::VectorXd const &timeNorm, Eigen::MatrixXd const &initialNorm = {}) const;

  struct Recorded
  {
    ad::Var state;
    ad::Var rate;
  };

  /// Registers W0, b0, W1, b1, ... as tape parameters.
  std::vector<ad::Var> registerParameters(ad::Tape &tape) const;
  /// Records the forward pass and the time-tangent pass on `tape`.
  Recorded record(ad::Tape &tape, std::span<ad::Var const> params, Tensor const &input) const;

  /// Flat parameter list in registration order.
  std::vector<Tensor> parameters() const;
  void setParameters(std::span<Tensor const> params);

  void save(std::filesystem::path const &path) const;
  static SirenNetwork load(std::filesystem::path const &path);

private:
  void checkInput(Index cols) const;

  std::vector<SirenLayer> layers_;
};

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>
SirenNetwork::evaluate(Eigen::MatrixBase<Derived> const &input) const
{
  using Scalar = typename Derived::Scalar;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  checkInput(input.cols());
  Matrix h = input;
  for (auto const &layer : layers_) {
    Matrix z = h * layer.weight.template cast<Scalar>();
    z.rowwise() += layer.bias.template cast<Scalar>();
    if (layer.sine) {
      using std::sin;
      z = z.unaryExpr([omega = layer.omega](Scalar const &v) { return Scalar(sin(Scalar(omega) * v)); });
    }
    h = std::move(z);
  }
  return h;
}

} // namespace insindy
