#pragma once

#include "insindy/autodiff.hpp"

#include <Eigen/Core>

#include <string>
#include <string_view>
#include <vector>

namespace insindy {

/// Declarative candidate-function library.
struct DictionarySpec
{
  Index stateDim = 2;
  int maxDegree = 2;
  bool includeConstant = true;
  /// Harmonics k contributing sin(k*xi) and cos(k*xi) for every channel.
  std::vector<int> trigHarmonics;

  bool operator==(DictionarySpec const &) const = default;
};

/// One dictionary column.
struct Feature
{
  enum class Kind
  {
    Monomial,
    Sine,
    Cosine,
  };

  Kind kind = Kind::Monomial;
  std::vector<int> exponents; // monomials only, one per channel
  Index channel = 0;          // trig only
  int harmonic = 1;           // trig only

  int degree() const;
  std::string label() const;

  bool operator==(Feature const &) const = default;
};

/// Parses a canonical label ("1", "x1", "x1^2*x3", "sin(2*x1)") for a
/// system with `stateDim` channels. Throws std::invalid_argument.
Feature parseFeature(std::string_view label, Index stateDim);

/// Number of features C(n+d, d) (minus one without the constant) plus
/// 2 * n * len(trigHarmonics).
Index featureCount(DictionarySpec const &spec);

/// The candidate library Theta with its canonical column order:
///  - monomials by ascending total degree; within a degree, by the sorted
///    multiset of channel indices (x1^2, x1*x2, x1*x3, x2^2, ...);
///  - then for each harmonic k in list order: sin(k*x1..n), then cos(k*x1..n).
class Dictionary
{
public:
  explicit Dictionary(DictionarySpec spec);

  DictionarySpec const &spec() const { return spec_; }
  Index stateDim() const { return spec_.stateDim; }
  Index size() const { return Index(features_.size()); }
  std::vector<Feature> const &features() const { return features_; }
  std::vector<std::string> labels() const;
  /// Column of `label`, or -1.
  Index indexOf(std::string_view label) const;

  /// Theta(X) for a batch X (samples x n). Works for any Eigen scalar that
  /// supports +, *, sin and cos.
  template <typename Derived>
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>
  evaluate(Eigen::MatrixBase<Derived> const &X) const;

  /// Theta(X) recorded on a tape so that gradients flow back into X.
  ad::Var record(ad::Var X) const;

  /// Theta(X) * Xi.
  template <typename Derived, typename XiDerived>
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>
  apply(Eigen::MatrixBase<Derived> const &X, Eigen::MatrixBase<XiDerived> const &Xi) const;

  ad::Var apply(ad::Var X, ad::Var Xi) const;

private:
  void checkStates(Index cols) const;
  void checkCoefficients(Index rows, Index cols) const;

  DictionarySpec spec_;
  std::vector<Feature> features_;
  // For a monomial of degree >= 1: the feature it extends (-1 for a bare
  // channel) and the channel multiplied in.
  std::vector<Index> parent_;
  std::vector<Index> factor_;
};

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>
Dictionary::evaluate(Eigen::MatrixBase<Derived> const &X) const
{
  using Scalar = typename Derived::Scalar;
  checkStates(X.cols());
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> theta(X.rows(), size());
  for (Index f = 0; f < size(); ++f) {
    auto const &feat = features_[std::size_t(f)];
    switch (feat.kind) {
    case Feature::Kind::Monomial:
      if (feat.degree() == 0)
        theta.col(f).setConstant(Scalar(1.0));
      else if (parent_[std::size_t(f)] < 0)
        theta.col(f) = X.col(factor_[std::size_t(f)]);
      else
        theta.col(f) = theta.col(parent_[std::size_t(f)]).cwiseProduct(X.col(factor_[std::size_t(f)]));
      break;
    case Feature::Kind::Sine:
      for (Index r = 0; r < X.rows(); ++r) {
        using std::sin;
        theta(r, f) = sin(Scalar(double(feat.harmonic)) * X(r, feat.channel));
      }
      break;
    case Feature::Kind::Cosine:
      for (Index r = 0; r < X.rows(); ++r) {
        using std::cos;
        theta(r, f) = cos(Scalar(double(feat.harmonic)) * X(r, feat.channel));
      }
      break;
    }
  }
  return theta;
}

template <typename Derived, typename XiDerived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>
Dictionary::apply(Eigen::MatrixBase<Derived> const &X, Eigen::MatrixBase<XiDerived> const &Xi) const
{
  checkCoefficients(Xi.rows(), Xi.cols());
  return evaluate(X) * Xi;
}

} // namespace insindy
