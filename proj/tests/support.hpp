#pragma once

#include "insindy/autodiff.hpp"
#include "insindy/rng.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <functional>

namespace testing {

using insindy::Index;
using insindy::Tensor;

inline Tensor randomTensor(Index rows, Index cols, std::uint64_t seed, double lo = -1.0, double hi = 1.0)
{
  insindy::CounterRng rng(seed);
  Tensor t(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) t(i, j) = rng.uniform(lo, hi);
  return t;
}

/// Central-difference gradient of f at x.
inline Tensor numericGradient(std::function<double(Tensor const &)> const &f, Tensor x, double step = 1e-5)
{
  Tensor g(x.rows(), x.cols());
  for (Index i = 0; i < x.size(); ++i) {
    double const keep = x(i);
    x(i) = keep + step;
    double const up = f(x);
    x(i) = keep - step;
    double const down = f(x);
    x(i) = keep;
    g(i) = (up - down) / (2 * step);
  }
  return g;
}

/// max |a - b| / max(|a|, |b|, floor) over entries.
inline double relativeError(Tensor const &a, Tensor const &b, double floor = 1e-6)
{
  double worst = 0.0;
  for (Index i = 0; i < a.size(); ++i) {
    double const scale = std::max({std::abs(a(i)), std::abs(b(i)), floor});
    worst = std::max(worst, std::abs(a(i) - b(i)) / scale);
  }
  return worst;
}

} // namespace testing
