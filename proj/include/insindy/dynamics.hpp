#pragma once

#include "insindy/dictionary.hpp"
#include "insindy/errors.hpp"
#include "insindy/network.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace insindy {

using VectorField = std::function<Eigen::VectorXd(Eigen::VectorXd const &)>;

/// One nonzero entry of a benchmark's ground-truth coefficient matrix.
struct OdeTerm
{
  std::string feature; // canonical dictionary label
  Index state;         // 0-based equation index
  double coefficient;
};

/// Benchmark ODE with a closed-form right-hand side and its sparse
/// representation in the monomial basis.
struct OdeSystem
{
  std::string name;
  Index stateDim = 0;
  VectorField rhs;
  std::vector<OdeTerm> terms;
  int polynomialDegree = 1; // highest monomial degree appearing in `terms`

  /// Right-hand side of the alpha-scaled system z = alpha * x:
  /// dz/dt = alpha * f(z / alpha).
  Eigen::VectorXd scaledRhs(Eigen::VectorXd const &z, double alpha) const;

  /// Ground-truth coefficients (D x n) under `dict` for the alpha-scaled
  /// system. A degree-p term with coefficient c becomes c * alpha^(1-p).
  Eigen::MatrixXd groundTruth(Dictionary const &dict, double alpha = 1.0) const;
};

OdeSystem linearOscillator();
OdeSystem cubicOscillator();
OdeSystem fitzHughNagumo();
OdeSystem lorenz(double gamma = 10.0, double rho = 28.0, double beta = 8.0 / 3.0);

/// Looks a benchmark up by name: linear_oscillator, cubic_oscillator, fhn,
/// lorenz. Throws ConfigError for unknown names.
OdeSystem systemByName(std::string_view name);
std::vector<std::string> benchmarkNames();

/// One classical RK4 step x + h/6 (a1 + 2 a2 + 2 a3 + a4).
template <typename Field, typename Vector>
Vector rk4Step(Field const &f, Vector const &x, double h)
{
  Vector const a1 = f(x);
  Vector const a2 = f(Vector(x + (0.5 * h) * a1));
  Vector const a3 = f(Vector(x + (0.5 * h) * a2));
  Vector const a4 = f(Vector(x + h * a3));
  return x + (h / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
}

/// Fixed-step RK4 marching over `times` (strictly increasing); step k uses
/// h_k = t_{k+1} - t_k. Returns the states as rows. Throws NumericalError
/// when the field produces a non-finite value.
template <typename Field>
Eigen::MatrixXd integrateRk4(Field const &f, Eigen::VectorXd const &x0, Eigen::VectorXd const &times)
{
  if (times.size() < 1) throw std::invalid_argument("integrateRk4: no time points");
  for (Index k = 0; k + 1 < times.size(); ++k)
    if (!(times(k + 1) > times(k))) throw std::invalid_argument("integrateRk4: times must be strictly increasing");
  Eigen::MatrixXd states(times.size(), x0.size());
  Eigen::VectorXd x = x0;
  states.row(0) = x.transpose();
  for (Index k = 0; k + 1 < times.size(); ++k) {
    x = rk4Step(f, x, times(k + 1) - times(k));
    if (!x.allFinite()) {
      std::ostringstream os;
      os << "RK4 produced a non-finite state at step " << k << " (t = " << times(k) << ')';
      throw NumericalError(os.str());
    }
    states.row(k + 1) = x.transpose();
  }
  return states;
}

Eigen::VectorXd linspace(double start, double stop, Index count);

struct Trajectory
{
  Eigen::VectorXd initialCondition; // alpha-scaled
  Eigen::VectorXd times;
  Eigen::MatrixXd clean; // samples x n, alpha-scaled
  Eigen::MatrixXd noisy; // clean + noise
};

struct Dataset
{
  std::string system;
  std::vector<Trajectory> trajectories;
  double sigma = 0.0;
  double alpha = 1.0;
  std::uint64_t seed = 0;
  NormalizationRecord normalization;

  Index stateDim() const { return trajectories.empty() ? 0 : trajectories.front().clean.cols(); }
  Index trajectoryCount() const { return Index(trajectories.size()); }
  Index totalSamples() const;
};

struct GenerationSettings
{
  double tStart = 0.0;
  double tEnd = 10.0;
  Index samples = 400;
  double sigma = 0.0;
  double alpha = 1.0;
  std::uint64_t seed = 0;
  int refinement = 10;
};

/// Integrates each initial condition (rows, unscaled) with RK4 on a grid
/// refined `refinement` times, subsamples to `samples` equidistant points,
/// scales by alpha, then adds i.i.d. N(0, sigma^2) noise drawn from a
/// CounterRng(seed) in (trajectory, sample, channel) order.
Dataset generateDataset(OdeSystem const &system, Eigen::MatrixXd const &initialConditions,
                        GenerationSettings const &settings);

/// Central differences in the interior and second-order one-sided stencils
/// at both ends (non-uniform grids allowed).
Eigen::MatrixXd finiteDifference(Eigen::VectorXd const &times, Eigen::MatrixXd const &states);
/// Per trajectory, applied to the noisy states.
std::vector<Eigen::MatrixXd> finiteDifferenceDerivatives(Dataset const &dataset);

/// Dataset CSV (traj_id,t,y1..yn,x1..xn) plus a JSON sidecar at
/// `<stem>.json` holding sigma, alpha, seed, initial conditions and the
/// normalization record.
void writeDataset(Dataset const &dataset, std::filesystem::path const &csvPath);
Dataset readDataset(std::filesystem::path const &csvPath);

std::string formatDouble(double value);

} // namespace insindy
