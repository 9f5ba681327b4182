#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

// Dense reverse-mode tape over 2-D tensors plus a scalar dual number for
// forward-mode time derivatives.

namespace insindy {

using Index = Eigen::Index;

/// Dense 2-D tensor. Vectors are stored as N x 1 or 1 x N.
using Tensor = Eigen::MatrixXd;

/// Thrown when operand shapes cannot be combined. The message names the node.
class ShapeError : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

namespace ad {

enum class OpKind
{
  Input,
  Parameter,
  Constant,
  Add,
  Sub,
  Mul,
  MatMul,
  Sin,
  Cos,
  Pow,
  Sum,
  Mean,
  Scale,
  Rows,
  Cols,
  HConcat,
};

char const *opName(OpKind op);

class Tape;

/// Handle to a node on a Tape. Cheap to copy; only valid while its tape lives.
class Var
{
public:
  Var() = default;
  Var(Tape *tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape &tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  Index rows() const;
  Index cols() const;
  bool valid() const { return tape_ != nullptr; }

private:
  Tape *tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Define-by-run computation graph. Nodes are appended in topological order
/// (every parent index is smaller than the node's own index), shapes are
/// checked when a node is recorded, values are produced by forward() and
/// adjoints by backward().
///
/// Broadcasting for add/sub/mul: an operand dimension of 1 is stretched to
/// match the other operand (row vectors, column vectors and 1x1 scalars).
class Tape
{
public:
  Tape() = default;
  Tape(Tape const &) = delete;
  Tape &operator=(Tape const &) = delete;

  /// Placeholder bound by name at forward().
  Var input(std::string name, Index rows, Index cols);
  /// Differentiable leaf; gradients are reported for every parameter.
  Var parameter(std::string name, Tensor value);
  Var constant(Tensor value);
  Var constant(double value);

  void setParameter(Var param, Tensor value);

  /// Evaluates every node in order and returns the value of `output`.
  Tensor const &forward(Var output, std::map<std::string, Tensor> const &bindings = {});

  /// Reverse sweep from `output` seeded with `seed`. Returns one gradient per
  /// parameter, in registration order. Requires a completed forward().
  std::vector<Tensor> const &backward(Var output, Tensor const &seed);
  std::vector<Tensor> const &backward(Var output);

  Tensor const &value(Var v) const;
  /// Gradient of the last backward() w.r.t. parameter `param`.
  Tensor const &gradient(Var param) const;

  std::vector<Var> const &parameters() const { return parameters_; }
  std::size_t size() const { return nodes_.size(); }
  bool evaluated() const { return evaluated_; }

  // Recording entry points used by the free operator functions.
  Var record(OpKind op, std::size_t a, std::size_t b = npos);
  Var recordScale(std::size_t a, double factor);
  Var recordPow(std::size_t a, int exponent);
  Var recordGather(OpKind op, std::size_t a, std::vector<Index> indices);
  Var recordConcat(std::vector<std::size_t> parts);

  Index rowsOf(std::size_t id) const { return nodes_[id].rows; }
  Index colsOf(std::size_t id) const { return nodes_[id].cols; }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
  struct Node
  {
    explicit Node(OpKind kind) : op(kind) {}
    OpKind op;
    std::size_t a = npos;
    std::size_t b = npos;
    Index rows = 0;
    Index cols = 0;
    double factor = 1.0;
    int exponent = 1;
    std::vector<Index> indices;
    std::vector<std::size_t> parts;
    std::string name;
    Tensor value;
    Tensor adjoint;
    bool hasAdjoint = false;
    std::size_t paramSlot = npos;
    // sin/cos of the same operand share one sincos evaluation
    std::size_t sibling = npos;
  };

  std::string describe(std::size_t id) const;
  Var push(Node node);
  void evaluate(std::size_t id);
  void propagate(std::size_t id);
  template <class Expr> void accumulate(std::size_t id, Expr const &contribution);
  template <class Expr> void accumulateReduced(std::size_t id, Expr const &contribution);
  Tensor &zeroedAdjoint(std::size_t id);
  void checkOwned(Var v) const;

  std::vector<Node> nodes_;
  std::vector<Var> parameters_;
  std::vector<Tensor> gradients_;
  bool evaluated_ = false;
  bool differentiated_ = false;
};

// Graph-building operations. Both operands must live on the same tape.
Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b); // elementwise
Var operator-(Var a);
Var operator*(double factor, Var a);
Var operator*(Var a, double factor);
Var matmul(Var a, Var b);
Var sin(Var a);
Var cos(Var a);
Var pow(Var a, int exponent);
Var square(Var a);
Var sum(Var a);
Var mean(Var a);
Var scale(Var a, double factor);
Var rows(Var a, std::vector<Index> indices);
Var cols(Var a, std::vector<Index> indices);
Var col(Var a, Index index);
Var hconcat(std::vector<Var> const &parts);

/// Forward-mode scalar: value and derivative w.r.t. one input direction.
struct Dual
{
  double primal = 0.0;
  double tangent = 0.0;

  constexpr Dual() = default;
  constexpr Dual(double value) : primal(value) {} // NOLINT: constants have zero tangent
  constexpr Dual(double value, double derivative) : primal(value), tangent(derivative) {}

  static constexpr Dual variable(double value) { return {value, 1.0}; }

  Dual &operator+=(Dual const &o)
  {
    primal += o.primal;
    tangent += o.tangent;
    return *this;
  }
  Dual &operator-=(Dual const &o)
  {
    primal -= o.primal;
    tangent -= o.tangent;
    return *this;
  }
  Dual &operator*=(Dual const &o)
  {
    tangent = tangent * o.primal + primal * o.tangent;
    primal *= o.primal;
    return *this;
  }
  Dual &operator/=(Dual const &o)
  {
    tangent = (tangent * o.primal - primal * o.tangent) / (o.primal * o.primal);
    primal /= o.primal;
    return *this;
  }
};

inline Dual operator+(Dual a, Dual const &b) { return a += b; }
inline Dual operator-(Dual a, Dual const &b) { return a -= b; }
inline Dual operator*(Dual a, Dual const &b) { return a *= b; }
inline Dual operator/(Dual a, Dual const &b) { return a /= b; }
inline Dual operator-(Dual const &a) { return {-a.primal, -a.tangent}; }
inline bool operator==(Dual const &a, Dual const &b) { return a.primal == b.primal && a.tangent == b.tangent; }
inline bool operator!=(Dual const &a, Dual const &b) { return !(a == b); }
inline bool operator<(Dual const &a, Dual const &b) { return a.primal < b.primal; }
inline bool operator>(Dual const &a, Dual const &b) { return a.primal > b.primal; }
inline bool operator<=(Dual const &a, Dual const &b) { return a.primal <= b.primal; }
inline bool operator>=(Dual const &a, Dual const &b) { return a.primal >= b.primal; }

inline Dual sin(Dual const &a) { return {std::sin(a.primal), std::cos(a.primal) * a.tangent}; }
inline Dual cos(Dual const &a) { return {std::cos(a.primal), -std::sin(a.primal) * a.tangent}; }
inline Dual abs(Dual const &a) { return a.primal < 0 ? -a : a; }
inline Dual sqrt(Dual const &a)
{
  double const r = std::sqrt(a.primal);
  return {r, a.tangent / (2.0 * r)};
}
inline Dual pow(Dual const &a, int exponent)
{
  if (exponent == 0) return {1.0, 0.0};
  double const lower = std::pow(a.primal, exponent - 1);
  return {lower * a.primal, exponent * lower * a.tangent};
}
inline bool isfinite(Dual const &a) { return std::isfinite(a.primal) && std::isfinite(a.tangent); }

inline double primal(double x) { return x; }
inline double primal(Dual const &x) { return x.primal; }

} // namespace ad
} // namespace insindy

namespace Eigen {

template <> struct NumTraits<insindy::ad::Dual> : NumTraits<double>
{
  using Real = insindy::ad::Dual;
  using NonInteger = insindy::ad::Dual;
  using Nested = insindy::ad::Dual;
  using Literal = insindy::ad::Dual;
  enum
  {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 2,
    AddCost = 2,
    MulCost = 4,
  };
};

template <typename BinaryOp> struct ScalarBinaryOpTraits<insindy::ad::Dual, double, BinaryOp>
{
  using ReturnType = insindy::ad::Dual;
};
template <typename BinaryOp> struct ScalarBinaryOpTraits<double, insindy::ad::Dual, BinaryOp>
{
  using ReturnType = insindy::ad::Dual;
};

} // namespace Eigen
