#include "insindy/autodiff.hpp"

#include <cmath>
#include <sstream>
#include <utility>

namespace insindy::ad {

char const *opName(OpKind op)
{
  switch (op) {
  case OpKind::Input: return "input";
  case OpKind::Parameter: return "parameter";
  case OpKind::Constant: return "constant";
  case OpKind::Add: return "add";
  case OpKind::Sub: return "sub";
  case OpKind::Mul: return "mul";
  case OpKind::MatMul: return "matmul";
  case OpKind::Sin: return "sin";
  case OpKind::Cos: return "cos";
  case OpKind::Pow: return "pow";
  case OpKind::Sum: return "sum";
  case OpKind::Mean: return "mean";
  case OpKind::Scale: return "scale";
  case OpKind::Rows: return "rows";
  case OpKind::Cols: return "cols";
  case OpKind::HConcat: return "hconcat";
  }
  return "?";
}

Index Var::rows() const { return tape_->rowsOf(id_); }
Index Var::cols() const { return tape_->colsOf(id_); }

namespace {

std::string shapeString(Index r, Index c)
{
  std::ostringstream os;
  os << '[' << r << 'x' << c << ']';
  return os.str();
}

// Resulting extent of one broadcast dimension, or -1 when incompatible.
Index broadcastDim(Index a, Index b)
{
  if (a == b) return a;
  if (a == 1) return b;
  if (b == 1) return a;
  return -1;
}

// Calls k with `t` stretched lazily to rows x cols (no copy is made).
template <class K> void broadcastView(Tensor const &t, Index rows, Index cols, K &&k)
{
  if (t.rows() == rows && t.cols() == cols) {
    k(t.array());
  } else if (t.size() == 1) {
    k(Eigen::ArrayXXd::Constant(rows, cols, t(0, 0)));
  } else if (t.rows() == 1) {
    auto r = t.row(0).array();
    k(Eigen::Replicate<decltype(r), Eigen::Dynamic, 1>(r, rows, 1));
  } else {
    auto c = t.col(0).array();
    k(Eigen::Replicate<decltype(c), 1, Eigen::Dynamic>(c, 1, cols));
  }
}

template <class F> void broadcastBinary(Tensor &out, Tensor const &A, Tensor const &B, Index rows, Index cols, F f)
{
  out.resize(rows, cols);
  broadcastView(A, rows, cols, [&](auto const &a) {
    broadcastView(B, rows, cols, [&](auto const &b) { out.array() = f(a, b); });
  });
}

} // namespace

std::string Tape::describe(std::size_t id) const
{
  std::ostringstream os;
  auto const &n = nodes_[id];
  os << "node #" << id << " (" << opName(n.op);
  if (!n.name.empty()) os << " '" << n.name << "'";
  os << ')';
  return os.str();
}

void Tape::checkOwned(Var v) const
{
  if (!v.valid() || &v.tape() != this || v.id() >= nodes_.size())
    throw std::invalid_argument("variable does not belong to this tape");
}

Var Tape::push(Node node)
{
  nodes_.push_back(std::move(node));
  evaluated_ = false;
  differentiated_ = false;
  return {this, nodes_.size() - 1};
}

Var Tape::input(std::string name, Index rows, Index cols)
{
  if (rows <= 0 || cols <= 0) throw ShapeError("input '" + name + "' must have positive shape");
  Node n(OpKind::Input);
  n.rows = rows;
  n.cols = cols;
  n.name = std::move(name);
  return push(std::move(n));
}

Var Tape::parameter(std::string name, Tensor value)
{
  Node n(OpKind::Parameter);
  n.rows = value.rows();
  n.cols = value.cols();
  n.name = std::move(name);
  n.value = std::move(value);
  n.paramSlot = parameters_.size();
  Var v = push(std::move(n));
  parameters_.push_back(v);
  return v;
}

Var Tape::constant(Tensor value)
{
  Node n(OpKind::Constant);
  n.rows = value.rows();
  n.cols = value.cols();
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::constant(double value) { return constant(Tensor::Constant(1, 1, value)); }

void Tape::setParameter(Var param, Tensor value)
{
  checkOwned(param);
  auto &n = nodes_[param.id()];
  if (n.op != OpKind::Parameter) throw std::invalid_argument(describe(param.id()) + " is not a parameter");
  if (value.rows() != n.rows || value.cols() != n.cols)
    throw ShapeError(describe(param.id()) + ": expected " + shapeString(n.rows, n.cols) + ", got " +
                     shapeString(value.rows(), value.cols()));
  n.value = std::move(value);
  evaluated_ = false;
  differentiated_ = false;
}

Var Tape::record(OpKind op, std::size_t a, std::size_t b)
{
  Node n(op);
  n.a = a;
  n.b = b;
  auto const &na = nodes_[a];
  auto fail = [&](char const *what) {
    std::ostringstream os;
    os << "node #" << nodes_.size() << " (" << opName(op) << "): " << what << ' '
       << shapeString(na.rows, na.cols);
    if (b != npos) os << " vs " << shapeString(nodes_[b].rows, nodes_[b].cols);
    throw ShapeError(os.str());
  };
  switch (op) {
  case OpKind::Add:
  case OpKind::Sub:
  case OpKind::Mul: {
    auto const &nb = nodes_[b];
    n.rows = broadcastDim(na.rows, nb.rows);
    n.cols = broadcastDim(na.cols, nb.cols);
    if (n.rows < 0 || n.cols < 0) fail("cannot broadcast");
    break;
  }
  case OpKind::MatMul: {
    auto const &nb = nodes_[b];
    if (na.cols != nb.rows) fail("inner dimensions differ");
    n.rows = na.rows;
    n.cols = nb.cols;
    break;
  }
  case OpKind::Sin:
  case OpKind::Cos: {
    n.rows = na.rows;
    n.cols = na.cols;
    OpKind const partner = op == OpKind::Sin ? OpKind::Cos : OpKind::Sin;
    for (std::size_t i = a + 1; i < nodes_.size(); ++i) {
      if (nodes_[i].op == partner && nodes_[i].a == a && nodes_[i].sibling == npos) {
        n.sibling = i;
        nodes_[i].sibling = nodes_.size();
        break;
      }
    }
    break;
  }
  case OpKind::Sum:
  case OpKind::Mean:
    n.rows = 1;
    n.cols = 1;
    break;
  default: throw std::logic_error("Tape::record: unsupported op");
  }
  return push(std::move(n));
}

Var Tape::recordScale(std::size_t a, double factor)
{
  Node n(OpKind::Scale);
  n.a = a;
  n.rows = nodes_[a].rows;
  n.cols = nodes_[a].cols;
  n.factor = factor;
  return push(std::move(n));
}

Var Tape::recordPow(std::size_t a, int exponent)
{
  if (exponent < 0) throw std::invalid_argument("pow: exponent must be non-negative");
  Node n(OpKind::Pow);
  n.a = a;
  n.rows = nodes_[a].rows;
  n.cols = nodes_[a].cols;
  n.exponent = exponent;
  return push(std::move(n));
}

Var Tape::recordGather(OpKind op, std::size_t a, std::vector<Index> indices)
{
  Node n(op);
  n.a = a;
  Index const extent = op == OpKind::Rows ? nodes_[a].rows : nodes_[a].cols;
  for (Index i : indices) {
    if (i < 0 || i >= extent) {
      std::ostringstream os;
      os << "node #" << nodes_.size() << " (" << opName(op) << "): index " << i << " out of range for "
         << shapeString(nodes_[a].rows, nodes_[a].cols);
      throw ShapeError(os.str());
    }
  }
  if (indices.empty()) throw ShapeError("gather with no indices");
  n.rows = op == OpKind::Rows ? static_cast<Index>(indices.size()) : nodes_[a].rows;
  n.cols = op == OpKind::Cols ? static_cast<Index>(indices.size()) : nodes_[a].cols;
  n.indices = std::move(indices);
  return push(std::move(n));
}

Var Tape::recordConcat(std::vector<std::size_t> parts)
{
  if (parts.empty()) throw ShapeError("hconcat of nothing");
  Node n(OpKind::HConcat);
  n.rows = nodes_[parts.front()].rows;
  for (auto p : parts) {
    if (nodes_[p].rows != n.rows) {
      std::ostringstream os;
      os << "node #" << nodes_.size() << " (hconcat): part " << describe(p) << " has "
         << nodes_[p].rows << " rows, expected " << n.rows;
      throw ShapeError(os.str());
    }
    n.cols += nodes_[p].cols;
  }
  n.parts = std::move(parts);
  return push(std::move(n));
}

void Tape::evaluate(std::size_t id)
{
  auto &n = nodes_[id];
  auto const &A = [&]() -> Tensor const & { return nodes_[n.a].value; };
  auto const &B = [&]() -> Tensor const & { return nodes_[n.b].value; };
  switch (n.op) {
  case OpKind::Input:
  case OpKind::Parameter:
  case OpKind::Constant: break;
  case OpKind::Add:
    broadcastBinary(n.value, A(), B(), n.rows, n.cols, [](auto const &x, auto const &y) { return x + y; });
    break;
  case OpKind::Sub:
    broadcastBinary(n.value, A(), B(), n.rows, n.cols, [](auto const &x, auto const &y) { return x - y; });
    break;
  case OpKind::Mul:
    broadcastBinary(n.value, A(), B(), n.rows, n.cols, [](auto const &x, auto const &y) { return x * y; });
    break;
  case OpKind::MatMul:
    n.value.resize(n.rows, n.cols);
    n.value.noalias() = A() * B();
    break;
  case OpKind::Sin:
  case OpKind::Cos:
    if (n.sibling == npos) {
      if (n.op == OpKind::Sin)
        n.value = A().array().sin().matrix();
      else
        n.value = A().array().cos().matrix();
    } else if (n.sibling > id) {
      // first of the pair fills both
      auto &other = nodes_[n.sibling];
      Tensor &s = n.op == OpKind::Sin ? n.value : other.value;
      Tensor &c = n.op == OpKind::Sin ? other.value : n.value;
      s.resize(n.rows, n.cols);
      c.resize(n.rows, n.cols);
      double const *x = A().data();
      double *sp = s.data();
      double *cp = c.data();
      for (Index i = 0; i < A().size(); ++i) ::sincos(x[i], sp + i, cp + i);
    }
    break;
  case OpKind::Pow:
    if (n.exponent == 0)
      n.value.setOnes(n.rows, n.cols);
    else if (n.exponent == 1)
      n.value = A();
    else if (n.exponent == 2)
      n.value = A().array().square().matrix();
    else if (n.exponent == 3)
      n.value = A().array().cube().matrix();
    else
      n.value = A().array().pow(n.exponent).matrix();
    break;
  case OpKind::Sum: n.value.setConstant(1, 1, A().sum()); break;
  case OpKind::Mean: n.value.setConstant(1, 1, A().mean()); break;
  case OpKind::Scale: n.value = n.factor * A(); break;
  case OpKind::Rows:
    n.value.resize(n.rows, n.cols);
    for (std::size_t i = 0; i < n.indices.size(); ++i) n.value.row(Index(i)) = A().row(n.indices[i]);
    break;
  case OpKind::Cols:
    n.value.resize(n.rows, n.cols);
    for (std::size_t i = 0; i < n.indices.size(); ++i) n.value.col(Index(i)) = A().col(n.indices[i]);
    break;
  case OpKind::HConcat: {
    n.value.resize(n.rows, n.cols);
    Index c = 0;
    for (auto p : n.parts) {
      n.value.middleCols(c, nodes_[p].cols) = nodes_[p].value;
      c += nodes_[p].cols;
    }
    break;
  }
  }
}

Tensor const &Tape::forward(Var output, std::map<std::string, Tensor> const &bindings)
{
  checkOwned(output);
  for (std::size_t i = 0; i <= output.id(); ++i) {
    auto &n = nodes_[i];
    if (n.op == OpKind::Input) {
      auto it = bindings.find(n.name);
      if (it == bindings.end()) throw std::invalid_argument(describe(i) + ": no binding supplied");
      if (it->second.rows() != n.rows || it->second.cols() != n.cols)
        throw ShapeError(describe(i) + ": expected " + shapeString(n.rows, n.cols) + ", bound " +
                         shapeString(it->second.rows(), it->second.cols()));
      n.value = it->second;
    } else {
      evaluate(i);
    }
  }
  evaluated_ = true;
  differentiated_ = false;
  return nodes_[output.id()].value;
}

// Contributions are array expressions with the target's shape.
template <class Expr> void Tape::accumulate(std::size_t id, Expr const &contribution)
{
  auto &n = nodes_[id];
  if (n.hasAdjoint) {
    n.adjoint.array() += contribution;
  } else {
    n.adjoint.resize(n.rows, n.cols);
    n.adjoint.array() = contribution;
    n.hasAdjoint = true;
  }
}

// Sums a full-shape contribution down to the (possibly broadcast) target shape.
template <class Expr> void Tape::accumulateReduced(std::size_t id, Expr const &contribution)
{
  auto const &n = nodes_[id];
  if (n.rows == contribution.rows() && n.cols == contribution.cols())
    accumulate(id, contribution);
  else if (n.rows == 1 && n.cols == 1)
    accumulate(id, Eigen::ArrayXXd::Constant(1, 1, contribution.sum()));
  else if (n.rows == 1)
    accumulate(id, contribution.colwise().sum());
  else
    accumulate(id, contribution.rowwise().sum());
}

Tensor &Tape::zeroedAdjoint(std::size_t id)
{
  auto &n = nodes_[id];
  if (!n.hasAdjoint) {
    n.adjoint.setZero(n.rows, n.cols);
    n.hasAdjoint = true;
  }
  return n.adjoint;
}

void Tape::propagate(std::size_t id)
{
  auto &n = nodes_[id];
  auto const g = n.adjoint.array();
  switch (n.op) {
  case OpKind::Input:
  case OpKind::Parameter:
  case OpKind::Constant: break;
  case OpKind::Add:
    accumulateReduced(n.a, g);
    accumulateReduced(n.b, g);
    break;
  case OpKind::Sub:
    accumulateReduced(n.a, g);
    accumulateReduced(n.b, -g);
    break;
  case OpKind::Mul: {
    Tensor const &va = nodes_[n.a].value;
    Tensor const &vb = nodes_[n.b].value;
    broadcastView(vb, n.rows, n.cols, [&](auto const &b) { accumulateReduced(n.a, g * b); });
    broadcastView(va, n.rows, n.cols, [&](auto const &a) { accumulateReduced(n.b, g * a); });
    break;
  }
  case OpKind::MatMul: {
    Tensor const &G = n.adjoint;
    for (int side = 0; side < 2; ++side) {
      std::size_t const target = side == 0 ? n.a : n.b;
      auto &t = nodes_[target];
      bool const first = !t.hasAdjoint;
      if (first) t.adjoint.resize(t.rows, t.cols);
      if (side == 0) {
        if (first)
          t.adjoint.noalias() = G * nodes_[n.b].value.transpose();
        else
          t.adjoint.noalias() += G * nodes_[n.b].value.transpose();
      } else {
        if (first)
          t.adjoint.noalias() = nodes_[n.a].value.transpose() * G;
        else
          t.adjoint.noalias() += nodes_[n.a].value.transpose() * G;
      }
      t.hasAdjoint = true;
    }
    break;
  }
  case OpKind::Sin:
    if (n.sibling != npos)
      accumulate(n.a, g * nodes_[n.sibling].value.array());
    else
      accumulate(n.a, g * nodes_[n.a].value.array().cos());
    break;
  case OpKind::Cos:
    if (n.sibling != npos)
      accumulate(n.a, -(g * nodes_[n.sibling].value.array()));
    else
      accumulate(n.a, -(g * nodes_[n.a].value.array().sin()));
    break;
  case OpKind::Pow: {
    auto const x = nodes_[n.a].value.array();
    switch (n.exponent) {
    case 0: break;
    case 1: accumulate(n.a, g); break;
    case 2: accumulate(n.a, 2.0 * g * x); break;
    case 3: accumulate(n.a, 3.0 * g * x.square()); break;
    default: accumulate(n.a, double(n.exponent) * g * x.pow(n.exponent - 1)); break;
    }
    break;
  }
  case OpKind::Sum: {
    auto const &na = nodes_[n.a];
    accumulate(n.a, Eigen::ArrayXXd::Constant(na.rows, na.cols, g(0, 0)));
    break;
  }
  case OpKind::Mean: {
    auto const &na = nodes_[n.a];
    accumulate(n.a, Eigen::ArrayXXd::Constant(na.rows, na.cols, g(0, 0) / double(na.rows * na.cols)));
    break;
  }
  case OpKind::Scale: accumulate(n.a, n.factor * g); break;
  case OpKind::Rows: {
    Tensor &d = zeroedAdjoint(n.a);
    for (std::size_t i = 0; i < n.indices.size(); ++i) d.row(n.indices[i]) += n.adjoint.row(Index(i));
    break;
  }
  case OpKind::Cols: {
    Tensor &d = zeroedAdjoint(n.a);
    for (std::size_t i = 0; i < n.indices.size(); ++i) d.col(n.indices[i]) += n.adjoint.col(Index(i));
    break;
  }
  case OpKind::HConcat: {
    Index c = 0;
    for (auto p : n.parts) {
      accumulate(p, g.middleCols(c, nodes_[p].cols));
      c += nodes_[p].cols;
    }
    break;
  }
  }
}

std::vector<Tensor> const &Tape::backward(Var output, Tensor const &seed)
{
  checkOwned(output);
  if (!evaluated_) throw std::logic_error("backward() called before forward()");
  auto const &out = nodes_[output.id()];
  if (seed.rows() != out.rows || seed.cols() != out.cols)
    throw ShapeError(describe(output.id()) + ": seed " + shapeString(seed.rows(), seed.cols()) +
                     " does not match output " + shapeString(out.rows, out.cols));
  // adjoint buffers are kept between sweeps so a reused tape does not reallocate
  for (auto &n : nodes_) n.hasAdjoint = false;
  accumulate(output.id(), seed.array());
  for (std::size_t i = output.id() + 1; i-- > 0;)
    if (nodes_[i].hasAdjoint) propagate(i);
  gradients_.resize(parameters_.size());
  for (std::size_t k = 0; k < parameters_.size(); ++k) {
    auto const &n = nodes_[parameters_[k].id()];
    if (n.hasAdjoint)
      gradients_[k] = n.adjoint;
    else
      gradients_[k].setZero(n.rows, n.cols);
  }
  differentiated_ = true;
  return gradients_;
}

std::vector<Tensor> const &Tape::backward(Var output)
{
  checkOwned(output);
  return backward(output, Tensor::Ones(output.rows(), output.cols()));
}

Tensor const &Tape::value(Var v) const
{
  checkOwned(v);
  if (!evaluated_ && nodes_[v.id()].op != OpKind::Parameter && nodes_[v.id()].op != OpKind::Constant)
    throw std::logic_error(describe(v.id()) + ": value requested before forward()");
  return nodes_[v.id()].value;
}

Tensor const &Tape::gradient(Var param) const
{
  checkOwned(param);
  auto const &n = nodes_[param.id()];
  if (n.op != OpKind::Parameter) throw std::invalid_argument(describe(param.id()) + " is not a parameter");
  if (!differentiated_) throw std::logic_error("gradient requested before backward()");
  return gradients_[n.paramSlot];
}

namespace {

Tape &sameTape(Var a, Var b)
{
  if (!a.valid() || !b.valid() || &a.tape() != &b.tape())
    throw std::invalid_argument("operands live on different tapes");
  return a.tape();
}

} // namespace

Var operator+(Var a, Var b) { return sameTape(a, b).record(OpKind::Add, a.id(), b.id()); }
Var operator-(Var a, Var b) { return sameTape(a, b).record(OpKind::Sub, a.id(), b.id()); }
Var operator*(Var a, Var b) { return sameTape(a, b).record(OpKind::Mul, a.id(), b.id()); }
Var operator-(Var a) { return a.tape().recordScale(a.id(), -1.0); }
Var operator*(double factor, Var a) { return a.tape().recordScale(a.id(), factor); }
Var operator*(Var a, double factor) { return a.tape().recordScale(a.id(), factor); }
Var matmul(Var a, Var b) { return sameTape(a, b).record(OpKind::MatMul, a.id(), b.id()); }
Var sin(Var a) { return a.tape().record(OpKind::Sin, a.id()); }
Var cos(Var a) { return a.tape().record(OpKind::Cos, a.id()); }
Var pow(Var a, int exponent) { return a.tape().recordPow(a.id(), exponent); }
Var square(Var a) { return pow(a, 2); }
Var sum(Var a) { return a.tape().record(OpKind::Sum, a.id()); }
Var mean(Var a) { return a.tape().record(OpKind::Mean, a.id()); }
Var scale(Var a, double factor) { return a.tape().recordScale(a.id(), factor); }
Var rows(Var a, std::vector<Index> indices) { return a.tape().recordGather(OpKind::Rows, a.id(), std::move(indices)); }
Var cols(Var a, std::vector<Index> indices) { return a.tape().recordGather(OpKind::Cols, a.id(), std::move(indices)); }
Var col(Var a, Index index) { return cols(a, {index}); }

Var hconcat(std::vector<Var> const &parts)
{
  if (parts.empty()) throw ShapeError("hconcat of nothing");
  std::vector<std::size_t> ids;
  ids.reserve(parts.size());
  for (auto const &p : parts) {
    sameTape(parts.front(), p);
    ids.push_back(p.id());
  }
  return parts.front().tape().recordConcat(std::move(ids));
}

} // namespace insindy::ad
