#include "insindy/network.hpp"

#include "insindy/rng.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace insindy {

NormalizationRecord::NormalizationRecord(Eigen::VectorXd stateMin, Eigen::VectorXd stateMax, double timeMin,
                                         double timeMax, double alpha)
    : stateMin_(std::move(stateMin)), stateMax_(std::move(stateMax)), timeMin_(timeMin), timeMax_(timeMax),
      alpha_(alpha)
{
  if (stateMin_.size() != stateMax_.size() || stateMin_.size() == 0)
    throw std::invalid_argument("normalization record: min/max channel counts differ");
  for (Index i = 0; i < stateMin_.size(); ++i) {
    if (!(stateMax_(i) > stateMin_(i))) {
      std::ostringstream os;
      os << "normalization record: channel " << i + 1 << " is degenerate (max <= min)";
      throw std::invalid_argument(os.str());
    }
  }
  if (!(timeMax_ > timeMin_)) throw std::invalid_argument("normalization record: degenerate time span");
  if (!(alpha_ > 0)) throw std::invalid_argument("normalization record: alpha must be positive");
}

NormalizationRecord NormalizationRecord::fromData(Eigen::MatrixXd const &states, Eigen::VectorXd const &times,
                                                  double alpha)
{
  return {states.colwise().minCoeff().transpose(), states.colwise().maxCoeff().transpose(), times.minCoeff(),
          times.maxCoeff(), alpha};
}

Eigen::RowVectorXd NormalizationRecord::stateHalfRange() const
{
  return (0.5 * (stateMax_ - stateMin_)).transpose();
}

Eigen::RowVectorXd NormalizationRecord::stateMidpoint() const
{
  return (0.5 * (stateMax_ + stateMin_)).transpose();
}

Eigen::MatrixXd NormalizationRecord::normalizeStates(Eigen::MatrixXd const &states) const
{
  Eigen::MatrixXd out = states;
  for (Index c = 0; c < out.cols(); ++c)
    out.col(c) = (2.0 * (states.col(c).array() - stateMin_(c)) / (stateMax_(c) - stateMin_(c)) - 1.0).matrix();
  return out;
}

Eigen::MatrixXd NormalizationRecord::denormalizeStates(Eigen::MatrixXd const &states) const
{
  Eigen::MatrixXd out = states;
  for (Index c = 0; c < out.cols(); ++c)
    out.col(c) = (stateMin_(c) + (states.col(c).array() + 1.0) * (stateMax_(c) - stateMin_(c)) / 2.0).matrix();
  return out;
}

Eigen::VectorXd NormalizationRecord::normalizeTimes(Eigen::VectorXd const &times) const
{
  return (2.0 * (times.array() - timeMin_) / (timeMax_ - timeMin_) - 1.0).matrix();
}

Eigen::VectorXd NormalizationRecord::denormalizeTimes(Eigen::VectorXd const &times) const
{
  return (timeMin_ + (times.array() + 1.0) * (timeMax_ - timeMin_) / 2.0).matrix();
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd>
NormalizationRecord::denormalizeStateAndDerivative(Eigen::MatrixXd const &stateNorm,
                                                   Eigen::MatrixXd const &rateNorm) const
{
  if (stateNorm.cols() != stateDim() || rateNorm.cols() != stateDim())
    throw ShapeError("normalization record channel count does not match prediction");
  Eigen::MatrixXd rate = rateNorm;
  for (Index c = 0; c < rate.cols(); ++c) rate.col(c) *= 0.5 * (stateMax_(c) - stateMin_(c)) * timeScale();
  return {denormalizeStates(stateNorm), rate};
}

SirenNetwork::SirenNetwork(std::vector<SirenLayer> layers) : layers_(std::move(layers))
{
  if (layers_.empty()) throw std::invalid_argument("network needs at least one layer");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    auto const &l = layers_[i];
    if (l.bias.size() != l.weight.cols()) throw std::invalid_argument("layer bias does not match weight columns");
    if (i > 0 && layers_[i - 1].weight.cols() != l.weight.rows())
      throw std::invalid_argument("consecutive layer dimensions do not chain");
    if (!l.weight.allFinite() || !l.bias.allFinite()) throw std::invalid_argument("non-finite network parameter");
  }
  if (layers_.back().sine) throw std::invalid_argument("final layer must be affine");
}

SirenNetwork SirenNetwork::init(std::vector<Index> const &dims, double omegaFirst, double omegaHidden,
                                std::uint64_t seed)
{
  if (dims.size() < 2) throw std::invalid_argument("network dims need at least input and output");
  for (Index d : dims)
    if (d <= 0) throw std::invalid_argument("network dims must be positive");
  if (!(omegaFirst > 0) || !(omegaHidden > 0)) throw std::invalid_argument("omega must be positive");

  CounterRng rng(seed);
  std::vector<SirenLayer> layers;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    Index const fanIn = dims[i];
    Index const fanOut = dims[i + 1];
    bool const last = i + 2 == dims.size();
    SirenLayer layer;
    layer.sine = !last;
    layer.omega = last ? 1.0 : (i == 0 ? omegaFirst : omegaHidden);
    double const bound =
        i == 0 ? 1.0 / double(fanIn) : std::sqrt(6.0 / double(fanIn)) / (last ? omegaHidden : layer.omega);
    layer.weight.resize(fanIn, fanOut);
    for (Index c = 0; c < fanOut; ++c)
      for (Index r = 0; r < fanIn; ++r) layer.weight(r, c) = rng.uniform(-bound, bound);
    double const biasBound = 1.0 / std::sqrt(double(fanIn));
    layer.bias.resize(fanOut);
    for (Index c = 0; c < fanOut; ++c) layer.bias(c) = rng.uniform(-biasBound, biasBound);
    layers.push_back(std::move(layer));
  }
  return SirenNetwork(std::move(layers));
}

std::vector<Index> SirenNetwork::dims() const
{
  std::vector<Index> d{inputDim()};
  for (auto const &l : layers_) d.push_back(l.weight.cols());
  return d;
}

void SirenNetwork::checkInput(Index cols) const
{
  if (layers_.empty()) throw std::logic_error("network has no layers");
  if (cols != inputDim()) {
    std::ostringstream os;
    os << "network expects " << inputDim() << " input columns (time";
    if (inputDim() > 1) os << " + " << inputDim() - 1 << " initial-condition channels";
    os << "), got " << cols;
    throw ShapeError(os.str());
  }
}

Eigen::MatrixXd SirenNetwork::assembleInput(Eigen::VectorXd const &timeNorm, Eigen::MatrixXd const &initialNorm) const
{
  Index const extra = initialNorm.size() == 0 ? 0 : initialNorm.cols();
  checkInput(1 + extra);
  Eigen::MatrixXd input(timeNorm.size(), 1 + extra);
  input.col(0) = timeNorm;
  if (extra > 0) {
    if (initialNorm.rows() != timeNorm.size()) throw ShapeError("initial-condition rows must match time samples");
    input.rightCols(extra) = initialNorm;
  }
  return input;
}

SirenNetwork::Prediction SirenNetwork::predict(Eigen::VectorXd const &timeNorm,
                                               Eigen::MatrixXd const &initialNorm) const
{
  Eigen::MatrixXd const input = assembleInput(timeNorm, initialNorm);
  Eigen::Matrix<ad::Dual, Eigen::Dynamic, Eigen::Dynamic> dual = input.cast<ad::Dual>();
  for (Index r = 0; r < dual.rows(); ++r) dual(r, 0).tangent = 1.0;
  auto const out = evaluate(dual);
  Prediction p{Eigen::MatrixXd(out.rows(), out.cols()), Eigen::MatrixXd(out.rows(), out.cols())};
  for (Index c = 0; c < out.cols(); ++c)
    for (Index r = 0; r < out.rows(); ++r) {
      p.state(r, c) = out(r, c).primal;
      p.rate(r, c) = out(r, c).tangent;
    }
  return p;
}

std::vector<ad::Var> SirenNetwork::registerParameters(ad::Tape &tape) const
{
  std::vector<ad::Var> params;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    params.push_back(tape.parameter("W" + std::to_string(i), layers_[i].weight));
    params.push_back(tape.parameter("b" + std::to_string(i), layers_[i].bias));
  }
  return params;
}

SirenNetwork::Recorded SirenNetwork::record(ad::Tape &tape, std::span<ad::Var const> params,
                                            Tensor const &input) const
{
  checkInput(input.cols());
  if (params.size() != 2 * layers_.size()) throw std::invalid_argument("parameter list does not match network");
  ad::Var h = tape.constant(input);
  ad::Var dh; // d h / d t_norm; invalid until the first layer
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    auto const &layer = layers_[i];
    ad::Var W = params[2 * i];
    ad::Var b = params[2 * i + 1];
    ad::Var z = ad::matmul(h, W) + b;
    // The input tangent is e_0 on every row, so the first pre-activation
    // tangent is row 0 of W0 broadcast over the batch.
    ad::Var dz = i == 0 ? ad::rows(W, {0}) : ad::matmul(dh, W);
    if (layer.sine) {
      ad::Var arg = layer.omega * z;
      h = ad::sin(arg);
      dh = (layer.omega * ad::cos(arg)) * dz;
    } else {
      h = z;
      dh = dz;
    }
  }
  if (dh.rows() != h.rows()) dh = dh + tape.constant(Tensor::Zero(h.rows(), h.cols()));
  return {h, dh};
}

std::vector<Tensor> SirenNetwork::parameters() const
{
  std::vector<Tensor> out;
  for (auto const &l : layers_) {
    out.push_back(l.weight);
    out.push_back(l.bias);
  }
  return out;
}

void SirenNetwork::setParameters(std::span<Tensor const> params)
{
  if (params.size() != 2 * layers_.size()) throw std::invalid_argument("parameter list does not match network");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    auto &l = layers_[i];
    if (params[2 * i].rows() != l.weight.rows() || params[2 * i].cols() != l.weight.cols() ||
        params[2 * i + 1].size() != l.bias.size())
      throw ShapeError("parameter shape does not match layer " + std::to_string(i));
    l.weight = params[2 * i];
    l.bias = params[2 * i + 1];
  }
}

// Checkpoint format (JSON):
// {"format":"insindy-siren","version":1,"layers":[{"rows":R,"cols":C,
//  "omega":w,"sine":true,"weight":[row-major R*C],"bias":[C]}, ...]}
void SirenNetwork::save(std::filesystem::path const &path) const
{
  nlohmann::json j;
  j["format"] = "insindy-siren";
  j["version"] = 1;
  j["layers"] = nlohmann::json::array();
  for (auto const &l : layers_) {
    std::vector<double> w;
    w.reserve(std::size_t(l.weight.size()));
    for (Index r = 0; r < l.weight.rows(); ++r)
      for (Index c = 0; c < l.weight.cols(); ++c) w.push_back(l.weight(r, c));
    std::vector<double> b(l.bias.data(), l.bias.data() + l.bias.size());
    j["layers"].push_back({{"rows", l.weight.rows()},
                           {"cols", l.weight.cols()},
                           {"omega", l.omega},
                           {"sine", l.sine},
                           {"weight", w},
                           {"bias", b}});
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out << j.dump(1) << '\n';
}

SirenNetwork SirenNetwork::load(std::filesystem::path const &path)
{
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path.string());
  nlohmann::json j = nlohmann::json::parse(in);
  if (j.value("format", "") != "insindy-siren") throw std::runtime_error("not a SIREN checkpoint: " + path.string());
  std::vector<SirenLayer> layers;
  for (auto const &jl : j.at("layers")) {
    SirenLayer l;
    Index const rows = jl.at("rows").get<Index>();
    Index const cols = jl.at("cols").get<Index>();
    auto const w = jl.at("weight").get<std::vector<double>>();
    auto const b = jl.at("bias").get<std::vector<double>>();
    if (Index(w.size()) != rows * cols || Index(b.size()) != cols)
      throw std::runtime_error("checkpoint layer shape header does not match data");
    l.weight.resize(rows, cols);
    for (Index r = 0; r < rows; ++r)
      for (Index c = 0; c < cols; ++c) l.weight(r, c) = w[std::size_t(r * cols + c)];
    l.bias = Eigen::Map<Eigen::RowVectorXd const>(b.data(), cols);
    l.omega = jl.at("omega").get<double>();
    l.sine = jl.at("sine").get<bool>();
    layers.push_back(std::move(l));
  }
  return SirenNetwork(std::move(layers));
}

} // namespace insindy
