#include "insindy/dictionary.hpp"

#include <charconv>
#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace insindy {

int Feature::degree() const
{
  if (kind != Kind::Monomial) return 1;
  return std::accumulate(exponents.begin(), exponents.end(), 0);
}

std::string Feature::label() const
{
  std::ostringstream os;
  switch (kind) {
  case Kind::Monomial: {
    bool first = true;
    for (std::size_t i = 0; i < exponents.size(); ++i) {
      if (exponents[i] == 0) continue;
      if (!first) os << '*';
      os << 'x' << i + 1;
      if (exponents[i] > 1) os << '^' << exponents[i];
      first = false;
    }
    if (first) os << '1';
    break;
  }
  case Kind::Sine:
  case Kind::Cosine:
    os << (kind == Kind::Sine ? "sin(" : "cos(");
    if (harmonic != 1) os << harmonic << '*';
    os << 'x' << channel + 1 << ')';
    break;
  }
  return os.str();
}

namespace {

int parseInt(std::string_view s, std::string_view label)
{
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
    throw std::invalid_argument("malformed feature label '" + std::string(label) + "'");
  return v;
}

Index parseChannel(std::string_view s, std::string_view label, Index stateDim)
{
  if (s.size() < 2 || s.front() != 'x') throw std::invalid_argument("malformed feature label '" + std::string(label) + "'");
  int const c = parseInt(s.substr(1), label);
  if (c < 1 || c > stateDim)
    throw std::invalid_argument("feature label '" + std::string(label) + "' names an unknown channel");
  return c - 1;
}

} // namespace

Feature parseFeature(std::string_view label, Index stateDim)
{
  Feature f;
  if (label.starts_with("sin(") || label.starts_with("cos(")) {
    if (!label.ends_with(")")) throw std::invalid_argument("malformed feature label '" + std::string(label) + "'");
    f.kind = label.starts_with("sin(") ? Feature::Kind::Sine : Feature::Kind::Cosine;
    auto inner = label.substr(4, label.size() - 5);
    auto star = inner.find('*');
    if (star == std::string_view::npos) {
      f.harmonic = 1;
      f.channel = parseChannel(inner, label, stateDim);
    } else {
      f.harmonic = parseInt(inner.substr(0, star), label);
      f.channel = parseChannel(inner.substr(star + 1), label, stateDim);
    }
    return f;
  }
  f.exponents.assign(std::size_t(stateDim), 0);
  if (label == "1") return f;
  std::size_t pos = 0;
  while (pos <= label.size()) {
    auto end = label.find('*', pos);
    if (end == std::string_view::npos) end = label.size();
    auto factor = label.substr(pos, end - pos);
    auto caret = factor.find('^');
    int power = 1;
    if (caret != std::string_view::npos) {
      power = parseInt(factor.substr(caret + 1), label);
      factor = factor.substr(0, caret);
    }
    if (power < 1) throw std::invalid_argument("malformed feature label '" + std::string(label) + "'");
    f.exponents[std::size_t(parseChannel(factor, label, stateDim))] += power;
    pos = end + 1;
  }
  return f;
}

Index featureCount(DictionarySpec const &spec)
{
  // C(n+d, d) computed incrementally to stay exact.
  Index binom = 1;
  for (int k = 1; k <= spec.maxDegree; ++k) binom = binom * (spec.stateDim + k) / k;
  if (!spec.includeConstant) --binom;
  return binom + 2 * spec.stateDim * Index(spec.trigHarmonics.size());
}

Dictionary::Dictionary(DictionarySpec spec) : spec_(std::move(spec))
{
  if (spec_.stateDim <= 0) throw std::invalid_argument("dictionary needs a positive state dimension");
  if (spec_.maxDegree < 0) throw std::invalid_argument("dictionary degree must be non-negative");
  auto const n = std::size_t(spec_.stateDim);

  if (spec_.includeConstant) {
    features_.push_back({Feature::Kind::Monomial, std::vector<int>(n, 0)});
    parent_.push_back(-1);
    factor_.push_back(-1);
  }
  // Degree-by-degree: extend each monomial of degree d-1 by channels >= its
  // last channel, which yields sorted index multisets in lexicographic order.
  std::vector<std::pair<Index, Index>> previous; // (feature index or -1, last channel)
  previous.emplace_back(-1, 0);
  for (int d = 1; d <= spec_.maxDegree; ++d) {
    std::vector<std::pair<Index, Index>> current;
    for (auto [parent, last] : previous) {
      for (Index c = last; c < spec_.stateDim; ++c) {
        Feature f{Feature::Kind::Monomial, std::vector<int>(n, 0)};
        if (parent >= 0) f.exponents = features_[std::size_t(parent)].exponents;
        ++f.exponents[std::size_t(c)];
        features_.push_back(std::move(f));
        parent_.push_back(parent);
        factor_.push_back(c);
        current.emplace_back(Index(features_.size()) - 1, c);
      }
    }
    previous = std::move(current);
  }
  for (int k : spec_.trigHarmonics) {
    if (k <= 0) throw std::invalid_argument("trig harmonics must be positive");
    for (auto kind : {Feature::Kind::Sine, Feature::Kind::Cosine}) {
      for (Index c = 0; c < spec_.stateDim; ++c) {
        Feature f;
        f.kind = kind;
        f.channel = c;
        f.harmonic = k;
        features_.push_back(std::move(f));
        parent_.push_back(-1);
        factor_.push_back(c);
      }
    }
  }
}

std::vector<std::string> Dictionary::labels() const
{
  std::vector<std::string> out;
  out.reserve(features_.size());
  for (auto const &f : features_) out.push_back(f.label());
  return out;
}

Index Dictionary::indexOf(std::string_view label) const
{
  for (std::size_t i = 0; i < features_.size(); ++i)
    if (features_[i].label() == label) return Index(i);
  return -1;
}

void Dictionary::checkStates(Index cols) const
{
  if (cols != spec_.stateDim) {
    std::ostringstream os;
    os << "dictionary expects " << spec_.stateDim << " state channels, got " << cols;
    throw ShapeError(os.str());
  }
}

void Dictionary::checkCoefficients(Index rows, Index cols) const
{
  if (rows != size() || cols != spec_.stateDim) {
    std::ostringstream os;
    os << "coefficient matrix must be " << size() << 'x' << spec_.stateDim << ", got " << rows << 'x' << cols;
    throw ShapeError(os.str());
  }
}

ad::Var Dictionary::record(ad::Var X) const
{
  checkStates(X.cols());
  auto &tape = X.tape();
  std::vector<ad::Var> channels;
  for (Index c = 0; c < spec_.stateDim; ++c) channels.push_back(ad::col(X, c));
  std::vector<ad::Var> columns;
  columns.reserve(features_.size());
  for (std::size_t f = 0; f < features_.size(); ++f) {
    auto const &feat = features_[f];
    switch (feat.kind) {
    case Feature::Kind::Monomial:
      if (feat.degree() == 0)
        columns.push_back(tape.constant(Tensor::Ones(X.rows(), 1)));
      else if (parent_[f] < 0)
        columns.push_back(channels[std::size_t(factor_[f])]);
      else
        columns.push_back(columns[std::size_t(parent_[f])] * channels[std::size_t(factor_[f])]);
      break;
    case Feature::Kind::Sine:
      columns.push_back(ad::sin(double(feat.harmonic) * channels[std::size_t(feat.channel)]));
      break;
    case Feature::Kind::Cosine:
      columns.push_back(ad::cos(double(feat.harmonic) * channels[std::size_t(feat.channel)]));
      break;
    }
  }
  return ad::hconcat(columns);
}

ad::Var Dictionary::apply(ad::Var X, ad::Var Xi) const
{
  checkCoefficients(Xi.rows(), Xi.cols());
  return ad::matmul(record(X), Xi);
}

} // namespace insindy
