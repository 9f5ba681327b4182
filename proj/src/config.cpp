#include "insindy/config.hpp"

#include "insindy/rng.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace insindy {

std::vector<std::string> const &knownMethods()
{
  static std::vector<std::string> const methods{"ineural", "deri_only", "rk4_only", "rk4_direct", "stls"};
  return methods;
}

ExperimentConfig ExperimentConfig::defaultsFor(std::string_view system)
{
  ExperimentConfig c;
  c.system = std::string(system);
  if (system == "linear_oscillator") {
    c.initialConditions.resize(3, 2);
    c.initialConditions << 2, 0, -1, 1.5, 0.5, -2;
    c.samples = 400;
    c.degree = 2;
    c.schedule.maxIter = 15000;
    c.schedule.initIter = 5000;
    c.schedule.thresholdPeriod = 2000;
  } else if (system == "cubic_oscillator") {
    c.initialConditions.resize(2, 2);
    c.initialConditions << 2, 2, -2, -2;
    c.samples = 800;
    c.degree = 3;
    c.schedule.maxIter = 30000;
    c.schedule.initIter = 15000;
    c.schedule.thresholdPeriod = 5000;
  } else if (system == "fhn") {
    c.initialConditions.resize(2, 2);
    c.initialConditions << 2, 1.5, 1.5, 2;
    c.tEnd = 200.0;
    c.samples = 400;
    c.degree = 3;
    c.schedule.maxIter = 50000;
    c.schedule.initIter = 15000;
    c.schedule.thresholdPeriod = 5000;
  } else if (system == "lorenz") {
    c.initialConditions.resize(3, 3);
    c.initialConditions << -8, 7, 27, -6, 6, 25, -9, 8, 22;
    c.samples = 200;
    c.alpha = 0.1;
    c.degree = 2;
    c.hidden = {64, 64, 64};
    c.schedule.maxIter = 35000;
    c.schedule.initIter = 10000;
    c.schedule.thresholdPeriod = 3000;
    c.schedule.lrNet = 7e-4;
    c.schedule.lrXi = 1e-2;
  } else {
    throw ConfigError("unknown system '" + std::string(system) + "'");
  }
  c.schedule.tol = system == "lorenz" ? 0.2 : 0.05;
  return c;
}

namespace {

std::string_view trim(std::string_view s)
{
  auto const first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  auto const last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep)
{
  std::vector<std::string_view> out;
  if (trim(s).empty()) return out;
  std::size_t start = 0;
  while (true) {
    auto const pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T> T number(std::string_view s)
{
  s = trim(s);
  T v{};
  auto const [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw ConfigError("'" + std::string(s) + "' is not a valid number");
  return v;
}

template <typename T> std::vector<T> numberList(std::string_view s)
{
  std::vector<T> out;
  for (auto part : split(s, ',')) out.push_back(number<T>(part));
  return out;
}

bool boolean(std::string_view s)
{
  s = trim(s);
  if (s == "true") return true;
  if (s == "false") return false;
  throw ConfigError("'" + std::string(s) + "' is not true or false");
}

Eigen::MatrixXd matrixRows(std::string_view s)
{
  std::vector<std::vector<double>> rows;
  for (auto row : split(s, ';')) {
    std::vector<double> values;
    std::istringstream is{std::string(row)};
    std::string tok;
    while (is >> tok) values.push_back(number<double>(tok));
    if (values.empty()) throw ConfigError("empty initial-condition row");
    if (!rows.empty() && values.size() != rows.front().size())
      throw ConfigError("initial-condition rows have different lengths");
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw ConfigError("no initial conditions given");
  Eigen::MatrixXd m(Index(rows.size()), Index(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(Index(r), Index(c)) = rows[r][c];
  return m;
}

template <typename T> std::string joined(std::vector<T> const &values)
{
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ", ";
    if constexpr (std::is_floating_point_v<T>)
      out += formatDouble(values[i]);
    else if constexpr (std::is_same_v<T, std::string>)
      out += values[i];
    else
      out += std::to_string(values[i]);
  }
  return out;
}

std::string matrixText(Eigen::MatrixXd const &m)
{
  std::string out;
  for (Index r = 0; r < m.rows(); ++r) {
    if (r) out += "; ";
    for (Index c = 0; c < m.cols(); ++c) {
      if (c) out += ' ';
      out += formatDouble(m(r, c));
    }
  }
  return out;
}

struct Key
{
  std::string section;
  std::string name;
  std::function<void(ExperimentConfig &, std::string_view)> set;
  std::function<std::string(ExperimentConfig const &)> get;
};

std::vector<Key> const &keys()
{
  using C = ExperimentConfig;
  using V = std::string_view;
  static std::vector<Key> const table{
      {"experiment", "system", [](C &c, V v) { c.system = std::string(trim(v)); }, [](C const &c) { return c.system; }},
      {"experiment", "seed", [](C &c, V v) { c.seed = number<std::uint64_t>(v); },
       [](C const &c) { return std::to_string(c.seed); }},
      {"experiment", "out", [](C &c, V v) { c.outDir = std::string(trim(v)); }, [](C const &c) { return c.outDir; }},
      {"experiment", "methods",
       [](C &c, V v) {
         c.methods.clear();
         for (auto m : split(v, ',')) c.methods.emplace_back(m);
       },
       [](C const &c) { return joined(c.methods); }},

      {"data", "initial_conditions", [](C &c, V v) { c.initialConditions = matrixRows(v); },
       [](C const &c) { return matrixText(c.initialConditions); }},
      {"data", "t_start", [](C &c, V v) { c.tStart = number<double>(v); },
       [](C const &c) { return formatDouble(c.tStart); }},
      {"data", "t_end", [](C &c, V v) { c.tEnd = number<double>(v); }, [](C const &c) { return formatDouble(c.tEnd); }},
      {"data", "samples", [](C &c, V v) { c.samples = number<Index>(v); },
       [](C const &c) { return std::to_string(c.samples); }},
      {"data", "sigma", [](C &c, V v) { c.sigmas = numberList<double>(v); },
       [](C const &c) { return joined(c.sigmas); }},
      {"data", "alpha", [](C &c, V v) { c.alpha = number<double>(v); }, [](C const &c) { return formatDouble(c.alpha); }},
      {"data", "refinement", [](C &c, V v) { c.refinement = number<int>(v); },
       [](C const &c) { return std::to_string(c.refinement); }},
      {"data", "dataset", [](C &c, V v) { c.datasetPath = std::string(trim(v)); },
       [](C const &c) { return c.datasetPath; }},

      {"dictionary", "degree", [](C &c, V v) { c.degree = number<int>(v); },
       [](C const &c) { return std::to_string(c.degree); }},
      {"dictionary", "constant", [](C &c, V v) { c.includeConstant = boolean(v); },
       [](C const &c) { return std::string(c.includeConstant ? "true" : "false"); }},
      {"dictionary", "trig_harmonics", [](C &c, V v) { c.trigHarmonics = numberList<int>(v); },
       [](C const &c) { return joined(c.trigHarmonics); }},

      {"network", "hidden", [](C &c, V v) { c.hidden = numberList<Index>(v); },
       [](C const &c) { return joined(c.hidden); }},
      {"network", "omega_first", [](C &c, V v) { c.omegaFirst = number<double>(v); },
       [](C const &c) { return formatDouble(c.omegaFirst); }},
      {"network", "omega_hidden", [](C &c, V v) { c.omegaHidden = number<double>(v); },
       [](C const &c) { return formatDouble(c.omegaHidden); }},

      {"training", "max_iter", [](C &c, V v) { c.schedule.maxIter = number<int>(v); },
       [](C const &c) { return std::to_string(c.schedule.maxIter); }},
      {"training", "init_iter", [](C &c, V v) { c.schedule.initIter = number<int>(v); },
       [](C const &c) { return std::to_string(c.schedule.initIter); }},
      {"training", "threshold_period", [](C &c, V v) { c.schedule.thresholdPeriod = number<int>(v); },
       [](C const &c) { return std::to_string(c.schedule.thresholdPeriod); }},
      {"training", "tol", [](C &c, V v) { c.schedule.tol = number<double>(v); },
       [](C const &c) { return formatDouble(c.schedule.tol); }},
      {"training", "lr_net", [](C &c, V v) { c.schedule.lrNet = number<double>(v); },
       [](C const &c) { return formatDouble(c.schedule.lrNet); }},
      {"training", "lr_xi", [](C &c, V v) { c.schedule.lrXi = number<double>(v); },
       [](C const &c) { return formatDouble(c.schedule.lrXi); }},
      {"training", "lr_net_post", [](C &c, V v) { c.schedule.lrNetPost = number<double>(v); },
       [](C const &c) { return formatDouble(c.schedule.lrNetPost); }},
      {"training", "lr_xi_post", [](C &c, V v) { c.schedule.lrXiPost = number<double>(v); },
       [](C const &c) { return formatDouble(c.schedule.lrXiPost); }},
      {"training", "adam_beta1", [](C &c, V v) { c.schedule.adam.beta1 = number<double>(v); },
       [](C const &c) { return formatDouble(c.schedule.adam.beta1); }},
      {"training", "adam_beta2", [](C &c, V v) { c.schedule.adam.beta2 = number<double>(v); },
       [](C const &c) { return formatDouble(c.schedule.adam.beta2); }},
      {"training", "adam_epsilon", [](C &c, V v) { c.schedule.adam.epsilon = number<double>(v); },
       [](C const &c) { return formatDouble(c.schedule.adam.epsilon); }},
      {"training", "mu_mse", [](C &c, V v) { c.weights.mse = number<double>(v); },
       [](C const &c) { return formatDouble(c.weights.mse); }},
      {"training", "mu_deri", [](C &c, V v) { c.weights.deri = number<double>(v); },
       [](C const &c) { return formatDouble(c.weights.deri); }},
      {"training", "mu_rk4", [](C &c, V v) { c.weights.rk4 = number<double>(v); },
       [](C const &c) { return formatDouble(c.weights.rk4); }},
      {"training", "loss_space",
       [](C &c, V v) {
         v = trim(v);
         if (v == "physical")
           c.space = LossSpace::Physical;
         else if (v == "normalized")
           c.space = LossSpace::Normalized;
         else
           throw ConfigError("loss_space must be physical or normalized");
       },
       [](C const &c) { return std::string(c.space == LossSpace::Physical ? "physical" : "normalized"); }},
      {"training", "trace_every", [](C &c, V v) { c.traceEvery = number<int>(v); },
       [](C const &c) { return std::to_string(c.traceEvery); }},
      {"training", "stls_max_iter", [](C &c, V v) { c.stlsMaxIter = number<int>(v); },
       [](C const &c) { return std::to_string(c.stlsMaxIter); }},

      {"sweep", "mode",
       [](C &c, V v) {
         v = trim(v);
         if (v == "scene_a")
           c.sweepMode = SweepMode::SceneA;
         else if (v == "scene_b")
           c.sweepMode = SweepMode::SceneB;
         else
           throw ConfigError("sweep mode must be scene_a or scene_b");
       },
       [](C const &c) { return std::string(c.sweepMode == SweepMode::SceneA ? "scene_a" : "scene_b"); }},
      {"sweep", "sigma", [](C &c, V v) { c.sweepSigmas = numberList<double>(v); },
       [](C const &c) { return joined(c.sweepSigmas); }},
      {"sweep", "samples", [](C &c, V v) { c.sweepSamples = numberList<Index>(v); },
       [](C const &c) { return joined(c.sweepSamples); }},
      {"sweep", "neurons", [](C &c, V v) { c.sweepNeurons = numberList<Index>(v); },
       [](C const &c) { return joined(c.sweepNeurons); }},
      {"sweep", "ic_range",
       [](C &c, V v) {
         auto const r = numberList<double>(v);
         if (r.empty())
           c.sweepIcRange.reset();
         else if (r.size() == 2)
           c.sweepIcRange = std::pair{r[0], r[1]};
         else
           throw ConfigError("ic_range takes two numbers: low, high");
       },
       [](C const &c) {
         return c.sweepIcRange ? formatDouble(c.sweepIcRange->first) + ", " + formatDouble(c.sweepIcRange->second)
                               : std::string();
       }},
  };
  return table;
}

} // namespace

ExperimentConfig ExperimentConfig::parse(std::string_view text)
{
  struct Entry
  {
    Key const *key;
    std::string value;
    int line;
  };
  std::vector<Entry> entries;
  std::set<std::pair<std::string, std::string>> seen;
  std::string section;
  std::string system = "linear_oscillator";
  int lineNo = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  auto fail = [&](std::string const &msg) { throw ConfigError("line " + std::to_string(lineNo) + ": " + msg); };
  while (std::getline(in, raw)) {
    ++lineNo;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail("malformed section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      static std::set<std::string> const sections{"experiment", "data", "dictionary", "network", "training", "sweep"};
      if (!sections.count(section)) fail("unknown section [" + section + "]");
      continue;
    }
    auto const eq = line.find('=');
    if (eq == std::string_view::npos) fail("expected key = value");
    if (section.empty()) fail("key outside of any section");
    std::string const name(trim(line.substr(0, eq)));
    auto const &table = keys();
    auto it = std::find_if(table.begin(), table.end(),
                           [&](Key const &k) { return k.section == section && k.name == name; });
    if (it == table.end()) fail("unknown key '" + name + "' in [" + section + "]");
    if (!seen.insert({section, name}).second) fail("duplicate key '" + name + "'");
    std::string value(trim(line.substr(eq + 1)));
    if (section == "experiment" && name == "system") system = value;
    entries.push_back({&*it, std::move(value), lineNo});
  }

  ExperimentConfig c = defaultsFor(system);
  for (auto const &e : entries) {
    try {
      e.key->set(c, e.value);
    } catch (ConfigError const &err) {
      throw ConfigError("line " + std::to_string(e.line) + " (" + e.key->name + "): " + err.what());
    }
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(std::filesystem::path const &path)
{
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse(ss.str());
  } catch (ConfigError const &e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string ExperimentConfig::serialize() const
{
  std::string out;
  std::string section;
  for (auto const &k : keys()) {
    if (k.section != section) {
      if (!section.empty()) out += '\n';
      section = k.section;
      out += "[" + section + "]\n";
    }
    std::string const v = k.get(*this);
    out += v.empty() ? k.name + " =\n" : k.name + " = " + v + '\n';
  }
  return out;
}

void ExperimentConfig::validate() const
{
  OdeSystem const sys = systemByName(system);
  if (initialConditions.rows() < 1 || initialConditions.cols() != sys.stateDim)
    throw ConfigError("initial conditions must have " + std::to_string(sys.stateDim) + " entries per row");
  if (!initialConditions.allFinite()) throw ConfigError("initial conditions must be finite");
  if (!(tEnd > tStart)) throw ConfigError("t_end must exceed t_start");
  if (samples < 2) throw ConfigError("samples must be at least 2");
  if (sigmas.empty()) throw ConfigError("sigma list is empty");
  for (double s : sigmas)
    if (!(s >= 0)) throw ConfigError("noise levels must be non-negative");
  if (!(alpha > 0)) throw ConfigError("alpha must be positive");
  if (refinement < 1) throw ConfigError("refinement must be at least 1");
  if (degree < 0) throw ConfigError("dictionary degree must be non-negative");
  for (int k : trigHarmonics)
    if (k < 1) throw ConfigError("trig harmonics must be positive");
  if (methods.empty()) throw ConfigError("no methods selected");
  for (auto const &m : methods)
    if (std::find(knownMethods().begin(), knownMethods().end(), m) == knownMethods().end())
      throw ConfigError("unknown method '" + m + "'");
  if (hidden.empty()) throw ConfigError("network needs at least one hidden layer");
  for (Index h : hidden)
    if (h < 1) throw ConfigError("hidden widths must be positive");
  if (!(omegaFirst > 0) || !(omegaHidden > 0)) throw ConfigError("omega values must be positive");
  schedule.validate();
  weights.validate();
  if (traceEvery < 1) throw ConfigError("trace_every must be at least 1");
  if (stlsMaxIter < 1) throw ConfigError("stls_max_iter must be at least 1");
  if (sweepSigmas.empty() || sweepSamples.empty() || sweepNeurons.empty())
    throw ConfigError("sweep grids must not be empty");
  for (double s : sweepSigmas)
    if (!(s >= 0)) throw ConfigError("sweep noise levels must be non-negative");
  for (Index s : sweepSamples)
    if (s < 2) throw ConfigError("sweep sample counts must be at least 2");
  for (Index w : sweepNeurons)
    if (w < 1) throw ConfigError("sweep widths must be positive");
  if (sweepIcRange && !(sweepIcRange->second > sweepIcRange->first))
    throw ConfigError("ic_range must satisfy low < high");
}

DictionarySpec ExperimentConfig::dictionarySpec() const
{
  DictionarySpec spec;
  spec.stateDim = initialConditions.cols();
  spec.maxDegree = degree;
  spec.includeConstant = includeConstant;
  spec.trigHarmonics = trigHarmonics;
  return spec;
}

GenerationSettings ExperimentConfig::generation(double sigma) const
{
  GenerationSettings g;
  g.tStart = tStart;
  g.tEnd = tEnd;
  g.samples = samples;
  g.sigma = sigma;
  g.alpha = alpha;
  g.seed = seed;
  g.refinement = refinement;
  return g;
}

TrainingOptions ExperimentConfig::training() const
{
  TrainingOptions o;
  o.weights = weights;
  o.schedule = schedule;
  o.network.hidden = hidden;
  o.network.omegaFirst = omegaFirst;
  o.network.omegaHidden = omegaHidden;
  o.space = space;
  // network initialization gets its own stream, decorrelated from the noise
  o.seed = mix64(seed ^ 0x6e6574776f726bULL);
  o.traceEvery = traceEvery;
  return o;
}

bool ExperimentConfig::operator==(ExperimentConfig const &o) const
{
  auto const &a = schedule;
  auto const &b = o.schedule;
  bool const sameSchedule = a.maxIter == b.maxIter && a.initIter == b.initIter &&
                            a.thresholdPeriod == b.thresholdPeriod && a.tol == b.tol && a.lrNet == b.lrNet &&
                            a.lrXi == b.lrXi && a.lrNetPost == b.lrNetPost && a.lrXiPost == b.lrXiPost &&
                            a.adam.beta1 == b.adam.beta1 && a.adam.beta2 == b.adam.beta2 &&
                            a.adam.epsilon == b.adam.epsilon;
  bool const sameIcs = initialConditions.rows() == o.initialConditions.rows() &&
                       initialConditions.cols() == o.initialConditions.cols() &&
                       initialConditions == o.initialConditions;
  return system == o.system && seed == o.seed && outDir == o.outDir && methods == o.methods && sameIcs &&
         tStart == o.tStart && tEnd == o.tEnd && samples == o.samples && sigmas == o.sigmas && alpha == o.alpha &&
         refinement == o.refinement && datasetPath == o.datasetPath && degree == o.degree &&
         includeConstant == o.includeConstant && trigHarmonics == o.trigHarmonics && hidden == o.hidden &&
         omegaFirst == o.omegaFirst && omegaHidden == o.omegaHidden && sameSchedule && weights == o.weights &&
         space == o.space && traceEvery == o.traceEvery && stlsMaxIter == o.stlsMaxIter &&
         sweepMode == o.sweepMode && sweepSigmas == o.sweepSigmas && sweepSamples == o.sweepSamples &&
         sweepNeurons == o.sweepNeurons && sweepIcRange == o.sweepIcRange;
}

} // namespace insindy
