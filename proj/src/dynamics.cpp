#include "insindy/dynamics.hpp"

#include "insindy/rng.hpp"

#include <json.hpp>

#include <charconv>
#include <fstream>
#include <map>

namespace insindy {

Eigen::VectorXd OdeSystem::scaledRhs(Eigen::VectorXd const &z, double alpha) const
{
  if (alpha == 1.0) return rhs(z);
  return alpha * rhs(Eigen::VectorXd(z / alpha));
}

Eigen::MatrixXd OdeSystem::groundTruth(Dictionary const &dict, double alpha) const
{
  if (dict.stateDim() != stateDim) throw std::invalid_argument("dictionary state dimension does not match " + name);
  Eigen::MatrixXd xi = Eigen::MatrixXd::Zero(dict.size(), stateDim);
  for (auto const &term : terms) {
    Index const row = dict.indexOf(term.feature);
    if (row < 0) throw std::invalid_argument("dictionary lacks ground-truth feature '" + term.feature + "' of " + name);
    int const degree = parseFeature(term.feature, stateDim).degree();
    xi(row, term.state) = term.coefficient * std::pow(alpha, 1 - degree);
  }
  return xi;
}

OdeSystem linearOscillator()
{
  OdeSystem s;
  s.name = "linear_oscillator";
  s.stateDim = 2;
  s.polynomialDegree = 1;
  s.rhs = [](Eigen::VectorXd const &x) {
    Eigen::VectorXd d(2);
    d << -0.1 * x(0) + 2.0 * x(1), -2.0 * x(0) - 0.1 * x(1);
    return d;
  };
  s.terms = {{"x1", 0, -0.1}, {"x2", 0, 2.0}, {"x1", 1, -2.0}, {"x2", 1, -0.1}};
  return s;
}

OdeSystem cubicOscillator()
{
  OdeSystem s;
  s.name = "cubic_oscillator";
  s.stateDim = 2;
  s.polynomialDegree = 3;
  s.rhs = [](Eigen::VectorXd const &x) {
    double const c1 = x(0) * x(0) * x(0);
    double const c2 = x(1) * x(1) * x(1);
    Eigen::VectorXd d(2);
    d << -0.1 * c1 + 2.0 * c2, -2.0 * c1 - 0.1 * c2;
    return d;
  };
  s.terms = {{"x1^3", 0, -0.1}, {"x2^3", 0, 2.0}, {"x1^3", 1, -2.0}, {"x2^3", 1, -0.1}};
  return s;
}

OdeSystem fitzHughNagumo()
{
  OdeSystem s;
  s.name = "fhn";
  s.stateDim = 2;
  s.polynomialDegree = 3;
  s.rhs = [](Eigen::VectorXd const &x) {
    Eigen::VectorXd d(2);
    d << x(0) - x(1) - x(0) * x(0) * x(0) / 3.0 + 0.1, 0.1 * x(0) - 0.1 * x(1);
    return d;
  };
  s.terms = {{"1", 0, 0.1},  {"x1", 0, 1.0}, {"x2", 0, -1.0}, {"x1^3", 0, -1.0 / 3.0},
             {"x1", 1, 0.1}, {"x2", 1, -0.1}};
  return s;
}

OdeSystem lorenz(double gamma, double rho, double beta)
{
  OdeSystem s;
  s.name = "lorenz";
  s.stateDim = 3;
  s.polynomialDegree = 2;
  s.rhs = [=](Eigen::VectorXd const &x) {
    Eigen::VectorXd d(3);
    d << gamma * (x(1) - x(0)), x(0) * (rho - x(2)) - x(1), x(0) * x(1) - beta * x(2);
    return d;
  };
  s.terms = {{"x1", 0, -gamma}, {"x2", 0, gamma},   {"x1", 1, rho},  {"x2", 1, -1.0},
             {"x1*x3", 1, -1.0}, {"x3", 2, -beta}, {"x1*x2", 2, 1.0}};
  return s;
}

std::vector<std::string> benchmarkNames() { return {"linear_oscillator", "cubic_oscillator", "fhn", "lorenz"}; }

OdeSystem systemByName(std::string_view name)
{
  if (name == "linear_oscillator") return linearOscillator();
  if (name == "cubic_oscillator") return cubicOscillator();
  if (name == "fhn") return fitzHughNagumo();
  if (name == "lorenz") return lorenz();
  throw ConfigError("unknown system '" + std::string(name) + "'");
}

Eigen::VectorXd linspace(double start, double stop, Index count)
{
  Eigen::VectorXd t(count);
  if (count == 1) {
    t(0) = start;
    return t;
  }
  double const step = (stop - start) / double(count - 1);
  for (Index k = 0; k < count; ++k) t(k) = start + double(k) * step;
  t(count - 1) = stop;
  return t;
}

Index Dataset::totalSamples() const
{
  Index n = 0;
  for (auto const &tr : trajectories) n += tr.times.size();
  return n;
}

Dataset generateDataset(OdeSystem const &system, Eigen::MatrixXd const &initialConditions,
                        GenerationSettings const &settings)
{
  if (settings.samples < 2) throw std::invalid_argument("dataset needs at least 2 samples per trajectory");
  if (!(settings.sigma >= 0)) throw std::invalid_argument("noise sigma must be non-negative");
  if (!(settings.alpha > 0)) throw std::invalid_argument("alpha must be positive");
  if (!(settings.tEnd > settings.tStart)) throw std::invalid_argument("invalid time span");
  if (settings.refinement < 1) throw std::invalid_argument("refinement factor must be at least 1");
  if (initialConditions.rows() < 1 || initialConditions.cols() != system.stateDim)
    throw std::invalid_argument("initial conditions must be rows of " + std::to_string(system.stateDim) + " values");

  Dataset data;
  data.system = system.name;
  data.sigma = settings.sigma;
  data.alpha = settings.alpha;
  data.seed = settings.seed;

  Eigen::VectorXd const times = linspace(settings.tStart, settings.tEnd, settings.samples);
  Eigen::VectorXd const fine = linspace(settings.tStart, settings.tEnd, (settings.samples - 1) * settings.refinement + 1);
  CounterRng rng(settings.seed);
  for (Index j = 0; j < initialConditions.rows(); ++j) {
    Eigen::VectorXd const x0 = initialConditions.row(j).transpose();
    Eigen::MatrixXd const path = integrateRk4(system.rhs, x0, fine);
    Trajectory tr;
    tr.times = times;
    tr.clean.resize(settings.samples, system.stateDim);
    for (Index k = 0; k < settings.samples; ++k) tr.clean.row(k) = path.row(k * settings.refinement);
    tr.clean *= settings.alpha;
    tr.initialCondition = settings.alpha * x0;
    tr.noisy = tr.clean;
    if (settings.sigma > 0) {
      for (Index k = 0; k < tr.noisy.rows(); ++k)
        for (Index c = 0; c < tr.noisy.cols(); ++c) tr.noisy(k, c) += settings.sigma * rng.normal();
    }
    data.trajectories.push_back(std::move(tr));
  }

  Eigen::MatrixXd all(data.totalSamples(), system.stateDim);
  Index offset = 0;
  for (auto const &tr : data.trajectories) {
    all.middleRows(offset, tr.noisy.rows()) = tr.noisy;
    offset += tr.noisy.rows();
  }
  data.normalization = NormalizationRecord::fromData(all, times, settings.alpha);
  return data;
}

Eigen::MatrixXd finiteDifference(Eigen::VectorXd const &t, Eigen::MatrixXd const &x)
{
  Index const N = t.size();
  if (N < 3) throw std::invalid_argument("finite differences need at least 3 samples");
  if (x.rows() != N) throw ShapeError("finite differences: times and states disagree");
  Eigen::MatrixXd d(N, x.cols());
  {
    double const h1 = t(1) - t(0), h2 = t(2) - t(1);
    d.row(0) = -(2 * h1 + h2) / (h1 * (h1 + h2)) * x.row(0) + (h1 + h2) / (h1 * h2) * x.row(1) -
               h1 / (h2 * (h1 + h2)) * x.row(2);
  }
  for (Index k = 1; k + 1 < N; ++k) {
    double const h1 = t(k) - t(k - 1), h2 = t(k + 1) - t(k);
    d.row(k) = -h2 / (h1 * (h1 + h2)) * x.row(k - 1) + (h2 - h1) / (h1 * h2) * x.row(k) +
               h1 / (h2 * (h1 + h2)) * x.row(k + 1);
  }
  {
    double const h1 = t(N - 2) - t(N - 3), h2 = t(N - 1) - t(N - 2);
    d.row(N - 1) = h2 / (h1 * (h1 + h2)) * x.row(N - 3) - (h1 + h2) / (h1 * h2) * x.row(N - 2) +
                   (2 * h2 + h1) / (h2 * (h1 + h2)) * x.row(N - 1);
  }
  return d;
}

std::vector<Eigen::MatrixXd> finiteDifferenceDerivatives(Dataset const &dataset)
{
  std::vector<Eigen::MatrixXd> out;
  for (auto const &tr : dataset.trajectories) out.push_back(finiteDifference(tr.times, tr.noisy));
  return out;
}

std::string formatDouble(double value)
{
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) throw std::runtime_error("formatDouble failed");
  return {buf, ptr};
}

namespace {

std::vector<double> toVector(Eigen::VectorXd const &v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd fromVector(std::vector<double> const &v) { return Eigen::Map<Eigen::VectorXd const>(v.data(), Index(v.size())); }

std::filesystem::path sidecarPath(std::filesystem::path const &csvPath)
{
  auto p = csvPath;
  return p.replace_extension(".json");
}

} // namespace

void writeDataset(Dataset const &dataset, std::filesystem::path const &csvPath)
{
  Index const n = dataset.stateDim();
  std::ofstream csv(csvPath);
  if (!csv) throw std::runtime_error("cannot write " + csvPath.string());
  csv << "traj_id,t";
  for (Index i = 1; i <= n; ++i) csv << ",y" << i;
  for (Index i = 1; i <= n; ++i) csv << ",x" << i;
  csv << '\n';
  for (std::size_t j = 0; j < dataset.trajectories.size(); ++j) {
    auto const &tr = dataset.trajectories[j];
    for (Index k = 0; k < tr.times.size(); ++k) {
      csv << j << ',' << formatDouble(tr.times(k));
      for (Index i = 0; i < n; ++i) csv << ',' << formatDouble(tr.noisy(k, i));
      for (Index i = 0; i < n; ++i) csv << ',' << formatDouble(tr.clean(k, i));
      csv << '\n';
    }
  }
  if (!csv) throw std::runtime_error("failed writing " + csvPath.string());

  nlohmann::json j;
  j["system"] = dataset.system;
  j["sigma"] = dataset.sigma;
  j["alpha"] = dataset.alpha;
  j["seed"] = dataset.seed;
  j["state_dim"] = n;
  j["initial_conditions"] = nlohmann::json::array();
  for (auto const &tr : dataset.trajectories) j["initial_conditions"].push_back(toVector(tr.initialCondition));
  auto const &rec = dataset.normalization;
  j["normalization"] = {{"state_min", toVector(rec.stateMin())},
                        {"state_max", toVector(rec.stateMax())},
                        {"time_min", rec.timeMin()},
                        {"time_max", rec.timeMax()},
                        {"alpha", rec.alpha()}};
  std::ofstream side(sidecarPath(csvPath));
  if (!side) throw std::runtime_error("cannot write " + sidecarPath(csvPath).string());
  side << j.dump(2) << '\n';
}

Dataset readDataset(std::filesystem::path const &csvPath)
{
  std::ifstream side(sidecarPath(csvPath));
  if (!side) throw std::runtime_error("missing dataset sidecar " + sidecarPath(csvPath).string());
  nlohmann::json const j = nlohmann::json::parse(side);
  Dataset data;
  data.system = j.at("system").get<std::string>();
  data.sigma = j.at("sigma").get<double>();
  data.alpha = j.at("alpha").get<double>();
  data.seed = j.at("seed").get<std::uint64_t>();
  Index const n = j.at("state_dim").get<Index>();
  auto const &nj = j.at("normalization");
  data.normalization = NormalizationRecord(fromVector(nj.at("state_min").get<std::vector<double>>()),
                                           fromVector(nj.at("state_max").get<std::vector<double>>()),
                                           nj.at("time_min").get<double>(), nj.at("time_max").get<double>(),
                                           nj.at("alpha").get<double>());
  auto const ics = j.at("initial_conditions").get<std::vector<std::vector<double>>>();

  std::ifstream csv(csvPath);
  if (!csv) throw std::runtime_error("cannot read " + csvPath.string());
  std::string line;
  std::getline(csv, line);
  std::map<std::size_t, std::vector<std::vector<double>>> rows;
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    std::vector<double> fields;
    std::size_t pos = 0;
    std::size_t traj = 0;
    bool first = true;
    while (pos <= line.size()) {
      auto end = line.find(',', pos);
      if (end == std::string::npos) end = line.size();
      std::string_view cell(line.data() + pos, end - pos);
      if (first) {
        std::from_chars(cell.data(), cell.data() + cell.size(), traj);
        first = false;
      } else {
        double v = 0;
        auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (ec != std::errc{}) throw std::runtime_error("malformed number in " + csvPath.string());
        fields.push_back(v);
      }
      pos = end + 1;
    }
    if (Index(fields.size()) != 1 + 2 * n) throw std::runtime_error("wrong column count in " + csvPath.string());
    rows[traj].push_back(std::move(fields));
  }
  for (auto const &[traj, samples] : rows) {
    Trajectory tr;
    Index const N = Index(samples.size());
    tr.times.resize(N);
    tr.noisy.resize(N, n);
    tr.clean.resize(N, n);
    for (Index k = 0; k < N; ++k) {
      tr.times(k) = samples[std::size_t(k)][0];
      for (Index i = 0; i < n; ++i) {
        tr.noisy(k, i) = samples[std::size_t(k)][std::size_t(1 + i)];
        tr.clean(k, i) = samples[std::size_t(k)][std::size_t(1 + n + i)];
      }
    }
    tr.initialCondition = traj < ics.size() ? fromVector(ics[traj]) : Eigen::VectorXd(tr.clean.row(0).transpose());
    data.trajectories.push_back(std::move(tr));
  }
  return data;
}

} // namespace insindy
