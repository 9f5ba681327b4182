#include "insindy/metrics.hpp"

#include "insindy/dynamics.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace insindy {

double DiscoveryResult::errorTotal() const
{
  if (!error || failed()) return std::nan("");
  return error->sum();
}

Eigen::RowVectorXd coeffError(std::vector<std::string> const &truthLabels, Eigen::MatrixXd const &truth,
                              std::vector<std::string> const &estimateLabels, Eigen::MatrixXd const &estimate)
{
  if (truthLabels != estimateLabels) throw std::invalid_argument("coefficient error: feature labels differ");
  if (truth.rows() != Index(truthLabels.size()) || estimate.rows() != truth.rows() ||
      estimate.cols() != truth.cols())
    throw ShapeError("coefficient error: matrix shapes differ");
  return (truth - estimate).cwiseAbs().colwise().sum();
}

Simulation simulateDiscovered(Dictionary const &dict, Eigen::MatrixXd const &xi, Eigen::VectorXd const &x0,
                              Eigen::VectorXd const &times, int refinement)
{
  if (!xi.allFinite()) throw NumericalError("cannot simulate a model with non-finite coefficients");
  if (x0.size() != dict.stateDim()) throw ShapeError("initial condition does not match the dictionary");
  if (times.size() < 1) throw std::invalid_argument("simulation needs at least one time point");
  if (refinement < 1) throw std::invalid_argument("refinement must be at least 1");

  auto field = [&](Eigen::VectorXd const &x) -> Eigen::VectorXd {
    return (dict.evaluate(x.transpose()) * xi).transpose();
  };
  constexpr double blowUp = 1e8;

  Simulation sim;
  sim.times = times;
  sim.states.resize(times.size(), x0.size());
  sim.states.row(0) = x0.transpose();
  Eigen::VectorXd x = x0;
  for (Index k = 0; k + 1 < times.size(); ++k) {
    double const h = (times(k + 1) - times(k)) / refinement;
    if (!(h > 0)) throw std::invalid_argument("simulation times must be strictly increasing");
    for (int s = 0; s < refinement; ++s) x = rk4Step(field, x, h);
    if (!x.allFinite() || x.cwiseAbs().maxCoeff() > blowUp) {
      sim.divergent = true;
      sim.times.conservativeResize(k + 1);
      sim.states.conservativeResize(k + 1, Eigen::NoChange);
      break;
    }
    sim.states.row(k + 1) = x.transpose();
  }
  return sim;
}

namespace {

std::string fixed(double v, int precision)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

} // namespace

std::vector<std::string> formatEquations(CoefficientMatrix const &xi, std::vector<std::string> const &labels,
                                         int precision)
{
  if (Index(labels.size()) != xi.features()) throw ShapeError("equation labels do not match coefficients");
  if (precision < 0) throw std::invalid_argument("precision must be non-negative");
  std::vector<std::string> lines;
  for (Index s = 0; s < xi.states(); ++s) {
    std::string line = "dx" + std::to_string(s + 1) + "/dt =";
    bool first = true;
    for (Index f = 0; f < xi.features(); ++f) {
      if (!xi.mask(f, s)) continue;
      double const c = xi.values(f, s);
      std::string const magnitude = fixed(std::abs(c), precision);
      std::string term = labels[std::size_t(f)] == "1" ? magnitude : magnitude + "*" + labels[std::size_t(f)];
      if (first)
        line += std::signbit(c) ? " -" + term : " " + term;
      else
        line += std::signbit(c) ? " - " + term : " + " + term;
      first = false;
    }
    if (first) line += " 0";
    lines.push_back(line);
  }
  return lines;
}

std::vector<std::string> formatEquations(Eigen::MatrixXd const &xi, std::vector<std::string> const &labels,
                                         int precision)
{
  Mask const nonzero = xi.array() != 0.0;
  return formatEquations(CoefficientMatrix(xi, nonzero), labels, precision);
}

namespace {

std::ofstream openForWrite(std::filesystem::path const &path)
{
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

} // namespace

void writeCoefficientCsv(std::filesystem::path const &path, std::vector<std::string> const &labels,
                         CoefficientMatrix const &xi)
{
  if (Index(labels.size()) != xi.features()) throw ShapeError("coefficient labels do not match coefficients");
  auto out = openForWrite(path);
  out << "feature";
  for (Index s = 1; s <= xi.states(); ++s) out << ",x" << s;
  for (Index s = 1; s <= xi.states(); ++s) out << ",mask_x" << s;
  out << '\n';
  for (Index f = 0; f < xi.features(); ++f) {
    out << labels[std::size_t(f)];
    for (Index s = 0; s < xi.states(); ++s) out << ',' << formatDouble(xi.values(f, s));
    for (Index s = 0; s < xi.states(); ++s) out << ',' << (xi.mask(f, s) ? 1 : 0);
    out << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

void writeTraceCsv(std::filesystem::path const &path, TrainingTrace const &trace)
{
  auto out = openForWrite(path);
  out << "iter,loss_total,loss_mse,loss_deri,loss_rk4,active_terms\n";
  for (auto const &r : trace.rows)
    out << r.iter << ',' << formatDouble(r.total) << ',' << formatDouble(r.mse) << ',' << formatDouble(r.deri)
        << ',' << formatDouble(r.rk4) << ',' << r.activeTerms << '\n';
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

void writeResultJson(std::filesystem::path const &path, DiscoveryResult const &result,
                     std::string const &coeffCsvPath)
{
  nlohmann::json j;
  j["method"] = result.method;
  j["system"] = result.system;
  j["sigma"] = result.sigma;
  j["alpha"] = result.alpha;
  j["seed"] = result.seed;
  j["equations"] = result.failed() ? std::vector<std::string>{}
                                   : formatEquations(result.xi, result.labels);
  j["coeff_csv_path"] = coeffCsvPath;
  j["E"] = nlohmann::json::array();
  if (result.error && !result.failed())
    for (double e : *result.error) j["E"].push_back(e);
  j["runtime_s"] = result.runtimeSeconds;
  if (result.failed()) j["failure"] = result.failure;
  auto out = openForWrite(path);
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

ResultSummary readResultJson(std::filesystem::path const &path)
{
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  nlohmann::json j;
  try {
    in >> j;
    ResultSummary r;
    r.method = j.at("method").get<std::string>();
    r.system = j.at("system").get<std::string>();
    r.sigma = j.at("sigma").get<double>();
    r.alpha = j.at("alpha").get<double>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.equations = j.at("equations").get<std::vector<std::string>>();
    for (auto const &e : j.at("E")) r.error.push_back(e.is_null() ? std::nan("") : e.get<double>());
    r.runtimeSeconds = j.at("runtime_s").get<double>();
    if (j.contains("failure")) r.failure = j["failure"].get<std::string>();
    r.source = path;
    return r;
  } catch (nlohmann::json::exception const &e) {
    throw std::runtime_error(path.string() + ": not a result file (" + e.what() + ")");
  }
}

} // namespace insindy
