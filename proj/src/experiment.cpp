#include "insindy/experiment.hpp"

#include "insindy/regression.hpp"
#include "insindy/rng.hpp"
#include "insindy/training.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace insindy {

namespace fs = std::filesystem;

Dataset datasetFor(ExperimentConfig const &config, double sigma)
{
  if (!config.datasetPath.empty()) return readDataset(config.datasetPath);
  return generateDataset(systemByName(config.system), config.initialConditions, config.generation(sigma));
}

namespace {

std::optional<OdeSystem> knownSystem(std::string const &name)
{
  try {
    return systemByName(name);
  } catch (ConfigError const &) {
    return std::nullopt;
  }
}

// Noisy states and finite-difference derivatives, trajectories stacked.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> stackedDerivatives(Dataset const &dataset)
{
  auto const rates = finiteDifferenceDerivatives(dataset);
  Eigen::MatrixXd X(dataset.totalSamples(), dataset.stateDim());
  Eigen::MatrixXd dX(X.rows(), X.cols());
  Index offset = 0;
  for (std::size_t j = 0; j < dataset.trajectories.size(); ++j) {
    Index const N = dataset.trajectories[j].noisy.rows();
    X.middleRows(offset, N) = dataset.trajectories[j].noisy;
    dX.middleRows(offset, N) = rates[j];
    offset += N;
  }
  return {X, dX};
}

} // namespace

DiscoveryResult runMethod(std::string const &method, Dataset const &dataset, ExperimentConfig const &config)
{
  Dictionary const dict(config.dictionarySpec());
  if (dict.stateDim() != dataset.stateDim()) throw ConfigError("dictionary does not match the dataset's state dimension");

  DiscoveryResult r;
  r.method = method;
  r.system = dataset.system;
  r.sigma = dataset.sigma;
  r.alpha = dataset.alpha;
  r.seed = config.seed;
  r.labels = dict.labels();
  r.config = config.serialize();
  r.xi = CoefficientMatrix::zeros(dict.size(), dataset.stateDim());

  auto const start = std::chrono::steady_clock::now();
  try {
    if (method == "ineural" || method == "deri_only" || method == "rk4_only") {
      TrainingOptions options = config.training();
      if (method == "deri_only") options.weights.rk4 = 0.0;
      if (method == "rk4_only") options.weights.deri = 0.0;
      auto outcome = trainINeural(dataset, dict, options);
      r.xi = std::move(outcome.xi);
      r.trace = std::move(outcome.trace);
      r.network = std::move(outcome.network);
    } else if (method == "rk4_direct") {
      auto outcome = rk4SindyDirect(dataset, dict, config.schedule, config.traceEvery);
      r.xi = std::move(outcome.xi);
      r.trace = std::move(outcome.trace);
    } else if (method == "stls") {
      auto const [X, dX] = stackedDerivatives(dataset);
      auto outcome = stlsSindy(dict.evaluate(X), dX, config.schedule.tol, config.stlsMaxIter);
      r.xi = std::move(outcome.xi);
    } else {
      throw ConfigError("unknown method '" + method + "'");
    }
    if (!r.xi.values.allFinite()) throw NumericalError(method + " produced non-finite coefficients");
  } catch (TrainingDiverged const &e) {
    r.failure = e.what();
    r.trace = e.trace();
  } catch (NumericalError const &e) {
    r.failure = e.what();
  }
  r.runtimeSeconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  if (auto sys = knownSystem(dataset.system); sys && sys->stateDim == dataset.stateDim())
    r.error = coeffError(r.labels, sys->groundTruth(dict, dataset.alpha), r.labels, r.xi.values);
  if (!r.failed()) {
    auto const &first = dataset.trajectories.front();
    try {
      r.simulation = simulateDiscovered(dict, r.xi.values, first.initialCondition, first.times);
    } catch (NumericalError const &) {
      // leave the overlay out; the coefficients are still reported
    }
  }
  return r;
}

namespace {

void writeLines(fs::path const &path, std::vector<std::string> const &lines)
{
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (auto const &l : lines) out << l << '\n';
}

void writeSimulation(fs::path const &path, Simulation const &sim)
{
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "t";
  for (Index i = 1; i <= sim.states.cols(); ++i) out << ",x" << i;
  out << '\n';
  for (Index k = 0; k < sim.states.rows(); ++k) {
    out << formatDouble(sim.times(k));
    for (Index i = 0; i < sim.states.cols(); ++i) out << ',' << formatDouble(sim.states(k, i));
    out << '\n';
  }
}

std::string sigmaTag(double sigma) { return "sigma_" + formatDouble(sigma); }

} // namespace

void writeResult(fs::path const &dir, DiscoveryResult const &result)
{
  fs::create_directories(dir);
  writeCoefficientCsv(dir / "xi.csv", result.labels, result.xi);
  writeTraceCsv(dir / "trace.csv", result.trace);
  writeResultJson(dir / "result.json", result, "xi.csv");
  if (!result.failed()) writeLines(dir / "equations.txt", formatEquations(result.xi, result.labels));
  if (result.simulation) writeSimulation(dir / "simulation.csv", *result.simulation);
  if (result.network) result.network->save(dir / "network.json");
}

std::uint64_t cellSeed(std::uint64_t seed, std::size_t row, std::size_t col)
{
  return seed ^ mix64((std::uint64_t(row) << 32) | std::uint64_t(col));
}

namespace {

std::size_t methodRank(std::string const &m)
{
  auto const &all = knownMethods();
  return std::size_t(std::find(all.begin(), all.end(), m) - all.begin());
}

// Maps log10(E) onto a blue-to-yellow ramp; NaN cells are grey.
std::string cellColour(double e)
{
  if (!std::isfinite(e)) return "#bbbbbb";
  double const t = std::clamp((std::log10(std::max(e, 1e-12)) + 4.0) / 5.0, 0.0, 1.0);
  int const r = int(std::lround(40 + t * (250 - 40)));
  int const g = int(std::lround(40 + t * (220 - 40)));
  int const b = int(std::lround(140 + t * (30 - 140)));
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

void writeHeatmap(fs::path const &path, std::string const &method, std::string const &sizeName,
                  std::vector<double> const &sigmas, std::vector<Index> const &sizes,
                  std::vector<SweepCell> const &cells)
{
  int const cw = 90, ch = 40, left = 80, top = 50;
  int const width = left + cw * int(sizes.size()) + 20;
  int const height = top + ch * int(sigmas.size()) + 50;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<text x=\"" << left << "\" y=\"20\">" << method << ": E_total</text>\n";
  for (std::size_t j = 0; j < sizes.size(); ++j)
    out << "<text x=\"" << left + cw * int(j) + cw / 2 << "\" y=\"" << top - 8 << "\" text-anchor=\"middle\">"
        << sizes[j] << "</text>\n";
  for (std::size_t i = 0; i < sigmas.size(); ++i)
    out << "<text x=\"" << left - 8 << "\" y=\"" << top + ch * int(i) + ch / 2 + 4 << "\" text-anchor=\"end\">"
        << formatDouble(sigmas[i]) << "</text>\n";
  for (auto const &c : cells) {
    if (c.method != method) continue;
    int const x = left + cw * int(c.col);
    int const y = top + ch * int(c.row);
    double const e = c.errorTotal();
    char label[32];
    if (std::isfinite(e))
      std::snprintf(label, sizeof label, "%.4f", e);
    else
      std::snprintf(label, sizeof label, "NaN");
    out << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cw << "\" height=\"" << ch << "\" fill=\""
        << cellColour(e) << "\" stroke=\"white\"/>\n";
    out << "<text x=\"" << x + cw / 2 << "\" y=\"" << y + ch / 2 + 4 << "\" text-anchor=\"middle\">" << label
        << "</text>\n";
  }
  out << "<text x=\"" << left << "\" y=\"" << height - 15 << "\">columns: " << sizeName
      << ", rows: sigma</text>\n</svg>\n";
}

} // namespace

SweepOutcome runSweep(ExperimentConfig const &config, int jobs, std::ostream &log)
{
  config.validate();
  if (!config.datasetPath.empty()) throw ConfigError("sweeps generate their own data; remove [data] dataset");
  bool const sceneA = config.sweepMode == SweepMode::SceneA;
  auto const &sizes = sceneA ? config.sweepSamples : config.sweepNeurons;

  SweepOutcome outcome;
  outcome.initialConditions = config.initialConditions;
  if (config.sweepIcRange) {
    // one draw shared by every cell
    CounterRng rng(mix64(config.seed ^ 0x69632d64726177ULL));
    outcome.initialConditions.resize(1, config.initialConditions.cols());
    for (Index i = 0; i < outcome.initialConditions.cols(); ++i)
      outcome.initialConditions(0, i) = rng.uniform(config.sweepIcRange->first, config.sweepIcRange->second);
  }

  for (std::size_t i = 0; i < config.sweepSigmas.size(); ++i)
    for (std::size_t j = 0; j < sizes.size(); ++j)
      for (auto const &m : config.methods) {
        SweepCell c;
        c.row = i;
        c.col = j;
        c.sigma = config.sweepSigmas[i];
        c.size = sizes[j];
        c.method = m;
        outcome.cells.push_back(std::move(c));
      }
  std::stable_sort(outcome.cells.begin(), outcome.cells.end(), [](SweepCell const &a, SweepCell const &b) {
    return std::tuple(a.row, a.col, methodRank(a.method)) < std::tuple(b.row, b.col, methodRank(b.method));
  });

  std::atomic<std::size_t> next{0};
  std::mutex logMutex;
  auto worker = [&] {
    for (std::size_t k = next++; k < outcome.cells.size(); k = next++) {
      auto &cell = outcome.cells[k];
      ExperimentConfig cfg = config;
      cfg.seed = cellSeed(config.seed, cell.row, cell.col);
      cfg.initialConditions = outcome.initialConditions;
      if (sceneA)
        cfg.samples = cell.size;
      else
        std::fill(cfg.hidden.begin(), cfg.hidden.end(), cell.size);
      Index const n = cfg.initialConditions.cols();
      try {
        auto const data = datasetFor(cfg, cell.sigma);
        auto const r = runMethod(cell.method, data, cfg);
        if (r.failed()) {
          cell.failure = r.failure;
          cell.error = Eigen::RowVectorXd::Constant(n, std::nan(""));
        } else {
          cell.error = r.error ? *r.error : Eigen::RowVectorXd::Constant(n, std::nan(""));
        }
      } catch (std::exception const &e) {
        cell.failure = e.what();
        cell.error = Eigen::RowVectorXd::Constant(n, std::nan(""));
      }
      std::lock_guard lock(logMutex);
      log << "cell sigma=" << formatDouble(cell.sigma) << ' ' << (sceneA ? "samples" : "neurons") << '='
          << cell.size << ' ' << cell.method << ": E_total=" << cell.errorTotal()
          << (cell.failure.empty() ? "" : " (" + cell.failure + ")") << '\n';
    }
  };
  int const workers = std::max(1, std::min<int>(jobs, int(outcome.cells.size())));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto &t : pool) t.join();
  }
  return outcome;
}

int cmdGenerate(ExperimentConfig const &config, std::ostream &out)
{
  config.validate();
  fs::create_directories(config.outDir);
  for (double sigma : config.sigmas) {
    auto const data = generateDataset(systemByName(config.system), config.initialConditions, config.generation(sigma));
    fs::path const path = fs::path(config.outDir) / ("dataset_" + sigmaTag(sigma) + ".csv");
    writeDataset(data, path);
    out << "wrote " << path.string() << ": " << config.system << ", " << data.trajectoryCount()
        << " trajectories, " << data.totalSamples() << " rows, sigma " << formatDouble(sigma) << '\n';
  }
  return 0;
}

int cmdDiscover(ExperimentConfig const &config, std::ostream &out)
{
  config.validate();
  fs::path const root(config.outDir);
  fs::create_directories(root);
  {
    std::ofstream snap(root / "config.ini");
    if (!snap) throw std::runtime_error("cannot write " + (root / "config.ini").string());
    snap << config.serialize();
  }
  std::vector<double> const sigmas = config.datasetPath.empty() ? config.sigmas : std::vector<double>{0.0};
  bool anyFailed = false;
  for (double sigma : sigmas) {
    auto const data = datasetFor(config, sigma);
    for (auto const &method : config.methods) {
      auto const r = runMethod(method, data, config);
      fs::path const dir = root / sigmaTag(data.sigma) / method;
      writeResult(dir, r);
      out << "[" << method << ", sigma " << formatDouble(data.sigma) << "] ";
      if (r.failed()) {
        anyFailed = true;
        out << "FAILED: " << r.failure << '\n';
        continue;
      }
      out << std::fixed;
      out.precision(1);
      out << r.runtimeSeconds << " s\n";
      out.unsetf(std::ios::floatfield);
      out.precision(6);
      for (auto const &line : formatEquations(r.xi, r.labels)) out << "  " << line << '\n';
      if (r.error) {
        out << "  E =";
        for (double e : *r.error) out << ' ' << e;
        out << '\n';
      }
    }
  }
  return anyFailed ? 3 : 0;
}

int cmdSweep(ExperimentConfig const &config, int jobs, std::ostream &out)
{
  auto const outcome = runSweep(config, jobs, out);
  bool const sceneA = config.sweepMode == SweepMode::SceneA;
  fs::path const root(config.outDir);
  fs::create_directories(root);
  Index const n = outcome.initialConditions.cols();

  std::ofstream csv(root / "sweep.csv");
  std::ofstream states(root / "sweep_states.csv");
  if (!csv || !states) throw std::runtime_error("cannot write sweep tables in " + root.string());
  csv << "sigma,samples_or_neurons,method,E_total\n";
  states << "sigma,samples_or_neurons,method";
  for (Index i = 1; i <= n; ++i) states << ",E_x" << i;
  states << '\n';
  for (auto const &c : outcome.cells) {
    csv << formatDouble(c.sigma) << ',' << c.size << ',' << c.method << ',' << formatDouble(c.errorTotal()) << '\n';
    states << formatDouble(c.sigma) << ',' << c.size << ',' << c.method;
    for (Index i = 0; i < n; ++i) states << ',' << formatDouble(c.error(i));
    states << '\n';
  }
  {
    std::ofstream ic(root / "sweep_initial_conditions.csv");
    for (Index r = 0; r < outcome.initialConditions.rows(); ++r) {
      for (Index i = 0; i < n; ++i) ic << (i ? "," : "") << formatDouble(outcome.initialConditions(r, i));
      ic << '\n';
    }
  }
  auto const &sizes = sceneA ? config.sweepSamples : config.sweepNeurons;
  for (auto const &m : config.methods)
    writeHeatmap(root / ("heatmap_" + m + ".svg"), m, sceneA ? "samples" : "neurons", config.sweepSigmas, sizes,
                 outcome.cells);
  out << "wrote " << (root / "sweep.csv").string() << " (" << outcome.cells.size() << " rows)\n";
  return 0;
}

namespace {

std::string csvQuoted(std::string const &s)
{
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

} // namespace

int cmdReport(fs::path const &dir, std::ostream &out)
{
  if (!fs::is_directory(dir)) throw ConfigError("results directory " + dir.string() + " does not exist");
  std::vector<ResultSummary> results;
  for (auto const &entry : fs::recursive_directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().filename() == "result.json")
      results.push_back(readResultJson(entry.path()));
  if (results.empty()) throw ConfigError("no result.json files under " + dir.string());

  std::sort(results.begin(), results.end(), [](ResultSummary const &a, ResultSummary const &b) {
    return std::tuple(a.system, a.sigma, methodRank(a.method), a.source) <
           std::tuple(b.system, b.sigma, methodRank(b.method), b.source);
  });
  std::size_t nE = 0;
  for (auto const &r : results) nE = std::max(nE, r.error.size());

  std::ostringstream md;
  md << "| system | sigma | method | equations |";
  for (std::size_t i = 1; i <= nE; ++i) md << " E(x" << i << ") |";
  md << " E_total | runtime_s |\n|---|---|---|---|";
  for (std::size_t i = 0; i < nE; ++i) md << "---|";
  md << "---|---|\n";

  std::ofstream csv(dir / "report.csv");
  if (!csv) throw std::runtime_error("cannot write " + (dir / "report.csv").string());
  csv << "system,sigma,method,seed,equations";
  for (std::size_t i = 1; i <= nE; ++i) csv << ",E_x" << i;
  csv << ",E_total,runtime_s\n";

  for (auto const &r : results) {
    std::string eqs;
    for (std::size_t i = 0; i < r.equations.size(); ++i) eqs += (i ? "; " : "") + r.equations[i];
    if (!r.failure.empty()) eqs = "failed: " + r.failure;
    md << "| " << r.system << " | " << formatDouble(r.sigma) << " | " << r.method << " | " << eqs << " |";
    csv << r.system << ',' << formatDouble(r.sigma) << ',' << r.method << ',' << r.seed << ',' << csvQuoted(eqs);
    double total = 0.0;
    for (std::size_t i = 0; i < nE; ++i) {
      // blank rather than zero when there is no ground truth
      std::string const cell = i < r.error.size() ? formatDouble(r.error[i]) : "";
      if (i < r.error.size()) total += r.error[i];
      md << ' ' << cell << " |";
      csv << ',' << cell;
    }
    std::string const totalCell = r.error.empty() ? "" : formatDouble(total);
    char runtime[32];
    std::snprintf(runtime, sizeof runtime, "%.2f", r.runtimeSeconds);
    md << ' ' << totalCell << " | " << runtime << " |\n";
    csv << ',' << totalCell << ',' << runtime << '\n';
  }
  std::ofstream mdFile(dir / "report.md");
  if (!mdFile) throw std::runtime_error("cannot write " + (dir / "report.md").string());
  mdFile << md.str();
  out << md.str();
  return 0;
}

} // namespace insindy
