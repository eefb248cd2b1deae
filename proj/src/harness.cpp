#include "conlab/harness.hpp"

#include "conlab/errors.hpp"
#include "conlab/io.hpp"
#include "conlab/rates.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>
#include <random>
#include <sstream>

namespace conlab {
namespace {

constexpr std::uint64_t kGraphStream = 0x9e3779b97f4a7c15ULL;

template <typename T>
T get_field(const nlohmann::json& j, const char* key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

ParameterSource parse_source(const std::string& s, const std::string& where) {
  if (s == "exact") return ParameterSource::Exact;
  if (s == "bounds") return ParameterSource::Bounds;
  throw ConfigError(where + ".source must be 'exact' or 'bounds', got '" + s + "'");
}

}  // namespace

void reject_unknown_fields(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                           const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* a) { return key == a; });
    if (!known) throw ConfigError(where + ": unknown field '" + key + "'");
  }
}

Graph GraphSource::build(std::uint64_t seed) const {
  if (builder == "ring") return ring(n);
  if (builder == "path") return path(n);
  if (builder == "complete") return complete(n);
  if (builder == "star") return star(n);
  if (builder == "five_agent") return five_agent_graph();
  if (builder == "random") {
    std::mt19937_64 rng(seed ^ kGraphStream);
    return random_connected(n, edge_prob, rng);
  }
  if (builder == "edges") return load_edge_list(edges);
  throw ConfigError("unknown graph builder '" + builder + "'");
}

AlgorithmSpec AlgorithmConfig::resolve(const Graph& g) const {
  return AlgorithmSpec::tuned(kind, g, source, step, buffer);
}

Eigen::VectorXd InputSource::generate(std::size_t n, std::uint64_t seed) const {
  if (kind == Kind::Explicit) {
    if (values.size() != n) {
      throw ConfigError("inputs.values has " + std::to_string(values.size()) +
                        " entries for a graph of " + std::to_string(n) + " agents");
    }
    return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(n));
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(low, high);
  Eigen::VectorXd r(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < r.size(); ++i) r(i) = dist(rng);
  return r;
}

std::size_t ComparisonReport::rank_of(const std::string& name) const {
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    if (ranking[i].name == name) return i;
  }
  throw std::out_of_range("no algorithm named '" + name + "' in report");
}

nlohmann::json ComparisonReport::to_json() const {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : ranking) {
    nlohmann::json j{{"name", e.name},
                     {"algorithm", spec_to_json(e.spec)},
                     {"final_error", round12(e.final_error)}};
    j["measured_factor"] = e.measured_factor ? nlohmann::json(round12(*e.measured_factor))
                                             : nlohmann::json(nullptr);
    j["predicted_factor"] = e.predicted_factor ? nlohmann::json(round12(*e.predicted_factor))
                                               : nlohmann::json(nullptr);
    if (!e.note.empty()) j["note"] = e.note;
    entries.push_back(std::move(j));
  }
  return {{"graph", graph},   {"agents", agents},         {"rounds", rounds},
          {"seed", seed},     {"input_hash", input_hash}, {"ranking", std::move(entries)},
          {"failures", failures}};
}

ExperimentResult run_experiment(const Experiment& exp) {
  const Graph g = exp.graph.build(exp.seed);
  return run_experiment(exp, g);
}

ExperimentResult run_experiment(const Experiment& exp, const Graph& g) {
  if (exp.algorithms.empty()) throw ConfigError("experiment lists no algorithms");
  if (exp.rounds < 1) throw ConfigError("rounds must be at least 1");
  const Eigen::VectorXd inputs = exp.inputs.generate(g.size(), exp.seed);

  // Resolve names up front so repeated configurations stay distinguishable.
  std::vector<AlgorithmSpec> specs;
  std::vector<std::string> names;
  std::map<std::string, int> seen;
  for (const auto& cfg : exp.algorithms) {
    specs.push_back(cfg.resolve(g));
    std::string name = specs.back().name();
    if (const int count = ++seen[name]; count > 1) name += "_" + std::to_string(count);
    names.push_back(std::move(name));
  }

  const auto cells = static_cast<std::ptrdiff_t>(specs.size());
  std::vector<std::optional<Trajectory>> runs(specs.size());
  std::vector<ReportEntry> entries(specs.size());
  std::vector<std::exception_ptr> errors(specs.size());

#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t c = 0; c < cells; ++c) {
    const auto i = static_cast<std::size_t>(c);
    try {
      Trajectory t = run(specs[i], g, inputs, exp.rounds, Backend::Serial);
      ReportEntry& e = entries[i];
      e.name = names[i];
      e.spec = specs[i];
      e.final_error = t.disagreement.back();
      try {
        e.measured_factor = measured_factor(t);
      } catch (const DegenerateTrajectoryError& err) {
        e.note = std::string("insufficient-window: ") + err.what();
      }
      if (specs[i].kind == Algorithm::Laplacian || specs[i].kind == Algorithm::BufferedLaplacian) {
        e.predicted_factor = convergence_factor(specs[i].buffer, specs[i].step, g.spectrum()).factor;
      }
      runs[i] = std::move(t);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }

  ExperimentResult result;
  auto& report = result.report;
  report.graph = g.name();
  report.agents = g.size();
  report.rounds = exp.rounds;
  report.seed = exp.seed;
  report.input_hash = hash_values(std::span<const double>(inputs.data(), inputs.size()));

  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (!errors[i]) continue;
    if (!exp.keep_partial) std::rethrow_exception(errors[i]);
    try {
      std::rethrow_exception(errors[i]);
    } catch (const std::exception& err) {
      report.failures.push_back(names[i] + ": " + err.what());
    }
  }

  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (runs[i]) order.push_back(i);
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ea = entries[a];
    const auto& eb = entries[b];
    if (ea.measured_factor.has_value() != eb.measured_factor.has_value()) {
      return ea.measured_factor.has_value();
    }
    if (ea.measured_factor && *ea.measured_factor != *eb.measured_factor) {
      return *ea.measured_factor < *eb.measured_factor;
    }
    return ea.name < eb.name;
  });
  for (const std::size_t i : order) {
    report.ranking.push_back(entries[i]);
    result.trajectories.push_back(std::move(*runs[i]));
  }
  return result;
}

void write_experiment(const ExperimentResult& result, const std::filesystem::path& sink) {
  for (std::size_t i = 0; i < result.trajectories.size(); ++i) {
    std::ostringstream csv;
    write_trajectory_csv(csv, result.trajectories[i]);
    write_text_file(sink / ("trajectory_" + result.report.ranking[i].name + ".csv"), csv.str());
  }
  write_text_file(sink / "report.json", result.report.to_json().dump(2) + "\n");
}

std::vector<double> error_series(const Eigen::MatrixXd& states, const Eigen::VectorXd& target) {
  if (states.cols() != target.size()) {
    throw DimensionError("error target has " + std::to_string(target.size()) +
                         " entries for " + std::to_string(states.cols()) + " agents");
  }
  std::vector<double> e;
  e.reserve(static_cast<std::size_t>(states.rows()));
  for (Eigen::Index k = 0; k < states.rows(); ++k) {
    const double sq = (states.row(k).transpose() - target).squaredNorm();
    e.push_back(std::max(std::log10(sq), kErrorFloorDecades));
  }
  return e;
}

std::vector<double> error_series(const Trajectory& t, double target) {
  if (!std::isfinite(target)) throw DomainError("error target must be finite");
  return error_series(t.states, Eigen::VectorXd::Constant(t.states.cols(), target));
}

std::vector<double> error_series(const Trajectory& t) { return error_series(t, t.average); }

Experiment parse_experiment(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  reject_unknown_fields(j, {"graph", "algorithms", "inputs", "rounds", "seed", "sink", "keep_partial"},
                        "experiment");
  Experiment exp;

  const auto& gj = j.contains("graph") ? j.at("graph") : throw ConfigError("experiment.graph is required");
  reject_unknown_fields(gj, {"builder", "n", "edge_prob", "edges"}, "experiment.graph");
  if (gj.contains("edges")) {
    exp.graph.builder = "edges";
    exp.graph.edges = get_field<std::string>(gj, "edges", "experiment.graph");
    if (exp.graph.edges.is_relative()) exp.graph.edges = base_dir / exp.graph.edges;
  }
  if (gj.contains("builder")) exp.graph.builder = get_field<std::string>(gj, "builder", "experiment.graph");
  if (gj.contains("n")) exp.graph.n = get_field<std::size_t>(gj, "n", "experiment.graph");
  if (gj.contains("edge_prob")) exp.graph.edge_prob = get_field<double>(gj, "edge_prob", "experiment.graph");

  if (!j.contains("algorithms") || !j.at("algorithms").is_array()) {
    throw ConfigError("experiment.algorithms must be an array");
  }
  std::size_t idx = 0;
  for (const auto& aj : j.at("algorithms")) {
    const std::string where = "experiment.algorithms[" + std::to_string(idx++) + "]";
    reject_unknown_fields(aj, {"kind", "step", "buffer", "source"}, where);
    AlgorithmConfig cfg;
    cfg.kind = parse_algorithm(get_field<std::string>(aj, "kind", where));
    if (aj.contains("step")) cfg.step = get_field<double>(aj, "step", where);
    if (aj.contains("buffer")) cfg.buffer = get_field<int>(aj, "buffer", where);
    if (aj.contains("source")) cfg.source = parse_source(get_field<std::string>(aj, "source", where), where);
    if (cfg.buffer < 0) throw ConfigError(where + ".buffer must be nonnegative");
    exp.algorithms.push_back(cfg);
  }

  if (j.contains("inputs")) {
    const auto& ij = j.at("inputs");
    reject_unknown_fields(ij, {"kind", "low", "high", "values"}, "experiment.inputs");
    const std::string kind = ij.contains("kind") ? get_field<std::string>(ij, "kind", "experiment.inputs")
                                                 : (ij.contains("values") ? "explicit" : "uniform");
    if (kind == "explicit") {
      exp.inputs.kind = InputSource::Kind::Explicit;
      exp.inputs.values = get_field<std::vector<double>>(ij, "values", "experiment.inputs");
    } else if (kind == "uniform") {
      if (ij.contains("low")) exp.inputs.low = get_field<double>(ij, "low", "experiment.inputs");
      if (ij.contains("high")) exp.inputs.high = get_field<double>(ij, "high", "experiment.inputs");
      if (!(exp.inputs.low < exp.inputs.high)) throw ConfigError("experiment.inputs: low must be < high");
    } else {
      throw ConfigError("experiment.inputs.kind must be 'uniform' or 'explicit'");
    }
  }
  if (j.contains("rounds")) exp.rounds = get_field<std::size_t>(j, "rounds", "experiment");
  if (j.contains("seed")) exp.seed = get_field<std::uint64_t>(j, "seed", "experiment");
  if (j.contains("sink")) exp.sink = get_field<std::string>(j, "sink", "experiment");
  if (exp.sink.is_relative()) exp.sink = base_dir / exp.sink;
  if (j.contains("keep_partial")) exp.keep_partial = get_field<bool>(j, "keep_partial", "experiment");
  if (exp.rounds < 1) throw ConfigError("experiment.rounds must be at least 1");
  return exp;
}

Experiment load_experiment(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_experiment(j, path.parent_path());
}

}  // namespace conlab
