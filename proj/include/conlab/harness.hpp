#pragma once

#include "conlab/algorithms.hpp"
#include "conlab/graph.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace conlab {

struct GraphSource {
  std::string builder = "ring";  // ring, path, complete, star, five_agent, random, edges
  std::size_t n = 20;
  double edge_prob = 0.3;        // random only
  std::filesystem::path edges;   // edges only

  Graph build(std::uint64_t seed) const;
};

struct AlgorithmConfig {
  Algorithm kind = Algorithm::Laplacian;
  std::optional<double> step;
  int buffer = 0;
  ParameterSource source = ParameterSource::Exact;

  AlgorithmSpec resolve(const Graph& g) const;
};

struct InputSource {
  enum class Kind { Uniform, Explicit };
  Kind kind = Kind::Uniform;
  double low = 0.0;
  double high = 100.0;
  std::vector<double> values;

  Eigen::VectorXd generate(std::size_t n, std::uint64_t seed) const;
};

struct Experiment {
  GraphSource graph;
  std::vector<AlgorithmConfig> algorithms;
  InputSource inputs;
  std::size_t rounds = 50;
  std::uint64_t seed = 0;
  std::filesystem::path sink = "out";
  bool keep_partial = false;
};

struct ReportEntry {
  std::string name;
  AlgorithmSpec spec;
  std::optional<double> measured_factor;
  std::optional<double> predicted_factor;  // Laplacian family only
  double final_error = 0.0;
  std::string note;
};

struct ComparisonReport {
  std::string graph;
  std::size_t agents = 0;
  std::size_t rounds = 0;
  std::uint64_t seed = 0;
  std::string input_hash;
  std::vector<ReportEntry> ranking;  // fastest first
  std::vector<std::string> failures;

  /// Position of `name` in the ranking; throws std::out_of_range.
  std::size_t rank_of(const std::string& name) const;
  nlohmann::json to_json() const;
};

struct ExperimentResult {
  ComparisonReport report;
  std::vector<Trajectory> trajectories;  // same order as the ranking
};

/// Runs every algorithm on the same graph and input vector. Cells run in
/// parallel; the result does not depend on scheduling. Any algorithm failure
/// is rethrown unless `keep_partial` is set.
ExperimentResult run_experiment(const Experiment& exp);
ExperimentResult run_experiment(const Experiment& exp, const Graph& g);

/// Writes `trajectory_<name>.csv` for each run and `report.json`.
void write_experiment(const ExperimentResult& result, const std::filesystem::path& sink);

/// e(k) = log10 sum_i (x_i(k) - target_i)^2, floored at -16.
std::vector<double> error_series(const Eigen::MatrixXd& states, const Eigen::VectorXd& target);
std::vector<double> error_series(const Trajectory& t, double target);
std::vector<double> error_series(const Trajectory& t);

inline constexpr double kErrorFloorDecades = -16.0;

/// Strict schema: unknown fields raise ConfigError; relative paths resolve
/// against `base_dir`.
Experiment parse_experiment(const nlohmann::json& j, const std::filesystem::path& base_dir);
Experiment load_experiment(const std::filesystem::path& path);

/// Throws ConfigError when `j` holds keys outside `allowed`.
void reject_unknown_fields(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                           const std::string& where);

}  // namespace conlab
