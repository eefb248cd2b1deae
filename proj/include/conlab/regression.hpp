#pragma once

#include "conlab/algorithms.hpp"
#include "conlab/graph.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace conlab {

/// y = a x + b with b known; agents own contiguous shards of the points.
struct RegressionProblem {
  std::vector<double> x;
  std::vector<double> y;
  double intercept = 4.267;
  std::size_t agents = 5;

  /// [begin, end) of agent i's shard.
  std::pair<std::size_t, std::size_t> shard(std::size_t agent) const;
  /// Per-agent sum x (y - b).
  Eigen::VectorXd numerators() const;
  /// Per-agent sum x^2. Throws DomainError if any is zero.
  Eigen::VectorXd denominators() const;
  /// Least-squares slope over all points.
  double central_slope() const;
};

RegressionProblem synthetic_regression(std::size_t points, std::size_t agents, std::uint64_t seed,
                                       double slope = 1.373, double intercept = 4.267,
                                       double noise = 5.5);

/// CSV with header `x,y`.
RegressionProblem load_regression_csv(const std::filesystem::path& path, double intercept,
                                      std::size_t agents);

/// Relative threshold for the division guard.
inline constexpr double kDivisionGuard = 1e-9;

struct RegressionRun {
  Eigen::MatrixXd estimates;  // (K + 1) x N, NaN where the guard tripped
  double target = 0.0;        // central slope
  std::size_t guarded = 0;    // entries reported missing

  /// log10 sum_i (a_i(k) - a)^2 per round, NaN when any agent is missing.
  std::vector<double> error() const;
};

/// Two consensus runs (numerators, denominators) and the per-round ratio.
RegressionRun distributed_regression(const RegressionProblem& problem, const Graph& g,
                                     const AlgorithmSpec& spec, std::size_t rounds);

}  // namespace conlab
