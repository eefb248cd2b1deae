#include "conlab/regression.hpp"

#include "conlab/errors.hpp"
#include "conlab/harness.hpp"
#include "conlab/io.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace conlab {

std::pair<std::size_t, std::size_t> RegressionProblem::shard(std::size_t agent) const {
  if (agents == 0 || x.size() < agents) {
    throw DimensionError("cannot split " + std::to_string(x.size()) + " points over " +
                         std::to_string(agents) + " agents");
  }
  if (agent >= agents) throw DimensionError("agent index out of range");
  const std::size_t base = x.size() / agents;
  const std::size_t extra = x.size() % agents;
  const std::size_t begin = agent * base + std::min(agent, extra);
  return {begin, begin + base + (agent < extra ? 1 : 0)};
}

Eigen::VectorXd RegressionProblem::numerators() const {
  if (x.size() != y.size()) throw DimensionError("x and y differ in length");
  Eigen::VectorXd r(static_cast<Eigen::Index>(agents));
  for (std::size_t i = 0; i < agents; ++i) {
    const auto [b, e] = shard(i);
    double s = 0.0;
    for (std::size_t k = b; k < e; ++k) s += x[k] * (y[k] - intercept);
    r(static_cast<Eigen::Index>(i)) = s;
  }
  return r;
}

Eigen::VectorXd RegressionProblem::denominators() const {
  Eigen::VectorXd r(static_cast<Eigen::Index>(agents));
  for (std::size_t i = 0; i < agents; ++i) {
    const auto [b, e] = shard(i);
    double s = 0.0;
    for (std::size_t k = b; k < e; ++k) s += x[k] * x[k];
    if (!(s > 0.0)) {
      throw DomainError("agent " + std::to_string(i + 1) + " holds no nonzero x values");
    }
    r(static_cast<Eigen::Index>(i)) = s;
  }
  return r;
}

double RegressionProblem::central_slope() const {
  return numerators().sum() / denominators().sum();
}

RegressionProblem synthetic_regression(std::size_t points, std::size_t agents, std::uint64_t seed,
                                       double slope, double intercept, double noise) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(5.0, 25.0);
  std::normal_distribution<double> eps(0.0, noise);
  RegressionProblem p;
  p.intercept = intercept;
  p.agents = agents;
  for (std::size_t k = 0; k < points; ++k) {
    const double xv = ux(rng);
    p.x.push_back(xv);
    p.y.push_back(slope * xv + intercept + eps(rng));
  }
  return p;
}

RegressionProblem load_regression_csv(const std::filesystem::path& path, double intercept,
                                      std::size_t agents) {
  std::istringstream in(read_text_file(path));
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "x,y") throw ConfigError(path.string() + ": header must be 'x,y'");
  RegressionProblem p;
  p.intercept = intercept;
  p.agents = agents;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected two columns");
    }
    try {
      std::size_t used = 0;
      const double xv = std::stod(line.substr(0, comma), &used);
      const std::string rest = line.substr(comma + 1);
      const double yv = std::stod(rest, &used);
      if (used != rest.size() || !std::isfinite(xv) || !std::isfinite(yv)) throw std::invalid_argument("");
      p.x.push_back(xv);
      p.y.push_back(yv);
    } catch (const std::logic_error&) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": malformed number");
    }
  }
  if (p.x.size() < agents) {
    throw ConfigError(path.string() + ": fewer points than agents");
  }
  return p;
}

std::vector<double> RegressionRun::error() const {
  std::vector<double> e;
  for (Eigen::Index k = 0; k < estimates.rows(); ++k) {
    if (!estimates.row(k).allFinite()) {
      e.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    const double sq = (estimates.row(k).array() - target).square().sum();
    e.push_back(std::max(std::log10(sq), kErrorFloorDecades));
  }
  return e;
}

RegressionRun distributed_regression(const RegressionProblem& problem, const Graph& g,
                                     const AlgorithmSpec& spec, std::size_t rounds) {
  if (g.size() != problem.agents) {
    throw DimensionError("graph has " + std::to_string(g.size()) + " agents, problem has " +
                         std::to_string(problem.agents));
  }
  const auto n = static_cast<Eigen::Index>(problem.agents);
  StateMatrix inputs(n, 2);
  inputs.col(0) = problem.numerators();
  inputs.col(1) = problem.denominators();
  const double scale = inputs.col(1).cwiseAbs().maxCoeff();

  RegressionRun run;
  run.target = problem.central_slope();
  run.estimates.resize(static_cast<Eigen::Index>(rounds) + 1, n);
  run_states(spec, g, inputs, rounds, [&](std::size_t k, const StateMatrix& x) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double den = x(i, 1);
      double& out = run.estimates(static_cast<Eigen::Index>(k), i);
      if (std::abs(den) < kDivisionGuard * scale) {
        out = std::numeric_limits<double>::quiet_NaN();
        ++run.guarded;
      } else {
        out = x(i, 0) / den;
      }
    }
  });
  return run;
}

}  // namespace conlab
