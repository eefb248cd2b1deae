#pragma once

#include "conlab/algorithms.hpp"
#include "conlab/graph.hpp"
#include "conlab/harness.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace conlab::gmm {

using Point = Eigen::Vector2d;

/// Axis-aligned observation area.
struct Area {
  double x_min = -80.0;
  double x_max = 80.0;
  double y_min = -60.0;
  double y_max = 60.0;

  /// Length of the shorter side; sets the initial spread and the covariance
  /// floor.
  double scale() const { return std::min(x_max - x_min, y_max - y_min); }
  bool contains(const Point& p) const {
    return p.x() > x_min && p.x() < x_max && p.y() > y_min && p.y() < y_max;
  }
};

/// Two-dimensional Gaussian mixture.
struct Model {
  std::vector<double> weights;
  std::vector<Eigen::Vector2d> means;
  std::vector<Eigen::Matrix2d> covariances;

  std::size_t size() const { return weights.size(); }
};

double log_gaussian(const Point& p, const Eigen::Vector2d& mean, const Eigen::Matrix2d& cov);

/// Responsibilities, one column per point, each column summing to one. Uses
/// log-sum-exp; throws DegenerateDensityError when a point has no finite
/// log density under any component.
Eigen::MatrixXd e_step(const Model& model, std::span<const Point> points);

/// sum_n log sum_l pi_l N(p_n | mu_l, Sigma_l)
double log_likelihood(const Model& model, std::span<const Point> points);

/// Per-agent partial sums entering the M-step. `scatter` is taken about the
/// means of the agent's own current model, stored as (xx, xy, yy) per row.
struct Statistics {
  Eigen::VectorXd mass;     // sum_n zeta_ln                Ns
  Eigen::MatrixXd first;    // sum_n zeta_ln p_n            Ns x 2
  Eigen::MatrixXd scatter;  // sum_n zeta_ln (p - mu)(p - mu)^T   Ns x 3

  static Statistics zeros(std::size_t bases);
  Statistics& operator+=(const Statistics& other);
};

Statistics local_statistics(const Model& model, const Eigen::MatrixXd& responsibilities,
                            std::span<const Point> points);

struct Diagnostics {
  std::size_t covariance_floors = 0;  // CovarianceFloorApplied
  std::size_t mass_guards = 0;        // components whose estimated mass was not positive
};

/// Builds an agent's next model from (estimates of) the global sums.
/// `previous` is the model the scatter was centred on. The covariance is
/// re-centred on the new mean, symmetrised, and eigenvalue-floored.
Model assemble_model(const Statistics& global, const Model& previous, std::size_t total_points,
                     double covariance_floor, Diagnostics* diag = nullptr);

/// Textbook M-step on the full point set.
Model centralized_m_step(const Eigen::MatrixXd& responsibilities, std::span<const Point> points,
                         double covariance_floor, Diagnostics* diag = nullptr);

/// Consensus-based M-step. Three componentwise consensus runs of
/// `consensus_rounds` rounds estimate the averages of mass, first moments
/// and scatter; agents multiply by N and assemble locally. `g` may be null
/// only for a single agent.
std::vector<Model> distributed_m_step(const Graph* g, const AlgorithmSpec& spec,
                                      std::span<const Statistics> local,
                                      std::span<const Model> previous, std::size_t total_points,
                                      std::size_t consensus_rounds, double covariance_floor,
                                      Diagnostics* diag = nullptr);

/// Random ground-truth mixture inside `area` and samples drawn from it
/// (points outside the area are rejected and redrawn).
Model random_mixture(std::size_t bases, const Area& area, std::mt19937_64& rng);
std::vector<Point> sample(const Model& model, std::size_t count, const Area& area,
                          std::mt19937_64& rng);

/// Uniform weights, means uniform in the area, isotropic covariance
/// (scale/4)^2.
Model initial_model(std::size_t bases, const Area& area, std::mt19937_64& rng);

/// Contiguous blocks of (nearly) equal size, one per agent.
std::vector<std::span<const Point>> partition(std::span<const Point> points, std::size_t agents);

struct EmConfig {
  GraphSource graph{"ring", 20, 0.3, {}};
  std::size_t points = 1000;
  std::size_t bases = 12;
  std::size_t em_iterations = 10;
  std::size_t consensus_rounds = 8;
  AlgorithmConfig inner{Algorithm::TripleMomentum, std::nullopt, 0, ParameterSource::Exact};
  std::uint64_t seed = 0;       // data and ground truth
  std::uint64_t init_seed = 1;  // local initialisation
  bool shared_init = true;      // every agent starts from the same model
  Area area;

  double covariance_floor() const { return 1e-6 * area.scale() * area.scale(); }
};

struct EmResult {
  Model truth;
  std::vector<Model> agent_models;                  // after the last iteration
  std::vector<std::vector<double>> agent_loglik;    // [iteration 0..T_EM][agent]
  Model central_model;
  std::vector<double> central_loglik;               // [iteration 0..T_EM]
  Diagnostics diagnostics;

  double final_gap(std::size_t agent = 0) const;
};

/// Centralized EM from `init` (the oracle the distributed runs are compared
/// against).
Model centralized_em(const Model& init, std::span<const Point> points, std::size_t iterations,
                     double covariance_floor, std::vector<double>* loglik = nullptr);

EmResult distributed_em(const EmConfig& config);
EmResult distributed_em(const EmConfig& config, const Graph& g, const Model& truth,
                        std::span<const Point> points);

/// Strict JSON schema for the `gmm` subcommand.
EmConfig parse_em_config(const nlohmann::json& j, const std::filesystem::path& base_dir);
nlohmann::json model_to_json(const Model& model);

/// Largest parameter distance between any two agents' models.
double max_disagreement(std::span<const Model> models);

}  // namespace conlab::gmm
