#pragma once

#include "conlab/graph.hpp"
#include "conlab/kernels.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace conlab {

enum class Algorithm { Laplacian, BufferedLaplacian, NagC, TripleMomentum, NagSc };

std::string_view to_string(Algorithm kind);
/// Accepts "laplacian", "buffered", "nag_c", "tm", "nag_sc" (and a few aliases).
Algorithm parse_algorithm(std::string_view name);

/// Constants derived from (lambda_2, lambda_N). Fields an algorithm does not
/// use stay zero. `delta_tm` is the output-mixing weight of the triple
/// momentum iteration, unrelated to the Laplacian step size.
struct MomentumParams {
  double rho = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double delta_tm = 0.0;
  double step = 0.0;  // NAG-C step 1/lambda_N
};

/// Throws DomainError unless 0 < lambda2 <= lambda_max. For Laplacian-family
/// kinds the result is all zeros.
MomentumParams derive_params(Algorithm kind, double lambda2, double lambda_max);

/// Which spectral information momentum parameters are built from.
enum class ParameterSource { Exact, Bounds };

struct SpectralPair {
  double lambda2 = 0.0;
  double lambda_max = 0.0;
};
SpectralPair spectral_pair(const Graph& g, ParameterSource source);

struct AlgorithmSpec {
  Algorithm kind = Algorithm::Laplacian;
  double step = 0.0;  // Laplacian family and NAG-C
  int buffer = 0;     // BufferedLaplacian only
  MomentumParams momentum;

  static AlgorithmSpec laplacian(double step);
  static AlgorithmSpec buffered(double step, int buffer);
  static AlgorithmSpec nag_c(double step);
  static AlgorithmSpec triple_momentum(double lambda2, double lambda_max);
  static AlgorithmSpec nag_sc(double lambda2, double lambda_max);

  /// Spec for `kind` on `g`. Missing steps default to 1/lambda_N of the
  /// chosen source; momentum constants come from the same source.
  static AlgorithmSpec tuned(Algorithm kind, const Graph& g, ParameterSource source,
                             std::optional<double> step = std::nullopt, int buffer = 0);

  /// "laplacian", "buffered_d2", "nag_c", "tm", "nag_sc".
  std::string name() const;
  /// Rounds of primary history the iteration reads.
  std::size_t history_depth() const;
  /// Stepsize admissibility against `lambda_max`; throws StepsizeError.
  void validate(double lambda_max) const;
};

/// Fixed-capacity ring buffer of agent-state snapshots, newest at lag 0.
class StateHistory {
 public:
  StateHistory() = default;
  StateHistory(std::size_t depth, const StateMatrix& fill);

  std::size_t depth() const { return slots_.size(); }
  const StateMatrix& lag(std::size_t k) const;
  /// Makes the oldest slot the newest and returns it for overwriting.
  StateMatrix& advance();

 private:
  std::vector<StateMatrix> slots_;
  std::size_t head_ = 0;
};

/// Per-agent state of one run, all agents stacked row-wise.
struct ConsensusState {
  std::size_t round = 0;
  StateHistory primary;    // x, or xi for triple momentum
  StateHistory secondary;  // y for NAG-C
  StateMatrix output;      // reported agreement state x(k)
  StateMatrix feedback;    // workspace
  StateMatrix blend;       // workspace
};

/// Seeds the history: buffered runs pre-fill zeros behind x(0) = r; the
/// two-step momentum methods start from a repeated r.
ConsensusState initialize(const AlgorithmSpec& spec, const StateMatrix& inputs);

/// Advances every agent by one communication round. Throws
/// HistoryUnderflowError when `state` was not seeded for `spec`.
void step(const AlgorithmSpec& spec, const Graph& g, ConsensusState& state,
          Backend backend = Backend::Serial);

struct Trajectory {
  AlgorithmSpec spec;
  std::string graph_name;
  Eigen::MatrixXd states;            // (K + 1) x N
  std::vector<double> disagreement;  // ||x(k) - r_avg 1||_2
  double average = 0.0;

  std::size_t rounds() const { return disagreement.empty() ? 0 : disagreement.size() - 1; }
};

/// Scalar consensus for `rounds` rounds. Validates the stepsize against the
/// graph's exact lambda_N and throws NonFiniteError if a state blows up.
Trajectory run(const AlgorithmSpec& spec, const Graph& g, const Eigen::VectorXd& inputs,
               std::size_t rounds, std::optional<Backend> backend = std::nullopt);

using RoundObserver = std::function<void(std::size_t round, const StateMatrix& x)>;

/// Componentwise consensus on an N x m input; returns x(rounds). The
/// observer, when given, sees x(0) .. x(rounds).
StateMatrix run_states(const AlgorithmSpec& spec, const Graph& g, const StateMatrix& inputs,
                       std::size_t rounds, const RoundObserver& observer = {},
                       std::optional<Backend> backend = std::nullopt);

/// z = T^T x split as (z_1, z_{2:N}).
struct ModalCoordinates {
  double z1 = 0.0;
  Eigen::VectorXd rest;
};
ModalCoordinates modal_transform(const Spectrum& spectrum, const Eigen::VectorXd& x);

}  // namespace conlab
