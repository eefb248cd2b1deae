#include "conlab/algorithms.hpp"

#include "conlab/errors.hpp"

#include <cmath>
#include <utility>

namespace conlab {

std::string_view to_string(Algorithm kind) {
  switch (kind) {
    case Algorithm::Laplacian: return "laplacian";
    case Algorithm::BufferedLaplacian: return "buffered";
    case Algorithm::NagC: return "nag_c";
    case Algorithm::TripleMomentum: return "tm";
    case Algorithm::NagSc: return "nag_sc";
  }
  return "unknown";
}

Algorithm parse_algorithm(std::string_view name) {
  if (name == "laplacian") return Algorithm::Laplacian;
  if (name == "buffered" || name == "buffered_laplacian") return Algorithm::BufferedLaplacian;
  if (name == "nag_c" || name == "nag-c" || name == "nagc") return Algorithm::NagC;
  if (name == "tm" || name == "triple_momentum") return Algorithm::TripleMomentum;
  if (name == "nag_sc" || name == "nag-sc" || name == "nagsc") return Algorithm::NagSc;
  throw ConfigError("unknown algorithm '" + std::string(name) + "'");
}

MomentumParams derive_params(Algorithm kind, double lambda2, double lambda_max) {
  if (!(lambda2 > 0.0) || !(lambda2 <= lambda_max) || !std::isfinite(lambda_max)) {
    throw DomainError("momentum parameters need 0 < lambda_2 <= lambda_N (got " +
                      std::to_string(lambda2) + ", " + std::to_string(lambda_max) + ")");
  }
  MomentumParams p;
  switch (kind) {
    case Algorithm::TripleMomentum: {
      const double rho = 1.0 - std::sqrt(lambda2 / lambda_max);
      const double rho2 = rho * rho;
      p.rho = rho;
      p.alpha = (1.0 + rho) / lambda_max;
      p.beta = rho2 / (2.0 - rho);
      p.gamma = rho2 / ((1.0 + rho) * (2.0 - rho));
      p.delta_tm = rho2 / (1.0 - rho2);
      break;
    }
    case Algorithm::NagSc: {
      const double s2 = std::sqrt(lambda2);
      const double sn = std::sqrt(lambda_max);
      p.rho = 1.0 - std::sqrt(lambda2 / lambda_max);
      p.alpha = 1.0 / lambda_max;
      p.beta = (sn - s2) / (sn + s2);
      break;
    }
    case Algorithm::NagC:
      p.step = 1.0 / lambda_max;
      break;
    case Algorithm::Laplacian:
    case Algorithm::BufferedLaplacian:
      break;
  }
  return p;
}

SpectralPair spectral_pair(const Graph& g, ParameterSource source) {
  if (source == ParameterSource::Bounds) {
    const auto b = g.spectral_bounds();
    return {b.lambda2_lower, b.lambda_max_upper};
  }
  return {g.spectrum().lambda2(), g.spectrum().lambda_max()};
}

AlgorithmSpec AlgorithmSpec::laplacian(double step) {
  AlgorithmSpec s;
  s.kind = Algorithm::Laplacian;
  s.step = step;
  return s;
}

AlgorithmSpec AlgorithmSpec::buffered(double step, int buffer) {
  if (buffer < 0) throw DomainError("buffer depth must be nonnegative");
  AlgorithmSpec s;
  s.kind = Algorithm::BufferedLaplacian;
  s.step = step;
  s.buffer = buffer;
  return s;
}

AlgorithmSpec AlgorithmSpec::nag_c(double step) {
  AlgorithmSpec s;
  s.kind = Algorithm::NagC;
  s.step = step;
  return s;
}

AlgorithmSpec AlgorithmSpec::triple_momentum(double lambda2, double lambda_max) {
  AlgorithmSpec s;
  s.kind = Algorithm::TripleMomentum;
  s.momentum = derive_params(Algorithm::TripleMomentum, lambda2, lambda_max);
  return s;
}

AlgorithmSpec AlgorithmSpec::nag_sc(double lambda2, double lambda_max) {
  AlgorithmSpec s;
  s.kind = Algorithm::NagSc;
  s.momentum = derive_params(Algorithm::NagSc, lambda2, lambda_max);
  return s;
}

AlgorithmSpec AlgorithmSpec::tuned(Algorithm kind, const Graph& g, ParameterSource source,
                                   std::optional<double> step, int buffer) {
  const auto [l2, ln] = spectral_pair(g, source);
  switch (kind) {
    case Algorithm::Laplacian: return laplacian(step.value_or(1.0 / ln));
    case Algorithm::BufferedLaplacian: return buffered(step.value_or(1.0 / ln), buffer);
    case Algorithm::NagC: return nag_c(step.value_or(1.0 / ln));
    case Algorithm::TripleMomentum: return triple_momentum(l2, ln);
    case Algorithm::NagSc: return nag_sc(l2, ln);
  }
  throw ConfigError("unknown algorithm kind");
}

std::string AlgorithmSpec::name() const {
  if (kind == Algorithm::BufferedLaplacian) return "buffered_d" + std::to_string(buffer);
  return std::string(to_string(kind));
}

std::size_t AlgorithmSpec::history_depth() const {
  switch (kind) {
    case Algorithm::BufferedLaplacian: return static_cast<std::size_t>(buffer) + 1;
    case Algorithm::TripleMomentum:
    case Algorithm::NagSc: return 2;
    case Algorithm::Laplacian:
    case Algorithm::NagC: return 1;
  }
  return 1;
}

void AlgorithmSpec::validate(double lambda_max) const {
  switch (kind) {
    case Algorithm::Laplacian:
    case Algorithm::BufferedLaplacian:
      if (!(step > 0.0) || !(step * lambda_max < 2.0)) {
        throw StepsizeError("stepsize " + std::to_string(step) + " outside (0, 2/lambda_N) = (0, " +
                            std::to_string(2.0 / lambda_max) + ")");
      }
      if (buffer < 0) throw DomainError("buffer depth must be nonnegative");
      break;
    case Algorithm::NagC:
      if (!(step > 0.0) || !(step * lambda_max <= 1.0 + 1e-12)) {
        throw StepsizeError("NAG-C stepsize " + std::to_string(step) + " outside (0, 1/lambda_N]");
      }
      break;
    case Algorithm::TripleMomentum:
    case Algorithm::NagSc: {
      const auto& m = momentum;
      const bool ok = std::isfinite(m.alpha) && m.alpha > 0.0 && m.beta >= 0.0 && m.beta < 1.0 &&
                      m.gamma >= 0.0 && m.gamma < 1.0 && std::isfinite(m.delta_tm) &&
                      m.delta_tm >= 0.0;
      if (!ok) throw DomainError("momentum parameters of " + name() + " are out of range");
      break;
    }
  }
}

StateHistory::StateHistory(std::size_t depth, const StateMatrix& fill)
    : slots_(depth, fill), head_(0) {}

const StateMatrix& StateHistory::lag(std::size_t k) const {
  const std::size_t n = slots_.size();
  return slots_[(head_ + n - k % n) % n];
}

StateMatrix& StateHistory::advance() {
  head_ = (head_ + 1) % slots_.size();
  return slots_[head_];
}

ConsensusState initialize(const AlgorithmSpec& spec, const StateMatrix& inputs) {
  ConsensusState s;
  s.output = inputs;
  switch (spec.kind) {
    case Algorithm::Laplacian:
    case Algorithm::BufferedLaplacian: {
      s.primary = StateHistory(spec.history_depth(),
                               StateMatrix::Zero(inputs.rows(), inputs.cols()));
      s.primary.advance() = inputs;
      break;
    }
    case Algorithm::NagC:
      s.primary = StateHistory(1, inputs);
      s.secondary = StateHistory(1, inputs);
      break;
    case Algorithm::TripleMomentum:
    case Algorithm::NagSc:
      s.primary = StateHistory(2, inputs);
      break;
  }
  return s;
}

void step(const AlgorithmSpec& spec, const Graph& g, ConsensusState& state, Backend backend) {
  const std::size_t need = spec.history_depth();
  if (state.primary.depth() < need ||
      (spec.kind == Algorithm::NagC && state.secondary.depth() < 1)) {
    throw HistoryUnderflowError(spec.name() + " needs " + std::to_string(need) +
                                " rounds of history, state holds " +
                                std::to_string(state.primary.depth()));
  }
  if (static_cast<std::size_t>(state.primary.lag(0).rows()) != g.size()) {
    throw DimensionError("state has " + std::to_string(state.primary.lag(0).rows()) +
                         " agents, graph has " + std::to_string(g.size()));
  }
  const auto& lists = g.neighbor_lists();
  auto& fb = state.feedback;
  auto& blend = state.blend;

  switch (spec.kind) {
    case Algorithm::Laplacian:
    case Algorithm::BufferedLaplacian: {
      // x(k+1) = x(k) - step * L x(k - d)
      const auto d = static_cast<std::size_t>(spec.kind == Algorithm::Laplacian ? 0 : spec.buffer);
      kernels::laplacian_apply(backend, lists, state.primary.lag(d), fb);
      blend = state.primary.lag(0) - spec.step * fb;
      std::swap(state.primary.advance(), blend);
      state.output = state.primary.lag(0);
      break;
    }
    case Algorithm::NagC: {
      // y(k+1) = x(k) - step L x(k);  x(k+1) = y(k+1) + (k+1)/(k+3) (y(k+1) - y(k))
      const double momentum = static_cast<double>(state.round + 1) /
                              static_cast<double>(state.round + 3);
      const StateMatrix& x = state.primary.lag(0);
      kernels::laplacian_apply(backend, lists, x, fb);
      blend = x - spec.step * fb;
      StateMatrix& y = state.secondary.advance();
      StateMatrix& x_next = state.primary.advance();
      x_next = blend + momentum * (blend - y);
      std::swap(y, blend);
      state.output = x_next;
      break;
    }
    case Algorithm::NagSc: {
      // y(k) = x(k) + beta (x(k) - x(k-1));  x(k+1) = y(k) - alpha L y(k)
      const auto& m = spec.momentum;
      const StateMatrix& x = state.primary.lag(0);
      const StateMatrix& x_prev = state.primary.lag(1);
      blend = x + m.beta * (x - x_prev);
      kernels::laplacian_apply(backend, lists, blend, fb);
      StateMatrix& x_next = state.primary.advance();  // overwrites x(k-1)
      x_next = blend - m.alpha * fb;
      state.output = x_next;
      break;
    }
    case Algorithm::TripleMomentum: {
      // Momentum combinations are written as a + c (a - b) so that a constant
      // sequence is reproduced exactly.
      const auto& m = spec.momentum;
      const StateMatrix& xi = state.primary.lag(0);
      const StateMatrix& xi_prev = state.primary.lag(1);
      blend = xi + m.gamma * (xi - xi_prev);  // y(k)
      kernels::laplacian_apply(backend, lists, blend, fb);
      blend = xi + m.beta * (xi - xi_prev) - m.alpha * fb;  // xi(k+1)
      std::swap(state.primary.advance(), blend);
      const StateMatrix& xi_next = state.primary.lag(0);
      const StateMatrix& xi_now = state.primary.lag(1);
      state.output = xi_next + m.delta_tm * (xi_next - xi_now);
      break;
    }
  }
  ++state.round;
}

namespace {

Backend pick_backend(std::optional<Backend> backend, const Graph& g) {
  return backend.value_or(default_backend(g.size()));
}

}  // namespace

StateMatrix run_states(const AlgorithmSpec& spec, const Graph& g, const StateMatrix& inputs,
                       std::size_t rounds, const RoundObserver& observer,
                       std::optional<Backend> backend) {
  if (static_cast<std::size_t>(inputs.rows()) != g.size()) {
    throw DimensionError("inputs have " + std::to_string(inputs.rows()) + " rows, graph has " +
                         std::to_string(g.size()) + " agents");
  }
  if (!inputs.allFinite()) throw NonFiniteError("consensus inputs must be finite");
  spec.validate(g.spectrum().lambda_max());
  const Backend be = pick_backend(backend, g);

  ConsensusState state = initialize(spec, inputs);
  if (observer) observer(0, state.output);
  for (std::size_t k = 1; k <= rounds; ++k) {
    step(spec, g, state, be);
    if (!state.output.allFinite()) {
      throw NonFiniteError(spec.name() + " left the finite range at round " + std::to_string(k));
    }
    if (observer) observer(k, state.output);
  }
  return state.output;
}

Trajectory run(const AlgorithmSpec& spec, const Graph& g, const Eigen::VectorXd& inputs,
               std::size_t rounds, std::optional<Backend> backend) {
  if (rounds < 1) throw DomainError("a run needs at least one round");
  Trajectory t;
  t.spec = spec;
  t.graph_name = g.name();
  t.average = inputs.mean();
  t.states.resize(static_cast<Eigen::Index>(rounds + 1), inputs.size());
  t.disagreement.reserve(rounds + 1);

  StateMatrix x0(inputs.size(), 1);
  x0.col(0) = inputs;
  const double avg = t.average;
  run_states(
      spec, g, x0, rounds,
      [&](std::size_t k, const StateMatrix& x) {
        t.states.row(static_cast<Eigen::Index>(k)) = x.col(0).transpose();
        t.disagreement.push_back((x.col(0).array() - avg).matrix().norm());
      },
      backend);
  return t;
}

ModalCoordinates modal_transform(const Spectrum& spectrum, const Eigen::VectorXd& x) {
  if (static_cast<std::size_t>(x.size()) != spectrum.size()) {
    throw DimensionError("state of length " + std::to_string(x.size()) +
                         " against a spectrum of size " + std::to_string(spectrum.size()));
  }
  const Eigen::VectorXd z = spectrum.eigenvectors.transpose() * x;
  return {z(0), z.tail(z.size() - 1)};
}

}  // namespace conlab
