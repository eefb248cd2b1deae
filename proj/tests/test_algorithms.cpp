#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "conlab/algorithms.hpp"
#include "conlab/errors.hpp"
#include "conlab/rates.hpp"
#include "oracles.hpp"

#include <random>

using namespace conlab;

namespace {

oracle::Params to_oracle(const AlgorithmSpec& s, const Graph& g) {
  const double l2 = g.spectrum().lambda2();
  const double ln = g.spectrum().lambda_max();
  switch (s.kind) {
    case Algorithm::Laplacian: return {oracle::Kind::Laplacian, s.step, 0};
    case Algorithm::BufferedLaplacian: return {oracle::Kind::Buffered, s.step, s.buffer};
    case Algorithm::NagC: return {oracle::Kind::NagC, s.step, 0};
    case Algorithm::TripleMomentum: return oracle::tm_params(l2, ln);
    case Algorithm::NagSc: return oracle::nag_sc_params(l2, ln);
  }
  return {};
}

std::vector<AlgorithmSpec> all_specs(const Graph& g) {
  const double ln = g.spectrum().lambda_max();
  return {AlgorithmSpec::laplacian(1.0 / ln), AlgorithmSpec::buffered(0.5 / ln, 2),
          AlgorithmSpec::buffered(0.3 / ln, 4), AlgorithmSpec::nag_c(1.0 / ln),
          AlgorithmSpec::tuned(Algorithm::TripleMomentum, g, ParameterSource::Exact),
          AlgorithmSpec::tuned(Algorithm::NagSc, g, ParameterSource::Exact),
          AlgorithmSpec::tuned(Algorithm::TripleMomentum, g, ParameterSource::Bounds)};
}

Eigen::VectorXd random_inputs(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 100.0);
  Eigen::VectorXd r(static_cast<Eigen::Index>(n));
  for (auto& v : r) v = u(rng);
  return r;
}

}  // namespace

TEST_CASE("derive_params closed forms") {
  const auto tm = derive_params(Algorithm::TripleMomentum, 1.0, 4.0);
  CHECK(tm.rho == doctest::Approx(0.5));
  CHECK(tm.alpha == doctest::Approx(0.375));
  CHECK(tm.beta == doctest::Approx(1.0 / 6.0));
  CHECK(tm.gamma == doctest::Approx(1.0 / 9.0));
  CHECK(tm.delta_tm == doctest::Approx(1.0 / 3.0));

  const auto sc = derive_params(Algorithm::NagSc, 1.0, 4.0);
  CHECK(sc.alpha == doctest::Approx(0.25));
  CHECK(sc.beta == doctest::Approx(1.0 / 3.0));

  CHECK(derive_params(Algorithm::NagC, 1.0, 4.0).step == doctest::Approx(0.25));

  const auto flat = derive_params(Algorithm::TripleMomentum, 2.5, 2.5);
  CHECK(flat.alpha == doctest::Approx(0.4));
  CHECK(flat.beta == 0.0);
  CHECK(flat.gamma == 0.0);
  CHECK(flat.delta_tm == 0.0);
  const auto flat_sc = derive_params(Algorithm::NagSc, 2.5, 2.5);
  CHECK(flat_sc.alpha == doctest::Approx(0.4));
  CHECK(flat_sc.beta == 0.0);

  CHECK_THROWS_AS(derive_params(Algorithm::TripleMomentum, 0.0, 4.0), DomainError);
  CHECK_THROWS_AS(derive_params(Algorithm::NagSc, 5.0, 4.0), DomainError);
}

TEST_CASE("algorithm names parse") {
  CHECK(parse_algorithm("laplacian") == Algorithm::Laplacian);
  CHECK(parse_algorithm("buffered") == Algorithm::BufferedLaplacian);
  CHECK(parse_algorithm("nag_c") == Algorithm::NagC);
  CHECK(parse_algorithm("tm") == Algorithm::TripleMomentum);
  CHECK(parse_algorithm("nag_sc") == Algorithm::NagSc);
  CHECK_THROWS_AS(parse_algorithm("gossip"), ConfigError);
  CHECK(AlgorithmSpec::buffered(0.1, 2).name() == "buffered_d2");
}

TEST_CASE("stepsize admissibility") {
  const Graph g = ring(2);
  CHECK_THROWS_AS(run(AlgorithmSpec::laplacian(1.05), g, Eigen::Vector2d(0, 1), 5), StepsizeError);
  CHECK_THROWS_AS(run(AlgorithmSpec::laplacian(0.0), g, Eigen::Vector2d(0, 1), 5), StepsizeError);
  CHECK_THROWS_AS(run(AlgorithmSpec::nag_c(0.6), g, Eigen::Vector2d(0, 1), 5), StepsizeError);
  CHECK_NOTHROW(run(AlgorithmSpec::nag_c(0.5), g, Eigen::Vector2d(0, 1), 5));
}

TEST_CASE("two-node laplacian closed form") {
  const Graph g = ring(2);
  const auto t = run(AlgorithmSpec::laplacian(0.25), g, Eigen::Vector2d(0, 1), 30);
  CHECK(t.states(1, 0) == doctest::Approx(0.25));
  CHECK(t.states(1, 1) == doctest::Approx(0.75));
  for (int k = 0; k <= 30; ++k) {
    const double gap = std::pow(0.5, k);
    CHECK(t.states(k, 1) - t.states(k, 0) == doctest::Approx(gap).epsilon(1e-12));
  }
  CHECK(t.rounds() == 30);
  CHECK(t.average == 0.5);
}

TEST_CASE("buffered d=1 two-node hand iteration") {
  const Graph g = ring(2);
  const auto t = run(AlgorithmSpec::buffered(0.25, 1), g, Eigen::Vector2d(0, 1), 6);
  CHECK(t.states(1, 0) == 0.0);
  CHECK(t.states(1, 1) == 1.0);
  // disagreement mode z = x_2 - x_1 follows z(k+1) = z(k) - 0.5 z(k-1)
  std::vector<double> z{1.0, 1.0};
  for (int k = 1; k < 6; ++k) z.push_back(z[k] - 0.5 * z[k - 1]);
  for (int k = 0; k <= 6; ++k) CHECK(t.states(k, 1) - t.states(k, 0) == doctest::Approx(z[k]));
}

TEST_CASE("every algorithm matches the dense matrix-form reference") {
  std::mt19937_64 rng(5);
  for (const Graph& g : {ring(20), five_agent_graph(), star(7)}) {
    const Eigen::MatrixXd lap = oracle::laplacian(g.adjacency());
    const Eigen::VectorXd r = random_inputs(g.size(), rng);
    for (const auto& spec : all_specs(g)) {
      CAPTURE(spec.name());
      const auto t = run(spec, g, r, 60, Backend::Serial);
      oracle::Params p = to_oracle(spec, g);
      if (spec.kind == Algorithm::TripleMomentum || spec.kind == Algorithm::NagSc) {
        p.alpha = spec.momentum.alpha;
        p.beta = spec.momentum.beta;
        p.gamma = spec.momentum.gamma;
        p.delta_tm = spec.momentum.delta_tm;
      }
      const Eigen::MatrixXd ref = oracle::dense_run(p, lap, r, 60);
      CHECK((t.states - ref).cwiseAbs().maxCoeff() < 1e-9);
      const auto omp = run(spec, g, r, 60, Backend::OpenMP);
      CHECK((omp.states - t.states).cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("momentum constants from exact spectrum match the oracle formulas") {
  const Graph g = ring(20);
  const auto tm = AlgorithmSpec::tuned(Algorithm::TripleMomentum, g, ParameterSource::Exact);
  const auto o = oracle::tm_params(g.spectrum().lambda2(), g.spectrum().lambda_max());
  CHECK(tm.momentum.alpha == doctest::Approx(o.alpha));
  CHECK(tm.momentum.beta == doctest::Approx(o.beta));
  CHECK(tm.momentum.gamma == doctest::Approx(o.gamma));
  CHECK(tm.momentum.delta_tm == doctest::Approx(o.delta_tm));
  const auto bounded = AlgorithmSpec::tuned(Algorithm::TripleMomentum, g, ParameterSource::Bounds);
  const auto ob = oracle::tm_params(0.02, 4.0);
  CHECK(bounded.momentum.alpha == doctest::Approx(ob.alpha));
  CHECK(bounded.momentum.beta == doctest::Approx(ob.beta));
}

TEST_CASE("consensus is a fixed point") {
  const Graph g = five_agent_graph();
  const Eigen::VectorXd c = Eigen::VectorXd::Constant(5, 3.75);
  for (const auto& spec : all_specs(g)) {
    const auto t = run(spec, g, c, 25);
    CHECK((t.states.array() - 3.75).abs().maxCoeff() == 0.0);
  }
}

TEST_CASE("laplacian family preserves the average every round") {
  std::mt19937_64 rng(7);
  const Graph g = random_connected(12, 0.3, rng);
  const Eigen::VectorXd r = random_inputs(12, rng);
  const double ln = g.spectrum().lambda_max();
  for (const auto& spec : {AlgorithmSpec::laplacian(1.0 / ln), AlgorithmSpec::buffered(0.3 / ln, 3)}) {
    const auto t = run(spec, g, r, 100);
    for (Eigen::Index k = 0; k < t.states.rows(); ++k) {
      CHECK(std::abs(t.states.row(k).mean() - r.mean()) < 1e-12 * 100);
    }
  }
}

TEST_CASE("shift invariance and scale equivariance") {
  std::mt19937_64 rng(9);
  const Graph g = random_connected(10, 0.25, rng);
  const Eigen::VectorXd r = random_inputs(10, rng);
  for (const auto& spec : all_specs(g)) {
    CAPTURE(spec.name());
    const auto base = run(spec, g, r, 40);
    const auto shifted = run(spec, g, (r.array() + 17.0).matrix(), 40);
    CHECK(((shifted.states - base.states).array() - 17.0).abs().maxCoeff() < 1e-9);
    const auto scaled = run(spec, g, -2.5 * r, 40);
    CHECK((scaled.states + 2.5 * base.states).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("laplacian on the five-agent graph converges") {
  std::mt19937_64 rng(2);
  const Graph g = five_agent_graph();
  const auto t = run(AlgorithmSpec::laplacian(1.0 / g.spectrum().lambda_max()), g,
                     random_inputs(5, rng), 200);
  CHECK(t.disagreement.back() / t.disagreement.front() < 1e-6);
}

TEST_CASE("triple momentum on ring(20) reaches the average within 50 rounds") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::VectorXd r(20);
  for (auto& v : r) v = u(rng);
  const Graph g = ring(20);
  const auto t = run(AlgorithmSpec::tuned(Algorithm::TripleMomentum, g, ParameterSource::Exact), g, r, 50);
  CHECK((t.states.row(50).array() - r.mean()).abs().maxCoeff() < 1e-3);
}

TEST_CASE("inadmissible buffer depth blows up") {
  const Graph g = ring(20);
  bool unstable = false;
  try {
    const auto t = run(AlgorithmSpec::buffered(1.0 / 4.0, 12), g, Eigen::VectorXd::LinSpaced(20, 0, 1), 3000);
    unstable = t.disagreement.back() > t.disagreement.front();
  } catch (const NonFiniteError&) {
    unstable = true;
  }
  CHECK(unstable);
}

TEST_CASE("history underflow and dimension errors") {
  const Graph g = ring(5);
  const auto spec = AlgorithmSpec::buffered(0.1, 3);
  ConsensusState s;
  CHECK_THROWS_AS(step(spec, g, s), HistoryUnderflowError);
  ConsensusState short_hist = initialize(AlgorithmSpec::laplacian(0.1), StateMatrix::Zero(5, 1));
  CHECK_THROWS_AS(step(spec, g, short_hist), HistoryUnderflowError);
  ConsensusState wrong = initialize(spec, StateMatrix::Zero(4, 1));
  CHECK_THROWS_AS(step(spec, g, wrong), DimensionError);
  CHECK_THROWS_AS(run(AlgorithmSpec::laplacian(0.1), g, Eigen::VectorXd::Zero(3), 5), DimensionError);
  Eigen::VectorXd bad = Eigen::VectorXd::Zero(5);
  bad(2) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(run(AlgorithmSpec::laplacian(0.1), g, bad, 5), NonFiniteError);
}

TEST_CASE("vector-valued consensus is componentwise") {
  std::mt19937_64 rng(3);
  const Graph g = random_connected(8, 0.3, rng);
  StateMatrix x(8, 3);
  for (Eigen::Index i = 0; i < 8; ++i)
    for (Eigen::Index j = 0; j < 3; ++j) x(i, j) = std::uniform_real_distribution<double>(-5, 5)(rng);
  for (const auto& spec : all_specs(g)) {
    const StateMatrix out = run_states(spec, g, x, 30);
    for (Eigen::Index j = 0; j < 3; ++j) {
      const auto t = run(spec, g, x.col(j), 30);
      CHECK((out.col(j) - t.states.row(30).transpose()).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("modal transform") {
  const Graph g = five_agent_graph();
  const auto& sp = g.spectrum();
  const auto c = modal_transform(sp, Eigen::VectorXd::Constant(5, 2.0));
  CHECK(c.z1 == doctest::Approx(2.0 * std::sqrt(5.0)));
  CHECK(c.rest.cwiseAbs().maxCoeff() < 1e-12);
  const auto v2 = modal_transform(sp, sp.eigenvectors.col(1));
  CHECK(v2.rest(0) == doctest::Approx(1.0));
  CHECK(std::abs(v2.z1) < 1e-12);
  CHECK(v2.rest.tail(3).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(modal_transform(sp, Eigen::VectorXd::Zero(4)), DimensionError);
}

TEST_CASE("modal recursions of the buffered iteration") {
  std::mt19937_64 rng(8);
  const Graph g = five_agent_graph();
  const auto& sp = g.spectrum();
  for (int d : {0, 1, 2, 3}) {
    const double step = 0.1;
    const auto t = run(AlgorithmSpec::buffered(step, d), g, random_inputs(5, rng), 30);
    std::vector<Eigen::VectorXd> z;
    for (Eigen::Index k = 0; k <= 30; ++k) {
      const auto m = modal_transform(sp, t.states.row(k).transpose());
      Eigen::VectorXd full(5);
      full << m.z1, m.rest;
      z.push_back(full);
    }
    for (int k = 0; k < 30; ++k) {
      for (int i = 0; i < 5; ++i) {
        const double lag = k - d >= 0 ? z[k - d](i) : 0.0;
        CHECK(std::abs(z[k + 1](i) - (z[k](i) - step * sp.eigenvalues(i) * lag)) < 1e-10);
      }
    }
  }
}
