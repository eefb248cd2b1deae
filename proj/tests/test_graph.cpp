#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "conlab/errors.hpp"
#include "conlab/graph.hpp"
#include "oracles.hpp"

#include <random>
#include <sstream>

using namespace conlab;

namespace {

// Sign changes of det(L - tI) on a fine grid bracket the eigenvalues.
std::vector<double> det_sign_change_roots(const Eigen::MatrixXd& lap, double hi, int steps) {
  std::vector<double> roots;
  const auto n = lap.rows();
  const auto det = [&](double t) {
    return (lap - t * Eigen::MatrixXd::Identity(n, n)).determinant();
  };
  double prev_t = -0.01;
  double prev = det(prev_t);
  for (int s = 1; s <= steps; ++s) {
    const double t = -0.01 + (hi + 0.02) * s / steps;
    const double v = det(t);
    if ((prev < 0) != (v < 0)) {
      double a = prev_t, b = t;
      for (int it = 0; it < 80; ++it) {
        const double m = 0.5 * (a + b);
        if ((det(a) < 0) != (det(m) < 0)) b = m; else a = m;
      }
      roots.push_back(0.5 * (a + b));
    }
    prev_t = t;
    prev = v;
  }
  return roots;
}

void check_spectrum_invariants(const Graph& g) {
  const auto& sp = g.spectrum();
  const Eigen::MatrixXd lap = g.laplacian();
  const auto n = lap.rows();
  CHECK((lap - lap.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((lap * Eigen::VectorXd::Ones(n)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(sp.eigenvalues.minCoeff() > -1e-10);
  CHECK(std::abs(sp.eigenvalues(0)) < 1e-10);
  const Eigen::MatrixXd& t = sp.eigenvectors;
  CHECK((t.transpose() * t - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-10);
  const Eigen::MatrixXd lambda = sp.eigenvalues.asDiagonal();
  CHECK((t.transpose() * lap * t - lambda).cwiseAbs().maxCoeff() < 1e-8);
  for (Eigen::Index i = 0; i < n; ++i) CHECK(t(i, 0) == doctest::Approx(1.0 / std::sqrt(double(n))));
}

}  // namespace

TEST_CASE("laplacian of the five-agent graph") {
  const Graph g = five_agent_graph();
  const Eigen::MatrixXd lap = g.laplacian();
  const Eigen::VectorXd diag = lap.diagonal();
  CHECK(diag(0) == 3);
  CHECK(diag(1) == 3);
  CHECK(diag(2) == 2);
  CHECK(diag(3) == 2);
  CHECK(diag(4) == 4);
  const std::vector<std::pair<int, int>> pairs{{1, 2}, {1, 5}, {2, 3}, {3, 5}, {4, 5}, {1, 4}, {2, 5}};
  int off = 0;
  for (const auto& [i, j] : pairs) {
    CHECK(lap(i - 1, j - 1) == -1.0);
    CHECK(lap(j - 1, i - 1) == -1.0);
  }
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      if (i != j && lap(i, j) != 0.0) ++off;
  CHECK(off == 14);
}

TEST_CASE("two-node graph") {
  const Graph g = ring(2);
  Eigen::Matrix2d expected;
  expected << 1, -1, -1, 1;
  CHECK(g.laplacian() == expected);
  CHECK(g.spectrum().eigenvalues(0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(g.spectrum().eigenvalues(1) == doctest::Approx(2.0));
  CHECK(g.spectrum().eigenvectors(0, 0) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(g.spectrum().eigenvectors(1, 0) == doctest::Approx(1.0 / std::sqrt(2.0)));
  const auto b = g.spectral_bounds();
  CHECK(b.lambda2_lower == doctest::Approx(2.0));
  CHECK(b.lambda_max_upper == doctest::Approx(2.0));
}

TEST_CASE("ring laplacian is circulant") {
  const Graph g = ring(20);
  const Eigen::MatrixXd lap = g.laplacian();
  for (int i = 0; i < 20; ++i) {
    for (int j = 0; j < 20; ++j) {
      const int dist = std::min((i - j + 20) % 20, (j - i + 20) % 20);
      const double want = dist == 0 ? 2.0 : dist == 1 ? -1.0 : 0.0;
      CHECK(lap(i, j) == want);
    }
  }
}

TEST_CASE("ring spectrum matches the circulant closed form") {
  for (int n : {3, 4, 7, 20, 31}) {
    const Graph g = ring(static_cast<std::size_t>(n));
    const auto want = oracle::ring_eigenvalues(n);
    for (int k = 0; k < n; ++k) CHECK(g.spectrum().eigenvalues(k) == doctest::Approx(want[k]).epsilon(1e-10));
    check_spectrum_invariants(g);
  }
}

TEST_CASE("path spectrum matches closed form") {
  const Graph g = path(9);
  const auto want = oracle::path_eigenvalues(9);
  for (int k = 0; k < 9; ++k) CHECK(g.spectrum().eigenvalues(k) == doctest::Approx(want[k]).epsilon(1e-10));
}

TEST_CASE("five-agent spectrum cross-checked by determinant sign changes") {
  const Graph g = five_agent_graph();
  const auto roots = det_sign_change_roots(oracle::laplacian(g.adjacency()), 6.0, 6000);
  REQUIRE(roots.size() == 5);
  for (int k = 0; k < 5; ++k) CHECK(g.spectrum().eigenvalues(k) == doctest::Approx(roots[k]).epsilon(1e-8));
  CHECK(g.spectrum().lambda2() == doctest::Approx(3.0 - std::sqrt(2.0)));
  CHECK(g.spectrum().lambda_max() == doctest::Approx(5.0));
}

TEST_CASE("spectral bounds on named graphs") {
  const auto r = ring(20).spectral_bounds();
  CHECK(r.lambda2_lower == doctest::Approx(0.02));
  CHECK(r.lambda_max_upper == doctest::Approx(4.0));
  const Graph f = five_agent_graph();
  CHECK(f.diameter() == 2);
  CHECK(f.max_degree() == 4.0);
  CHECK(f.spectral_bounds().lambda2_lower == doctest::Approx(0.4));
  CHECK(f.spectral_bounds().lambda_max_upper == doctest::Approx(8.0));
}

TEST_CASE("random graphs satisfy invariants and bounds") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::size_t> size(2, 30);
  std::uniform_real_distribution<double> prob(0.0, 0.5);
  for (int trial = 0; trial < 60; ++trial) {
    const Graph g = random_connected(size(rng), prob(rng), rng);
    check_spectrum_invariants(g);
    CHECK(g.diameter() == oracle::floyd_diameter(g.adjacency()));
    const auto b = g.spectral_bounds();
    CHECK(b.lambda2_lower <= g.spectrum().lambda2() + 1e-10);
    CHECK(g.spectrum().lambda_max() <= b.lambda_max_upper + 1e-10);
  }
}

TEST_CASE("weighted graph keeps weights") {
  const std::vector<Edge> edges{{0, 1, 2.5}, {1, 2, 0.5}};
  const Graph g = from_edge_list(edges);
  CHECK(g.laplacian()(0, 0) == 2.5);
  CHECK(g.laplacian()(1, 1) == 3.0);
  check_spectrum_invariants(g);
}

TEST_CASE("builders") {
  const Graph k3 = complete(3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(k3.adjacency()(i, j) == (i == j ? 0.0 : 1.0));
  const Graph c4 = ring(4);
  CHECK(c4.edges().size() == 4);
  CHECK(c4.diameter() == 2);
  const Graph s = star(6);
  CHECK(s.spectrum().lambda_max() == doctest::Approx(6.0));
  CHECK(s.spectrum().lambda2() == doctest::Approx(1.0));
}

TEST_CASE("edge list merging and rejection") {
  const std::vector<Edge> dup{{0, 1, 1.0}, {1, 0, 1.0}, {1, 2, 1.0}};
  CHECK(from_edge_list(dup).edges().size() == 2);
  const std::vector<Edge> conflict{{0, 1, 1.0}, {1, 0, 2.0}};
  CHECK_THROWS_AS(from_edge_list(conflict), DuplicateEdgeError);
  const std::vector<Edge> split{{0, 1, 1.0}, {2, 3, 1.0}};
  CHECK_THROWS_AS(from_edge_list(split), ConnectivityError);
}

TEST_CASE("adjacency validation") {
  Eigen::MatrixXd asym(2, 2);
  asym << 0, 1, 2, 0;
  CHECK_THROWS_AS(Graph{asym}, GraphFormatError);
  Eigen::MatrixXd diag(2, 2);
  diag << 1, 1, 1, 0;
  CHECK_THROWS_AS(Graph{diag}, GraphFormatError);
  Eigen::MatrixXd neg(2, 2);
  neg << 0, -1, -1, 0;
  CHECK_THROWS_AS(Graph{neg}, GraphFormatError);
  CHECK_THROWS_AS(Graph(Eigen::MatrixXd::Zero(3, 3)), ConnectivityError);
  CHECK_THROWS(Graph(Eigen::MatrixXd::Zero(1, 1)));
}

TEST_CASE("edge list text format") {
  std::istringstream in("# five agents\n1 2\n1 5\n2 3\n3 5\n4 5\n1 4 1.0\n2 5  # trailing\n");
  const Graph g = parse_edge_list(in);
  CHECK(g.laplacian() == five_agent_graph().laplacian());

  std::ostringstream out;
  write_edge_list(out, g);
  std::istringstream back(out.str());
  CHECK(parse_edge_list(back).laplacian() == g.laplacian());

  std::istringstream zero("0 1\n");
  CHECK_THROWS_AS(parse_edge_list(zero), GraphFormatError);
  std::istringstream junk("1 x\n");
  CHECK_THROWS_AS(parse_edge_list(junk), GraphFormatError);
  CHECK_THROWS_AS(load_edge_list("/nonexistent/graph.edges"), IoError);
}
