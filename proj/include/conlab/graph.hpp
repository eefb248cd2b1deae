#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace conlab {

/// Undirected edge between 0-based vertices `u` and `v`.
struct Edge {
  std::size_t u = 0;
  std::size_t v = 0;
  double weight = 1.0;
};

/// Compressed neighbor lists. The consensus kernels only ever touch a graph
/// through this structure, so every agent update reads nothing but its own
/// state and the states of its neighbors.
struct NeighborLists {
  std::vector<std::size_t> offsets;  // size n + 1
  std::vector<std::size_t> targets;
  std::vector<double> weights;

  std::size_t size() const { return offsets.empty() ? 0 : offsets.size() - 1; }
  std::span<const std::size_t> neighbors(std::size_t i) const {
    return {targets.data() + offsets[i], offsets[i + 1] - offsets[i]};
  }
  std::span<const double> neighbor_weights(std::size_t i) const {
    return {weights.data() + offsets[i], offsets[i + 1] - offsets[i]};
  }
};

/// Laplacian eigen-decomposition, ascending eigenvalues. Column 0 of
/// `eigenvectors` is exactly (1/sqrt(N)) * 1 and every other column has its
/// first nonzero component positive.
struct Spectrum {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;

  std::size_t size() const { return static_cast<std::size_t>(eigenvalues.size()); }
  double lambda2() const { return eigenvalues(1); }
  double lambda_max() const { return eigenvalues(eigenvalues.size() - 1); }
};

/// Cheap spectral estimates: lower bound 4/(N diam) on lambda_2 and upper
/// bound 2 d_max on lambda_N. The lambda_2 bound assumes unit weights.
struct SpectralBounds {
  double lambda2_lower = 0.0;
  double lambda_max_upper = 0.0;
};

/// Absolute eigenvalue threshold below which lambda_2 signals a disconnected
/// graph.
inline constexpr double kConnectivityTolerance = 1e-9;

/// Immutable undirected weighted graph. Validation (symmetry, zero diagonal,
/// connectivity) and the spectrum are computed once at construction, so a
/// Graph can be shared freely between threads.
class Graph {
 public:
  /// Throws GraphFormatError on a malformed adjacency and ConnectivityError
  /// when the graph is not connected.
  explicit Graph(Eigen::MatrixXd adjacency, std::string name = "graph");

  std::size_t size() const { return static_cast<std::size_t>(adjacency_.rows()); }
  const std::string& name() const { return name_; }
  const Eigen::MatrixXd& adjacency() const { return adjacency_; }
  const NeighborLists& neighbor_lists() const { return lists_; }
  const Spectrum& spectrum() const { return spectrum_; }

  /// Diag(A 1) - A.
  Eigen::MatrixXd laplacian() const;
  std::vector<Edge> edges() const;

  /// Hop diameter of the unweighted skeleton.
  int diameter() const { return diameter_; }
  /// Largest weighted degree max_i sum_j a_ij.
  double max_degree() const;
  SpectralBounds spectral_bounds() const;

 private:
  Eigen::MatrixXd adjacency_;
  std::string name_;
  NeighborLists lists_;
  Spectrum spectrum_;
  int diameter_ = 0;
};

/// Builds a graph on `n` vertices from 0-based edges (n = 0 infers it from the
/// largest index). Reversed duplicates are merged; a repeated pair with a
/// different weight raises DuplicateEdgeError.
Graph from_edge_list(std::span<const Edge> edges, std::size_t n = 0,
                     std::string name = "edges");

Graph ring(std::size_t n);
Graph path(std::size_t n);
Graph complete(std::size_t n);
Graph star(std::size_t n);

/// The five-agent graph used for the regression experiments:
/// edges {1-2, 1-5, 2-3, 3-5, 4-5, 1-4, 2-5}, unit weights.
Graph five_agent_graph();

/// Random connected unit-weight graph: a random recursive spanning tree plus
/// each remaining pair independently with probability `extra_edge_prob`.
Graph random_connected(std::size_t n, double extra_edge_prob, std::mt19937_64& rng);

/// Edge-list text format: one `i j [weight]` line per edge, 1-based indices,
/// `#` starts a comment.
Graph parse_edge_list(std::istream& in, std::string name = "edges");
Graph load_edge_list(const std::filesystem::path& path);
void write_edge_list(std::ostream& out, const Graph& g);

/// Hop distances from `source` on the unweighted skeleton; -1 marks an
/// unreachable vertex.
std::vector<int> bfs_distances(const NeighborLists& lists, std::size_t source);

}  // namespace conlab
