#include "conlab/graph.hpp"

#include "conlab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <queue>
#include <sstream>
#include <utility>

namespace conlab {
namespace {

NeighborLists build_lists(const Eigen::MatrixXd& a) {
  const auto n = static_cast<std::size_t>(a.rows());
  NeighborLists lists;
  lists.offsets.reserve(n + 1);
  lists.offsets.push_back(0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double w = a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (w != 0.0) {
        lists.targets.push_back(j);
        lists.weights.push_back(w);
      }
    }
    lists.offsets.push_back(lists.targets.size());
  }
  return lists;
}

void validate_adjacency(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) {
    throw GraphFormatError("adjacency matrix must be square");
  }
  if (a.rows() < 2) {
    throw GraphFormatError("a graph needs at least 2 agents");
  }
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    if (a(i, i) != 0.0) {
      throw GraphFormatError("adjacency diagonal must be zero (self-loop at vertex " +
                             std::to_string(i + 1) + ")");
    }
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      const double w = a(i, j);
      if (!std::isfinite(w) || w < 0.0) {
        throw GraphFormatError("adjacency weights must be finite and nonnegative");
      }
      if (w != a(j, i)) {
        throw GraphFormatError("adjacency matrix must be symmetric");
      }
    }
  }
}

Spectrum compute_spectrum(const Eigen::MatrixXd& laplacian) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(laplacian);
  if (solver.info() != Eigen::Success) {
    throw ConnectivityError("symmetric eigensolver failed to converge");
  }
  Spectrum s{solver.eigenvalues(), solver.eigenvectors()};
  const Eigen::Index n = s.eigenvalues.size();

  s.eigenvectors.col(0).setConstant(1.0 / std::sqrt(static_cast<double>(n)));
  for (Eigen::Index k = 1; k < n; ++k) {
    auto v = s.eigenvectors.col(k);
    const double scale = v.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::abs(v(i)) > 1e-12 * scale) {
        if (v(i) < 0.0) v = -v;
        break;
      }
    }
  }
  return s;
}

}  // namespace

std::vector<int> bfs_distances(const NeighborLists& lists, std::size_t source) {
  std::vector<int> dist(lists.size(), -1);
  std::queue<std::size_t> frontier;
  dist[source] = 0;
  frontier.push(source);
  while (!frontier.empty()) {
    const std::size_t u = frontier.front();
    frontier.pop();
    for (const std::size_t v : lists.neighbors(u)) {
      if (dist[v] < 0) {
        dist[v] = dist[u] + 1;
        frontier.push(v);
      }
    }
  }
  return dist;
}

Graph::Graph(Eigen::MatrixXd adjacency, std::string name)
    : adjacency_(std::move(adjacency)), name_(std::move(name)) {
  validate_adjacency(adjacency_);
  lists_ = build_lists(adjacency_);

  // Structural check first: reachability and the hop diameter in one sweep.
  for (std::size_t s = 0; s < size(); ++s) {
    const auto dist = bfs_distances(lists_, s);
    for (const int d : dist) {
      if (d < 0) {
        throw ConnectivityError("graph '" + name_ + "' is not connected");
      }
      diameter_ = std::max(diameter_, d);
    }
  }

  spectrum_ = compute_spectrum(laplacian());
  if (!(spectrum_.lambda2() > kConnectivityTolerance)) {
    throw ConnectivityError("graph '" + name_ + "' has lambda_2 = " +
                            std::to_string(spectrum_.lambda2()) +
                            ", numerically disconnected");
  }
}

Eigen::MatrixXd Graph::laplacian() const {
  Eigen::MatrixXd l = -adjacency_;
  l.diagonal() = adjacency_.rowwise().sum();
  return l;
}

std::vector<Edge> Graph::edges() const {
  std::vector<Edge> out;
  for (std::size_t i = 0; i < size(); ++i) {
    const auto nbrs = lists_.neighbors(i);
    const auto w = lists_.neighbor_weights(i);
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      if (nbrs[k] > i) out.push_back({i, nbrs[k], w[k]});
    }
  }
  return out;
}

double Graph::max_degree() const { return adjacency_.rowwise().sum().maxCoeff(); }

SpectralBounds Graph::spectral_bounds() const {
  return {4.0 / (static_cast<double>(size()) * diameter_), 2.0 * max_degree()};
}

Graph from_edge_list(std::span<const Edge> edges, std::size_t n, std::string name) {
  if (n == 0) {
    for (const auto& e : edges) n = std::max({n, e.u + 1, e.v + 1});
  }
  std::map<std::pair<std::size_t, std::size_t>, double> merged;
  for (const auto& e : edges) {
    if (e.u >= n || e.v >= n) {
      throw GraphFormatError("edge (" + std::to_string(e.u + 1) + ", " +
                             std::to_string(e.v + 1) + ") references a vertex beyond " +
                             std::to_string(n));
    }
    if (e.u == e.v) {
      throw GraphFormatError("self-loop at vertex " + std::to_string(e.u + 1));
    }
    if (!(e.weight > 0.0) || !std::isfinite(e.weight)) {
      throw GraphFormatError("edge weights must be positive and finite");
    }
    const auto key = std::minmax(e.u, e.v);
    const auto [it, inserted] = merged.emplace(key, e.weight);
    if (!inserted && it->second != e.weight) {
      throw DuplicateEdgeError("edge (" + std::to_string(key.first + 1) + ", " +
                               std::to_string(key.second + 1) +
                               ") listed twice with conflicting weights");
    }
  }
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                            static_cast<Eigen::Index>(n));
  for (const auto& [key, w] : merged) {
    const auto i = static_cast<Eigen::Index>(key.first);
    const auto j = static_cast<Eigen::Index>(key.second);
    a(i, j) = w;
    a(j, i) = w;
  }
  return Graph(std::move(a), std::move(name));
}

Graph ring(std::size_t n) {
  if (n < 3) {
    // A two-vertex "ring" is a single edge.
    return from_edge_list(std::vector<Edge>{{0, 1, 1.0}}, 2, "ring(2)");
  }
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) edges.push_back({i, (i + 1) % n, 1.0});
  return from_edge_list(edges, n, "ring(" + std::to_string(n) + ")");
}

Graph path(std::size_t n) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1, 1.0});
  return from_edge_list(edges, n, "path(" + std::to_string(n) + ")");
}

Graph complete(std::size_t n) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) edges.push_back({i, j, 1.0});
  }
  return from_edge_list(edges, n, "complete(" + std::to_string(n) + ")");
}

Graph star(std::size_t n) {
  std::vector<Edge> edges;
  for (std::size_t i = 1; i < n; ++i) edges.push_back({0, i, 1.0});
  return from_edge_list(edges, n, "star(" + std::to_string(n) + ")");
}

Graph five_agent_graph() {
  const std::vector<Edge> edges{{0, 1, 1.0}, {0, 4, 1.0}, {1, 2, 1.0}, {2, 4, 1.0},
                                {3, 4, 1.0}, {0, 3, 1.0}, {1, 4, 1.0}};
  return from_edge_list(edges, 5, "five_agent");
}

Graph random_connected(std::size_t n, double extra_edge_prob, std::mt19937_64& rng) {
  if (n < 2) throw GraphFormatError("a graph needs at least 2 agents");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                            static_cast<Eigen::Index>(n));
  for (std::size_t k = 1; k < n; ++k) {
    std::uniform_int_distribution<std::size_t> pick(0, k - 1);
    const auto i = static_cast<Eigen::Index>(order[k]);
    const auto j = static_cast<Eigen::Index>(order[pick(rng)]);
    a(i, j) = a(j, i) = 1.0;
  }
  std::bernoulli_distribution extra(extra_edge_prob);
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < a.cols(); ++j) {
      if (a(i, j) == 0.0 && extra(rng)) a(i, j) = a(j, i) = 1.0;
    }
  }
  return Graph(std::move(a), "random(" + std::to_string(n) + ")");
}

Graph parse_edge_list(std::istream& in, std::string name) {
  std::vector<Edge> edges;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    long long i = 0;
    long long j = 0;
    if (!(fields >> i)) {
      if (line.find_first_not_of(" \t\r") != std::string::npos) {
        throw GraphFormatError("line " + std::to_string(line_no) + ": expected 'i j [weight]'");
      }
      continue;
    }
    if (!(fields >> j)) {
      throw GraphFormatError("line " + std::to_string(line_no) + ": missing second vertex");
    }
    double w = 1.0;
    if (!(fields >> w)) {
      if (!fields.eof()) {
        throw GraphFormatError("line " + std::to_string(line_no) + ": bad weight");
      }
      w = 1.0;
    }
    std::string rest;
    if (fields >> rest) {
      throw GraphFormatError("line " + std::to_string(line_no) + ": trailing tokens");
    }
    if (i < 1 || j < 1) {
      throw GraphFormatError("line " + std::to_string(line_no) + ": indices are 1-based");
    }
    edges.push_back({static_cast<std::size_t>(i - 1), static_cast<std::size_t>(j - 1), w});
  }
  if (edges.empty()) throw GraphFormatError("edge list is empty");
  return from_edge_list(edges, 0, std::move(name));
}

Graph load_edge_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open edge list " + path.string());
  return parse_edge_list(in, path.stem().string());
}

void write_edge_list(std::ostream& out, const Graph& g) {
  out << "# " << g.name() << ": " << g.size() << " agents\n";
  const auto old_precision = out.precision(17);
  for (const auto& e : g.edges()) {
    out << e.u + 1 << ' ' << e.v + 1;
    if (e.weight != 1.0) out << ' ' << e.weight;
    out << '\n';
  }
  out.precision(old_precision);
}

}  // namespace conlab
