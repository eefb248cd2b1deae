#include "conlab/kernels.hpp"

#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace conlab {
namespace kernels {
namespace {

inline void agent_row(const NeighborLists& g, const StateMatrix& x, StateMatrix& out,
                      Eigen::Index i) {
  const auto nbrs = g.neighbors(static_cast<std::size_t>(i));
  const auto w = g.neighbor_weights(static_cast<std::size_t>(i));
  const Eigen::Index m = x.cols();
  const double* xi = x.row(i).data();
  double* oi = out.row(i).data();
  for (Eigen::Index c = 0; c < m; ++c) oi[c] = 0.0;
  for (std::size_t k = 0; k < nbrs.size(); ++k) {
    const double* xj = x.row(static_cast<Eigen::Index>(nbrs[k])).data();
    const double wk = w[k];
    for (Eigen::Index c = 0; c < m; ++c) oi[c] += wk * (xi[c] - xj[c]);
  }
}

}  // namespace

void laplacian_apply_serial(const NeighborLists& g, const StateMatrix& x, StateMatrix& out) {
  out.resize(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) agent_row(g, x, out, i);
}

void laplacian_apply_omp(const NeighborLists& g, const StateMatrix& x, StateMatrix& out) {
  out.resize(x.rows(), x.cols());
  const Eigen::Index n = x.rows();
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) agent_row(g, x, out, i);
}

}  // namespace kernels

Backend default_backend(std::size_t agents) {
  return agents >= kernels::kParallelThreshold ? Backend::OpenMP : Backend::Serial;
}

int configured_threads() {
  if (const char* env = std::getenv("CONSENSUS_LAB_THREADS"); env != nullptr && *env != '\0') {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
      // fall through to the runtime default
    }
  }
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void apply_thread_config() {
#ifdef _OPENMP
  omp_set_num_threads(configured_threads());
#endif
}

}  // namespace conlab
