#pragma once

#include "conlab/graph.hpp"

#include <Eigen/Dense>

namespace conlab {

/// Agents x components, one row per agent.
using StateMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Backend { Serial, OpenMP };

namespace kernels {

// out_i = sum_j a_ij (x_i - x_j), i.e. (L x)_i evaluated from neighbor lists.
void laplacian_apply_serial(const NeighborLists& g, const StateMatrix& x, StateMatrix& out);
void laplacian_apply_omp(const NeighborLists& g, const StateMatrix& x, StateMatrix& out);

inline void laplacian_apply(Backend backend, const NeighborLists& g, const StateMatrix& x,
                            StateMatrix& out) {
  if (backend == Backend::OpenMP) {
    laplacian_apply_omp(g, x, out);
  } else {
    laplacian_apply_serial(g, x, out);
  }
}

/// Agent count above which the OpenMP kernel is worth its fork/join cost.
inline constexpr std::size_t kParallelThreshold = 2048;

}  // namespace kernels

/// Serial below kernels::kParallelThreshold agents, OpenMP above.
Backend default_backend(std::size_t agents);

/// Worker count: CONSENSUS_LAB_THREADS when set, otherwise the OpenMP default.
int configured_threads();
void apply_thread_config();

}  // namespace conlab
