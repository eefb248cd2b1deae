#pragma once

#include "conlab/algorithms.hpp"
#include "conlab/graph.hpp"

#include <complex>
#include <span>
#include <string>
#include <vector>

namespace conlab {

/// Roots of s^(d+1) - s^d + c, the characteristic polynomial of one
/// disagreement mode of the buffered iteration (c = step * lambda_i).
struct CharPoly {
  int d = 0;
  double c = 0.0;
  std::vector<std::complex<double>> roots;  // d + 1 entries, with multiplicity

  double max_modulus() const;
  /// Largest |s^(d+1) - s^d + c| over the stored roots.
  double max_residual() const;
};

std::complex<double> charpoly_value(int d, double c, std::complex<double> s);

/// Companion-matrix eigenvalues refined by damped Newton iteration (at
/// most 50 steps per root; a step is only accepted if it lowers the
/// residual, which keeps the double root at tangency from oscillating).
CharPoly roots_of_charpoly(int d, double c);

/// d^d / (d+1)^(d+1): the coefficient at which the largest root is smallest;
/// there the polynomial has a double root of modulus d/(d+1).
double tangency_coefficient(int d);

struct RatePrediction {
  int d = 0;
  double step = 0.0;
  std::vector<double> mode_factors;  // modes 2..N
  double factor = 0.0;               // r_d, the worst mode
  double baseline = 0.0;             // r_0 = max(|1 - step l_2|, |1 - step l_N|)
  int admissible_max_d = 0;          // largest d with r_d < 1 (search capped)
};

inline constexpr int kAdmissibleSearchCap = 64;

/// Predicted asymptotic factor of the buffered iteration. Throws
/// StepsizeError unless 0 < step < 2/lambda_N.
RatePrediction convergence_factor(int d, double step, const Spectrum& spectrum);

/// Largest d <= cap whose factor stays below one (stops at the first
/// unstable d).
int admissible_max_buffer(double step, const Spectrum& spectrum,
                          int cap = kAdmissibleSearchCap);

/// Smallest solution of sin(d phi) / sin((d+1) phi) = 1/a_abs in
/// (0, pi/(d+1)). Other sign changes found by the scan go to `alternatives`.
/// Throws NoSolutionError when the scan finds no root.
double solve_phi(int d, double a_abs, std::vector<double>* alternatives = nullptr);

/// Accelerating-buffer analysis of a single mode with coefficient c.
struct ModeBound {
  double c = 0.0;
  double first_term = 0.0;   // log-ratio term, evaluated at the last tested d
  double second_term = 0.0;  // |1-c| / (1 - |1-c|)
  double bound = 0.0;        // min of both terms
  int max_d = 0;             // largest d such that every d' in 1..d passes
  bool skipped = false;      // c == 1, see analysis notes
};

struct AcceleratingBound {
  std::vector<ModeBound> modes;
  double bound = 0.0;  // min over modes
  int max_d = 0;       // every 1 <= d <= max_d has r_d < r_0
  std::vector<std::string> diagnostics;

  bool certifies(int d) const { return d >= 1 && d <= max_d; }
};

/// Sufficient condition for a buffer depth to beat the undelayed iteration.
/// For each candidate d >= 1 the angle phi(d) is solved and d is tested
/// against both terms; a mode's max_d is the last consecutive pass. Throws
/// StepsizeError unless 0 < step < 2/lambda_N.
AcceleratingBound accelerating_bound(double step, const Spectrum& spectrum,
                                     int search_cap = kAdmissibleSearchCap);

/// True when d^d/(d+1)^(d+1) < step * lambda_i for every mode, i.e. the
/// factor keeps decreasing in d.
bool monotonicity_region(double step, const Spectrum& spectrum, int d);

/// Root-location test: are all roots of s^(d+1) - s^d + c inside
/// |s| < 1/|a|? Evaluates |a| < (d+1)/d and the two-sided bound on c.
/// Throws NoSolutionError if the angle equation has no solution.
bool lemma2_root_bound_check(int d, double c, double a);

/// Empirical geometric decay factor: exp of the least-squares slope of
/// ln e(k) over the last half of the rounds up to the last one above the
/// noise floor (isolated rounds at or below the floor are left out of the
/// fit). Throws DegenerateTrajectoryError for fewer than 20 rounds or when
/// fewer than five usable points remain.
double measured_factor(std::span<const double> errors, double noise_floor);
double measured_factor(const Trajectory& trajectory);

/// Floor used for trajectories: 1e-12 of the larger of ||x(0)|| and e(0).
double noise_floor(const Trajectory& trajectory);

}  // namespace conlab
