#include "conlab/rates.hpp"

#include "conlab/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace conlab {
namespace {

using cplx = std::complex<double>;

void require_admissible_step(double step, const Spectrum& spectrum) {
  if (!(step > 0.0) || !(step * spectrum.lambda_max() < 2.0)) {
    throw StepsizeError("stepsize " + std::to_string(step) + " outside (0, 2/lambda_N) = (0, " +
                        std::to_string(2.0 / spectrum.lambda_max()) + ")");
  }
}

cplx charpoly_derivative(int d, cplx s) {
  if (d == 0) return {1.0, 0.0};
  const cplx sd1 = std::pow(s, d - 1);
  return static_cast<double>(d + 1) * sd1 * s - static_cast<double>(d) * sd1;
}

cplx refine_root(int d, double c, cplx s) {
  double res = std::abs(charpoly_value(d, c, s));
  for (int it = 0; it < 50 && res > 0.0; ++it) {
    const cplx deriv = charpoly_derivative(d, s);
    if (std::abs(deriv) == 0.0) break;
    cplx delta = charpoly_value(d, c, s) / deriv;
    bool improved = false;
    for (int halvings = 0; halvings < 8; ++halvings) {
      const cplx trial = s - delta;
      const double trial_res = std::abs(charpoly_value(d, c, trial));
      if (trial_res < res) {
        s = trial;
        res = trial_res;
        improved = true;
        break;
      }
      delta *= 0.5;
    }
    if (!improved || std::abs(delta) <= 1e-17 * std::max(1.0, std::abs(s))) break;
  }
  return s;
}

// Largest root modulus of the mode polynomial; d = 0 is the undelayed |1 - c|.
double mode_factor(int d, double c) {
  if (d == 0) return std::abs(1.0 - c);
  return roots_of_charpoly(d, c).max_modulus();
}

}  // namespace

cplx charpoly_value(int d, double c, cplx s) {
  const cplx sd = std::pow(s, d);
  return sd * s - sd + c;
}

double CharPoly::max_modulus() const {
  double m = 0.0;
  for (const auto& r : roots) m = std::max(m, std::abs(r));
  return m;
}

double CharPoly::max_residual() const {
  double m = 0.0;
  for (const auto& r : roots) m = std::max(m, std::abs(charpoly_value(d, c, r)));
  return m;
}

CharPoly roots_of_charpoly(int d, double c) {
  if (d < 0) throw DomainError("buffer depth must be nonnegative");
  if (!std::isfinite(c)) throw DomainError("polynomial coefficient must be finite");
  CharPoly p{d, c, {}};
  if (d == 0) {
    p.roots.emplace_back(1.0 - c, 0.0);
    return p;
  }
  // Companion matrix of s^(d+1) - s^d + 0 s^(d-1) + ... + c.
  const int n = d + 1;
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(n, n);
  companion(0, 0) = 1.0;
  companion(0, n - 1) = -c;
  for (int i = 1; i < n; ++i) companion(i, i - 1) = 1.0;

  const Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, /*computeEigenvectors=*/false);
  const auto& ev = solver.eigenvalues();
  p.roots.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) p.roots.push_back(refine_root(d, c, ev(i)));
  return p;
}

double tangency_coefficient(int d) {
  if (d < 0) throw DomainError("buffer depth must be nonnegative");
  const double dd = static_cast<double>(d);
  return std::pow(dd, dd) / std::pow(dd + 1.0, dd + 1.0);
}

int admissible_max_buffer(double step, const Spectrum& spectrum, int cap) {
  require_admissible_step(step, spectrum);
  // The stable set of s^(d+1) - s^d + c in c > 0 is an interval (0, c*(d)),
  // so the mode with the largest coefficient decides stability.
  const double c_max = step * spectrum.lambda_max();
  for (int d = 1; d <= cap; ++d) {
    if (mode_factor(d, c_max) >= 1.0) return d - 1;
  }
  return cap;
}

RatePrediction convergence_factor(int d, double step, const Spectrum& spectrum) {
  require_admissible_step(step, spectrum);
  if (d < 0) throw DomainError("buffer depth must be nonnegative");
  RatePrediction r;
  r.d = d;
  r.step = step;
  const Eigen::Index n = spectrum.eigenvalues.size();
  r.mode_factors.reserve(static_cast<std::size_t>(n - 1));
  for (Eigen::Index i = 1; i < n; ++i) {
    const double f = mode_factor(d, step * spectrum.eigenvalues(i));
    r.mode_factors.push_back(f);
    r.factor = std::max(r.factor, f);
  }
  r.baseline = std::max(std::abs(1.0 - step * spectrum.lambda2()),
                        std::abs(1.0 - step * spectrum.lambda_max()));
  r.admissible_max_d = admissible_max_buffer(step, spectrum);
  return r;
}

double solve_phi(int d, double a_abs, std::vector<double>* alternatives) {
  if (d < 1) throw DomainError("angle equation needs d >= 1");
  if (!(a_abs > 0.0)) throw DomainError("angle equation needs |a| > 0");
  constexpr double eps = 1e-12;
  constexpr int intervals = 1024;
  const double dd = static_cast<double>(d);
  const double inv_a = 1.0 / a_abs;
  const auto g = [&](double phi) { return std::sin(dd * phi) - inv_a * std::sin((dd + 1.0) * phi); };

  const double lo = eps;
  const double hi = std::numbers::pi / (dd + 1.0) - eps;
  const double h = (hi - lo) / intervals;

  std::vector<double> found;
  double x0 = lo;
  double g0 = g(x0);
  for (int k = 1; k <= intervals; ++k) {
    const double x1 = (k == intervals) ? hi : lo + k * h;
    const double g1 = g(x1);
    if (g0 == 0.0) {
      found.push_back(x0);
    } else if ((g0 < 0.0) != (g1 < 0.0) && g1 != 0.0) {
      double a = x0;
      double b = x1;
      double ga = g0;
      for (int it = 0; it < 200 && b - a > 1e-16; ++it) {
        const double mid = 0.5 * (a + b);
        const double gm = g(mid);
        if (gm == 0.0) {
          a = b = mid;
          break;
        }
        if ((gm < 0.0) == (ga < 0.0)) {
          a = mid;
          ga = gm;
        } else {
          b = mid;
        }
      }
      found.push_back(0.5 * (a + b));
    }
    x0 = x1;
    g0 = g1;
  }
  if (g0 == 0.0) found.push_back(x0);
  if (found.empty()) {
    throw NoSolutionError("sin(" + std::to_string(d) + " phi)/sin(" + std::to_string(d + 1) +
                          " phi) = " + std::to_string(inv_a) + " has no solution in (0, pi/" +
                          std::to_string(d + 1) + ")");
  }
  if (alternatives != nullptr) alternatives->assign(found.begin() + 1, found.end());
  return found.front();
}

AcceleratingBound accelerating_bound(double step, const Spectrum& spectrum, int search_cap) {
  require_admissible_step(step, spectrum);
  AcceleratingBound out;
  out.bound = std::numeric_limits<double>::infinity();
  out.max_d = search_cap;

  const Eigen::Index n = spectrum.eigenvalues.size();
  for (Eigen::Index i = 1; i < n; ++i) {
    ModeBound m;
    m.c = step * spectrum.eigenvalues(i);
    const double u = std::abs(1.0 - m.c);
    if (u < 1e-14) {
      // Roots cannot lie inside a disk of radius 0: no buffer is certified.
      m.skipped = true;
      m.first_term = std::numeric_limits<double>::quiet_NaN();
      m.second_term = 0.0;
      m.bound = 0.0;
      m.max_d = 0;
      out.diagnostics.push_back("ModeSkipped: mode " + std::to_string(i + 1) +
                                " has step*lambda = 1; first term undefined, bound set to 0");
    } else {
      m.second_term = u / (1.0 - u);
      m.first_term = std::numeric_limits<double>::quiet_NaN();
      const double log_u = std::log(u);
      for (int d = 1; d <= search_cap; ++d) {
        if (!(static_cast<double>(d) < m.second_term)) break;
        double phi = 0.0;
        std::vector<double> alternatives;
        try {
          phi = solve_phi(d, 1.0 / u, &alternatives);
        } catch (const NoSolutionError&) {
          out.diagnostics.push_back("NoSolution: mode " + std::to_string(i + 1) + ", d = " +
                                    std::to_string(d));
          break;
        }
        if (!alternatives.empty()) {
          out.diagnostics.push_back("MultiplePhi: mode " + std::to_string(i + 1) + ", d = " +
                                    std::to_string(d) + ", smallest root taken");
        }
        const double radial = std::sqrt(u * u + 1.0 - 2.0 * u * std::cos(phi));
        m.first_term = std::log(m.c / radial) / log_u;
        if (!(static_cast<double>(d) < m.first_term)) break;
        m.max_d = d;
      }
      m.bound = std::isnan(m.first_term) ? m.second_term : std::min(m.first_term, m.second_term);
    }
    out.bound = std::min(out.bound, m.bound);
    out.max_d = std::min(out.max_d, m.max_d);
    out.modes.push_back(m);
  }
  return out;
}

bool monotonicity_region(double step, const Spectrum& spectrum, int d) {
  const double threshold = tangency_coefficient(d);
  for (Eigen::Index i = 1; i < spectrum.eigenvalues.size(); ++i) {
    if (!(threshold < step * spectrum.eigenvalues(i))) return false;
  }
  return true;
}

bool lemma2_root_bound_check(int d, double c, double a) {
  if (d < 1) throw DomainError("root-location test needs d >= 1");
  if (!(c > 0.0)) throw DomainError("root-location test needs c > 0");
  if (a == 0.0 || !std::isfinite(a)) throw DomainError("root-location test needs finite a != 0");
  const double A = std::abs(a);
  const double dd = static_cast<double>(d);
  if (!(A < (dd + 1.0) / dd)) return false;
  const double phi = solve_phi(d, A);
  const double scale = std::pow(A, dd + 1.0);
  const double lower = (A - 1.0) / scale;
  const double upper = std::sqrt(A * A + 1.0 - 2.0 * A * std::cos(phi)) / scale;
  return lower < c && c < upper;
}

double measured_factor(std::span<const double> errors, double floor) {
  if (errors.size() < 20) {
    throw DegenerateTrajectoryError("factor fit needs at least 20 rounds, got " +
                                    std::to_string(errors.size()));
  }
  // The tail that stays at or below the floor is discarded. Isolated dips
  // (a trajectory passing through consensus and rebounding, as NAG-C does)
  // are skipped inside the window instead of ending it.
  std::size_t above = errors.size();
  for (std::size_t k = errors.size(); k-- > 0;) {
    if (errors[k] > floor) {
      above = k;
      break;
    }
  }
  if (above == errors.size()) throw DegenerateTrajectoryError("disagreement is zero throughout");
  const std::size_t last = above;
  const std::size_t first = last / 2;
  std::size_t count = 0;
  double sx = 0.0;
  double sy = 0.0;
  for (std::size_t k = first; k <= last; ++k) {
    if (!(errors[k] > floor)) continue;
    ++count;
    sx += static_cast<double>(k);
    sy += std::log(errors[k]);
  }
  if (count < 5) {
    throw DegenerateTrajectoryError("disagreement reached the noise floor at round " +
                                    std::to_string(last + 1) + ", no fit window left");
  }
  const double mx = sx / static_cast<double>(count);
  const double my = sy / static_cast<double>(count);
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t k = first; k <= last; ++k) {
    if (!(errors[k] > floor)) continue;
    const double dx = static_cast<double>(k) - mx;
    sxy += dx * (std::log(errors[k]) - my);
    sxx += dx * dx;
  }
  return std::exp(sxy / sxx);
}

double noise_floor(const Trajectory& trajectory) {
  const double x0 = trajectory.states.rows() > 0 ? trajectory.states.row(0).norm() : 0.0;
  const double e0 = trajectory.disagreement.empty() ? 0.0 : trajectory.disagreement.front();
  return 1e-12 * std::max(x0, e0);
}

double measured_factor(const Trajectory& trajectory) {
  return measured_factor(trajectory.disagreement, noise_floor(trajectory));
}

}  // namespace conlab
