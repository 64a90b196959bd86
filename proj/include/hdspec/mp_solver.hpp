#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "hdspec/measures.hpp"
#include "hdspec/process.hpp"

// Fixed-point solver for the Stieltjes transform of the generalized
// Marchenko-Pastur law with population measure H and aspect ratio c.

namespace hdspec::mp {

struct MPSolution {
  measures::DiscreteMeasure H;
  double c = 0.0;
  double tol = 1e-12;
  int max_iter = 10000;
};

inline void validate(const MPSolution& sol) {
  measures::validate(sol.H);
  if (!(sol.c > 0.0)) throw std::invalid_argument("mp: c must be positive");
  if (!(sol.tol > 0.0)) throw std::invalid_argument("mp: tol must be positive");
  if (sol.max_iter < 1) throw std::invalid_argument("mp: max_iter must be >= 1");
}

// residual is measured on the companion equation, |u(z - c int t/(1+tu)dH) + 1|
// with u the companion transform.  Both factors are O(1) at the fixed point,
// so the residual stays meaningful even where m itself is large (near the
// zero atom of the law when c > 1).
struct MPDiagnostics {
  std::complex<double> m;
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(double residual, int iterations)
      : std::runtime_error("mp_solve: fixed point did not converge"),
        residual(residual),
        iterations(iterations) {}
  double residual;
  int iterations;
};

namespace detail {

// State of the companion-transform equation u = -1/(z - c int t/(1+tu) dH)
// at a point u.  The companion map preserves the upper half-plane, so
// iterating it can only reach the admissible branch, unlike the direct
// fixed-point map whose spurious root is attracting for part of the
// parameter range.
struct CompanionEval {
  std::complex<double> denom;     // z - c int t/(1+tu) dH
  std::complex<double> residual;  // u * denom + 1
  std::complex<double> slope;     // d/du of (u * denom + 1)
};

inline CompanionEval companion_eval(const MPSolution& sol,
                                    std::complex<double> z,
                                    std::complex<double> u) {
  std::complex<double> first = 0.0;
  std::complex<double> second = 0.0;
  for (std::size_t j = 0; j < sol.H.atoms.size(); ++j) {
    const double t = sol.H.atoms[j];
    const std::complex<double> q = t / (1.0 + t * u);
    first += sol.H.weights[j] * q;
    second += sol.H.weights[j] * q * q;
  }
  CompanionEval ev;
  ev.denom = z - sol.c * first;
  ev.residual = u * ev.denom + 1.0;
  ev.slope = ev.denom + sol.c * u * second;
  return ev;
}

inline std::complex<double> m_from_companion(const MPSolution& sol,
                                             std::complex<double> z,
                                             std::complex<double> u) {
  std::complex<double> sum = 0.0;
  for (std::size_t j = 0; j < sol.H.atoms.size(); ++j)
    sum += sol.H.weights[j] / (1.0 + sol.H.atoms[j] * u);
  return -sum / z;
}

}  // namespace detail

inline MPDiagnostics mp_solve_diag(const MPSolution& sol, std::complex<double> z,
                                   std::complex<double> m0) {
  validate(sol);
  if (!(z.imag() > 0.0))
    throw std::invalid_argument("mp_solve: z must lie in the upper half-plane");
  std::complex<double> u = (sol.c - 1.0) / z + sol.c * m0;
  if (!(u.imag() > 0.0)) u = -1.0 / z;
  detail::CompanionEval ev = detail::companion_eval(sol, z, u);
  MPDiagnostics diag;
  for (int iter = 0; iter < sol.max_iter; ++iter) {
    if (std::abs(ev.residual) <= sol.tol) {
      diag.m = detail::m_from_companion(sol, z, u);
      diag.iterations = iter;
      diag.residual = std::abs(ev.residual);
      diag.converged = true;
      return diag;
    }
    bool stepped = false;
    if (ev.slope != 0.0) {
      const std::complex<double> newton = u - ev.residual / ev.slope;
      if (newton.imag() > 0.0) {
        const detail::CompanionEval cand = detail::companion_eval(sol, z, newton);
        if (std::abs(cand.residual) < std::abs(ev.residual)) {
          u = newton;
          ev = cand;
          stepped = true;
        }
      }
    }
    if (!stepped) {
      u = -1.0 / ev.denom;
      ev = detail::companion_eval(sol, z, u);
    }
  }
  diag.m = detail::m_from_companion(sol, z, u);
  diag.iterations = sol.max_iter;
  diag.residual = std::abs(ev.residual);
  diag.converged = diag.residual <= sol.tol;
  return diag;
}

inline MPDiagnostics mp_solve_diag(const MPSolution& sol, std::complex<double> z) {
  return mp_solve_diag(sol, z, -1.0 / z);
}

inline std::complex<double> mp_solve(const MPSolution& sol, std::complex<double> z) {
  const MPDiagnostics diag = mp_solve_diag(sol, z);
  if (!diag.converged) throw ConvergenceError(diag.residual, diag.iterations);
  return diag.m;
}

inline std::vector<double> mp_density(const MPSolution& sol,
                                      const std::vector<double>& xs, double eta) {
  if (!(eta >= 1e-4))
    throw std::invalid_argument("mp_density: eta must be >= 1e-4");
  std::vector<double> out;
  out.reserve(xs.size());
  std::complex<double> guess(0.0, 0.0);
  bool have_guess = false;
  for (double x : xs) {
    const std::complex<double> z(x, eta);
    MPDiagnostics diag = have_guess ? mp_solve_diag(sol, z, guess)
                                    : mp_solve_diag(sol, z);
    if (!diag.converged) diag = mp_solve_diag(sol, z);
    if (!diag.converged) throw ConvergenceError(diag.residual, diag.iterations);
    guess = diag.m;
    have_guess = true;
    out.push_back(std::max(0.0, diag.m.imag() / measures::kPi));
  }
  return out;
}

inline MPSolution nu_n(const process::LinearProcessModel& model, double theta,
                       long d, long m) {
  if (d < 1 || m < 1) throw std::invalid_argument("nu_n: d and m must be >= 1");
  MPSolution sol;
  sol.H = process::population_esd(model, theta);
  sol.c = static_cast<double>(d) / static_cast<double>(2 * m + 1);
  return sol;
}

// Discretize nu as an atomic measure: equal-mass quantile atoms of the
// continuous part (recovered through Stieltjes inversion at height eta),
// plus the deterministic atom at zero of mass 1 - 1/c when c > 1.
inline measures::DiscreteMeasure nu_discretized(const MPSolution& sol,
                                                int n_atoms = 512,
                                                double eta = 1e-3,
                                                int grid_pts = 4096) {
  validate(sol);
  if (n_atoms < 1) throw std::invalid_argument("nu_discretized: n_atoms >= 1");
  if (grid_pts < 2) throw std::invalid_argument("nu_discretized: grid_pts >= 2");
  if (!(eta >= 1e-4)) throw std::invalid_argument("nu_discretized: eta >= 1e-4");
  const double zero_mass = sol.c > 1.0 ? 1.0 - 1.0 / sol.c : 0.0;
  const double lambda_max = sol.H.atoms.back();
  const double sqrt_c = std::sqrt(sol.c);
  const double hi = lambda_max * (1.0 + sqrt_c) * (1.0 + sqrt_c) * 1.05 + 0.1;
  const double lo = 0.0;
  const double step = (hi - lo) / static_cast<double>(grid_pts - 1);

  std::vector<double> xs(static_cast<std::size_t>(grid_pts));
  for (int i = 0; i < grid_pts; ++i) xs[static_cast<std::size_t>(i)] = lo + step * i;

  std::vector<double> dens(xs.size());
  std::complex<double> guess(0.0, 0.0);
  bool have_guess = false;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const std::complex<double> z(xs[i], eta);
    MPDiagnostics diag = have_guess ? mp_solve_diag(sol, z, guess)
                                    : mp_solve_diag(sol, z);
    if (!diag.converged) diag = mp_solve_diag(sol, z);
    if (!diag.converged) throw ConvergenceError(diag.residual, diag.iterations);
    guess = diag.m;
    have_guess = true;
    double g = diag.m.imag() / measures::kPi;
    if (zero_mass > 0.0)
      g -= zero_mass * eta / (measures::kPi * (xs[i] * xs[i] + eta * eta));
    dens[i] = std::max(0.0, g);
  }

  std::vector<double> cdf(xs.size(), 0.0);
  for (std::size_t i = 1; i < xs.size(); ++i)
    cdf[i] = cdf[i - 1] + 0.5 * (dens[i - 1] + dens[i]) * step;
  const double total = cdf.back();
  if (!(total > 0.0))
    throw std::runtime_error("nu_discretized: degenerate continuous part");

  std::vector<double> atoms;
  std::vector<double> weights;
  if (zero_mass > 0.0) {
    atoms.push_back(0.0);
    weights.push_back(zero_mass);
  }
  const double w = (1.0 - zero_mass) / static_cast<double>(n_atoms);
  std::size_t pos = 0;
  for (int k = 0; k < n_atoms; ++k) {
    const double target = (k + 0.5) / static_cast<double>(n_atoms) * total;
    while (pos + 1 < cdf.size() && cdf[pos + 1] < target) ++pos;
    double x = xs[pos];
    const double seg = cdf[pos + 1] - cdf[pos];
    if (seg > 0.0) x += step * (target - cdf[pos]) / seg;
    atoms.push_back(x);
    weights.push_back(w);
  }
  return measures::make_measure(atoms, weights);
}

}  // namespace hdspec::mp
