#pragma once

#include <vector>

namespace nbe::painleve {

enum class Side { bottom, top };  // J = (0,s) vs J = (s, infinity)

// State of the five-variable system at abscissa s. q, p are the boundary
// values of the transformed resolvent functions; u, v, w their accumulated
// inner products; n enters as a parameter.
struct PainleveState {
  double s = 0.0;
  double q = 0.0, p = 0.0, u = 0.0, v = 0.0, w = 0.0;
  int n = 1;

  double r() const;        // r = s R(s,s) reconstructed from the state
  double r_prime() const;  // dr/ds = -qp + sqrt(n) p^2
  double first_integral_1(Side side) const;
  double first_integral_2(Side side) const;
};

// r0 s^{3/2} boundary coefficient.
double r0_constant(int n);

// Puiseux expansion r(s) = sum_i coeff[i] s^{(3+i)/2}, solved term by term
// from the sigma-form equation with the r0 s^{3/2} boundary datum.
struct RSeries {
  int n = 1;
  std::vector<double> coeff;  // coeff[i] multiplies s^{(3+i)/2}

  double eval(double s) const;
  double log_integral(double S) const;  // int_0^S r(t)/t dt
};

RSeries r_series(int n, int num_coeffs = 16);

// Series value of r(s); valid for small s only (s <= 0.3 enforced).
double series_r(int n, double s);

struct SolveOptions {
  double rel_tol = 1e-11;
  double abs_tol = 1e-13;
  double s0 = 1e-3;          // bottom starting abscissa
  double s_start = 0.0;      // top starting abscissa; 0 picks it automatically
  double fi_tol = 1e-8;      // first-integral residual target, scaled by (1+s)
  double fi_abort = 1e-6;    // abort threshold for the scaled residual
  // Stop once the accumulated log-integral exceeds this: the probability is
  // then below exp(-log_cap) and the state would outgrow the residual gates.
  double log_cap = 12.0;
  double record_ratio = 1.04;    // recording grid: geometric near the start,
  double record_max_step = 0.02; // capped spacing elsewhere
  int init_quad_order = 32;
};

struct SigmaSolution {
  Side kind = Side::bottom;
  int n = 1;
  std::vector<double> grid;        // increasing s values
  std::vector<double> r_values;
  std::vector<PainleveState> states;
  // bottom: log_int[i] = int_{s0}^{grid[i]} r/t dt;  top: int_{grid[i]}^{s_start}.
  std::vector<double> log_int;
  double series_log_piece = 0.0;  // bottom: int_0^{s0} r/t dt from the series
  double tail_log_piece = 0.0;    // top: int_{s_start}^inf r/t dt estimate
  double max_fi_residual = 0.0;   // max over accepted steps of |F|/(1+s)
  std::vector<double> fi_scaled;  // per grid point, evaluated in extended precision
  // extended-precision copies of r for the finite-difference diagnostics
  // (double storage noise is amplified by ~1/h^2 in the stencils)
  std::vector<long double> r_extended;
  bool truncated_at_cap = false;  // stopped early at the log-integral cap

  // total log-integral for thresholds at grid.back() / grid.front()
  double total_log_integral() const;
};

SigmaSolution integrate_bottom(int n, double s_max, const SolveOptions& opts = {});
SigmaSolution integrate_top(int n, double s_min, const SolveOptions& opts = {});

// P(X_1(tau) >= s sigma) = exp(-int_0^{s^2} r/t dt)
double prob_bottom(int n, double s, const SolveOptions& opts = {});
// P(X_n(tau) <= s sigma) = exp(-int_{s^2}^inf r/t dt)
double prob_top(int n, double s, const SolveOptions& opts = {});
// Small-s closed expansion of the bottom probability (terms through s^10).
double prob_series_bottom(int n, double s);

// Starting abscissa used by integrate_top when opts.s_start == 0.
double top_start_abscissa(int n);

// Max over interior grid points of |sigma-form residual| / (1 + s^4), with
// r' and r'' taken by local five-point finite differences on the grid.
double max_sigma_form_residual(const SigmaSolution& sol);

// Max over recorded states of the scaled first-integral residuals.
double max_first_integral_residual(const SigmaSolution& sol);

// Max over recorded states of |r'(algebraic) - r'(finite difference)|.
double max_r_prime_deviation(const SigmaSolution& sol);

}  // namespace nbe::painleve
