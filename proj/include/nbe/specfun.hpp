#pragma once

#include <span>
#include <vector>

namespace nbe::specfun {

// Gauss-Legendre rule on [a,b]. Nodes strictly increasing, weights positive,
// sum of weights = b - a, exact for polynomials of degree <= 2*order-1.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  double a = 0.0;
  double b = 0.0;
  int order = 0;

  std::size_t size() const { return nodes.size(); }

  template <class F>
  double integrate(F&& f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(nodes[i]);
    return s;
  }
};

QuadratureRule gauss_legendre(int order, double a, double b);

// One rule made of order-per-panel Gauss-Legendre pieces over consecutive
// breakpoints. Breakpoints must be strictly increasing, at least two.
QuadratureRule composite_gauss_legendre(int order_per_panel,
                                        std::span<const double> breakpoints);

// Composite rule whose panels shrink geometrically toward the left endpoint.
// Used for kernels with algebraic (x^alpha) behavior at a; `levels` panels,
// each `ratio` times closer to a than the previous one.
QuadratureRule graded_gauss_legendre(int order_per_panel, double a, double b,
                                     int levels = 12, double ratio = 0.25);

// Harmonic oscillator wave functions phi_0..phi_kmax at x, by the normalized
// three-term recurrence phi_{k+1} = x sqrt(2/(k+1)) phi_k - sqrt(k/(k+1)) phi_{k-1}.
// `out` must have k_max+1 slots.
void oscillator_wavefunctions(int k_max, double x, std::span<double> out);
std::vector<double> oscillator_wavefunctions(int k_max, double x);
double oscillator_wavefunction(int k, double x);

// d/dx phi_k(x) = -x phi_k(x) + sqrt(2k) phi_{k-1}(x)
double oscillator_wavefunction_derivative(int k, double x);

// Transition density of Brownian motion absorbed at 0:
//   P_-(x,y,tau) = sqrt(2/(pi tau)) exp(-(x^2+y^2)/(2 tau)) sinh(x y / tau).
// Evaluated in the difference-of-Gaussians form when x y / tau is large.
double transition_density(double x, double y, double tau);

}  // namespace nbe::specfun
