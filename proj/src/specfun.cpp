#include "nbe/specfun.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace nbe::specfun {

namespace {

// Legendre root on (-1,1) by Newton iteration on the three-term recurrence.
// Returns the i-th root (i = 0 is the most negative) of P_order.
double legendre_root(int order, int i) {
  double z = -std::cos(M_PI * (i + 0.75) / (order + 0.5));
  for (int iter = 0; iter < 100; ++iter) {
    double p1 = 1.0, p2 = 0.0;
    for (int j = 0; j < order; ++j) {
      double p3 = p2;
      p2 = p1;
      p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1);
    }
    double pp = order * (z * p1 - p2) / (z * z - 1.0);
    double dz = -p1 / pp;
    z += dz;
    if (std::abs(dz) < 1e-15) break;
  }
  return z;
}

}  // namespace

QuadratureRule gauss_legendre(int order, double a, double b) {
  if (order < 1) throw std::invalid_argument("gauss_legendre: order must be >= 1");
  if (!(a < b) || !std::isfinite(a) || !std::isfinite(b))
    throw std::invalid_argument("gauss_legendre: need finite a < b");

  QuadratureRule rule;
  rule.a = a;
  rule.b = b;
  rule.order = order;
  rule.nodes.resize(order);
  rule.weights.resize(order);

  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  const int m = (order + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double z = legendre_root(order, i);
    // weight on (-1,1): 2 / ((1-z^2) P_order'(z)^2)
    double p1 = 1.0, p2 = 0.0;
    for (int j = 0; j < order; ++j) {
      double p3 = p2;
      p2 = p1;
      p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1);
    }
    double pp = order * (z * p1 - p2) / (z * z - 1.0);
    double w = 2.0 / ((1.0 - z * z) * pp * pp);
    rule.nodes[i] = mid + half * z;
    rule.nodes[order - 1 - i] = mid - half * z;
    rule.weights[i] = half * w;
    rule.weights[order - 1 - i] = half * w;
  }
  // nodes were filled symmetric around mid with the negative roots first
  // (z < 0 for i < m), so the array is already increasing.
  return rule;
}

QuadratureRule composite_gauss_legendre(int order_per_panel,
                                        std::span<const double> breakpoints) {
  if (breakpoints.size() < 2)
    throw std::invalid_argument("composite_gauss_legendre: need >= 2 breakpoints");
  QuadratureRule rule;
  rule.a = breakpoints.front();
  rule.b = breakpoints.back();
  rule.order = order_per_panel * static_cast<int>(breakpoints.size() - 1);
  for (std::size_t k = 0; k + 1 < breakpoints.size(); ++k) {
    if (!(breakpoints[k] < breakpoints[k + 1]))
      throw std::invalid_argument("composite_gauss_legendre: breakpoints not increasing");
    QuadratureRule panel = gauss_legendre(order_per_panel, breakpoints[k], breakpoints[k + 1]);
    rule.nodes.insert(rule.nodes.end(), panel.nodes.begin(), panel.nodes.end());
    rule.weights.insert(rule.weights.end(), panel.weights.begin(), panel.weights.end());
  }
  return rule;
}

QuadratureRule graded_gauss_legendre(int order_per_panel, double a, double b,
                                     int levels, double ratio) {
  if (!(a < b)) throw std::invalid_argument("graded_gauss_legendre: need a < b");
  if (levels < 1 || !(ratio > 0.0 && ratio < 1.0))
    throw std::invalid_argument("graded_gauss_legendre: bad grading parameters");
  std::vector<double> breaks;
  breaks.push_back(a);
  double len = b - a;
  for (int k = levels - 1; k >= 1; --k) breaks.push_back(a + len * std::pow(ratio, k));
  breaks.push_back(b);
  return composite_gauss_legendre(order_per_panel, breaks);
}

void oscillator_wavefunctions(int k_max, double x, std::span<double> out) {
  if (k_max < 0) throw std::invalid_argument("oscillator_wavefunctions: k_max < 0");
  if (!std::isfinite(x)) throw std::invalid_argument("oscillator_wavefunctions: x not finite");
  if (out.size() < static_cast<std::size_t>(k_max) + 1)
    throw std::invalid_argument("oscillator_wavefunctions: output span too small");

  const double phi0 = std::exp(-0.5 * x * x) / std::pow(M_PI, 0.25);
  out[0] = phi0;
  if (k_max == 0) return;
  out[1] = x * std::sqrt(2.0) * phi0;
  for (int k = 1; k < k_max; ++k)
    out[k + 1] = x * std::sqrt(2.0 / (k + 1)) * out[k] - std::sqrt(double(k) / (k + 1)) * out[k - 1];
}

std::vector<double> oscillator_wavefunctions(int k_max, double x) {
  std::vector<double> out(static_cast<std::size_t>(k_max) + 1);
  oscillator_wavefunctions(k_max, x, out);
  return out;
}

double oscillator_wavefunction(int k, double x) {
  std::vector<double> buf(static_cast<std::size_t>(k) + 1);
  oscillator_wavefunctions(k, x, buf);
  return buf[static_cast<std::size_t>(k)];
}

double oscillator_wavefunction_derivative(int k, double x) {
  if (k == 0) return -x * oscillator_wavefunction(0, x);
  std::vector<double> buf(static_cast<std::size_t>(k) + 1);
  oscillator_wavefunctions(k, x, buf);
  return -x * buf[k] + std::sqrt(2.0 * k) * buf[k - 1];
}

double transition_density(double x, double y, double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau))
    throw std::invalid_argument("transition_density: tau must be positive");
  if (!std::isfinite(x) || !std::isfinite(y) || x < 0.0 || y < 0.0)
    throw std::invalid_argument("transition_density: x, y must be finite and >= 0");

  const double arg = x * y / tau;
  if (arg < 30.0) {
    return std::sqrt(2.0 / (M_PI * tau)) * std::exp(-(x * x + y * y) / (2.0 * tau)) *
           std::sinh(arg);
  }
  // Same quantity as a difference of Gaussian propagators; stable when the
  // sinh factor would overflow against the underflowing exponential.
  const double c = 1.0 / std::sqrt(2.0 * M_PI * tau);
  const double d1 = x - y, d2 = x + y;
  return c * (std::exp(-d1 * d1 / (2.0 * tau)) - std::exp(-d2 * d2 / (2.0 * tau)));
}

}  // namespace nbe::specfun
