#pragma once

// Test-only reference implementations, independent of the library code paths
// they are used to check.

#include <cmath>
#include <functional>
#include <vector>

namespace oracles {

// Adaptive Simpson quadrature with absolute tolerance.
inline double simpson_step(const std::function<double(double)>& f, double a, double b,
                           double fa, double fm, double fb, double whole, double tol,
                           int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return simpson_step(f, a, m, fa, flm, fm, left, tol * 0.5, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, tol * 0.5, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-12, int max_depth = 40) {
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

// Hermite polynomial H_k(x) (physicists'), direct recurrence in long double.
inline long double hermite(int k, long double x) {
  long double h0 = 1.0L, h1 = 2.0L * x;
  if (k == 0) return h0;
  if (k == 1) return h1;
  for (int j = 1; j < k; ++j) {
    long double h2 = 2.0L * x * h1 - 2.0L * j * h0;
    h0 = h1;
    h1 = h2;
  }
  return h1;
}

// phi_k(x) = H_k(x) e^{-x^2/2} / sqrt(sqrt(pi) 2^k k!), assembled directly
// from the definition (safe for small k only).
inline double oscillator_direct(int k, double x) {
  long double norm = std::sqrt((long double)M_PI);
  for (int j = 1; j <= k; ++j) norm *= 2.0L * j;
  norm = std::sqrt(norm);
  return static_cast<double>(hermite(k, x) * std::exp(-0.5L * (long double)x * x) / norm);
}

// Normalized Hermite polynomial p_k(x) = H_k(x)/sqrt(sqrt(pi) 2^k k!).
inline double hermite_normalized(int k, double x) {
  long double norm = std::sqrt((long double)M_PI);
  for (int j = 1; j <= k; ++j) norm *= 2.0L * j;
  norm = std::sqrt(norm);
  return static_cast<double>(hermite(k, x) / norm);
}

// Deterministic pseudo-random doubles in [lo, hi] for test grids.
struct TestRng {
  unsigned long long state;
  explicit TestRng(unsigned long long seed) : state(seed) {}
  double uniform(double lo, double hi) {
    state = state * 6364136223846793005ULL + 1442695040888963407ULL;
    double u = double((state >> 11) & ((1ULL << 53) - 1)) / double(1ULL << 53);
    return lo + (hi - lo) * u;
  }
};

}  // namespace oracles
