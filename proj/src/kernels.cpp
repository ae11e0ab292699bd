#include "nbe/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nbe::kernels {

using specfun::oscillator_wavefunction;
using specfun::oscillator_wavefunction_derivative;
using specfun::oscillator_wavefunctions;

namespace {

// sup_x |phi_k(x)| is below this for every k; used for tail envelopes.
constexpr double kPhiBound = 0.8;

thread_local std::vector<double> tl_phix, tl_phiy;

double sinc(double u) { return u == 0.0 ? 1.0 : std::sin(u) / u; }

}  // namespace

TimePartition::TimePartition(std::vector<double> taus) : taus_(std::move(taus)) {
  if (taus_.empty()) throw std::invalid_argument("TimePartition: empty");
  double prev = 0.0;
  for (double t : taus_) {
    if (!(t > prev && t < 1.0))
      throw std::invalid_argument("TimePartition: times must satisfy 0 < t1 < ... < tm < 1");
    prev = t;
    sigmas_.push_back(std::sqrt(2.0 * t * (1.0 - t)));
    tau_hats_.push_back(0.5 * std::log(t / (1.0 - t)));
  }
}

BesselTimePartition::BesselTimePartition(std::vector<double> t) : taus(std::move(t)) {
  if (taus.empty()) throw std::invalid_argument("BesselTimePartition: empty");
  for (std::size_t i = 1; i < taus.size(); ++i)
    if (!(taus[i] > taus[i - 1]))
      throw std::invalid_argument("BesselTimePartition: times must be strictly increasing");
}

double kernel_scalar(int n, double x, double y) {
  if (n < 1) throw std::invalid_argument("kernel_scalar: n must be >= 1");
  if (!std::isfinite(x) || !std::isfinite(y))
    throw std::invalid_argument("kernel_scalar: non-finite input");
  tl_phix.resize(2 * n);
  tl_phiy.resize(2 * n);
  oscillator_wavefunctions(2 * n - 1, x, tl_phix);
  oscillator_wavefunctions(2 * n - 1, y, tl_phiy);
  double s = 0.0;
  for (int j = 0; j < n; ++j) s += tl_phix[2 * j + 1] * tl_phiy[2 * j + 1];
  return 2.0 * s;
}

double kernel_scalar_cd(int n, double x, double y) {
  const double f_x = oscillator_wavefunction(2 * n, x);
  const double g_x = oscillator_wavefunction(2 * n - 1, x);
  const double f_y = oscillator_wavefunction(2 * n, y);
  const double g_y = oscillator_wavefunction(2 * n - 1, y);

  const double scale = std::max(1.0, std::abs(x) + std::abs(y));
  double term1, term2;
  if (std::abs(x - y) > 1e-7 * scale) {
    term1 = (f_x * g_y - g_x * f_y) / (x - y);
  } else {
    const double m = 0.5 * (x + y);
    term1 = oscillator_wavefunction(2 * n - 1, m) * oscillator_wavefunction_derivative(2 * n, m) -
            oscillator_wavefunction(2 * n, m) * oscillator_wavefunction_derivative(2 * n - 1, m);
  }
  if (std::abs(x + y) > 1e-7 * scale) {
    term2 = (f_x * g_y + g_x * f_y) / (x + y);
  } else {
    const double m = 0.5 * (x - y);
    term2 = oscillator_wavefunction(2 * n, m) * oscillator_wavefunction_derivative(2 * n - 1, m) -
            oscillator_wavefunction(2 * n - 1, m) * oscillator_wavefunction_derivative(2 * n, m);
  }
  return std::sqrt(double(n)) * (term1 + term2);
}

double kernel_k0(int n, double x, double y) {
  if (!(x > 0.0) || !(y > 0.0)) throw std::invalid_argument("kernel_k0: x, y must be > 0");
  return kernel_scalar(n, std::sqrt(x), std::sqrt(y)) / (2.0 * std::pow(x * y, 0.25));
}

void k0_phi_psi(int n, double x, double& phi, double& psi) {
  const double rx = std::sqrt(x);
  tl_phix.resize(2 * n + 1);
  oscillator_wavefunctions(2 * n, rx, tl_phix);
  const double n4 = std::pow(double(n), 0.25);
  phi = n4 * std::pow(x, 0.25) * tl_phix[2 * n];
  psi = n4 * std::pow(x, -0.25) * tl_phix[2 * n - 1];
}

double kernel_k0_pair(int n, double x, double y) {
  if (!(x > 0.0) || !(y > 0.0)) throw std::invalid_argument("kernel_k0_pair: x, y must be > 0");
  const double scale = std::max(1.0, std::abs(x) + std::abs(y));
  if (std::abs(x - y) < 1e-8 * scale) {
    // limiting form phi' psi - psi' phi at the midpoint, using
    // x phi' = (1/4 - x/2) phi + sqrt(n) x psi,
    // x psi' = -sqrt(n) phi - (1/4 - x/2) psi.
    const double m = 0.5 * (x + y);
    double phi, psi;
    k0_phi_psi(n, m, phi, psi);
    const double rn = std::sqrt(double(n));
    return (rn * (phi * phi + m * psi * psi) + (0.5 - m) * phi * psi) / m;
  }
  double phix, psix, phiy, psiy;
  k0_phi_psi(n, x, phix, psix);
  k0_phi_psi(n, y, phiy, psiy);
  return (phix * psiy - psix * phiy) / (x - y);
}

double mehler_sum(double q, double x, double y) {
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("mehler_sum: q must be in (0,1)");
  const double q2 = q * q;
  const double a = x - q * y, b = y - q * x;
  return std::exp(-(a * a + b * b) / (2.0 * (1.0 - q2))) / std::sqrt(M_PI * (1.0 - q2));
}

double mehler_odd_sum(double q, double x, double y) {
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("mehler_odd_sum: q must be in (0,1)");
  const double q2 = q * q;
  const double ap1 = x - q * y, ap2 = y - q * x;
  const double am1 = x + q * y, am2 = y + q * x;
  const double pref = 1.0 / std::sqrt(M_PI * (1.0 - q2));
  return pref * (std::exp(-(ap1 * ap1 + ap2 * ap2) / (2.0 * (1.0 - q2))) -
                 std::exp(-(am1 * am1 + am2 * am2) / (2.0 * (1.0 - q2))));
}

double gue_extended(int n2, double x, double y, double tau_hat, double tail_tol) {
  if (n2 < 1) throw std::invalid_argument("gue_extended: n2 must be >= 1");
  (void)tail_tol;
  if (tau_hat >= 0.0) {
    tl_phix.resize(n2);
    tl_phiy.resize(n2);
    oscillator_wavefunctions(n2 - 1, x, tl_phix);
    oscillator_wavefunctions(n2 - 1, y, tl_phiy);
    double s = 0.0;
    for (int j = 0; j < n2; ++j) s += std::exp(j * tau_hat) * tl_phix[j] * tl_phiy[j];
    return s;
  }
  if (tau_hat > -1e-14)
    throw std::invalid_argument("gue_extended: tau_hat numerically zero from below, tail diverges");
  // -sum_{j>=n2} e^{j tau_hat} phi_j phi_j = head - full Mehler sum
  const double q = std::exp(tau_hat);
  tl_phix.resize(n2);
  tl_phiy.resize(n2);
  oscillator_wavefunctions(n2 - 1, x, tl_phix);
  oscillator_wavefunctions(n2 - 1, y, tl_phiy);
  double head = 0.0;
  for (int j = 0; j < n2; ++j) head += std::pow(q, j) * tl_phix[j] * tl_phiy[j];
  return head - mehler_sum(q, x, y);
}

double gue_extended_tail_sum(int n2, double x, double y, double tau_hat, double tail_tol,
                             int max_terms) {
  if (!(tau_hat < 0.0)) throw std::invalid_argument("gue_extended_tail_sum: need tau_hat < 0");
  if (tau_hat > -1e-14)
    throw std::invalid_argument("gue_extended_tail_sum: tau_hat numerically zero, tail diverges");
  const int j_hi = n2 + max_terms;
  tl_phix.resize(j_hi + 1);
  tl_phiy.resize(j_hi + 1);
  oscillator_wavefunctions(j_hi, x, tl_phix);
  oscillator_wavefunctions(j_hi, y, tl_phiy);
  double s = 0.0;
  for (int j = n2; j <= j_hi; ++j) {
    const double envelope = std::exp(j * tau_hat) * kPhiBound * kPhiBound;
    if (envelope < tail_tol) break;
    s += std::exp(j * tau_hat) * tl_phix[j] * tl_phiy[j];
  }
  return -s;
}

BEKernel::BEKernel(int n, TimePartition times, double tail_tolerance)
    : n_(n), times_(std::move(times)), tail_tol_(tail_tolerance) {
  if (n_ < 1) throw std::invalid_argument("BEKernel: n must be >= 1");
  if (!(tail_tol_ > 0.0)) throw std::invalid_argument("BEKernel: tail_tolerance must be > 0");
}

double BEKernel::entry_core(int k, int l, double X, double Y, double shift) const {
  const int m = times_.size();
  if (k < 0 || k >= m || l < 0 || l >= m) throw std::out_of_range("BEKernel entry: slice index");
  const double d = times_.tau_hat(k) - times_.tau_hat(l);

  if (k >= l) {
    // 2 sum_{i<n} exp((2i+1-shift) d) phi_{2i+1}(X) phi_{2i+1}(Y)
    tl_phix.resize(2 * n_);
    tl_phiy.resize(2 * n_);
    oscillator_wavefunctions(2 * n_ - 1, X, tl_phix);
    oscillator_wavefunctions(2 * n_ - 1, Y, tl_phiy);
    double s = 0.0;
    for (int i = 0; i < n_; ++i)
      s += std::exp((2 * i + 1 - shift) * d) * tl_phix[2 * i + 1] * tl_phiy[2 * i + 1];
    return 2.0 * s;
  }

  // k < l: convergent tail, ratio q^2 = e^{2d} < 1.
  if (d > -1e-14)
    throw std::invalid_argument("BEKernel entry: slice times coincide, tail diverges");
  const int max_terms = 10000;
  // number of terms until the envelope drops below tail_tol
  const double need = std::log(tail_tol_ / (2.0 * kPhiBound * kPhiBound)) / (2.0 * d);
  if (need < double(max_terms)) {
    const int i_hi = n_ + std::min(max_terms, static_cast<int>(need) + 2);
    tl_phix.resize(2 * i_hi + 2);
    tl_phiy.resize(2 * i_hi + 2);
    oscillator_wavefunctions(2 * i_hi + 1, X, tl_phix);
    oscillator_wavefunctions(2 * i_hi + 1, Y, tl_phiy);
    double s = 0.0;
    for (int i = n_; i <= i_hi; ++i) {
      const double e = std::exp((2 * i + 1 - shift) * d);
      if (std::exp((2 * i + 1) * d) * 2.0 * kPhiBound * kPhiBound < tail_tol_) break;
      s += e * tl_phix[2 * i + 1] * tl_phiy[2 * i + 1];
    }
    return -2.0 * s;
  }

  // Tail would exceed the term cap (times nearly equal): head minus the
  // odd Mehler closed form, both carried with the shift in the exponent.
  const double q2 = std::exp(2.0 * d);
  tl_phix.resize(2 * n_);
  tl_phiy.resize(2 * n_);
  oscillator_wavefunctions(2 * n_ - 1, X, tl_phix);
  oscillator_wavefunctions(2 * n_ - 1, Y, tl_phiy);
  double head = 0.0;
  for (int i = 0; i < n_; ++i)
    head += std::exp((2 * i + 1 - shift) * d) * tl_phix[2 * i + 1] * tl_phiy[2 * i + 1];
  head *= 2.0;

  const double ap1 = X - std::exp(d) * Y, ap2 = Y - std::exp(d) * X;
  const double am1 = X + std::exp(d) * Y, am2 = Y + std::exp(d) * X;
  const double denom = 2.0 * (1.0 - q2);
  const double pref = 1.0 / std::sqrt(M_PI * (1.0 - q2));
  const double mehler = pref * (std::exp(-(ap1 * ap1 + ap2 * ap2) / denom - shift * d) -
                                std::exp(-(am1 * am1 + am2 * am2) / denom - shift * d));
  return head - mehler;
}

double BEKernel::entry(int k, int l, double X, double Y) const {
  return entry_core(k, l, X, Y, 0.0);
}

double BEKernel::entry_balanced(int k, int l, double X, double Y) const {
  return entry_core(k, l, X, Y, 2.0 * n_);
}

double bessel_kernel(double x, double y) {
  if (x < 0.0 || y < 0.0) throw std::invalid_argument("bessel_kernel: x, y must be >= 0");
  return (sinc(x - y) - sinc(x + y)) / M_PI;
}

double bessel_kernel_k0(double x, double y) {
  if (!(x > 0.0) || !(y > 0.0)) throw std::invalid_argument("bessel_kernel_k0: x, y must be > 0");
  return bessel_kernel(std::sqrt(x), std::sqrt(y)) / (2.0 * std::pow(x * y, 0.25));
}

namespace {

// Composite quadrature of exp(c t^2/2) sin(xt) sin(yt) over [a,b], panel
// length held under ~2pi/(x+y) so each panel sees at most one oscillation.
double bessel_entry_integral(double c, double x, double y, double a, double b) {
  const double panel = std::min(b - a, std::max(0.25, 2.0 * M_PI / (x + y + 1.0)));
  const int n_panels = std::max(1, static_cast<int>(std::ceil((b - a) / panel)));
  double s = 0.0;
  for (int p = 0; p < n_panels; ++p) {
    const double pa = a + (b - a) * p / n_panels;
    const double pb = a + (b - a) * (p + 1) / n_panels;
    auto rule = specfun::gauss_legendre(16, pa, pb);
    s += rule.integrate([&](double t) {
      return std::exp(0.5 * c * t * t) * std::sin(x * t) * std::sin(y * t);
    });
  }
  return s;
}

}  // namespace

double bessel_extended_entry(const BesselTimePartition& times, int k, int l, double x,
                             double y) {
  const int m = times.size();
  if (k < 0 || k >= m || l < 0 || l >= m)
    throw std::out_of_range("bessel_extended_entry: slice index");
  if (x < 0.0 || y < 0.0)
    throw std::invalid_argument("bessel_extended_entry: x, y must be >= 0");
  const double c = times.taus[k] - times.taus[l];
  if (k >= l) {
    if (k == l) return bessel_kernel(x, y);
    return (2.0 / M_PI) * bessel_entry_integral(c, x, y, 0.0, 1.0);
  }
  if (c > -1e-12)
    throw std::invalid_argument("bessel_extended_entry: k < l with equal times, divergent tail");
  const double t_star = std::sqrt(2.0 * std::log(1e14) / (-c));
  if (t_star <= 1.0) return 0.0;
  return -(2.0 / M_PI) * bessel_entry_integral(c, x, y, 1.0, t_star);
}

double path_density(int n, double tau, double x) {
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("path_density: tau must be in (0,1)");
  if (x < 0.0) throw std::invalid_argument("path_density: x must be >= 0");
  const double sigma = std::sqrt(2.0 * tau * (1.0 - tau));
  const double X = x / sigma;
  tl_phix.resize(2 * n);
  oscillator_wavefunctions(2 * n - 1, X, tl_phix);
  double s = 0.0;
  for (int j = 0; j < n; ++j) s += tl_phix[2 * j + 1] * tl_phix[2 * j + 1];
  return 2.0 * s / sigma;
}

double be_raw_H(int n, const TimePartition& times, int k, int l, double x, double y) {
  const double tk = times.tau(k), tl = times.tau(l);
  const double Xk = x / times.sigma(k), Yl = y / times.sigma(l);
  const double ratio = tk * (1.0 - tl) / (tl * (1.0 - tk));

  // normalized Hermite polynomials p_j = phi_j e^{x^2/2}, odd indices up to 2n-1
  auto normalized = [](int kmax, double z) {
    std::vector<double> p(kmax + 1);
    p[0] = std::pow(M_PI, -0.25);
    if (kmax >= 1) p[1] = z * std::sqrt(2.0) * p[0];
    for (int j = 1; j < kmax; ++j)
      p[j + 1] = z * std::sqrt(2.0 / (j + 1)) * p[j] - std::sqrt(double(j) / (j + 1)) * p[j - 1];
    return p;
  };
  auto px = normalized(2 * n - 1, Xk);
  auto py = normalized(2 * n - 1, Yl);

  double s = 0.0;
  for (int j = 0; j < n; ++j)
    s += std::pow(ratio, j + 0.5) * px[2 * j + 1] * py[2 * j + 1];
  return std::sqrt(2.0 / (tl * (1.0 - tk))) *
         std::exp(-x * x / (2.0 * (1.0 - tk)) - y * y / (2.0 * tl)) * s;
}

double be_raw_entry(int n, const TimePartition& times, int k, int l, double x, double y) {
  double h = be_raw_H(n, times, k, l, x, y);
  if (k < l) h -= specfun::transition_density(x, y, times.tau(l) - times.tau(k));
  return h;
}

}  // namespace nbe::kernels
