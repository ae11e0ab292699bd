#pragma once

#include <vector>

#include "nbe/specfun.hpp"

namespace nbe::kernels {

// Strictly increasing times 0 < tau_1 < ... < tau_m < 1, with the derived
// per-slice scale sigma_k = sqrt(2 tau_k (1 - tau_k)) and logarithmic time
// tau_hat_k defined by tau_k/(1-tau_k) = exp(2 tau_hat_k).
class TimePartition {
 public:
  explicit TimePartition(std::vector<double> taus);

  int size() const { return static_cast<int>(taus_.size()); }
  double tau(int k) const { return taus_.at(k); }
  double sigma(int k) const { return sigmas_.at(k); }
  double tau_hat(int k) const { return tau_hats_.at(k); }
  const std::vector<double>& taus() const { return taus_; }

 private:
  std::vector<double> taus_, sigmas_, tau_hats_;
};

// Strictly increasing real times for the extended Bessel kernel.
struct BesselTimePartition {
  std::vector<double> taus;
  explicit BesselTimePartition(std::vector<double> t);
  int size() const { return static_cast<int>(taus.size()); }
};

// Scalar kernel of the n-excursion ensemble in scaled coordinates:
// K(x,y) = 2 sum_{j<n} phi_{2j+1}(x) phi_{2j+1}(y).
double kernel_scalar(int n, double x, double y);

// Same kernel through the Christoffel-Darboux collapsed form; diagonal and
// origin limits taken via wavefunction derivatives.
double kernel_scalar_cd(int n, double x, double y);

// Square-variable kernel K0(x,y) = K(sqrt(x), sqrt(y)) / (2 (xy)^{1/4}).
double kernel_k0(int n, double x, double y);

// K0 evaluated through its integrable-form pair:
//   K0(x,y) = (phi(x) psi(y) - psi(x) phi(y)) / (x - y),
// phi(x) = n^{1/4} x^{1/4} phi_{2n}(sqrt x), psi(x) = n^{1/4} x^{-1/4} phi_{2n-1}(sqrt x).
double kernel_k0_pair(int n, double x, double y);
void k0_phi_psi(int n, double x, double& phi, double& psi);

// Extended GUE kernel entry: head sum for tau_hat >= 0, negative tail sum for
// tau_hat < 0 (closed form minus head). tau_hat < 0 but numerically zero is
// rejected (the tail diverges).
double gue_extended(int n2, double x, double y, double tau_hat, double tail_tol = 1e-14);
// Direct tail summation route for tau_hat < 0, term cutoff at tail_tol.
double gue_extended_tail_sum(int n2, double x, double y, double tau_hat,
                             double tail_tol = 1e-14, int max_terms = 10000);

// Full and odd-index Mehler sums, q in (0,1):
//   mehler_sum      = sum_{j>=0} q^j phi_j(x) phi_j(y)
//   mehler_odd_sum  = 2 sum_{j odd} q^j phi_j(x) phi_j(y)
double mehler_sum(double q, double x, double y);
double mehler_odd_sum(double q, double x, double y);

// Extended kernel of the n-excursion ensemble, reduced to scaled coordinates
// X_k = x / sigma_k. The entry is the bracket
//   K_{2n}(X, Y; d) - K_{2n}(X, -Y; d),  d = tau_hat_k - tau_hat_l,
// with the diagonal similarity factors dropped (they cancel in determinants).
class BEKernel {
 public:
  BEKernel(int n, TimePartition times, double tail_tolerance = 1e-14);

  int n() const { return n_; }
  const TimePartition& times() const { return times_; }
  double tail_tolerance() const { return tail_tol_; }

  // Similarity-reduced entry in scaled coordinates (1-based slice indices
  // would match the formulas; here k, l are 0-based).
  double entry(int k, int l, double X, double Y) const;

  // entry * exp(-2n (tau_hat_k - tau_hat_l)); an exact block-diagonal
  // rebalancing used by the Nystrom assembly to keep off-diagonal blocks of
  // comparable size. Determinants are unchanged.
  double entry_balanced(int k, int l, double X, double Y) const;

 private:
  double entry_core(int k, int l, double X, double Y, double shift) const;

  int n_;
  TimePartition times_;
  double tail_tol_;
};

// m = 1 Bessel kernel with parameter 1/2:
//   (1/pi) (sin(x-y)/(x-y) - sin(x+y)/(x+y)), limits taken analytically.
double bessel_kernel(double x, double y);

// Square-variable Bessel kernel K0(x,y) = K^Bes(sqrt x, sqrt y)/(2 (xy)^{1/4}).
double bessel_kernel_k0(double x, double y);

// Extended Bessel kernel entry for slice pair (k,l) of a BesselTimePartition:
//   k >= l:  (2/pi) int_0^1   e^{(tau_k-tau_l) t^2/2} sin xt sin yt dt
//   k <  l: -(2/pi) int_1^t*  e^{(tau_k-tau_l) t^2/2} sin xt sin yt dt,
// the half-line truncated where the Gaussian envelope falls below 1e-14.
double bessel_extended_entry(const BesselTimePartition& times, int k, int l,
                             double x, double y);

// Density of paths at time tau: rho_n(x) = (2/sigma) sum_{j<n} phi_{2j+1}(x/sigma)^2.
double path_density(int n, double tau, double x);

// Raw (unreduced) kernel pieces in physical coordinates, kept only so tests
// can confirm the similarity reduction is determinant-safe.
double be_raw_H(int n, const TimePartition& times, int k, int l, double x, double y);
double be_raw_entry(int n, const TimePartition& times, int k, int l, double x, double y);

}  // namespace nbe::kernels
