#pragma once

#include <span>
#include <string>
#include <vector>

#include "nbe/fredholm.hpp"
#include "nbe/kernels.hpp"
#include "nbe/painleve.hpp"

namespace nbe::observables {

enum class Method { finite, fredholm, painleve, series };
Method method_from_string(const std::string& name);
const char* method_name(Method m);

// P(X_1(tau) >= x) by the chosen route; all routes agree on overlap.
double bottom_cdf(int n, double tau, double x, Method method, int quad_order = 64);
// P(X_n(tau) < x); the small-s series route exists only for the bottom law.
double top_cdf(int n, double tau, double x, Method method, int quad_order = 64);

// Joint multi-time probability through the block extended-kernel determinant.
// Thresholds are physical; they are rescaled per slice inside fredholm.
double joint_cdf(int n, const kernels::TimePartition& times,
                 std::span<const double> thresholds, fredholm::WindowKind kind,
                 int quad_order = 64);

struct AreaResult {
  int n = 0;
  double bottom_mean = 0.0;
  double top_mean = 0.0;
  int outer_points = 0;  // outer quadrature nodes actually used
  int inner_order = 0;
};

// E(A_{n,L}) = (pi/(4 sqrt 2)) int_0^inf det(I - K chi_(0,s)) ds and the
// top-side analog with integrand 1 - det(I - K chi_(s,inf)); the time
// integral int_0^1 sigma(tau) dtau = pi sqrt(2)/8 is taken analytically.
AreaResult expected_areas(int n, int quad_order = 64);
double expected_area_bottom(int n, int quad_order = 64);
double expected_area_top(int n, int quad_order = 64);

struct LimitConstants {
  double bessel_integral = 0.0;  // int_0^inf x^{-1/2} det(I - K0_Bes chi_(0,x)) dx
  double c_L = 0.0;              // (pi/(16 sqrt 2)) * bessel_integral
  double c_H = 0.0;              // (pi/(8 * 2^{1/6})) * f2_mean
  double f2_mean = -1.771086807411601;  // stored datum, not computed
};
LimitConstants limit_constants(int quad_order = 64);

// Leading-order area asymptotics: c_L/sqrt(n) for the bottom,
// (pi/2^{3/2}) sqrt(n) + c_H n^{-1/6} for the top.
double area_asymptotics(int n, fredholm::WindowKind side, const LimitConstants& c);

// sup over [0, box]^2 of |(1/(2 sqrt n)) K(x/(2 sqrt n), y/(2 sqrt n)) - K_Bes(x,y)|
double bessel_scaling_error(int n, double box_size, int grid_points = 41);

// Same diagnostic for the extended kernels under the hard-edge substitutions
// x -> sqrt(tau(1-tau)/(2n)) x, tau_k -> tau + tau(1-tau)/(2n) tau_k.
double bessel_scaling_error_extended(int n, const kernels::BesselTimePartition& times,
                                     double box_size, double tau = 0.5,
                                     int grid_points = 21);

struct LimitRow {
  int n = 0;
  double scaled_det = 0.0;
  double bessel_det = 0.0;
  double diff = 0.0;
};

// For each n: the scaled finite-n block determinant next to the extended
// Bessel determinant at the same windows.
std::vector<LimitRow> joint_limit_check(const kernels::BesselTimePartition& times,
                                        std::span<const double> thresholds,
                                        std::span<const int> n_list, double tau = 0.5,
                                        int quad_order = 64);

}  // namespace nbe::observables
