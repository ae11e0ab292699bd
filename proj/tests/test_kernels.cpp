#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "nbe/kernels.hpp"
#include "nbe/specfun.hpp"
#include "oracles.hpp"

using namespace nbe::kernels;
using nbe::specfun::gauss_legendre;

TEST_CASE("time partitions validate their invariants") {
  TimePartition tp({0.25, 0.5, 0.75});
  CHECK(tp.size() == 3);
  CHECK(tp.sigma(1) == doctest::Approx(std::sqrt(0.5)));
  CHECK(tp.tau_hat(1) == doctest::Approx(0.0));
  // tau/(1-tau) = exp(2 tau_hat)
  for (int k = 0; k < 3; ++k)
    CHECK(tp.tau(k) / (1.0 - tp.tau(k)) ==
          doctest::Approx(std::exp(2.0 * tp.tau_hat(k))).epsilon(1e-13));
  CHECK(tp.tau_hat(0) < tp.tau_hat(1));
  CHECK(tp.tau_hat(1) < tp.tau_hat(2));
  for (int k = 0; k < 3; ++k) {
    CHECK(tp.sigma(k) > 0.0);
    CHECK(tp.sigma(k) <= 1.0 / std::sqrt(2.0) + 1e-15);
  }

  CHECK_THROWS(TimePartition({0.5, 0.4}));
  CHECK_THROWS(TimePartition({0.0, 0.5}));
  CHECK_THROWS(TimePartition({0.5, 1.0}));
  CHECK_THROWS(BesselTimePartition({1.0, 1.0}));
}

TEST_CASE("kernel_scalar vanishes on the axis and is symmetric") {
  for (double x : {0.1, 0.9, 2.7}) {
    CHECK(kernel_scalar(2, x, 0.0) == 0.0);
    CHECK(kernel_scalar(2, 0.0, x) == 0.0);
  }
  oracles::TestRng rng(31);
  for (int t = 0; t < 50; ++t) {
    double x = rng.uniform(0.0, 5.0), y = rng.uniform(0.0, 5.0);
    CHECK(kernel_scalar(3, x, y) == doctest::Approx(kernel_scalar(3, y, x)).epsilon(1e-14));
  }
}

TEST_CASE("kernel_scalar trace equals n") {
  for (int n : {1, 2, 5}) {
    auto rule = gauss_legendre(256, 0.0, std::sqrt(4.0 * n) + 10.0);
    double trace = rule.integrate([n](double x) { return kernel_scalar(n, x, x); });
    CHECK(std::abs(trace - n) < 1e-8);
  }
}

TEST_CASE("kernel_scalar agrees with the Christoffel-Darboux form") {
  oracles::TestRng rng(77);
  for (int n : {1, 2, 6}) {
    for (int t = 0; t < 30; ++t) {
      double x = rng.uniform(0.0, 4.0), y = rng.uniform(0.0, 4.0);
      CHECK(kernel_scalar_cd(n, x, y) ==
            doctest::Approx(kernel_scalar(n, x, y)).epsilon(1e-10));
    }
    // diagonal
    for (double x : {0.3, 1.0, 2.2}) {
      CHECK(kernel_scalar_cd(n, x, x) ==
            doctest::Approx(kernel_scalar(n, x, x)).epsilon(1e-10));
    }
  }
}

TEST_CASE("projection property: Gram matrix of Psi_j over (0,inf) is identity") {
  const int n = 6;
  auto rule = gauss_legendre(400, 0.0, std::sqrt(4.0 * n) + 10.0);
  for (int j = 0; j < n; ++j)
    for (int k = j; k < n; ++k) {
      double ip = rule.integrate([&](double x) {
        auto phi = nbe::specfun::oscillator_wavefunctions(2 * n - 1, x);
        return 2.0 * phi[2 * j + 1] * phi[2 * k + 1];
      });
      CHECK(std::abs(ip - (j == k ? 1.0 : 0.0)) < 1e-10);
    }
}

TEST_CASE("kernel_k0: two formulas agree, diagonal continuous") {
  oracles::TestRng rng(5150);
  for (int n : {1, 3}) {
    for (int t = 0; t < 50; ++t) {
      double x = rng.uniform(0.02, 9.0), y = rng.uniform(0.02, 9.0);
      CHECK(kernel_k0(n, x, y) == doctest::Approx(kernel_k0_pair(n, x, y)).epsilon(1e-10));
    }
  }
  // near-diagonal path: finite and continuous with the off-diagonal formula
  for (double x : {0.4, 1.7, 5.0}) {
    double on = kernel_k0_pair(2, x, x * (1.0 + 1e-9));
    double off = kernel_k0_pair(2, x, x * (1.0 + 1e-5));
    CHECK(std::isfinite(on));
    CHECK(std::abs(on - off) < 1e-3 * std::max(1.0, std::abs(on)));
    CHECK(kernel_k0(2, x, x) == doctest::Approx(kernel_k0_pair(2, x, x)).epsilon(1e-9));
  }
}

TEST_CASE("gue_extended at tau_hat = 0 is the Hermite kernel") {
  oracles::TestRng rng(99);
  const int n2 = 5;
  for (int t = 0; t < 30; ++t) {
    double x = rng.uniform(-3.0, 3.0), y = rng.uniform(-3.0, 3.0);
    // independent Christoffel-Darboux evaluation from oracle Hermite values
    double ref;
    if (std::abs(x - y) > 1e-6) {
      double pn_x = oracles::hermite_normalized(n2, x) * std::exp(-0.5 * x * x);
      double pm_x = oracles::hermite_normalized(n2 - 1, x) * std::exp(-0.5 * x * x);
      double pn_y = oracles::hermite_normalized(n2, y) * std::exp(-0.5 * y * y);
      double pm_y = oracles::hermite_normalized(n2 - 1, y) * std::exp(-0.5 * y * y);
      ref = std::sqrt(n2 / 2.0) * (pn_x * pm_y - pm_x * pn_y) / (x - y);
    } else {
      ref = 0.0;
      for (int j = 0; j < n2; ++j) {
        double pj = oracles::oscillator_direct(j, x);
        ref += pj * pj;
      }
    }
    CHECK(gue_extended(n2, x, y, 0.0) == doctest::Approx(ref).epsilon(1e-10));
    CHECK(gue_extended(n2, x, y, 0.7) ==
          doctest::Approx(gue_extended(n2, y, x, 0.7)).epsilon(1e-13));
  }
}

TEST_CASE("gue_extended negative branch: two routes agree") {
  double a = gue_extended_tail_sum(4, 0.3, 0.3, -0.5);
  double b = gue_extended(4, 0.3, 0.3, -0.5);
  CHECK(std::abs(a - b) < 1e-10);

  // Mehler identity over a 10x10 grid
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) {
      double x = -2.5 + 0.5 * i, y = -2.5 + 0.5 * j;
      double t = gue_extended_tail_sum(6, x, y, -0.3);
      double c = gue_extended(6, x, y, -0.3);
      CHECK(std::abs(t - c) < 1e-9);
    }

  CHECK_THROWS(gue_extended(4, 0.1, 0.2, -1e-15));
  CHECK_THROWS(gue_extended_tail_sum(4, 0.1, 0.2, -1e-16));
}

TEST_CASE("be_extended_entry reductions and two-route check") {
  // m = 1: entry equals the scalar kernel
  BEKernel k1(2, TimePartition({0.35}));
  oracles::TestRng rng(4242);
  for (int t = 0; t < 20; ++t) {
    double x = rng.uniform(0.0, 4.0), y = rng.uniform(0.0, 4.0);
    CHECK(k1.entry(0, 0, x, y) == doctest::Approx(kernel_scalar(2, x, y)).epsilon(1e-10));
  }

  // entry vanishes at Y = 0 for all slice pairs
  BEKernel k2(2, TimePartition({0.4, 0.6}));
  for (int k = 0; k < 2; ++k)
    for (int l = 0; l < 2; ++l) CHECK(k2.entry(k, l, 1.3, 0.0) == 0.0);

  // k < l entry equals (reduced H) - (reduced E), both computed through the
  // raw physical-coordinate formulas and the transition density
  {
    const int n = 2;
    TimePartition tp({0.4, 0.6});
    BEKernel kernel(n, tp);
    const double X = 0.7, Y = 1.1;
    const int k = 0, l = 1;
    const double x = X * tp.sigma(k), y = Y * tp.sigma(l);
    const double Xk = x / tp.sigma(k), Yl = y / tp.sigma(l);
    const double pref = std::exp((0.5 - tp.tau(k)) * Xk * Xk - (0.5 - tp.tau(l)) * Yl * Yl) /
                        std::sqrt(2.0 * tp.tau(l) * (1.0 - tp.tau(k)));
    const double h_red = be_raw_H(n, tp, k, l, x, y) / pref;
    const double e_red =
        nbe::specfun::transition_density(x, y, tp.tau(l) - tp.tau(k)) / pref;
    CHECK(std::abs(kernel.entry(k, l, X, Y) - (h_red - e_red)) < 1e-8);
  }

  // balanced entry is the plain entry times exp(-2n (tauhat_k - tauhat_l))
  {
    BEKernel kernel(3, TimePartition({0.3, 0.7}));
    double d = kernel.times().tau_hat(1) - kernel.times().tau_hat(0);
    CHECK(kernel.entry_balanced(1, 0, 0.8, 0.5) ==
          doctest::Approx(kernel.entry(1, 0, 0.8, 0.5) * std::exp(-2.0 * 3 * d))
              .epsilon(1e-12));
    CHECK(kernel.entry_balanced(0, 1, 0.8, 0.5) ==
          doctest::Approx(kernel.entry(0, 1, 0.8, 0.5) * std::exp(2.0 * 3 * d))
              .epsilon(1e-12));
  }

  CHECK_THROWS(k2.entry(0, 2, 1.0, 1.0));
}

TEST_CASE("be_extended_entry is continuous (no NaN on a dense grid)") {
  BEKernel kernel(2, TimePartition({0.3, 0.55, 0.8}));
  for (int k = 0; k < 3; ++k)
    for (int l = 0; l < 3; ++l)
      for (int i = 0; i <= 40; ++i)
        for (int j = 0; j <= 40; ++j) {
          double x = 4.0 * i / 40.0, y = 4.0 * j / 40.0;
          double v = kernel.entry(k, l, x, y);
          CHECK(std::isfinite(v));
        }
}

TEST_CASE("bessel kernel closed form") {
  for (double y : {0.5, 1.8, 6.0}) CHECK(bessel_kernel(0.0, y) == 0.0);
  for (double x : {0.3, 1.0, 4.4}) {
    double diag = (1.0 - std::sin(2.0 * x) / (2.0 * x)) / M_PI;
    CHECK(bessel_kernel(x, x) == doctest::Approx(diag).epsilon(1e-14));
  }
  // integral representation at (1.3, 2.2) via a 40-point rule
  auto rule = gauss_legendre(40, 0.0, 1.0);
  double integral = (2.0 / M_PI) * rule.integrate([](double t) {
    return std::sin(1.3 * t) * std::sin(2.2 * t);
  });
  CHECK(std::abs(integral - bessel_kernel(1.3, 2.2)) < 1e-12);
}

TEST_CASE("bessel_extended_entry") {
  BesselTimePartition times({0.0, 1.0});
  // k = l reduces to the scalar Bessel kernel
  CHECK(bessel_extended_entry(times, 0, 0, 1.1, 0.7) ==
        doctest::Approx(bessel_kernel(1.1, 0.7)).epsilon(1e-12));
  CHECK(bessel_extended_entry(times, 1, 1, 2.0, 2.0) ==
        doctest::Approx(bessel_kernel(2.0, 2.0)).epsilon(1e-12));

  // k < l at tau gap 1, (1,1): independent adaptive quadrature oracle
  {
    double oracle = -(2.0 / M_PI) * oracles::integrate(
                                        [](double t) {
                                          return std::exp(-0.5 * t * t) * std::sin(t) *
                                                 std::sin(t);
                                        },
                                        1.0, 10.0, 1e-14);
    CHECK(std::abs(bessel_extended_entry(times, 0, 1, 1.0, 1.0) - oracle) < 1e-10);
  }
  // k > l against the oracle as well
  {
    double oracle = (2.0 / M_PI) * oracles::integrate(
                                       [](double t) {
                                         return std::exp(0.5 * t * t) * std::sin(1.4 * t) *
                                                std::sin(0.9 * t);
                                       },
                                       0.0, 1.0, 1e-14);
    CHECK(std::abs(bessel_extended_entry(times, 1, 0, 1.4, 0.9) - oracle) < 1e-10);
  }

  // entry -> 0 as x -> 0 in every case
  for (int k = 0; k < 2; ++k)
    for (int l = 0; l < 2; ++l)
      CHECK(std::abs(bessel_extended_entry(times, k, l, 0.0, 1.7)) == 0.0);

  CHECK_THROWS(bessel_extended_entry(BesselTimePartition({0.0, 1e-14}), 0, 1, 1.0, 1.0));
}

TEST_CASE("path density") {
  // n = 1 closed form: 4 X^2 e^{-X^2} / (sigma sqrt(pi))
  for (double tau : {0.2, 0.5, 0.8}) {
    double sigma = std::sqrt(2.0 * tau * (1.0 - tau));
    for (int i = 0; i <= 30; ++i) {
      double x = 3.0 * sigma * i / 30.0;
      double X = x / sigma;
      double ref = 4.0 * X * X * std::exp(-X * X) / (sigma * std::sqrt(M_PI));
      CHECK(std::abs(path_density(1, tau, x) - ref) < 1e-12 * std::max(1.0, ref));
    }
  }
  CHECK(path_density(3, 0.5, 0.0) == 0.0);

  // normalization: integral over (0,inf) equals n
  for (int n : {1, 4}) {
    double hi = (std::sqrt(4.0 * n) + 8.0) * std::sqrt(2.0 * 0.3 * 0.7);
    auto rule = gauss_legendre(400, 0.0, hi);
    double mass = rule.integrate([n](double x) { return path_density(n, 0.3, x); });
    CHECK(std::abs(mass - n) < 1e-8);
  }

  CHECK_THROWS(path_density(2, 0.0, 1.0));
  CHECK_THROWS(path_density(2, 1.0, 1.0));
}
