#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "nbe/fredholm.hpp"
#include "nbe/kernels.hpp"
#include "oracles.hpp"

using namespace nbe::fredholm;
using nbe::kernels::BEKernel;
using nbe::kernels::BesselTimePartition;
using nbe::kernels::TimePartition;

namespace {

ScalarKernel be_kernel(int n) {
  return [n](double x, double y) { return nbe::kernels::kernel_scalar(n, x, y); };
}

ScalarKernel k0_kernel(int n) {
  return [n](double x, double y) { return nbe::kernels::kernel_k0(n, x, y); };
}

// closed form for the n = 1 bottom determinant: 1 - erf(s) + (2/sqrt(pi)) s e^{-s^2}
double n1_bottom(double s) {
  return 1.0 - std::erf(s) + 2.0 / std::sqrt(M_PI) * s * std::exp(-s * s);
}

}  // namespace

TEST_CASE("scalar determinant: empty window and n = 1 closed forms") {
  CHECK(fredholm_det_scalar(be_kernel(1), {WindowKind::bottom, 0.0}, 64, 12.0) == 1.0);

  const double bottom = fredholm_det_scalar(be_kernel(1), {WindowKind::bottom, 1.0}, 64, 12.0);
  const double top = fredholm_det_scalar(be_kernel(1), {WindowKind::top, 1.0}, 64,
                                         default_truncation(1));
  CHECK(bottom == doctest::Approx(0.5724067044706248).epsilon(1e-10));
  CHECK(top == doctest::Approx(0.4275932955293752).epsilon(1e-10));
  CHECK(bottom + top == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(bottom == doctest::Approx(n1_bottom(1.0)).epsilon(1e-10));
}

TEST_CASE("finite determinant matches the Nystrom determinant") {
  CHECK(finite_det(1, {WindowKind::bottom, 0.0}, 64) == 1.0);
  CHECK(finite_det(1, {WindowKind::bottom, 1.0}, 64) ==
        doctest::Approx(0.5724067044706248).epsilon(1e-9));

  for (double s : {0.5, 1.0, 2.0}) {
    double fd = finite_det(2, {WindowKind::bottom, s}, 64);
    double ny = fredholm_det_scalar(be_kernel(2), {WindowKind::bottom, s}, 64, 12.0);
    CHECK(std::abs(fd - ny) < 1e-8);
  }

  // both window kinds across n and a threshold grid
  for (int n : {1, 2, 3, 5, 8}) {
    const double trunc = default_truncation(n);
    for (int i = 1; i <= 10; ++i) {
      double s = 0.3 * i;
      for (auto kind : {WindowKind::bottom, WindowKind::top}) {
        double fd = finite_det(n, {kind, s}, 64);
        double ny = fredholm_det_scalar(be_kernel(n), {kind, s}, 64, trunc);
        CHECK(std::abs(fd - ny) < 1e-8);
      }
    }
  }
}

TEST_CASE("determinants lie in [0,1] and decrease in the threshold") {
  for (int n : {1, 3}) {
    double prev = 1.0;
    for (int i = 0; i <= 12; ++i) {
      double s = 0.4 * i;
      double d = fredholm_det_scalar(be_kernel(n), {WindowKind::bottom, s}, 64,
                                     default_truncation(n));
      CHECK(d >= 0.0);
      CHECK(d <= 1.0);
      CHECK(d <= prev + 1e-8);
      prev = d;
    }
  }
}

TEST_CASE("doubling the quadrature order moves determinants by < 1e-9") {
  for (int n : {1, 2, 4, 8}) {
    const double trunc = default_truncation(n);
    for (double s : {0.5, 1.5, std::sqrt(4.0 * n) + 2.0}) {
      for (auto kind : {WindowKind::bottom, WindowKind::top}) {
        double d64 = fredholm_det_scalar(be_kernel(n), {kind, s}, 64, trunc);
        double d128 = fredholm_det_scalar(be_kernel(n), {kind, s}, 128, trunc);
        CHECK(std::abs(d64 - d128) < 1e-9);
      }
    }
  }
}

TEST_CASE("change of variables: det(I - K chi_(0,s)) = det(I - K0 chi_(0,s^2))") {
  for (int n : {1, 2, 4}) {
    for (double s : {0.5, 1.0, 1.5}) {
      double lhs = fredholm_det_scalar(be_kernel(n), {WindowKind::bottom, s}, 96, 12.0);
      double rhs = fredholm_det_scalar(k0_kernel(n), {WindowKind::bottom, s * s}, 96, 12.0,
                                       NodeGrading::graded_left);
      CHECK(std::abs(lhs - rhs) < 1e-8);
    }
  }
  // n = 1 analytic anchor: det(I - K0 chi_(0,S)) = 1 - int_0^sqrt(S) Psi_0^2
  {
    const double S = 1.44;
    double k0det = fredholm_det_scalar(k0_kernel(1), {WindowKind::bottom, S}, 96, 12.0,
                                       NodeGrading::graded_left);
    double closed = 1.0 - (std::erf(std::sqrt(S)) -
                           2.0 / std::sqrt(M_PI) * std::sqrt(S) * std::exp(-S));
    CHECK(std::abs(k0det - closed) < 1e-9);
  }
}

TEST_CASE("projection spectrum of the discretized scalar kernel") {
  for (int n : {1, 4}) {
    auto op = discretize_scalar(be_kernel(n), {WindowKind::bottom, 2.5}, 80, 12.0);
    for (double ev : eigenvalues_sym(op)) {
      CHECK(ev > -1e-8);
      CHECK(ev < 1.0 + 1e-8);
    }
  }
}

TEST_CASE("extended determinant reductions") {
  // m = 1 reduces to the scalar determinant
  {
    BEKernel kernel(2, TimePartition({0.35}));
    WindowSet ws;
    double sigma = kernel.times().sigma(0);
    ws.windows = {{WindowKind::bottom, 0.8 * sigma}};
    ws.quad_order = 64;
    double ext = fredholm_det_extended(kernel, ws);
    double sca = fredholm_det_scalar(be_kernel(2), {WindowKind::bottom, 0.8}, 64, 12.0);
    CHECK(std::abs(ext - sca) < 1e-10);
  }

  // m = 2 with the second window empty equals the m = 1 value at tau_1
  {
    BEKernel kernel(2, TimePartition({0.4, 0.6}));
    WindowSet ws;
    ws.windows = {{WindowKind::bottom, 0.5 * kernel.times().sigma(0)},
                  {WindowKind::bottom, 0.0}};
    double ext = fredholm_det_extended(kernel, ws);
    double sca = fredholm_det_scalar(be_kernel(2), {WindowKind::bottom, 0.5}, 64, 12.0);
    CHECK(std::abs(ext - sca) < 1e-8);
  }

  // window count mismatch rejected
  {
    BEKernel kernel(2, TimePartition({0.4, 0.6}));
    WindowSet ws;
    ws.windows = {{WindowKind::bottom, 0.3}};
    CHECK_THROWS(fredholm_det_extended(kernel, ws));
  }
}

TEST_CASE("similarity reduction is determinant-safe") {
  // the raw kernel with all exponential factors, in physical coordinates,
  // gives the same block determinant as the reduced form
  const int n = 2;
  TimePartition tp({0.4, 0.6});
  BEKernel kernel(n, tp);
  oracles::TestRng rng(2024);
  for (int trial = 0; trial < 4; ++trial) {
    WindowSet ws;
    ws.windows = {{WindowKind::bottom, rng.uniform(0.1, 0.8) * tp.sigma(0)},
                  {WindowKind::bottom, rng.uniform(0.1, 0.8) * tp.sigma(1)}};
    ws.quad_order = 64;
    double reduced = fredholm_det_extended(kernel, ws);
    double raw = fredholm_det_extended_raw(n, tp, ws);
    CHECK(std::abs(reduced - raw) < 1e-7);
  }
}

TEST_CASE("extended determinant: doubling block order moves result by < 1e-9") {
  BEKernel kernel(2, TimePartition({0.4, 0.6}));
  WindowSet ws;
  ws.windows = {{WindowKind::bottom, 0.3 * kernel.times().sigma(0)},
                {WindowKind::bottom, 0.3 * kernel.times().sigma(1)}};
  ws.quad_order = 64;
  double d64 = fredholm_det_extended(kernel, ws);
  ws.quad_order = 128;
  double d128 = fredholm_det_extended(kernel, ws);
  CHECK(std::abs(d64 - d128) < 1e-9);
}

TEST_CASE("mixed-kind windows give a raw determinant") {
  BEKernel kernel(2, TimePartition({0.4, 0.6}));
  WindowSet ws;
  ws.windows = {{WindowKind::bottom, 0.4 * kernel.times().sigma(0)},
                {WindowKind::top, 1.2 * kernel.times().sigma(1)}};
  double det = fredholm_det_extended(kernel, ws);
  CHECK(std::isfinite(det));
}

TEST_CASE("extended Bessel determinant") {
  BesselTimePartition times({0.0, 1.0});

  // all thresholds zero -> empty windows -> 1
  {
    WindowSet ws;
    ws.windows = {{WindowKind::bottom, 0.0}, {WindowKind::bottom, 0.0}};
    CHECK(fredholm_det_bessel_extended(times, ws) == 1.0);
  }

  // m = 1: nonincreasing in s on [0, 6]
  {
    BesselTimePartition one({0.0});
    double prev = 1.0;
    for (int i = 0; i <= 12; ++i) {
      WindowSet ws;
      ws.windows = {{WindowKind::bottom, 0.5 * i}};
      double d = fredholm_det_bessel_extended(one, ws);
      CHECK(d >= 0.0);
      CHECK(d <= prev + 1e-9);
      prev = d;
    }
  }

  // top-type windows rejected
  {
    WindowSet ws;
    ws.windows = {{WindowKind::top, 1.0}, {WindowKind::top, 1.0}};
    CHECK_THROWS(fredholm_det_bessel_extended(times, ws));
  }

  // m = 2 determinant is a number in [0,1] below both m = 1 marginals
  {
    WindowSet ws;
    ws.windows = {{WindowKind::bottom, 1.5}, {WindowKind::bottom, 1.5}};
    double joint = fredholm_det_bessel_extended(times, ws);
    BesselTimePartition one({0.0});
    WindowSet w1;
    w1.windows = {{WindowKind::bottom, 1.5}};
    double marg = fredholm_det_bessel_extended(one, w1);
    CHECK(joint >= 0.0);
    CHECK(joint <= marg + 1e-10);
  }
}

TEST_CASE("resolvent diagonal") {
  // R(s,s) -> 0 as s -> 0, tracking the kernel diagonal for tiny windows
  double prev = 1.0;
  for (double s : {0.3, 0.1, 0.01, 1e-3, 1e-4}) {
    double r = resolvent_diagonal(k0_kernel(1), s, 64);
    CHECK(r >= 0.0);
    CHECK(r < prev + 1e-12);
    prev = r;
    if (s <= 1e-3) {
      double k0diag = nbe::kernels::kernel_k0(1, s, s);
      CHECK(std::abs(r - k0diag) < 1e-6);
    }
  }

  // Eq.-style check: -d/ds log det(I - K0 chi_(0,s)) = R(s,s) at n = 1, s = 1
  {
    const double h = 1e-4;
    auto logdet = [&](double s) {
      return std::log(fredholm_det_scalar(k0_kernel(1), {WindowKind::bottom, s}, 64, 12.0,
                                          NodeGrading::graded_left));
    };
    double lhs = -(logdet(1.0 + h) - logdet(1.0 - h)) / (2.0 * h);
    double rhs = resolvent_diagonal(k0_kernel(1), 1.0, 64);
    CHECK(std::abs(lhs - rhs) < 1e-6);
  }
}
