#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "nbe/observables.hpp"

using namespace nbe::observables;
using nbe::fredholm::WindowKind;
using nbe::kernels::BesselTimePartition;
using nbe::kernels::TimePartition;

namespace {

// Expected-area table for n = 1..9 (closed forms for n = 1, 2)
const double kBottom[9] = {0.626657, 0.458859, 0.380211, 0.331955, 0.298441,
                           0.273407, 0.253784, 0.237865, 0.224612};
const double kTop[9] = {0.626657, 1.107783, 1.479479, 1.791454, 2.065097,
                        2.311582, 2.537567, 2.747386, 2.944040};

}  // namespace

TEST_CASE("method parsing") {
  CHECK(method_from_string("finite") == Method::finite);
  CHECK(method_from_string("painleve") == Method::painleve);
  CHECK(std::string(method_name(Method::series)) == "series");
  CHECK_THROWS(method_from_string("magic"));
}

TEST_CASE("bottom_cdf basics") {
  for (Method m : {Method::finite, Method::fredholm, Method::painleve, Method::series})
    CHECK(bottom_cdf(2, 0.5, 0.0, m) == doctest::Approx(1.0).epsilon(1e-12));

  // n = 1, s = 1 closed form through every non-series route
  const double sigma = std::sqrt(0.5);
  for (Method m : {Method::finite, Method::fredholm, Method::painleve}) {
    CHECK(bottom_cdf(1, 0.5, sigma, m) ==
          doctest::Approx(0.5724067044706248).epsilon(2e-6));
  }

  // tau-invariance of the scaled law
  double a = bottom_cdf(2, 0.3, 0.7 * std::sqrt(2.0 * 0.3 * 0.7), Method::finite);
  double b = bottom_cdf(2, 0.6, 0.7 * std::sqrt(2.0 * 0.6 * 0.4), Method::finite);
  CHECK(a == doctest::Approx(b).epsilon(1e-10));

  // monotone nonincreasing in x
  double prev = 1.0;
  for (int i = 0; i <= 10; ++i) {
    double v = bottom_cdf(3, 0.4, 0.35 * i, Method::finite);
    CHECK(v <= prev + 1e-10);
    prev = v;
  }

  CHECK_THROWS(bottom_cdf(2, 0.5, 0.31 * sigma, Method::series));
  CHECK_THROWS(bottom_cdf(2, 0.0, 0.1, Method::finite));
}

TEST_CASE("top_cdf basics") {
  const double sigma = std::sqrt(0.5);
  // x -> large gives 1
  for (Method m : {Method::finite, Method::fredholm, Method::painleve})
    CHECK(top_cdf(1, 0.5, (std::sqrt(4.0) + 6.0) * sigma, m) ==
          doctest::Approx(1.0).epsilon(1e-8));

  for (Method m : {Method::finite, Method::fredholm, Method::painleve})
    CHECK(top_cdf(1, 0.5, sigma, m) ==
          doctest::Approx(0.4275932955293752).epsilon(2e-6));

  // single-path complement; not a complement for n >= 2
  CHECK(bottom_cdf(1, 0.5, sigma, Method::finite) +
            top_cdf(1, 0.5, sigma, Method::finite) ==
        doctest::Approx(1.0).epsilon(1e-8));
  double sum2 = bottom_cdf(2, 0.5, sigma, Method::finite) +
                top_cdf(2, 0.5, sigma, Method::finite);
  CHECK(std::abs(sum2 - 1.0) > 0.01);

  // nondecreasing in x
  double prev = 0.0;
  for (int i = 0; i <= 10; ++i) {
    double v = top_cdf(3, 0.4, 0.5 * i, Method::finite);
    CHECK(v >= prev - 1e-10);
    prev = v;
  }

  CHECK_THROWS(top_cdf(2, 0.5, 0.1, Method::series));
}

TEST_CASE("route agreement on an s-grid") {
  for (int n : {1, 3, 5}) {
    for (double s : {0.5, 1.5, 2.5}) {
      const double tau = 0.37, x = s * std::sqrt(2.0 * tau * (1.0 - tau));
      double fin = bottom_cdf(n, tau, x, Method::finite);
      double fre = bottom_cdf(n, tau, x, Method::fredholm);
      double pai = bottom_cdf(n, tau, x, Method::painleve);
      CHECK(std::abs(fin - fre) < 1e-5);
      CHECK(std::abs(fin - pai) < 1e-5);
      double fin_t = top_cdf(n, tau, x, Method::finite);
      double fre_t = top_cdf(n, tau, x, Method::fredholm);
      double pai_t = top_cdf(n, tau, x, Method::painleve);
      CHECK(std::abs(fin_t - fre_t) < 1e-5);
      CHECK(std::abs(fin_t - pai_t) < 1e-5);
    }
    // series route inside its validity window, against its own envelope
    const double s = 0.25, tau = 0.37, x = s * std::sqrt(2.0 * tau * (1.0 - tau));
    double envelope = nbe::painleve::r0_constant(n) * std::pow(s, 11);
    CHECK(std::abs(bottom_cdf(n, tau, x, Method::series) -
                   bottom_cdf(n, tau, x, Method::painleve)) < 5.0 * envelope + 1e-10);
  }
}

TEST_CASE("joint_cdf with trivial second window") {
  TimePartition tp({0.4, 0.6});
  std::vector<double> thr{0.5 * tp.sigma(0), 0.0};
  double joint = joint_cdf(2, tp, thr, WindowKind::bottom);
  double single = bottom_cdf(2, 0.4, thr[0], Method::fredholm);
  CHECK(joint == doctest::Approx(single).epsilon(1e-8));
}

TEST_CASE("expected areas reproduce the table") {
  for (int n = 1; n <= 9; ++n) {
    AreaResult ar = expected_areas(n);
    CHECK(std::abs(ar.bottom_mean - kBottom[n - 1]) <= 1e-5);
    CHECK(std::abs(ar.top_mean - kTop[n - 1]) <= 1e-5);
    CHECK(ar.bottom_mean <= ar.top_mean + 1e-12);
    CHECK(ar.bottom_mean > 0.0);
  }

  // closed forms for n = 1, 2 to 1e-9
  AreaResult a1 = expected_areas(1);
  CHECK(std::abs(a1.bottom_mean - std::sqrt(M_PI / 8.0)) < 1e-9);
  CHECK(std::abs(a1.top_mean - std::sqrt(M_PI / 8.0)) < 1e-9);
  AreaResult a2 = expected_areas(2);
  CHECK(std::abs(a2.bottom_mean - 0.625 * (std::sqrt(2.0) - 1.0) * std::sqrt(M_PI)) <
        1e-9);
  CHECK(std::abs(a2.top_mean - 0.625 * std::sqrt(M_PI)) < 1e-9);
}

TEST_CASE("scaled bottom areas increase toward the limit constant") {
  // sqrt(n) E(A_{n,L}) for n = 5..9
  const double expected[5] = {0.667334, 0.669708, 0.671449, 0.672784, 0.673838};
  double prev = 0.0;
  for (int n = 5; n <= 9; ++n) {
    double v = std::sqrt(double(n)) * expected_area_bottom(n);
    CHECK(std::abs(v - expected[n - 5]) <= 1e-5);
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("limit constants") {
  LimitConstants c = limit_constants();
  CHECK(std::abs(c.bessel_integral - 4.917948) <= 2e-4);
  CHECK(std::abs(c.c_L - 0.682808) <= 1e-5);
  CHECK(std::abs(c.c_H - (-0.619623767170)) <= 1e-9);
  CHECK(c.c_L == doctest::Approx(M_PI / (16.0 * std::sqrt(2.0)) * c.bessel_integral));

  // top asymptotics, n = 5..9
  const double expected[5] = {2.00981, 2.26104, 2.49069, 2.70345, 2.90254};
  for (int n = 5; n <= 9; ++n)
    CHECK(std::abs(area_asymptotics(n, WindowKind::top, c) - expected[n - 5]) <= 5e-5);

  // bottom asymptotics approaches the scaled-area column from above-ish
  CHECK(area_asymptotics(9, WindowKind::bottom, c) ==
        doctest::Approx(c.c_L / 3.0).epsilon(1e-12));
}

TEST_CASE("kernel scaling limit: monotone sup-norm convergence") {
  double prev = 1e9;
  double first = 0.0, last = 0.0;
  for (int n : {8, 16, 32, 64, 128}) {
    double err = bessel_scaling_error(n, 5.0);
    if (n == 8) first = err;
    last = err;
    CHECK(err < prev);
    prev = err;
  }
  CHECK(last < first / 3.0);

  // kernels vanish together on the axis
  CHECK(bessel_scaling_error(16, 1e-9, 3) < 1e-12);
}

TEST_CASE("extended kernel scaling error shrinks") {
  BesselTimePartition times({0.0, 1.0});
  double e16 = bessel_scaling_error_extended(16, times, 4.0, 0.5, 13);
  double e64 = bessel_scaling_error_extended(64, times, 4.0, 0.5, 13);
  CHECK(e64 < e16);
}

TEST_CASE("joint limit check: m = 1 determinants converge") {
  BesselTimePartition one({0.0});
  std::vector<double> thr{2.0};
  std::vector<int> ns{16, 32, 64, 128};
  auto rows = joint_limit_check(one, thr, ns);
  REQUIRE(rows.size() == 4);
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].diff < rows[i - 1].diff);
  CHECK(rows.back().diff < 2e-2);

  // all-zero thresholds: every entry exactly 1
  std::vector<double> zero{0.0};
  for (auto& row : joint_limit_check(one, zero, ns)) {
    CHECK(row.scaled_det == 1.0);
    CHECK(row.bessel_det == 1.0);
  }
}

TEST_CASE("joint limit check: m = 2 probe") {
  BesselTimePartition times({0.0, 1.0});
  std::vector<double> thr{1.5, 1.5};
  std::vector<int> ns{16, 32, 64, 128};
  auto rows = joint_limit_check(times, thr, ns);
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].diff < rows[i - 1].diff);
  CHECK(rows.back().diff < 2e-2);
}
