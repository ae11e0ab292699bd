#include "nbe/observables.hpp"

#include <cmath>
#include <stdexcept>

namespace nbe::observables {

using fredholm::Window;
using fredholm::WindowKind;
using fredholm::WindowSet;
using kernels::BesselTimePartition;
using kernels::TimePartition;

namespace {

double sigma_of(double tau) { return std::sqrt(2.0 * tau * (1.0 - tau)); }

fredholm::ScalarKernel scalar_kernel(int n) {
  return [n](double x, double y) { return kernels::kernel_scalar(n, x, y); };
}

void check_tau(double tau) {
  if (!(tau > 0.0 && tau < 1.0))
    throw std::invalid_argument("observables: tau must be in (0,1)");
}

// composite Gauss-Legendre over [0, cut] with fixed-width panels
template <class F>
double outer_integral(F&& f, double cut, double panel_width, int order, int* points) {
  const int n_panels = std::max(1, int(std::ceil(cut / panel_width)));
  double acc = 0.0;
  for (int p = 0; p < n_panels; ++p) {
    auto rule =
        specfun::gauss_legendre(order, cut * p / n_panels, cut * (p + 1) / n_panels);
    acc += rule.integrate(f);
  }
  if (points) *points = n_panels * order;
  return acc;
}

}  // namespace

Method method_from_string(const std::string& name) {
  if (name == "finite") return Method::finite;
  if (name == "fredholm") return Method::fredholm;
  if (name == "painleve") return Method::painleve;
  if (name == "series") return Method::series;
  throw std::invalid_argument("unknown method: " + name);
}

const char* method_name(Method m) {
  switch (m) {
    case Method::finite: return "finite";
    case Method::fredholm: return "fredholm";
    case Method::painleve: return "painleve";
    case Method::series: return "series";
  }
  return "?";
}

double bottom_cdf(int n, double tau, double x, Method method, int quad_order) {
  check_tau(tau);
  if (x < 0.0) throw std::invalid_argument("bottom_cdf: x must be >= 0");
  const double s = x / sigma_of(tau);
  switch (method) {
    case Method::finite:
      return fredholm::finite_det(n, {WindowKind::bottom, s}, quad_order);
    case Method::fredholm:
      return fredholm::fredholm_det_scalar(scalar_kernel(n), {WindowKind::bottom, s},
                                           quad_order, fredholm::default_truncation(n));
    case Method::painleve:
      return painleve::prob_bottom(n, s);
    case Method::series:
      if (s > 0.3)
        throw std::invalid_argument("bottom_cdf: series method requires s <= 0.3");
      return painleve::prob_series_bottom(n, s);
  }
  throw std::logic_error("bottom_cdf: unreachable");
}

double top_cdf(int n, double tau, double x, Method method, int quad_order) {
  check_tau(tau);
  if (x < 0.0) throw std::invalid_argument("top_cdf: x must be >= 0");
  const double s = x / sigma_of(tau);
  if (s == 0.0) return 0.0;  // window is the whole half-line
  switch (method) {
    case Method::finite:
      return fredholm::finite_det(n, {WindowKind::top, s}, quad_order);
    case Method::fredholm:
      return fredholm::fredholm_det_scalar(scalar_kernel(n), {WindowKind::top, s},
                                           quad_order, fredholm::default_truncation(n));
    case Method::painleve:
      return painleve::prob_top(n, s);
    case Method::series:
      throw std::invalid_argument("top_cdf: no small-s series for the top law");
  }
  throw std::logic_error("top_cdf: unreachable");
}

double joint_cdf(int n, const TimePartition& times, std::span<const double> thresholds,
                 WindowKind kind, int quad_order) {
  if (int(thresholds.size()) != times.size())
    throw std::invalid_argument("joint_cdf: threshold count != time count");
  kernels::BEKernel kernel(n, times);
  WindowSet ws;
  ws.quad_order = quad_order;
  for (double x : thresholds) ws.windows.push_back({kind, x});
  return fredholm::fredholm_det_extended(kernel, ws);
}

AreaResult expected_areas(int n, int quad_order) {
  if (n < 1) throw std::invalid_argument("expected_areas: n must be >= 1");
  AreaResult out;
  out.n = n;
  out.inner_order = quad_order;

  // cutoffs where the integrands fall below 1e-14
  double cut_b = 1.0;
  while (fredholm::finite_det(n, {WindowKind::bottom, cut_b}, quad_order) > 1e-14)
    cut_b += 0.5;
  double cut_t = 1.0;
  while (1.0 - fredholm::finite_det(n, {WindowKind::top, cut_t}, quad_order) > 1e-14)
    cut_t += 0.5;

  const double pref = M_PI / (4.0 * std::sqrt(2.0));  // int_0^1 sigma(tau) dtau
  int pts_b = 0, pts_t = 0;
  out.bottom_mean =
      pref * outer_integral(
                 [&](double s) {
                   return fredholm::finite_det(n, {WindowKind::bottom, s}, quad_order);
                 },
                 cut_b, 0.5, 24, &pts_b);
  out.top_mean =
      pref * outer_integral(
                 [&](double s) {
                   return 1.0 -
                          fredholm::finite_det(n, {WindowKind::top, s}, quad_order);
                 },
                 cut_t, 0.5, 24, &pts_t);
  out.outer_points = pts_b + pts_t;
  return out;
}

double expected_area_bottom(int n, int quad_order) {
  return expected_areas(n, quad_order).bottom_mean;
}

double expected_area_top(int n, int quad_order) {
  return expected_areas(n, quad_order).top_mean;
}

LimitConstants limit_constants(int quad_order) {
  LimitConstants out;

  auto k0_bessel = [](double x, double y) { return kernels::bessel_kernel_k0(x, y); };
  auto det_at = [&](double t) {
    return fredholm::fredholm_det_scalar(k0_bessel, {WindowKind::bottom, t * t},
                                         quad_order, 0.0,
                                         fredholm::NodeGrading::graded_left);
  };

  double cut = 4.0;
  while (det_at(cut) > 1e-14) cut += 1.0;

  // x = t^2 removes the x^{-1/2} factor: integral = 2 int_0^cut det(t^2) dt
  out.bessel_integral = 2.0 * outer_integral(det_at, cut, 0.5, 16, nullptr);
  out.c_L = M_PI / (16.0 * std::sqrt(2.0)) * out.bessel_integral;
  out.c_H = M_PI / (8.0 * std::pow(2.0, 1.0 / 6.0)) * out.f2_mean;
  return out;
}

double area_asymptotics(int n, WindowKind side, const LimitConstants& c) {
  if (n < 1) throw std::invalid_argument("area_asymptotics: n must be >= 1");
  if (side == WindowKind::bottom) return c.c_L / std::sqrt(double(n));
  return M_PI / std::pow(2.0, 1.5) * std::sqrt(double(n)) +
         c.c_H * std::pow(double(n), -1.0 / 6.0);
}

double bessel_scaling_error(int n, double box_size, int grid_points) {
  if (box_size <= 0.0 || box_size > 8.0)
    throw std::invalid_argument("bessel_scaling_error: box_size must be in (0, 8]");
  const double scale = 1.0 / (2.0 * std::sqrt(double(n)));
  double worst = 0.0;
  for (int i = 0; i < grid_points; ++i) {
    for (int j = 0; j <= i; ++j) {
      const double x = box_size * i / (grid_points - 1);
      const double y = box_size * j / (grid_points - 1);
      const double scaled = scale * kernels::kernel_scalar(n, scale * x, scale * y);
      const double limit = kernels::bessel_kernel(x, y);
      worst = std::max(worst, std::abs(scaled - limit));
    }
  }
  return worst;
}

namespace {

// times and Jacobians of the hard-edge substitution at finite n
struct EdgeScaling {
  TimePartition times;
  std::vector<double> jacobian;  // dX_k/dx_bessel
};

EdgeScaling edge_scaling(int n, const BesselTimePartition& times, double tau) {
  const double unit = tau * (1.0 - tau) / (2.0 * n);
  std::vector<double> taus;
  for (double tb : times.taus) {
    double tk = tau + unit * tb;
    if (!(tk > 0.0 && tk < 1.0))
      throw std::invalid_argument("edge scaling pushes a time outside (0,1)");
    taus.push_back(tk);
  }
  EdgeScaling out{TimePartition(taus), {}};
  // dX_k/dx_bessel = sqrt(tau(1-tau)/(2n)) / sigma_k
  for (int k = 0; k < out.times.size(); ++k)
    out.jacobian.push_back(std::sqrt(unit) / out.times.sigma(k));
  return out;
}

}  // namespace

double bessel_scaling_error_extended(int n, const BesselTimePartition& times,
                                     double box_size, double tau, int grid_points) {
  EdgeScaling es = edge_scaling(n, times, tau);
  kernels::BEKernel kernel(n, es.times);
  const int m = es.times.size();
  double worst = 0.0;
  for (int k = 0; k < m; ++k)
    for (int l = 0; l < m; ++l) {
      const double jk = es.jacobian[k], jl = es.jacobian[l];
      for (int i = 0; i < grid_points; ++i)
        for (int j = 0; j < grid_points; ++j) {
          const double x = box_size * i / (grid_points - 1);
          const double y = box_size * j / (grid_points - 1);
          const double scaled = std::sqrt(jk * jl) * kernel.entry(k, l, jk * x, jl * y);
          const double limit = kernels::bessel_extended_entry(times, k, l, x, y);
          worst = std::max(worst, std::abs(scaled - limit));
        }
    }
  return worst;
}

std::vector<LimitRow> joint_limit_check(const BesselTimePartition& times,
                                        std::span<const double> thresholds,
                                        std::span<const int> n_list, double tau,
                                        int quad_order) {
  if (thresholds.size() != std::size_t(times.size()))
    throw std::invalid_argument("joint_limit_check: threshold count != time count");

  WindowSet bessel_ws;
  bessel_ws.quad_order = quad_order;
  for (double x : thresholds) bessel_ws.windows.push_back({WindowKind::bottom, x});
  const double bessel_det = fredholm::fredholm_det_bessel_extended(times, bessel_ws);

  std::vector<LimitRow> rows;
  for (int n : n_list) {
    EdgeScaling es = edge_scaling(n, times, tau);
    kernels::BEKernel kernel(n, es.times);
    WindowSet ws;
    ws.quad_order = quad_order;
    const double unit = std::sqrt(tau * (1.0 - tau) / (2.0 * n));
    for (double x : thresholds)
      ws.windows.push_back({WindowKind::bottom, unit * x});  // physical thresholds
    double det = fredholm::fredholm_det_extended(kernel, ws);
    rows.push_back({n, det, bessel_det, std::abs(det - bessel_det)});
  }
  return rows;
}

}  // namespace nbe::observables
