#include "nbe/painleve.hpp"

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <stdexcept>

#include "nbe/kernels.hpp"
#include "nbe/specfun.hpp"

namespace nbe::painleve {

namespace {

double sqrt_n(int n) { return std::sqrt(double(n)); }

// ---------------------------------------------------------------- series ---

// Polynomials in sh = sqrt(s): value[k] multiplies sh^k. Fixed truncation.
using Poly = std::vector<double>;

Poly poly_mul(const Poly& a, const Poly& b, std::size_t len) {
  Poly out(len, 0.0);
  for (std::size_t i = 0; i < a.size() && i < len; ++i) {
    if (a[i] == 0.0) continue;
    for (std::size_t j = 0; j < b.size() && i + j < len; ++j) out[i + j] += a[i] * b[j];
  }
  return out;
}

// sigma-form defect F(r) as a polynomial in sh, from the coefficients a_i of
// r = sum a_i s^{(3+i)/2}. F must vanish identically along solutions.
Poly sigma_defect(const std::vector<double>& a, int n, std::size_t len) {
  const std::size_t T = a.size();
  Poly r(len, 0.0), rp(len, 0.0), h(len, 0.0), g(len, 0.0);
  for (std::size_t i = 0; i < T; ++i) {
    const double p = 0.5 * (3.0 + i);
    if (3 + i < len) r[3 + i] = a[i];
    if (1 + i < len) {
      rp[1 + i] = a[i] * p;             // r'
      h[1 + i] = a[i] * p * (p - 1.0);  // s r''
    }
    if (3 + i < len) g[3 + i] = a[i] * (p - 1.0);  // s r' - r
  }
  Poly rp2 = poly_mul(rp, rp, len);
  Poly F = poly_mul(h, h, len);
  Poly t1 = poly_mul(rp2, g, len);
  Poly t2 = poly_mul(g, g, len);
  Poly t3 = poly_mul(g, rp, len);
  for (std::size_t k = 0; k < len; ++k)
    F[k] += -4.0 * t1[k] - t2[k] + (4.0 * n + 1.0) * t3[k] - 0.25 * rp2[k];
  return F;
}

}  // namespace

double r0_constant(int n) {
  if (n < 1) throw std::invalid_argument("r0_constant: n must be >= 1");
  double central = 1.0;  // binom(2n,n) / 4^n = (2n-1)!! / (2n)!!
  for (int j = 1; j <= n; ++j) central *= (2.0 * j - 1.0) / (2.0 * j);
  return central * 4.0 * n * (2.0 * n + 1.0) / (3.0 * std::sqrt(M_PI));
}

RSeries r_series(int n, int num_coeffs) {
  if (num_coeffs < 2) throw std::invalid_argument("r_series: need at least 2 coefficients");
  RSeries out;
  out.n = n;
  out.coeff.assign(num_coeffs, 0.0);
  const double r0 = r0_constant(n);
  out.coeff[0] = r0;
  const std::size_t len = 2 * num_coeffs + 6;
  // The defect coefficient at sh^{2+i} is linear in a_i with slope
  // (3/4) r0 p_i (2 p_i - 3); everything below it is already solved.
  for (int i = 1; i < num_coeffs; ++i) {
    Poly F = sigma_defect(out.coeff, n, len);
    const double p = 0.5 * (3.0 + i);
    const double slope = 0.75 * r0 * p * (2.0 * p - 3.0);
    out.coeff[i] = -F[2 + i] / slope;
  }
  return out;
}

double RSeries::eval(double s) const {
  const double sh = std::sqrt(s);
  double acc = 0.0;
  for (std::size_t i = coeff.size(); i-- > 0;) acc = acc * sh + coeff[i];
  return acc * s * sh;  // s^{3/2} * sum coeff[i] sh^i
}

double RSeries::log_integral(double S) const {
  const double sh = std::sqrt(S);
  double acc = 0.0;
  for (std::size_t i = coeff.size(); i-- > 0;) acc = acc * sh + coeff[i] / (0.5 * (3.0 + i));
  return acc * S * sh;
}

double series_r(int n, double s) {
  if (!(s >= 0.0)) throw std::invalid_argument("series_r: s must be >= 0");
  if (s > 0.3) throw std::invalid_argument("series_r: s beyond series validity (s <= 0.3)");
  if (s == 0.0) return 0.0;
  return r_series(n).eval(s);
}

double prob_series_bottom(int n, double s) {
  if (!(s >= 0.0)) throw std::invalid_argument("prob_series_bottom: s must be >= 0");
  if (s > 0.3)
    throw std::invalid_argument("prob_series_bottom: s beyond series validity (s <= 0.3)");
  const double r0 = r0_constant(n);
  const double s3 = s * s * s, s5 = s3 * s * s, s7 = s5 * s * s, s9 = s7 * s * s;
  const double s10 = s9 * s;
  return 1.0 - (2.0 / 3.0) * r0 * s3 + (2.0 / 25.0) * (4.0 * n + 1.0) * r0 * s5 -
         (64.0 * n * n + 32.0 * n + 9.0) / 735.0 * r0 * s7 +
         (4.0 * n + 1.0) * (32.0 * n * n + 16.0 * n + 15.0) / 8505.0 * r0 * s9 +
         128.0 * (2.0 * n + 3.0) * (n - 1.0) / 275625.0 * r0 * r0 * s10;
}

// ----------------------------------------------------------------- state ---

double PainleveState::r() const {
  const double rn = sqrt_n(n);
  const double A = 0.25 - 0.5 * s - rn * w;
  const double B = -u + 2.0 * rn * v + rn * s;
  return (w + rn) * q * q + 2.0 * A * q * p + B * p * p;
}

double PainleveState::r_prime() const { return -q * p + sqrt_n(n) * p * p; }

double PainleveState::first_integral_1(Side side) const {
  const double rn = sqrt_n(n);
  const double sign = (side == Side::bottom) ? 1.0 : -1.0;
  return sign * s * p * (q - rn * p) + rn * (u + 0.5 * w) - (1.0 + 2.0 * n) * v +
         w * (u - 2.0 * rn * v + n * w);
}

double PainleveState::first_integral_2(Side side) const {
  const double rn = sqrt_n(n);
  const double A = 0.25 - 0.5 * s - rn * w;
  const double B = -u + 2.0 * rn * v + rn * s;
  const double sign = (side == Side::bottom) ? 1.0 : -1.0;
  return B * p * p + (rn + w) * q * q + 2.0 * A * p * q + sign * (v - rn * w);
}

// ---------------------------------------------------- initial conditions ---

namespace {

struct K0Pair {
  double phi, psi;
};

K0Pair k0_pair(int n, double x) {
  K0Pair out;
  kernels::k0_phi_psi(n, x, out.phi, out.psi);
  return out;
}

// Bottom start: solve the Nystrom-discretized resolvent on (0, s0) with a
// quartic node map (the integrands behave like z^{1/2} times analytic there).
PainleveState init_bottom(int n, double s0, int order) {
  auto base = specfun::gauss_legendre(order, 0.0, 1.0);
  const int N = order;
  std::vector<double> z(N), wz(N), phi(N), psi(N);
  for (int i = 0; i < N; ++i) {
    const double t = base.nodes[i];
    z[i] = s0 * t * t * t * t;
    wz[i] = s0 * 4.0 * t * t * t * base.weights[i];
    K0Pair fp = k0_pair(n, z[i]);
    phi[i] = fp.phi;
    psi[i] = fp.psi;
  }

  Eigen::MatrixXd a(N, N);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      a(i, j) = (i == j ? 1.0 : 0.0) - kernels::kernel_k0(n, z[i], z[j]) * wz[j];
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  Eigen::VectorXd Q = lu.solve(Eigen::Map<Eigen::VectorXd>(phi.data(), N));
  Eigen::VectorXd P = lu.solve(Eigen::Map<Eigen::VectorXd>(psi.data(), N));

  PainleveState st;
  st.n = n;
  st.s = s0;
  K0Pair edge = k0_pair(n, s0);
  st.q = edge.phi;
  st.p = edge.psi;
  for (int j = 0; j < N; ++j) {
    const double k_edge = kernels::kernel_k0(n, s0, z[j]);
    st.q += wz[j] * k_edge * Q(j);
    st.p += wz[j] * k_edge * P(j);
    st.u += wz[j] * Q(j) * phi[j];
    st.v += wz[j] * Q(j) * psi[j];
    st.w += wz[j] * P(j) * psi[j];
  }
  return st;
}

double k0_diag(int n, double s) { return kernels::kernel_k0(n, s, s); }

// quadrature over [lo, hi] with a few panels of 32-point Gauss-Legendre
template <class F>
double panel_integrate(F&& f, double lo, double hi, int panels = 6) {
  double acc = 0.0;
  for (int p = 0; p < panels; ++p) {
    double a = lo + (hi - lo) * p / panels;
    double b = lo + (hi - lo) * (p + 1) / panels;
    acc += specfun::gauss_legendre(32, a, b).integrate(f);
  }
  return acc;
}

// Top start: the window (s_start, inf) is effectively empty, the resolvent is
// the identity, and the state reduces to plain tail integrals of phi, psi.
PainleveState init_top(int n, double s_start, double s_hi) {
  PainleveState st;
  st.n = n;
  st.s = s_start;
  K0Pair edge = k0_pair(n, s_start);
  st.q = edge.phi;
  st.p = edge.psi;
  st.u = panel_integrate([n](double t) { return k0_pair(n, t).phi * k0_pair(n, t).phi; },
                         s_start, s_hi);
  st.v = panel_integrate([n](double t) { return k0_pair(n, t).phi * k0_pair(n, t).psi; },
                         s_start, s_hi);
  st.w = panel_integrate([n](double t) { return k0_pair(n, t).psi * k0_pair(n, t).psi; },
                         s_start, s_hi);
  return st;
}

// first abscissa past the spectral edge where the kernel diagonal is dead
double auto_top_start(int n) {
  double s = 4.0 * n + 20.0;
  const double cap = 4.0 * n + 80.0;
  while (s < cap && s * k0_diag(n, s) > 1e-12) s += 2.0;
  return s;
}

double tail_end(int n, double s_start) {
  double hi = s_start + 10.0;
  while (hi < s_start + 60.0 && k0_diag(n, hi) > 1e-30) hi += 10.0;
  return hi;
}

// ----------------------------------------------------------- integrator ---

// The integration state is carried in extended precision: the first
// integrals are exact cancellations of terms growing like u^2, and the
// monitor needs headroom below the 1e-8 gate.
using Vec6 = std::array<long double, 6>;  // q, p, u, v, w, ell

Vec6 deriv(int n, Side side, long double s, const Vec6& y) {
  const long double rn = sqrtl((long double)n);
  const long double q = y[0], p = y[1], u = y[2], v = y[3], w = y[4];
  const long double A = 0.25L - 0.5L * s - rn * w;
  const long double B = -u + 2.0L * rn * v + rn * s;
  const long double sign = (side == Side::bottom) ? 1.0L : -1.0L;
  Vec6 dy;
  dy[0] = (A * q + B * p) / s;
  dy[1] = (-(w + rn) * q - A * p) / s;
  dy[2] = sign * q * q;
  dy[3] = sign * p * q;
  dy[4] = sign * p * p;
  const long double r = (w + rn) * q * q + 2.0L * A * q * p + B * p * p;
  dy[5] = r / s;
  return dy;
}

long double r_extended_of(int n, long double s, const Vec6& y) {
  const long double rn = sqrtl((long double)n);
  const long double q = y[0], p = y[1], u = y[2], v = y[3], w = y[4];
  const long double A = 0.25L - 0.5L * s - rn * w;
  const long double B = -u + 2.0L * rn * v + rn * s;
  return (w + rn) * q * q + 2.0L * A * q * p + B * p * p;
}

// scaled first-integral residuals, evaluated in extended precision
std::pair<double, double> fi_residuals(int n, Side side, long double s, const Vec6& y) {
  const long double rn = sqrtl((long double)n);
  const long double q = y[0], p = y[1], u = y[2], v = y[3], w = y[4];
  const long double A = 0.25L - 0.5L * s - rn * w;
  const long double B = -u + 2.0L * rn * v + rn * s;
  const long double sign = (side == Side::bottom) ? 1.0L : -1.0L;
  const long double f1 = sign * s * p * (q - rn * p) + rn * (u + 0.5L * w) -
                         (1.0L + 2.0L * n) * v + w * (u - 2.0L * rn * v + n * w);
  const long double f2 =
      B * p * p + (rn + w) * q * q + 2.0L * A * p * q + sign * (v - rn * w);
  return {double(fabsl(f1) / (1.0L + s)), double(fabsl(f2) / (1.0L + s))};
}

PainleveState to_state(int n, double s, const Vec6& y) {
  PainleveState st;
  st.n = n;
  st.s = s;
  st.q = double(y[0]);
  st.p = double(y[1]);
  st.u = double(y[2]);
  st.v = double(y[3]);
  st.w = double(y[4]);
  return st;
}

// Dormand-Prince 5(4) with FSAL, stepping exactly onto each target abscissa.
class Dopri5 {
 public:
  Dopri5(int n, Side side, const SolveOptions& opts) : n_(n), side_(side), opts_(opts) {}

  double max_fi_residual = 0.0;
  bool capped = false;  // log-integral saturation reached

  double last_step() const { return h_; }

  // advance y from s to s_target (either direction), updating s in place and
  // reporting every accepted step; returns false when the log-integral cap
  // fired before reaching the target
  template <class OnAccept>
  bool advance(double& s, Vec6& y, double s_target, double log_base, OnAccept&& on_accept) {
    const double dir = (s_target > s) ? 1.0 : -1.0;
    if (h_ == 0.0) h_ = dir * 0.01 * std::abs(s);
    if (h_ * dir < 0.0) h_ = -h_;
    Vec6 k1 = deriv(n_, side_, s, y);
    while (dir * (s_target - s) > 1e-14 * std::max(1.0, std::abs(s))) {
      double h = h_;
      if (dir * (s + h - s_target) > 0.0) h = s_target - s;
      Vec6 y5, k7;
      const double err = step(s, y, k1, h, y5, k7);
      if (err <= 1.0) {
        s += h;
        y = y5;
        k1 = k7;  // FSAL
        check_first_integrals(s, y);
        if (log_base + std::abs(double(y[5])) >= opts_.log_cap) {
          capped = true;
          on_accept(s, y, h);
          return false;
        }
        const bool landed = dir * (s_target - s) <= 1e-14 * std::max(1.0, std::abs(s));
        if (!landed) on_accept(s, y, h);
        h_ = h * std::min(5.0, std::max(0.2, 0.9 * std::pow(std::max(err, 1e-10), -0.2)));
      } else {
        h_ = h * std::max(0.2, 0.9 * std::pow(err, -0.2));
        if (std::abs(h_) < 1e-14 * std::max(1.0, std::abs(s)))
          throw std::runtime_error("painleve: step size underflow");
      }
    }
    return true;
  }

 private:
  double step(double s, const Vec6& y, const Vec6& k1, double hd, Vec6& y5, Vec6& k7) {
    const long double h = hd;
    static constexpr long double a21 = 1.0L / 5;
    static constexpr long double a31 = 3.0L / 40, a32 = 9.0L / 40;
    static constexpr long double a41 = 44.0L / 45, a42 = -56.0L / 15, a43 = 32.0L / 9;
    static constexpr long double a51 = 19372.0L / 6561, a52 = -25360.0L / 2187,
                                 a53 = 64448.0L / 6561, a54 = -212.0L / 729;
    static constexpr long double a61 = 9017.0L / 3168, a62 = -355.0L / 33,
                                 a63 = 46732.0L / 5247, a64 = 49.0L / 176,
                                 a65 = -5103.0L / 18656;
    static constexpr long double b1 = 35.0L / 384, b3 = 500.0L / 1113, b4 = 125.0L / 192,
                                 b5 = -2187.0L / 6784, b6 = 11.0L / 84;
    static constexpr long double e1 = 35.0L / 384 - 5179.0L / 57600,
                                 e3 = 500.0L / 1113 - 7571.0L / 16695,
                                 e4 = 125.0L / 192 - 393.0L / 640,
                                 e5 = -2187.0L / 6784 + 92097.0L / 339200,
                                 e6 = 11.0L / 84 - 187.0L / 2100, e7 = -1.0L / 40;

    Vec6 t, k2, k3, k4, k5, k6;
    for (int i = 0; i < 6; ++i) t[i] = y[i] + h * a21 * k1[i];
    k2 = deriv(n_, side_, s + hd / 5.0, t);
    for (int i = 0; i < 6; ++i) t[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
    k3 = deriv(n_, side_, s + 3.0 * hd / 10.0, t);
    for (int i = 0; i < 6; ++i) t[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    k4 = deriv(n_, side_, s + 4.0 * hd / 5.0, t);
    for (int i = 0; i < 6; ++i)
      t[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    k5 = deriv(n_, side_, s + 8.0 * hd / 9.0, t);
    for (int i = 0; i < 6; ++i)
      t[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    k6 = deriv(n_, side_, s + hd, t);
    for (int i = 0; i < 6; ++i)
      y5[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    k7 = deriv(n_, side_, s + hd, y5);

    double err2 = 0.0;
    for (int i = 0; i < 6; ++i) {
      const double e =
          double(h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                      e7 * k7[i]));
      const double scale =
          opts_.abs_tol +
          opts_.rel_tol * double(std::max(fabsl(y[i]), fabsl(y5[i])));
      err2 += (e / scale) * (e / scale);
    }
    return std::sqrt(err2 / 6.0);
  }

  void check_first_integrals(double s, const Vec6& y) {
    auto [f1, f2] = fi_residuals(n_, side_, s, y);
    max_fi_residual = std::max({max_fi_residual, f1, f2});
    if (max_fi_residual > opts_.fi_abort)
      throw std::runtime_error(
          "painleve: first-integral residual " + std::to_string(max_fi_residual) +
          " exceeds abort threshold at s = " + std::to_string(s));
  }

  int n_;
  Side side_;
  SolveOptions opts_;
  double h_ = 0.0;
};

std::vector<double> record_grid(double lo, double hi, const SolveOptions& opts) {
  std::vector<double> grid{lo};
  double s = lo;
  while (true) {
    s += std::min(opts.record_max_step, (opts.record_ratio - 1.0) * s);
    if (s >= hi * (1.0 - 1e-12)) break;
    grid.push_back(s);
  }
  grid.push_back(hi);
  return grid;
}

}  // namespace

double SigmaSolution::total_log_integral() const {
  if (kind == Side::bottom)
    return series_log_piece + (log_int.empty() ? 0.0 : log_int.back());
  return tail_log_piece + (log_int.empty() ? 0.0 : log_int.front());
}

double top_start_abscissa(int n) { return auto_top_start(n); }

SigmaSolution integrate_bottom(int n, double s_max, const SolveOptions& opts) {
  if (n < 1) throw std::invalid_argument("integrate_bottom: n must be >= 1");
  if (!(opts.s0 > 0.0 && s_max > opts.s0))
    throw std::invalid_argument("integrate_bottom: need 0 < s0 < s_max");

  SigmaSolution sol;
  sol.kind = Side::bottom;
  sol.n = n;
  sol.series_log_piece = r_series(n).log_integral(opts.s0);

  PainleveState st = init_bottom(n, opts.s0, opts.init_quad_order);
  Vec6 y{st.q, st.p, st.u, st.v, st.w, 0.0L};
  double s = opts.s0;

  Dopri5 stepper(n, Side::bottom, opts);
  // Accepted steps are recorded too, but never closer than a fraction of the
  // local step (near-duplicate abscissae would wreck the stencils, while in
  // steep zones the stencils must track the integrator's own resolution).
  auto gap_floor = [&](double sv, double h_local) {
    double forced = 0.1 * std::min(opts.record_max_step, (opts.record_ratio - 1.0) * sv);
    return std::min(forced, 0.35 * std::abs(h_local));
  };
  auto push = [&](double sv, const Vec6& yv) {
    PainleveState rec = to_state(n, sv, yv);
    sol.grid.push_back(sv);
    sol.states.push_back(rec);
    sol.r_values.push_back(rec.r());
    sol.r_extended.push_back(r_extended_of(n, sv, yv));
    sol.log_int.push_back(double(yv[5]));
    auto [f1, f2] = fi_residuals(n, Side::bottom, sv, yv);
    sol.fi_scaled.push_back(std::max(f1, f2));
  };
  auto pop = [&] {
    sol.grid.pop_back();
    sol.states.pop_back();
    sol.r_values.pop_back();
    sol.r_extended.pop_back();
    sol.log_int.pop_back();
    sol.fi_scaled.pop_back();
  };
  auto record = [&](double sv, const Vec6& yv, double h_local) {
    if (!sol.grid.empty() && std::abs(sv - sol.grid.back()) < gap_floor(sv, h_local))
      return;
    push(sv, yv);
  };
  auto record_forced = [&](double sv, const Vec6& yv) {
    if (!sol.grid.empty() &&
        std::abs(sv - sol.grid.back()) < gap_floor(sv, stepper.last_step()) &&
        sol.grid.size() > 1)
      pop();
    if (sol.grid.empty() || sv != sol.grid.back()) push(sv, yv);
  };
  for (double target : record_grid(opts.s0, s_max, opts)) {
    bool reached = true;
    if (target > s) reached = stepper.advance(s, y, target, sol.series_log_piece, record);
    record_forced(s, y);
    if (!reached) {
      sol.truncated_at_cap = true;
      break;
    }
  }
  sol.max_fi_residual = stepper.max_fi_residual;
  return sol;
}

SigmaSolution integrate_top(int n, double s_min, const SolveOptions& opts) {
  if (n < 1) throw std::invalid_argument("integrate_top: n must be >= 1");
  const double s_start = opts.s_start > 0.0 ? opts.s_start : auto_top_start(n);
  if (!(s_min > 0.0 && s_min < s_start))
    throw std::invalid_argument("integrate_top: need 0 < s_min < s_start");

  SigmaSolution sol;
  sol.kind = Side::top;
  sol.n = n;
  const double hi = tail_end(n, s_start);
  sol.tail_log_piece = panel_integrate([n](double t) { return k0_diag(n, t); }, s_start, hi);

  PainleveState st = init_top(n, s_start, hi);
  Vec6 y{st.q, st.p, st.u, st.v, st.w, 0.0L};
  double s = s_start;

  auto grid = record_grid(s_min, s_start, opts);
  Dopri5 stepper(n, Side::top, opts);
  // traverse downward, store in increasing order afterwards
  std::vector<PainleveState> states;
  std::vector<double> svals, rvals, lints, fis;
  std::vector<long double> rexts;
  auto gap_floor = [&](double sv, double h_local) {
    double forced = 0.1 * std::min(opts.record_max_step, (opts.record_ratio - 1.0) * sv);
    return std::min(forced, 0.35 * std::abs(h_local));
  };
  auto push = [&](double sv, const Vec6& yv) {
    PainleveState rec = to_state(n, sv, yv);
    svals.push_back(sv);
    states.push_back(rec);
    rvals.push_back(rec.r());
    rexts.push_back(r_extended_of(n, sv, yv));
    lints.push_back(double(-yv[5]));  // int_s^{s_start} r/t dt
    auto [f1, f2] = fi_residuals(n, Side::top, sv, yv);
    fis.push_back(std::max(f1, f2));
  };
  auto pop = [&] {
    svals.pop_back();
    states.pop_back();
    rvals.pop_back();
    rexts.pop_back();
    lints.pop_back();
    fis.pop_back();
  };
  auto record = [&](double sv, const Vec6& yv, double h_local) {
    if (!svals.empty() && std::abs(sv - svals.back()) < gap_floor(sv, h_local)) return;
    push(sv, yv);
  };
  auto record_forced = [&](double sv, const Vec6& yv) {
    if (!svals.empty() &&
        std::abs(sv - svals.back()) < gap_floor(sv, stepper.last_step()) &&
        svals.size() > 1)
      pop();
    if (svals.empty() || sv != svals.back()) push(sv, yv);
  };
  for (auto it = grid.rbegin(); it != grid.rend(); ++it) {
    bool reached = true;
    if (*it < s) reached = stepper.advance(s, y, *it, sol.tail_log_piece, record);
    record_forced(s, y);
    if (!reached) {
      sol.truncated_at_cap = true;
      break;
    }
  }
  for (std::size_t i = svals.size(); i-- > 0;) {
    sol.grid.push_back(svals[i]);
    sol.states.push_back(states[i]);
    sol.r_values.push_back(rvals[i]);
    sol.r_extended.push_back(rexts[i]);
    sol.log_int.push_back(lints[i]);
    sol.fi_scaled.push_back(fis[i]);
  }
  sol.max_fi_residual = stepper.max_fi_residual;
  return sol;
}

double prob_bottom(int n, double s, const SolveOptions& opts) {
  if (!(s >= 0.0)) throw std::invalid_argument("prob_bottom: s must be >= 0");
  if (s == 0.0) return 1.0;
  const double S = s * s;
  if (S <= opts.s0) return std::exp(-r_series(n).log_integral(S));
  SigmaSolution sol = integrate_bottom(n, S, opts);
  // saturated runs report the cap value itself: the probability is below it,
  // and the overshoot at the stop point would depend on the recording grid
  if (sol.truncated_at_cap) return std::exp(-opts.log_cap);
  return std::exp(-sol.total_log_integral());
}

double prob_top(int n, double s, const SolveOptions& opts) {
  if (!(s > 0.0)) throw std::invalid_argument("prob_top: s must be > 0");
  const double S = s * s;
  const double s_start = opts.s_start > 0.0 ? opts.s_start : auto_top_start(n);
  if (S >= s_start) {
    const double hi = tail_end(n, S);
    return std::exp(-panel_integrate([n](double t) { return k0_diag(n, t); }, S, hi));
  }
  SigmaSolution sol = integrate_top(n, S, opts);
  if (sol.truncated_at_cap) return std::exp(-opts.log_cap);
  return std::exp(-sol.total_log_integral());
}

// --------------------------------------------------------- diagnostics ---

namespace {

// Fornberg finite-difference weights for derivative orders 0..maxder at x0;
// c[j][d] multiplies f(xs[j]) in the order-d derivative.
void fd_weights(const std::vector<long double>& xs, long double x0, int maxder,
                std::vector<std::vector<long double>>& c) {
  const int nn = static_cast<int>(xs.size());
  c.assign(nn, std::vector<long double>(maxder + 1, 0.0L));
  long double c1 = 1.0L, c4 = xs[0] - x0;
  c[0][0] = 1.0L;
  for (int i = 1; i < nn; ++i) {
    const int mn = std::min(i, maxder);
    long double c2 = 1.0L, c5 = c4;
    c4 = xs[i] - x0;
    for (int j = 0; j < i; ++j) {
      const long double c3 = xs[i] - xs[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k)
          c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
}

const std::vector<long double>& diag_r(const SigmaSolution& sol) {
  return sol.r_extended;
}

}  // namespace

double max_sigma_form_residual(const SigmaSolution& sol) {
  const int N = static_cast<int>(sol.grid.size());
  if (N < 7) throw std::invalid_argument("max_sigma_form_residual: grid too short");
  const auto& rv = diag_r(sol);
  const long double sign = (sol.kind == Side::bottom) ? 1.0L : -1.0L;
  double worst = 0.0;
  std::vector<std::vector<long double>> c;
  for (int i = 3; i + 3 < N; ++i) {
    std::vector<long double> xs(sol.grid.begin() + (i - 3), sol.grid.begin() + (i + 4));
    fd_weights(xs, sol.grid[i], 2, c);
    long double r1 = 0.0L, r2 = 0.0L;
    for (int j = 0; j < 7; ++j) {
      r1 += c[j][1] * rv[i - 3 + j];
      r2 += c[j][2] * rv[i - 3 + j];
    }
    const long double s = sol.grid[i];
    const long double r = rv[i];
    const long double g = s * r1 - r;
    const long double rhs =
        sign * 4.0L * r1 * r1 * g + g * g - (4.0L * sol.n + 1.0L) * g * r1 +
        0.25L * r1 * r1;
    const double resid =
        double(fabsl(s * s * r2 * r2 - rhs) / (1.0L + s * s * s * s));
    worst = std::max(worst, resid);
  }
  return worst;
}

double max_first_integral_residual(const SigmaSolution& sol) {
  return sol.max_fi_residual;
}

double max_r_prime_deviation(const SigmaSolution& sol) {
  const int N = static_cast<int>(sol.grid.size());
  if (N < 7) throw std::invalid_argument("max_r_prime_deviation: grid too short");
  const auto& rv = diag_r(sol);
  double worst = 0.0;
  std::vector<std::vector<long double>> c;
  for (int i = 3; i + 3 < N; ++i) {
    std::vector<long double> xs(sol.grid.begin() + (i - 3), sol.grid.begin() + (i + 4));
    fd_weights(xs, sol.grid[i], 1, c);
    long double r1 = 0.0L;
    for (int j = 0; j < 7; ++j) r1 += c[j][1] * rv[i - 3 + j];
    worst = std::max(worst, std::abs(double(r1) - sol.states[i].r_prime()));
  }
  return worst;
}

}  // namespace nbe::painleve
