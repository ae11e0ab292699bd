#include "nbe/fredholm.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace nbe::fredholm {

using specfun::QuadratureRule;

namespace {

constexpr double kUnitSlack = 1e-9;

double clamp_unit(double v) {
  if (v < 0.0 && v > -kUnitSlack) return 0.0;
  if (v > 1.0 && v < 1.0 + kUnitSlack) return 1.0;
  return v;
}

QuadratureRule window_rule(const Window& w, int quad_order, double truncation,
                           NodeGrading grading) {
  const double lo = (w.kind == WindowKind::bottom) ? 0.0 : w.threshold;
  const double hi = (w.kind == WindowKind::bottom) ? w.threshold : truncation;
  if (!(lo < hi)) throw std::invalid_argument("fredholm: window has no interior");
  if (grading == NodeGrading::graded_left)
    return specfun::graded_gauss_legendre(std::max(8, quad_order / 4), lo, hi, 12, 0.25);
  return specfun::gauss_legendre(quad_order, lo, hi);
}

}  // namespace

bool WindowSet::uniform_kind() const {
  for (const auto& w : windows)
    if (w.kind != windows.front().kind) return false;
  return true;
}

void WindowSet::validate() const {
  if (windows.empty()) throw std::invalid_argument("WindowSet: empty window list");
  for (const auto& w : windows) {
    if (w.threshold < 0.0) throw std::invalid_argument("WindowSet: negative threshold");
    if (w.kind == WindowKind::bottom && std::isfinite(w.threshold) &&
        truncation_point > 0.0 && w.threshold > truncation_point)
      throw std::invalid_argument("WindowSet: truncation below a finite endpoint");
  }
  if (quad_order < 4) throw std::invalid_argument("WindowSet: quad_order must be >= 4");
}

double default_truncation(int n) { return std::sqrt(4.0 * n) + 10.0; }

DiscretizedOperator discretize_scalar(const ScalarKernel& kernel, const Window& window,
                                      int quad_order, double truncation,
                                      NodeGrading grading) {
  if (quad_order < 4) throw std::invalid_argument("discretize_scalar: quad_order must be >= 4");
  DiscretizedOperator op;
  if (window.empty_at(truncation)) {
    op.matrix.resize(0, 0);
    return op;
  }
  QuadratureRule rule = window_rule(window, quad_order, truncation, grading);
  const int N = static_cast<int>(rule.size());
  op.matrix.resize(N, N);
  std::vector<double> sw(N);
  for (int i = 0; i < N; ++i) sw[i] = std::sqrt(rule.weights[i]);
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j <= i; ++j) {
      double v = kernel(rule.nodes[i], rule.nodes[j]);
      if (!std::isfinite(v)) throw std::runtime_error("discretize_scalar: non-finite kernel value");
      op.matrix(i, j) = sw[i] * v * sw[j];
      op.matrix(j, i) = sw[j] * kernel(rule.nodes[j], rule.nodes[i]) * sw[i];
    }
  }
  op.rules.push_back(std::move(rule));
  op.slice_of_block.push_back(0);
  op.offsets.push_back(0);
  return op;
}

double det_one_minus(const DiscretizedOperator& op) {
  const int N = op.dimension();
  if (N == 0) return 1.0;
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(N, N) - op.matrix;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  return lu.determinant();
}

std::vector<double> eigenvalues_sym(const DiscretizedOperator& op) {
  Eigen::MatrixXd sym = 0.5 * (op.matrix + op.matrix.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  std::vector<double> out(es.eigenvalues().data(), es.eigenvalues().data() + op.dimension());
  return out;
}

double fredholm_det_scalar(const ScalarKernel& kernel, const Window& window,
                           int quad_order, double truncation, NodeGrading grading) {
  DiscretizedOperator op = discretize_scalar(kernel, window, quad_order, truncation, grading);
  return clamp_unit(det_one_minus(op));
}

double finite_det(int n, const Window& window, int quad_order, double truncation) {
  if (n < 1) throw std::invalid_argument("finite_det: n must be >= 1");
  if (truncation <= 0.0) truncation = default_truncation(n);
  if (window.empty_at(truncation)) return 1.0;
  QuadratureRule rule = window_rule(window, quad_order, truncation, NodeGrading::plain);

  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n, n);
  std::vector<double> phi(2 * n);
  for (std::size_t q = 0; q < rule.size(); ++q) {
    specfun::oscillator_wavefunctions(2 * n - 1, rule.nodes[q], phi);
    const double w = rule.weights[q];
    for (int j = 0; j < n; ++j)
      for (int k = 0; k <= j; ++k)
        gram(j, k) += w * 2.0 * phi[2 * j + 1] * phi[2 * k + 1];
  }
  for (int j = 0; j < n; ++j)
    for (int k = j + 1; k < n; ++k) gram(j, k) = gram(k, j);

  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) - gram;
  return clamp_unit(Eigen::PartialPivLU<Eigen::MatrixXd>(a).determinant());
}

namespace {

// Generic block Nystrom determinant. `entry(k, l, x, y)` is evaluated in the
// final coordinates of each slice; `windows` carry those same coordinates.
double block_det(int m, const std::function<double(int, int, double, double)>& entry,
                 const WindowSet& windows, double truncation, NodeGrading grading) {
  std::vector<QuadratureRule> rules;
  std::vector<int> slices;
  for (int k = 0; k < m; ++k) {
    const Window& w = windows.windows[k];
    if (w.empty_at(truncation)) continue;
    int order = w.quad_order > 0 ? w.quad_order : windows.quad_order;
    rules.push_back(window_rule(w, order, truncation, grading));
    slices.push_back(k);
  }
  if (rules.empty()) return 1.0;

  int dim = 0;
  std::vector<int> offsets;
  for (const auto& r : rules) {
    offsets.push_back(dim);
    dim += static_cast<int>(r.size());
  }

  Eigen::MatrixXd mat(dim, dim);
  for (std::size_t bk = 0; bk < rules.size(); ++bk) {
    for (std::size_t bl = 0; bl < rules.size(); ++bl) {
      const auto& rk = rules[bk];
      const auto& rl = rules[bl];
      for (std::size_t i = 0; i < rk.size(); ++i) {
        const double swi = std::sqrt(rk.weights[i]);
        for (std::size_t j = 0; j < rl.size(); ++j) {
          double v = entry(slices[bk], slices[bl], rk.nodes[i], rl.nodes[j]);
          if (!std::isfinite(v)) throw std::runtime_error("block_det: non-finite kernel value");
          mat(offsets[bk] + i, offsets[bl] + j) = swi * v * std::sqrt(rl.weights[j]);
        }
      }
    }
  }
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(dim, dim) - mat;
  return Eigen::PartialPivLU<Eigen::MatrixXd>(a).determinant();
}

}  // namespace

double fredholm_det_extended(const kernels::BEKernel& kernel, const WindowSet& windows) {
  const int m = kernel.times().size();
  if (static_cast<int>(windows.windows.size()) != m)
    throw std::invalid_argument("fredholm_det_extended: window count != time count");
  windows.validate();

  // rescale thresholds into per-slice X = x / sigma_k coordinates
  WindowSet scaled = windows;
  for (int k = 0; k < m; ++k) scaled.windows[k].threshold /= kernel.times().sigma(k);
  const double truncation = windows.truncation_point > 0.0
                                ? windows.truncation_point
                                : default_truncation(kernel.n());

  double det = block_det(
      m,
      [&](int k, int l, double x, double y) { return kernel.entry_balanced(k, l, x, y); },
      scaled, truncation, NodeGrading::plain);
  return windows.uniform_kind() ? clamp_unit(det) : det;
}

double fredholm_det_extended_raw(int n, const kernels::TimePartition& times,
                                 const WindowSet& windows) {
  const int m = times.size();
  if (static_cast<int>(windows.windows.size()) != m)
    throw std::invalid_argument("fredholm_det_extended_raw: window count != time count");
  windows.validate();
  // physical coordinates throughout; truncation must be physical too
  double truncation = windows.truncation_point;
  if (truncation <= 0.0) {
    truncation = 0.0;
    for (int k = 0; k < m; ++k)
      truncation = std::max(truncation, default_truncation(n) * times.sigma(k));
  }
  return block_det(
      m,
      [&](int k, int l, double x, double y) {
        return kernels::be_raw_entry(n, times, k, l, x, y);
      },
      windows, truncation, NodeGrading::plain);
}

double fredholm_det_bessel_extended(const kernels::BesselTimePartition& times,
                                    const WindowSet& windows) {
  const int m = times.size();
  if (static_cast<int>(windows.windows.size()) != m)
    throw std::invalid_argument("fredholm_det_bessel_extended: window count != time count");
  windows.validate();
  for (const auto& w : windows.windows)
    if (w.kind != WindowKind::bottom)
      throw std::invalid_argument("fredholm_det_bessel_extended: bottom-type windows only");

  double det = block_det(
      m,
      [&](int k, int l, double x, double y) {
        return kernels::bessel_extended_entry(times, k, l, x, y);
      },
      windows, /*truncation=*/std::numeric_limits<double>::infinity(), NodeGrading::plain);
  return clamp_unit(det);
}

double resolvent_diagonal(const ScalarKernel& kernel, double s, int quad_order) {
  if (!(s > 0.0)) return 0.0;
  QuadratureRule rule =
      specfun::graded_gauss_legendre(std::max(8, quad_order / 4), 0.0, s, 12, 0.25);
  const int N = static_cast<int>(rule.size());

  // (I - K W) r = k_s, then R(s,s) = K(s,s) + sum_i w_i K(s, x_i) r_i
  Eigen::MatrixXd a(N, N);
  Eigen::VectorXd rhs(N);
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < N; ++j)
      a(i, j) = (i == j ? 1.0 : 0.0) - kernel(rule.nodes[i], rule.nodes[j]) * rule.weights[j];
    rhs(i) = kernel(rule.nodes[i], s);
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  Eigen::VectorXd r = lu.solve(rhs);
  double resid = (a * r - rhs).norm() / std::max(1e-300, rhs.norm());
  if (!(resid < 1e-8))
    throw std::runtime_error("resolvent_diagonal: near-singular discretized system");
  double out = kernel(s, s);
  for (int i = 0; i < N; ++i) out += rule.weights[i] * kernel(s, rule.nodes[i]) * r(i);
  return out;
}

}  // namespace nbe::fredholm
