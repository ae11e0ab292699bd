// Command-line front end: every computation in the library exposed as a
// reproducible, scriptable command with CSV/JSON output.

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "nbe/fredholm.hpp"
#include "nbe/kernels.hpp"
#include "nbe/montecarlo.hpp"
#include "nbe/observables.hpp"
#include "nbe/painleve.hpp"
#include "nbe/specfun.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

using json = nlohmann::json;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  json metadata;

  void add_row(std::initializer_list<std::string> cells) { rows.emplace_back(cells); }
};

struct OutputConfig {
  std::string format = "csv";
  std::string path;
};

void emit(const Table& table, const OutputConfig& out) {
  std::ostringstream body;
  if (out.format == "json") {
    json doc;
    doc["metadata"] = table.metadata;
    doc["columns"] = table.columns;
    json rows = json::array();
    for (const auto& r : table.rows) rows.push_back(r);
    doc["rows"] = rows;
    body << doc.dump(2) << "\n";
  } else {
    for (std::size_t i = 0; i < table.columns.size(); ++i)
      body << (i ? "," : "") << csv_quote(table.columns[i]);
    body << "\n";
    for (const auto& r : table.rows) {
      for (std::size_t i = 0; i < r.size(); ++i) body << (i ? "," : "") << csv_quote(r[i]);
      body << "\n";
    }
    body << "# metadata: " << table.metadata.dump() << "\n";
  }
  if (out.path.empty()) {
    std::cout << body.str();
  } else {
    std::ofstream f(out.path, std::ios::binary);
    if (!f) throw std::invalid_argument("cannot open output file: " + out.path);
    f << body.str();
  }
}

std::vector<double> parse_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stod(item));
  }
  if (out.empty()) throw std::invalid_argument("empty list: " + csv);
  return out;
}

std::vector<int> parse_int_list(const std::string& csv) {
  std::vector<int> out;
  for (double v : parse_list(csv)) out.push_back(int(std::lround(v)));
  return out;
}

json base_metadata(const std::string& command) {
  json meta;
  meta["tool"] = "nbe";
  meta["version"] = kVersion;
  meta["command"] = command;
  return meta;
}

nbe::fredholm::WindowKind parse_kind(const std::string& kind) {
  if (kind == "bottom") return nbe::fredholm::WindowKind::bottom;
  if (kind == "top") return nbe::fredholm::WindowKind::top;
  throw std::invalid_argument("kind must be bottom or top");
}

// ------------------------------------------------------------- commands ---

int cmd_density(int n, double tau, int grid_steps, double x_max, int quad_order,
                const OutputConfig& out) {
  const double sigma = std::sqrt(2.0 * tau * (1.0 - tau));
  if (x_max <= 0.0) x_max = (std::sqrt(4.0 * n) + 4.0) * sigma;

  Table t;
  t.columns = {"x", "rho"};
  for (int i = 0; i <= grid_steps; ++i) {
    double x = x_max * i / grid_steps;
    t.add_row({fmt(x), fmt(nbe::kernels::path_density(n, tau, x))});
  }

  // normalization check: integral over (0, infinity) must equal n
  auto rule = nbe::specfun::gauss_legendre(std::max(quad_order, 200), 0.0,
                                           (std::sqrt(4.0 * n) + 10.0) * sigma);
  double mass =
      rule.integrate([&](double x) { return nbe::kernels::path_density(n, tau, x); });

  t.metadata = base_metadata("density");
  t.metadata["config"] = {{"n", n}, {"tau", tau}, {"grid_steps", grid_steps},
                          {"x_max", x_max}, {"quad_order", quad_order}};
  t.metadata["normalization"] = {{"integral", mass}, {"target", n},
                                 {"abs_error", std::abs(mass - n)}};
  emit(t, out);
  return std::abs(mass - n) < 1e-8 ? 0 : 1;
}

int cmd_cdf(const std::string& side, int n, double tau, const std::string& method_name,
            std::vector<double> s_grid, int quad_order, const OutputConfig& out) {
  auto method = nbe::observables::method_from_string(method_name);
  const double sigma = std::sqrt(2.0 * tau * (1.0 - tau));

  Table t;
  t.columns = {"s", "x", "probability", "method"};
  for (double s : s_grid) {
    double x = s * sigma;
    double p = (side == "bottom")
                   ? nbe::observables::bottom_cdf(n, tau, x, method, quad_order)
                   : nbe::observables::top_cdf(n, tau, x, method, quad_order);
    t.add_row({fmt(s), fmt(x), fmt(p), method_name});
  }
  t.metadata = base_metadata("cdf");
  t.metadata["config"] = {{"side", side},       {"n", n},
                          {"tau", tau},         {"method", method_name},
                          {"quad_order", quad_order}, {"sigma", sigma}};
  emit(t, out);
  return 0;
}

int cmd_joint(int n, const std::string& times_csv, const std::string& thr_csv,
              const std::string& kind_name, int quad_order, const OutputConfig& out) {
  auto times = parse_list(times_csv);
  auto thresholds = parse_list(thr_csv);
  auto kind = parse_kind(kind_name);
  nbe::kernels::TimePartition tp(times);
  double det = nbe::observables::joint_cdf(n, tp, thresholds, kind, quad_order);

  Table t;
  t.columns = {"value", "interpretation"};
  std::string interp = (kind_name == "bottom") ? "P(X_1(t_k) >= x_k for all k)"
                                               : "P(X_n(t_k) < x_k for all k)";
  t.add_row({fmt(det), interp});
  t.metadata = base_metadata("joint");
  t.metadata["config"] = {{"n", n},
                          {"times", times},
                          {"thresholds", thresholds},
                          {"kind", kind_name},
                          {"quad_order", quad_order}};
  emit(t, out);
  return 0;
}

int cmd_areas(int n_lo, int n_hi, int quad_order, const OutputConfig& out) {
  Table t;
  t.columns = {"n", "bottom_mean", "top_mean", "sqrt_n_bottom"};
  for (int n = n_lo; n <= n_hi; ++n) {
    auto ar = nbe::observables::expected_areas(n, quad_order);
    t.add_row({std::to_string(n), fmt(ar.bottom_mean), fmt(ar.top_mean),
               fmt(std::sqrt(double(n)) * ar.bottom_mean)});
  }
  t.metadata = base_metadata("areas");
  t.metadata["config"] = {{"n_min", n_lo}, {"n_max", n_hi}, {"quad_order", quad_order}};
  emit(t, out);
  return 0;
}

int cmd_constants(int quad_order, const OutputConfig& out) {
  auto c = nbe::observables::limit_constants(quad_order);
  Table t;
  t.columns = {"name", "value"};
  t.add_row({"bessel_integral", fmt(c.bessel_integral)});
  t.add_row({"c_L", fmt(c.c_L)});
  t.add_row({"c_H", fmt(c.c_H)});
  t.add_row({"f2_mean", fmt(c.f2_mean)});
  t.metadata = base_metadata("constants");
  t.metadata["config"] = {{"quad_order", quad_order}};
  t.metadata["notes"] = "f2_mean is stored reference data, not computed here";
  emit(t, out);
  return 0;
}

int cmd_limits(const std::string& n_list_csv, const std::string& times_csv,
               const std::string& thr_csv, double tau, double box, int quad_order,
               const OutputConfig& out) {
  auto n_list = parse_int_list(n_list_csv);
  nbe::kernels::BesselTimePartition times(parse_list(times_csv));
  auto thresholds = parse_list(thr_csv);

  auto rows = nbe::observables::joint_limit_check(times, thresholds, n_list, tau,
                                                  quad_order);
  Table t;
  t.columns = {"n", "scaled_det", "bessel_det", "abs_diff", "kernel_sup_error"};
  for (const auto& row : rows) {
    double kerr = nbe::observables::bessel_scaling_error(row.n, box);
    t.add_row({std::to_string(row.n), fmt(row.scaled_det), fmt(row.bessel_det),
               fmt(row.diff), fmt(kerr)});
  }
  t.metadata = base_metadata("limits");
  t.metadata["config"] = {{"n_list", n_list},       {"times", times.taus},
                          {"thresholds", thresholds}, {"tau", tau},
                          {"box", box},             {"quad_order", quad_order}};
  t.metadata["notes"] =
      "m > 1 convergence tolerances are engineering probes, not paper values";
  emit(t, out);
  return 0;
}

int cmd_simulate(const std::string& observable, int n, int M, double tau,
                 const std::string& times_csv, const std::string& thr_csv,
                 const std::string& kind_name, long samples, std::uint64_t seed,
                 int threads, const OutputConfig& out) {
  namespace mc = nbe::montecarlo;
  mc::McOptions opts;
  opts.threads = threads;

  Table t;
  t.metadata = base_metadata("simulate");
  t.metadata["config"] = {{"observable", observable}, {"n", n},
                          {"M", M},                   {"tau", tau},
                          {"samples", samples},       {"seed", seed},
                          {"threads", threads}};

  if (observable == "bottom-cdf") {
    auto thresholds = parse_list(thr_csv);
    auto res = mc::estimate_bottom_cdf(n, M, tau, thresholds, samples, seed, opts);
    t.columns = {"threshold", "estimate", "standard_error", "samples"};
    for (std::size_t i = 0; i < res.size(); ++i)
      t.add_row({fmt(thresholds[i]), fmt(res[i].estimate), fmt(res[i].standard_error),
                 std::to_string(res[i].sample_count)});
  } else if (observable == "joint") {
    auto times = parse_list(times_csv);
    auto thresholds = parse_list(thr_csv);
    auto r = mc::estimate_joint(n, M, times, thresholds, parse_kind(kind_name), samples,
                                seed, opts);
    t.columns = {"estimate", "standard_error", "samples"};
    t.add_row({fmt(r.estimate), fmt(r.standard_error), std::to_string(r.sample_count)});
  } else if (observable == "areas") {
    auto [lo, hi] = mc::estimate_areas(n, M, samples, seed, opts);
    t.columns = {"path", "estimate", "standard_error", "samples"};
    t.add_row({"bottom", fmt(lo.estimate), fmt(lo.standard_error),
               std::to_string(lo.sample_count)});
    t.add_row({"top", fmt(hi.estimate), fmt(hi.standard_error),
               std::to_string(hi.sample_count)});
  } else if (observable == "density") {
    const double sigma = std::sqrt(2.0 * tau * (1.0 - tau));
    const double x_max = (std::sqrt(4.0 * n) + 2.0) * sigma;
    const int bins = 30;
    auto hist = mc::density_histogram(n, M, tau, x_max, bins, samples, seed, opts);
    t.columns = {"x_lo", "x_hi", "count"};
    for (int b = 0; b < bins; ++b)
      t.add_row({fmt(hist.edges[b]), fmt(hist.edges[b + 1]), fmt(hist.counts[b])});
    t.metadata["acceptance_rate"] = hist.acceptance_rate;
  } else {
    throw std::invalid_argument("unknown observable: " + observable);
  }
  emit(t, out);
  return 0;
}

int cmd_selfcheck(long mc_samples, int threads, const OutputConfig& out) {
  Table t;
  t.columns = {"check", "value", "bound", "status"};
  bool ok = true;
  auto gate = [&](const std::string& name, double value, double bound) {
    bool pass = value < bound;
    ok = ok && pass;
    t.add_row({name, fmt(value), fmt(bound), pass ? "pass" : "FAIL"});
  };

  // quadrature-order doubling on scalar and extended determinants
  {
    double worst = 0.0;
    for (int n : {1, 2, 4, 8}) {
      const double trunc = nbe::fredholm::default_truncation(n);
      auto kernel = [n](double x, double y) { return nbe::kernels::kernel_scalar(n, x, y); };
      for (double s : {0.5, 1.5, std::sqrt(4.0 * n) + 2.0}) {
        for (auto kind :
             {nbe::fredholm::WindowKind::bottom, nbe::fredholm::WindowKind::top}) {
          double d1 = nbe::fredholm::fredholm_det_scalar(kernel, {kind, s}, 64, trunc);
          double d2 = nbe::fredholm::fredholm_det_scalar(kernel, {kind, s}, 128, trunc);
          worst = std::max(worst, std::abs(d1 - d2));
        }
      }
    }
    nbe::kernels::BEKernel kernel(2, nbe::kernels::TimePartition({0.4, 0.6}));
    nbe::fredholm::WindowSet ws;
    ws.windows = {{nbe::fredholm::WindowKind::bottom, 0.3 * kernel.times().sigma(0)},
                  {nbe::fredholm::WindowKind::bottom, 0.3 * kernel.times().sigma(1)}};
    ws.quad_order = 64;
    double e1 = nbe::fredholm::fredholm_det_extended(kernel, ws);
    ws.quad_order = 128;
    double e2 = nbe::fredholm::fredholm_det_extended(kernel, ws);
    worst = std::max(worst, std::abs(e1 - e2));
    gate("quad_order_doubling", worst, 1e-9);
  }

  // ODE starting-point robustness
  {
    double worst = 0.0;
    nbe::painleve::SolveOptions small;
    small.s0 = 2.5e-4;
    for (int n : {1, 2, 5}) {
      for (double s : {1.0, 2.0}) {
        worst = std::max(worst, std::abs(nbe::painleve::prob_bottom(n, s) -
                                         nbe::painleve::prob_bottom(n, s, small)));
      }
    }
    gate("ode_s0_quartering", worst, 1e-8);

    double worst_top = 0.0;
    for (int n : {1, 3}) {
      nbe::painleve::SolveOptions far;
      far.s_start = nbe::painleve::top_start_abscissa(n) + 10.0;
      worst_top = std::max(worst_top, std::abs(nbe::painleve::prob_top(n, 1.2) -
                                               nbe::painleve::prob_top(n, 1.2, far)));
    }
    gate("ode_top_start_shift", worst_top, 1e-8);
  }

  // three-route agreement
  {
    double worst = 0.0;
    for (int n : {1, 3, 5}) {
      for (double s : {0.5, 1.5, 2.5}) {
        const double tau = 0.5, x = s * std::sqrt(2.0 * tau * (1.0 - tau));
        using nbe::observables::Method;
        double f = nbe::observables::bottom_cdf(n, tau, x, Method::finite);
        double q = nbe::observables::bottom_cdf(n, tau, x, Method::fredholm);
        double p = nbe::observables::bottom_cdf(n, tau, x, Method::painleve);
        worst = std::max({worst, std::abs(f - q), std::abs(f - p), std::abs(q - p)});
        double ft = nbe::observables::top_cdf(n, tau, x, Method::finite);
        double qt = nbe::observables::top_cdf(n, tau, x, Method::fredholm);
        double pt = nbe::observables::top_cdf(n, tau, x, Method::painleve);
        worst = std::max({worst, std::abs(ft - qt), std::abs(ft - pt), std::abs(qt - pt)});
      }
    }
    gate("three_route_agreement", worst, 1e-5);
  }

  // Monte Carlo grid doubling within the statistical band
  if (mc_samples > 1) {
    namespace mc = nbe::montecarlo;
    mc::McOptions opts;
    opts.threads = threads;
    const double sigma = std::sqrt(0.5);
    std::vector<double> thr{0.3 * sigma};
    auto a = mc::estimate_bottom_cdf(2, 256, 0.5, thr, mc_samples, 11, opts);
    auto b = mc::estimate_bottom_cdf(2, 512, 0.5, thr, mc_samples, 11, opts);
    double band = 3.0 * std::sqrt(a[0].standard_error * a[0].standard_error +
                                  b[0].standard_error * b[0].standard_error);
    gate("mc_grid_doubling", std::abs(a[0].estimate - b[0].estimate), band);
  }

  t.metadata = base_metadata("selfcheck");
  t.metadata["config"] = {{"mc_samples", mc_samples}, {"threads", threads}};
  t.metadata["status"] = ok ? "pass" : "fail";
  emit(t, out);
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nonintersecting Brownian excursions: determinants, Painleve V, "
               "Bessel scaling limits, Monte Carlo"};
  app.require_subcommand(1);

  OutputConfig out;
  app.add_option("--format", out.format, "output format: csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--output", out.path, "write output to this file");

  int n = 1, quad_order = 64, grid_steps = 200, threads = 0, M = 512;
  double tau = 0.5, x_max = 0.0, tol = 1e-10, box = 5.0;
  long samples = 100000;
  std::uint64_t seed = 1;
  std::string side = "bottom", method = "fredholm", kind = "bottom";
  std::string times_csv, thr_csv, n_list_csv = "16,32,64,128", observable = "bottom-cdf";
  std::string range = "1..9";
  long selfcheck_samples = 4000;

  auto* density = app.add_subcommand("density", "path density at one time");
  density->add_option("--n", n)->required();
  density->add_option("--tau", tau)->required();
  density->add_option("--grid-steps", grid_steps);
  density->add_option("--x-max", x_max);
  density->add_option("--quad-order", quad_order);

  auto* cdf = app.add_subcommand("cdf", "bottom/top distribution on an s-grid");
  cdf->add_option("--side", side)->check(CLI::IsMember({"bottom", "top"}));
  cdf->add_option("--n", n)->required();
  cdf->add_option("--tau", tau)->required();
  cdf->add_option("--method", method)
      ->check(CLI::IsMember({"finite", "fredholm", "painleve", "series"}));
  cdf->add_option("--thresholds", thr_csv, "comma-separated s values");
  cdf->add_option("--grid-steps", grid_steps);
  cdf->add_option("--quad-order", quad_order);

  auto* joint = app.add_subcommand("joint", "multi-time joint probability");
  joint->add_option("--n", n)->required();
  joint->add_option("--times", times_csv)->required();
  joint->add_option("--thresholds", thr_csv)->required();
  joint->add_option("--kind", kind)->check(CLI::IsMember({"bottom", "top"}));
  joint->add_option("--quad-order", quad_order);

  auto* areas = app.add_subcommand("areas", "expected areas of extremal paths");
  areas->add_option("range", range, "n range, e.g. 1..9");
  areas->add_option("--quad-order", quad_order);

  auto* constants = app.add_subcommand("constants", "limit constants report");
  constants->add_option("--quad-order", quad_order);

  auto* limits = app.add_subcommand("limits", "finite-n vs Bessel convergence table");
  limits->add_option("--n-list", n_list_csv);
  limits->add_option("--times", times_csv)->required();
  limits->add_option("--thresholds", thr_csv)->required();
  limits->add_option("--tau", tau);
  limits->add_option("--box", box);
  limits->add_option("--quad-order", quad_order);

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo estimates");
  simulate->add_option("--observable", observable)
      ->check(CLI::IsMember({"bottom-cdf", "joint", "areas", "density"}));
  simulate->add_option("--n", n)->required();
  simulate->add_option("--grid-steps", M, "path grid size M");
  simulate->add_option("--tau", tau);
  simulate->add_option("--times", times_csv);
  simulate->add_option("--thresholds", thr_csv);
  simulate->add_option("--kind", kind)->check(CLI::IsMember({"bottom", "top"}));
  simulate->add_option("--samples", samples);
  simulate->add_option("--seed", seed);
  simulate->add_option("--threads", threads);

  auto* selfcheck = app.add_subcommand("selfcheck", "numerical gate battery");
  selfcheck->add_option("--samples", selfcheck_samples, "Monte Carlo samples (0 skips)");
  selfcheck->add_option("--threads", threads);

  // --format/--output live on the top level but may follow the subcommand
  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  (void)tol;

  try {
    app.parse(argc, argv);

    if (density->parsed())
      return cmd_density(n, tau, grid_steps, x_max, quad_order, out);
    if (cdf->parsed()) {
      std::vector<double> s_grid;
      if (!thr_csv.empty()) {
        s_grid = parse_list(thr_csv);
      } else {
        const double s_max = std::sqrt(4.0 * n) + 2.0;
        for (int i = 0; i <= grid_steps; ++i) s_grid.push_back(s_max * i / grid_steps);
      }
      return cmd_cdf(side, n, tau, method, s_grid, quad_order, out);
    }
    if (joint->parsed())
      return cmd_joint(n, times_csv, thr_csv, kind, quad_order, out);
    if (areas->parsed()) {
      auto dots = range.find("..");
      int lo, hi;
      if (dots == std::string::npos) {
        lo = hi = std::stoi(range);
      } else {
        lo = std::stoi(range.substr(0, dots));
        hi = std::stoi(range.substr(dots + 2));
      }
      if (lo < 1 || hi < lo) throw std::invalid_argument("bad n range: " + range);
      return cmd_areas(lo, hi, quad_order, out);
    }
    if (constants->parsed()) return cmd_constants(quad_order, out);
    if (limits->parsed())
      return cmd_limits(n_list_csv, times_csv, thr_csv, tau, box, quad_order, out);
    if (simulate->parsed())
      return cmd_simulate(observable, n, M, tau, times_csv, thr_csv, kind, samples,
                          seed, threads, out);
    if (selfcheck->parsed()) return cmd_selfcheck(selfcheck_samples, threads, out);
    return 2;
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
