#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "nbe/fredholm.hpp"

namespace nbe::montecarlo {

// Counter-based generator: output i of stream k is a fixed mixing of
// (seed, k, i), so any sample can be produced on any worker with no shared
// state and results are independent of the thread layout.
struct CounterRng {
  std::uint64_t key = 0;
  std::uint64_t ctr = 0;

  static CounterRng for_sample(std::uint64_t seed, std::uint64_t sample_index);

  std::uint64_t next_u64();
  double uniform();  // (0, 1]
  // Box-Muller pairs; consumption is a fixed function of out.size()
  void fill_normals(std::span<double> out);
};

// n discretized excursions on the grid t_i = i/M, pinned to 0 at both ends
// and strictly ordered at every interior grid time.
struct ExcursionEnsemble {
  int n = 0;
  int M = 0;
  std::vector<double> positions;  // n rows of (M+1), row-major, row 0 lowest

  double at(int path, int idx) const { return positions[path * (M + 1) + idx]; }
  void validate() const;
};

// Exact-law discretized excursion: modulus of a three-component Gaussian
// bridge, so each grid marginal is exactly the single-excursion law and the
// construction refines dyadically. out has M+1 slots; scratch 3(M+1).
void sample_excursion(int M, CounterRng& rng, std::span<double> out,
                      std::span<double> scratch);

// Bridge rotated at its grid argmin (discrete Vervaat transform); same law
// as the bridge conditioned positive at grid times. scratch M+1.
void sample_excursion_vervaat(int M, CounterRng& rng, std::span<double> out,
                              std::span<double> scratch);

// Rejection sampler: n independent excursions, sorted by midpoint value,
// accepted when strictly ordered at all interior grid times. Returns the
// number of attempts used; throws when max_attempts is exhausted.
long sample_nonintersecting(int n, int M, CounterRng& rng, long max_attempts,
                            ExcursionEnsemble& out);

struct EstimatorResult {
  double estimate = 0.0;
  double standard_error = 0.0;
  long sample_count = 0;
  std::uint64_t seed = 0;
};

struct McOptions {
  int threads = 0;  // 0: hardware concurrency
  long max_attempts_per_sample = 1000000;
  int block_size = 4096;  // reduction granularity; results do not depend on threads
};

// One pass over `samples` accepted ensembles. `fn` fills n_acc accumulator
// values per sample; sums are reduced blockwise in index order, so results
// are bit-identical for any worker count.
struct PassResult {
  std::vector<double> sum, sum_sq;
  long samples = 0;
  long attempts = 0;
  double acceptance_rate() const { return samples ? double(samples) / attempts : 0.0; }
  EstimatorResult estimator(int i, std::uint64_t seed) const;
};

PassResult ensemble_pass(
    int n, int M, long samples, std::uint64_t seed, int n_acc,
    const std::function<void(const ExcursionEnsemble&, std::span<double>)>& fn,
    const McOptions& opts = {});

// index of tau on the grid; rejects times that are not grid points
int grid_index(double tau, int M);

std::vector<EstimatorResult> estimate_bottom_cdf(int n, int M, double tau,
                                                 std::span<const double> thresholds,
                                                 long samples, std::uint64_t seed,
                                                 const McOptions& opts = {});

EstimatorResult estimate_joint(int n, int M, std::span<const double> times,
                               std::span<const double> thresholds,
                               fredholm::WindowKind kind, long samples,
                               std::uint64_t seed, const McOptions& opts = {});

// mean trapezoid areas of the lowest and highest paths
std::pair<EstimatorResult, EstimatorResult> estimate_areas(int n, int M, long samples,
                                                           std::uint64_t seed,
                                                           const McOptions& opts = {});

// position histogram of all paths at time tau: `bins` equal bins on
// [0, x_max], overflow counted in the last slot
struct HistogramResult {
  std::vector<double> edges;
  std::vector<double> counts;
  long samples = 0;
  double acceptance_rate = 0.0;
};
HistogramResult density_histogram(int n, int M, double tau, double x_max, int bins,
                                  long samples, std::uint64_t seed,
                                  const McOptions& opts = {});

// chi-square helpers for the density goodness-of-fit gate
double chi_square_statistic(std::span<const double> observed,
                            std::span<const double> expected);
double chi_square_quantile(double p, int dof);  // Wilson-Hilferty approximation

}  // namespace nbe::montecarlo
