#pragma once
// Monte Carlo over gap paths: counter-based deterministic RNG, alias-method
// gap sampling, the exponential saddle tilt for the downward event
// {tau_k <= n}, and empirical sampling of the scaled tail variable k r(tau_k).

#include <cstdint>
#include <vector>

#include "renewal0/interarrival.hpp"

namespace renewal0 {

// Stateless counter RNG: every variate is a pure function of
// (seed, stream, counter), so any sub-range of work can be replayed or
// parallelized without shared state.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream);
  std::uint64_t raw(std::uint64_t counter) const;
  double u01(std::uint64_t counter) const;  // in [0, 1), 53-bit

 private:
  std::uint64_t base_;
};

// Vose alias table over weights w_0..w_{M-1} (nonnegative, any positive
// total). sample maps two uniforms to a cell index with probability
// w_i / total; construction order is fixed, so tables are reproducible.
class AliasTable {
 public:
  explicit AliasTable(const ArrayXd& weights);
  Index size() const { return static_cast<Index>(alias_.size()); }
  Index sample(double u_cell, double u_coin) const;

 private:
  ArrayXd prob_;
  std::vector<Index> alias_;
};

// Saddle tilt of the gap law: tilted_pmf(j) = f_j e^{-lambda j} / (1 - nu)
// on 1..horizon, where 1 - nu = E[e^{-lambda tau}] over the whole law. The
// array then sums to 1 - horizon_deficit, and the deficit (tilted mass past
// the horizon) is tracked with an error half-width. log_norm = log(1 - nu)
// is the normalizer the importance weight identity uses:
//   exp(lambda_star tau + k log_norm) * tilted path prob = original path prob.
struct TiltSolution {
  double lambda_star = 0.0;
  double nu = 0.0;
  double nu_prime = 0.0;
  ArrayXd tilted_pmf;
  double log_norm = 0.0;
  double target_ratio = 0.0;
  double horizon_deficit = 0.0;
  double horizon_deficit_err = 0.0;
};

// Solves nu'(lambda) / (1 - nu(lambda)) = target_mean by bracketed bisection
// (the ratio is the tilted mean, strictly decreasing in lambda) to relative
// tolerance 1e-8. Throws TargetOutOfRange when the target is not strictly
// between support_min and the mean attainable as lambda -> 0+, and
// NonMonotoneBracket if the bracket ever violates monotonicity.
TiltSolution solve_tilt(const InterArrival& d, double target_mean);

// Second moment of one tilted gap, sum j^2 tilted_pmf(j).
double tilted_variance_check(const TiltSolution& t);

enum class McMethod { Plain, Tilted };

struct MCEstimate {
  double value = 0.0;
  double std_error = 0.0;
  Index n_samples = 0;
  std::uint64_t seed = 0;
  McMethod method = McMethod::Plain;
};

// count paths of k gaps drawn by alias sampling from the pmf, with mass past
// the horizon (and any defect) lumped into an overflow symbol that is
// recorded per path, never resampled. tau and max_gap cover the in-horizon
// gaps of each path.
struct PathBatch {
  ArrayXd tau;
  ArrayXd max_gap;
  ArrayXi overflow_gaps;
  Index k = 0;
  std::uint64_t seed = 0;
};
PathBatch sample_paths(const InterArrival& d, Index k, Index count,
                       std::uint64_t seed);

// Unbiased tilted importance-sampling estimate of P(tau_k <= n): gaps are
// drawn from the tilt at target (1 - eps) n / k, paths are weighted by
// exp(lambda tau + k log_norm) in log domain, and paths containing the
// beyond-horizon symbol score zero (they cannot satisfy tau <= n <= horizon,
// so unbiasedness is exact). Requires n <= horizon.
MCEstimate is_estimate_cdf(const InterArrival& d, Index n, Index k,
                           double eps, Index count, std::uint64_t seed);

// Plain Monte Carlo companion of the same event, for variance comparison.
MCEstimate plain_estimate_cdf(const InterArrival& d, Index n, Index k,
                              Index count, std::uint64_t seed);

// Empirical law of y = k r(tau_k), sampling tau through the analytic tail
// completion so that paths far past the horizon keep exact tail values. A
// path overflows only when it escapes the completion's own range; the
// fraction is reported and gated at 0.1% (ExcessOverflow beyond it).
// ks_distance is the exact sup distance of the sorted sample to 1 - e^{-y}.
struct DarlingEmpirical {
  ArrayXd y_sorted;
  double overflow_fraction = 0.0;
  double ks_distance = 0.0;
  Index k = 0;
  std::uint64_t seed = 0;
};
DarlingEmpirical darling_empirical(const InterArrival& d, Index k, Index count,
                                   std::uint64_t seed);

// Worker threads used by the samplers: the RENEWAL_ZERO_THREADS environment
// variable, clamped to [1, 64]; 1 when unset. Results are bit-identical for
// every thread count: chunks own disjoint counter ranges and partial sums
// are combined by a fixed pairwise tree.
int sampler_threads();

}  // namespace renewal0
