#pragma once
// Closed-form predictors for the renewal mass across tail regimes, the
// k-step local law in the index-0 regime, the Darling limit law, the
// large-deviation rate through the conjugate slowly varying function, and
// explicit companion bounds.

#include "renewal0/interarrival.hpp"
#include "renewal0/renewal_table.hpp"
#include "renewal0/slowly_varying.hpp"

namespace renewal0 {

enum class RegimeTag { Transient, FiniteMean, AlphaOne, AlphaIn01, AlphaZero };

struct Regime {
  RegimeTag tag;
  double alpha;  // NaN when no tail index is attached
  double p_inf;
};

// Classifies by metadata: a defect wins, then the tail index, and a fully
// resolved law without either falls back to FiniteMean. Throws RegimeUnknown
// when neither applies.
Regime resolve_regime(const InterArrival& d);

// Predicted u_n for the regime of d:
//   Transient  f_n / p_inf^2          FiniteMean  1 / E[tau_1]
//   AlphaOne   1 / E[tau_1 ^ n]       AlphaIn01   (a sin(pi a)/pi) n^(a-1)/phi(n)
//   AlphaZero  f_n / r(n)^2
double predict_renewal_mass(const InterArrival& d, Index n);

// k f_n (1 - r_n)^k, the index-0 local law for the k-step epoch. The log
// form stays finite for k far past double range. Demands the AlphaZero
// regime and k >= 1.
double predict_local_log_pmf(const InterArrival& d, Index k, Index n);
double predict_local_pmf(const InterArrival& d, Index k, Index n);

// Limit law of n r(tau_n): 1 - e^{-y}.
double darling_cdf(double y);

// Lower constant a_M bracketing P(tau_k <= n) against (1 - r_n)^k when
// k phi(n) <= M: 1 - 2M up to M = 1/3, then (1/2)(1/(4M))^{2M}; tends to 1
// as M -> 0.
double extdarling_lower_const(double M);

// k r((n/k) phistar(n/k)) with phistar the conjugate of the law's slowly
// varying function. When the inner argument lands past the horizon the tail
// comes from the analytic completion and *extrapolated is set. Demands the
// AlphaZero regime; BelowMonotoneThreshold propagates from the conjugate.
double ld_rate(const InterArrival& d, Index n, Index k,
               bool* extrapolated = nullptr);

// min(1, (c5 e^2 k m phi(m) / n)^{n/2m}) with c5 read off the distribution
// as sup_{j<=m} E[tau; tau<=j]/(j phi(j)). Dominates the tail of a sum of k
// gaps conditioned to be at most m.
double fuk_nagaev_bound(const InterArrival& d, Index k, Index m, Index n);

// Window average of the pmf against the pointwise renewal-mass predictor:
//   lhs = (1/floor(eps n)) sum_{(1-eps) n < j <= n} f_j,  rhs = r(n)^2 u_n.
// Regime-agnostic arithmetic; lhs/rhs -> 1 in the index-0 regime even where
// the pointwise ratio oscillates.
struct ReverseAvgPair {
  double lhs;
  double rhs;
};
ReverseAvgPair reverse_avg_pair(const InterArrival& d, const RenewalTable& u,
                                Index n, double eps);

// Slow-variation diagnostics on U: doubling ratios U(n)/U(n/2) along a
// dyadic sweep, and the U_n r(n) -> 1 comparison.
struct SlowVariationReport {
  bool slowly_varying;        // top-of-table doubling deviation below 0.2
  double first_doubling_dev;  // |U(n)/U(n/2) - 1| at the smallest swept n
  double last_doubling_dev;   // same at n = N
  double ur_dev;              // |U_N r(N) - 1|
  bool ur_trend_improving;    // |U_n r(n) - 1| smaller at N than at N/16
};
SlowVariationReport slow_variation_check_U(const InterArrival& d,
                                           const RenewalTable& u);

}  // namespace renewal0
