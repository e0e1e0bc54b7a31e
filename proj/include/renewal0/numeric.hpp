#pragma once

#include <functional>

#include "renewal0/common.hpp"

namespace renewal0 {

// Adaptive Simpson on [a, b]. Error control is the usual 1/15 Richardson
// estimate; `abs_tol` is split across subintervals. Depth-limited, so the
// returned `error` field is an estimate, not a certificate.
struct QuadResult {
  double value = 0.0;
  double error = 0.0;
};

QuadResult integrate_adaptive(const std::function<double(double)>& f, double a,
                              double b, double abs_tol, int max_depth = 48);

// Upper incomplete gamma Gamma(a, x) for x > 0, any real a. Continued
// fraction (modified Lentz); accurate for x >= a + 1, which is the only
// region the tail integrals use. Throws Error outside that region.
double upper_gamma(double a, double x);

// Quantile of chi^2 with df degrees of freedom, Wilson-Hilferty approximation.
// Good to ~1e-3 relative for df >= 10; used only to set test thresholds.
double chi2_quantile(double p, double df);

// Standard normal quantile (Acklam rational approximation, ~1e-9).
double normal_quantile(double p);

// Find x in [lo, hi] with g(x) = target for continuous monotone-decreasing g.
// Pre: g(lo) >= target >= g(hi). Bisection until the residual is within
// rel_tol * |target| or the bracket collapses to machine width.
double bisect_decreasing(const std::function<double(double)>& g, double lo,
                         double hi, double target, double rel_tol);

}  // namespace renewal0
