#pragma once

#include <map>
#include <memory>
#include <nlohmann/json.hpp>
#include <shared_mutex>
#include <vector>

#include "renewal0/common.hpp"

namespace renewal0 {

// Slowly varying function built from a small combinator set:
//   constant(c)        c > 0
//   log_pow(a)         (log(x + e))^a
//   loglog_pow(a)      (log log(x + e))^a
//   product(fs...)     pointwise product
//   f.pow(s)           pointwise power
// All combinators are positive on [1, inf), so products and powers stay in
// the family. Evaluation below domain_floor() clamps to the floor.
class SlowlyVarying {
 public:
  static SlowlyVarying constant(double c);
  static SlowlyVarying log_pow(double a);
  static SlowlyVarying loglog_pow(double a);
  static SlowlyVarying product(std::vector<SlowlyVarying> factors);
  SlowlyVarying pow(double s) const;

  double operator()(double x) const;
  // d/dx of the unclamped function; valid for x > domain_floor().
  double derivative(double x) const;
  // d/dx log phi(x); derivative(x) == (*this)(x) * log_derivative(x).
  double log_derivative(double x) const;

  double domain_floor() const { return floor_; }

  // phi(e^u) for large u collapses to lead() * u^log_exponent() *
  // (log u)^loglog_exponent() up to double rounding once u >= asym_u0().
  double log_exponent() const;
  double loglog_exponent() const;
  double lead() const;
  static constexpr double asym_u0() { return 50.0; }
  // Same value as (*this)(e^u) but computed from u, usable when e^u overflows.
  double eval_log(double u) const;

  nlohmann::json to_json() const;
  static SlowlyVarying from_json(const nlohmann::json& j);

 private:
  struct Node;
  explicit SlowlyVarying(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
  double floor_ = 1.0;
};

// Asymptotic inverse of y -> y * phi(y). Construction scans octaves of
// y * phi(y) until it sees eight consecutive increases, certifies a
// monotone threshold, and every query bisects on the monotone branch.
// Queries at or below threshold_x() throw BelowMonotoneThreshold.
class SlowlyVaryingConjugate {
 public:
  explicit SlowlyVaryingConjugate(SlowlyVarying phi, double bracket_growth = 2.0);

  // phi*(x) = y*/x where y* phi(y*) = x.
  double operator()(double x) const;
  // y* itself; equals x * (*this)(x).
  double invert_xphix(double x) const;

  double threshold_x() const { return x_threshold_; }
  const SlowlyVarying& base() const { return phi_; }

 private:
  double solve(double x) const;

  SlowlyVarying phi_;
  double bracket_growth_;
  double y_mono_ = 1.0;
  double x_threshold_ = 0.0;
  mutable std::map<double, double> cache_;
  mutable std::shared_mutex mutex_;
};

}  // namespace renewal0
