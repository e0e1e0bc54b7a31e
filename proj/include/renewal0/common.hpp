#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace renewal0 {

using Index = Eigen::Index;

template <typename Scalar>
using ArrayX = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

using ArrayXd = ArrayX<double>;
using ArrayXi = ArrayX<std::int64_t>;

inline constexpr const char* kVersion = "0.1.0";

// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Query past the stored horizon with no analytic tail completion to fall back on.
struct HorizonExceeded : Error { using Error::Error; };

// Truncated transform evaluated where the discarded tail is not provably negligible.
struct TailDominates : Error { using Error::Error; };

// Conjugate queried below the point where y*phi(y) is certified monotone.
struct BelowMonotoneThreshold : Error { using Error::Error; };

// Candidate pmf weights not summable / not a (sub-)probability after normalization.
struct NotNormalizable : Error { using Error::Error; };

// Tilt target outside the open interval of attainable tilted means.
struct TargetOutOfRange : Error { using Error::Error; };

// Bracketed root search found the objective non-monotone on the bracket.
struct NonMonotoneBracket : Error { using Error::Error; };

// Conditional probability requested against an event of probability zero.
struct ZeroDenominator : Error { using Error::Error; };

// Truncation point outside the support window it must cut.
struct InvalidTruncation : Error { using Error::Error; };

// Sampler exceeded the tolerated fraction of beyond-horizon draws.
struct ExcessOverflow : Error { using Error::Error; };

// Distribution carries no metadata matching any supported asymptotic regime.
struct RegimeUnknown : Error { using Error::Error; };

// Support with gcd > 1; renewal masses would vanish on whole residue classes.
struct PeriodicInput : Error { using Error::Error; };

struct BadConfig : Error { using Error::Error; };

// Compensated accumulator. Work in doubles but keep the running error term.
class KahanSum {
 public:
  void add(double x) {
    double y = x - c_;
    double t = s_ + y;
    c_ = (t - s_) - y;
    s_ = t;
  }
  double value() const { return s_; }

 private:
  double s_ = 0.0;
  double c_ = 0.0;
};

inline double kahan_total(const ArrayXd& a) {
  KahanSum s;
  for (Index i = 0; i < a.size(); ++i) s.add(a[i]);
  return s.value();
}

}  // namespace renewal0
