#pragma once

#include <cmath>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>

#include "renewal0/common.hpp"
#include "renewal0/slowly_varying.hpp"

namespace renewal0 {

enum class Family { Explicit, RegVar, Defective, Interleaved };

struct LaplacePair {
  double lambda = 0.0;
  double nu = 0.0;        // 1 - E[exp(-lambda tau)]
  double nu_prime = 0.0;  // E[tau exp(-lambda tau)]
  // Half-widths of the beyond-horizon correction intervals.
  double nu_error = 0.0;
  double nu_prime_error = 0.0;
};

// Continuous completion of a gap law past its stored horizon. All positions
// are handled in log coordinates (u = log x) so that gaps far beyond double
// range stay representable. Implementations are immutable and shareable.
class TailModel {
 public:
  virtual ~TailModel() = default;

  double x0() const { return x0_; }      // continuity point (the horizon)
  double tail_at_x0() const { return r0_; }

  // r~(e^u) for u >= log x0; r~(x0) = tail at the horizon exactly.
  virtual double tail_log(double u) const = 0;
  double tail(double x) const { return tail_log(std::log(x)); }

  // Inverse of tail_log: the u with r~(e^u) = v, for v in (0, r~(x0)].
  // Shares the representation with tail_log, so the pair is self-consistent.
  virtual double quantile_log(double v) const = 0;

  struct Correction {
    double value = 0.0;
    double error = 0.0;  // conservative half-width
  };
  // sum_{n > x0} f_n exp(-lambda n) and the same with an extra factor n.
  virtual Correction laplace_tail(double lambda) const = 0;
  virtual Correction laplace_tail_t(double lambda) const = 0;
  // sum_{n > x0} n f_n; +inf when the first moment diverges.
  virtual double first_moment_tail() const = 0;

 protected:
  TailModel(double x0, double r0) : x0_(x0), r0_(r0) {}
  double x0_;
  double r0_;
};

namespace detail {
struct InterArrivalData;
}

// Finite-horizon gap law: dense pmf f_1..f_N, exact suffix tails, defect mass
// at +infinity, truncated moments, Laplace quantities, and (for the regularly
// varying family) an analytic tail completion. Immutable after build.
class InterArrival {
 public:
  explicit InterArrival(detail::InterArrivalData&& data);

  Family family() const;
  Index horizon() const;
  Index support_min() const;
  double defect() const;            // p_inf
  double tail_at_horizon() const;   // residual past N, excluding the defect
  bool fully_resolved() const;      // tail_at_horizon == 0

  const ArrayXd& pmf_array() const;  // index 0..N, entry 0 is 0
  double pmf(Index n) const;         // f_n; throws HorizonExceeded past N
                                     // unless the law is fully resolved
  double tail(Index n) const;        // r(n) = P(tau > n), exact on [0, N]
  double tail_real(double x) const;  // step-exact in horizon, model beyond
  double tail_log(double u) const;   // model tail at x = e^u
  const std::shared_ptr<const TailModel>& tail_model() const;

  std::optional<double> alpha() const;
  bool has_phi() const;
  const SlowlyVarying& phi_tag() const;   // the un-normalized combinator tree
  SlowlyVarying phi_func() const;         // normalization folded in
  double phi_at(Index n) const;           // f_n * n^(1+alpha)
  double norm_const() const;              // C in f_n = C phi(n) n^-(1+alpha)

  double truncated_moment(Index m, int j) const;  // E[tau^j; tau <= m]
  double mean_truncated_at(Index n) const;        // E[min(tau, n)]
  double mean() const;                            // +inf when divergent

  LaplacePair laplace(double lambda) const;

  const nlohmann::json& spec_json() const;

 private:
  std::shared_ptr<const detail::InterArrivalData> d_;
};

// f_n = C phi(n) n^-(1+alpha) on [support_min, horizon], C normalizing the
// full series; tail past the horizon kept exactly and completed analytically.
InterArrival build_regvar(double alpha, const SlowlyVarying& phi,
                          Index support_min, Index horizon);
InterArrival build_defective(const InterArrival& base, double p_inf);
// Gap 1 with probability 1/2, twice a sigma-gap otherwise.
InterArrival build_interleaved(const InterArrival& sigma);
// pmf_from_1[i] = f_{i+1}; remaining mass beyond the array is an unresolved
// tail unless it is zero; p_inf adds a defect atom.
InterArrival build_explicit(const ArrayXd& pmf_from_1, double p_inf = 0.0);

// Named configurations used across tests and experiment configs.
InterArrival d0_family(Index horizon);         // alpha 0, phi = log^-2
InterArrival ssrw_z2_family(Index horizon);    // alpha 0, phi = pi * log^-2
InterArrival alpha_half_family(Index horizon); // alpha 1/2, phi = 1
InterArrival uniform12();
InterArrival delta1();

InterArrival distribution_from_json(const nlohmann::json& spec);

}  // namespace renewal0
