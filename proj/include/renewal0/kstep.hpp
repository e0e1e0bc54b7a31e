#pragma once
// Laws of the k-step renewal epoch tau_k = G_1 + ... + G_k by iterated
// convolution, with optional max-gap truncation. Rows carry a per-row log
// scale so entries far below double range stay representable.

#include <optional>
#include <vector>

#include "renewal0/convolution.hpp"
#include "renewal0/interarrival.hpp"

namespace renewal0 {

// Semantics of the max-gap cutoff m.
//  Restricted:  rows hold the sub-probability P(tau_k = n, M_k <= m), where
//               M_k is the largest of the k gaps; row totals are (1-r(m))^k.
//  Conditioned: rows hold the law of a sum of k gaps each conditioned on
//               {gap <= m}; equals Restricted divided by (1-r(m))^k.
enum class TruncMode { Restricted, Conditioned };

// Rows k = 0..K over n = 0..N. The true entry is row(k)[n] * exp(log_scale);
// the scale leaves 0 only when a whole row falls below double range. Row 0 is
// the unit mass at n = 0. tail_deficit(k) tracks the mass beyond N through
// the same recursion as the rows, so row_mass + tail_deficit = row_total is a
// genuine cross-check, not an identity.
class KStepTable {
 public:
  Index k_max() const { return static_cast<Index>(rows_.size()) - 1; }
  Index n_max() const { return n_; }
  bool truncated() const { return m_.has_value(); }
  std::optional<Index> trunc_m() const { return m_; }
  TruncMode mode() const { return mode_; }

  // Entry in linear domain; underflows to 0 when the scaled value does.
  double pmf(Index k, Index n) const;
  // ln of the entry, -inf where it vanishes; immune to row rescaling.
  double log_pmf(Index k, Index n) const;
  // Prefix sum of row k through n, linear and log domain.
  double cdf(Index k, Index n) const;
  double log_cdf(Index k, Index n) const;

  double row_mass(Index k) const;
  double tail_deficit(Index k) const;
  // 1, or (1 - r(m))^k under restricted truncation.
  double row_total(Index k) const;

  const ArrayXd& row(Index k) const;
  double row_log_scale(Index k) const;

 private:
  friend KStepTable k_step_table(const InterArrival&, Index, Index,
                                 std::optional<Index>, TruncMode, ConvBackend);
  std::vector<ArrayXd> rows_;
  std::vector<double> scale_;
  std::vector<double> deficit_;
  Index n_ = 0;
  std::optional<Index> m_;
  TruncMode mode_ = TruncMode::Restricted;
  double log_step_total_ = 0.0;  // ln(1 - r(m)) in restricted mode, else 0
};

// Builds rows 0..K on {0..N}. Demands 0 <= K <= N; N past the horizon of a
// law that is not fully resolved throws HorizonExceeded; a cutoff below the
// minimal support throws InvalidTruncation.
KStepTable k_step_table(const InterArrival& d, Index K, Index N,
                        std::optional<Index> trunc_m = std::nullopt,
                        TruncMode mode = TruncMode::Restricted,
                        ConvBackend backend = ConvBackend::Auto);

// P(tau_k <= n) read off a built table.
double k_step_cdf(const KStepTable& table, Index k, Index n);

// P(M_k > (1-eps) n | tau_k = n) from two table builds (with and without the
// cutoff at floor((1-eps) n)). Throws ZeroDenominator when P(tau_k = n) = 0.
double big_jump_conditional(const InterArrival& d, Index k, Index n,
                            double eps,
                            ConvBackend backend = ConvBackend::Auto);

// ln P(tau_k = n) for every k = 0..n at one fixed n, by a direct triangular
// recursion in extended precision. Exact to roundoff over the full dynamic
// range (entries as small as f(1)^n), unlike scaled double rows. Cost grows
// as n^3/6; intended for n up to a few thousand.
ArrayXd k_step_log_column(const InterArrival& d, Index n);

// ln P(tau_k <= n) for deep k, where table entries sit far below the
// convolution noise floor. Reweights an exponentially tilted law whose mean
// step is near n/k: the tilted rows put their mass where tau_k <= n lives,
// and the reweighting identity is exact for any tilt, so the only error is
// roundoff. Agrees with k_step_cdf wherever both are accurate.
double k_step_log_cdf_deep(const InterArrival& d, Index k, Index n,
                           ConvBackend backend = ConvBackend::Auto);

}  // namespace renewal0
