#include "renewal0/asymptotics.hpp"

#include <cmath>
#include <limits>

namespace renewal0 {

namespace {
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
constexpr double kPi = 3.14159265358979323846;
}  // namespace

Regime resolve_regime(const InterArrival& d) {
  if (d.defect() > 0.0) {
    return {RegimeTag::Transient, d.alpha().value_or(kNan), d.defect()};
  }
  if (auto a = d.alpha()) {
    if (*a == 0.0) return {RegimeTag::AlphaZero, 0.0, 0.0};
    if (*a < 1.0) return {RegimeTag::AlphaIn01, *a, 0.0};
    if (*a == 1.0) return {RegimeTag::AlphaOne, 1.0, 0.0};
    return {RegimeTag::FiniteMean, *a, 0.0};
  }
  if (d.fully_resolved()) return {RegimeTag::FiniteMean, kNan, 0.0};
  throw RegimeUnknown("no defect, no tail index, and tail mass unresolved");
}

double predict_renewal_mass(const InterArrival& d, Index n) {
  if (n < 1) throw Error("predict_renewal_mass: n must be positive");
  Regime reg = resolve_regime(d);
  switch (reg.tag) {
    case RegimeTag::Transient:
      return d.pmf(n) / (reg.p_inf * reg.p_inf);
    case RegimeTag::FiniteMean:
      return 1.0 / d.mean();
    case RegimeTag::AlphaOne:
      return 1.0 / d.mean_truncated_at(n);
    case RegimeTag::AlphaIn01: {
      double a = reg.alpha;
      double pref = a * std::sin(kPi * a) / kPi;
      return pref * std::pow(static_cast<double>(n), a - 1.0) / d.phi_at(n);
    }
    case RegimeTag::AlphaZero: {
      double r = d.tail(n);
      return d.pmf(n) / (r * r);
    }
  }
  throw Error("predict_renewal_mass: unreachable");
}

double predict_local_log_pmf(const InterArrival& d, Index k, Index n) {
  Regime reg = resolve_regime(d);
  if (reg.tag != RegimeTag::AlphaZero) {
    throw RegimeUnknown("local law predictor needs tail index 0");
  }
  if (k < 1) throw Error("predict_local_log_pmf: k must be positive");
  double r = d.tail(n);
  return std::log(static_cast<double>(k)) + std::log(d.pmf(n)) +
         static_cast<double>(k) * std::log1p(-r);
}

double predict_local_pmf(const InterArrival& d, Index k, Index n) {
  return std::exp(predict_local_log_pmf(d, k, n));
}

double darling_cdf(double y) {
  if (y < 0.0) throw Error("darling_cdf: y must be nonnegative");
  return -std::expm1(-y);
}

double extdarling_lower_const(double M) {
  if (!(M > 0.0)) throw Error("extdarling_lower_const: M must be positive");
  if (M <= 1.0 / 3.0) return 1.0 - 2.0 * M;
  return 0.5 * std::pow(1.0 / (4.0 * M), 2.0 * M);
}

double ld_rate(const InterArrival& d, Index n, Index k, bool* extrapolated) {
  Regime reg = resolve_regime(d);
  if (reg.tag != RegimeTag::AlphaZero) {
    throw RegimeUnknown("large-deviation rate needs tail index 0");
  }
  if (k < 1 || n < 1) throw Error("ld_rate: need k >= 1, n >= 1");
  double x = static_cast<double>(n) / static_cast<double>(k);
  SlowlyVaryingConjugate conj(d.phi_func());
  double y = conj.invert_xphix(x);  // (n/k) phistar(n/k)
  if (extrapolated) *extrapolated = y > static_cast<double>(d.horizon());
  return static_cast<double>(k) * d.tail_real(y);
}

double fuk_nagaev_bound(const InterArrival& d, Index k, Index m, Index n) {
  if (!d.has_phi()) {
    throw RegimeUnknown("bound needs the slowly varying factor");
  }
  if (m < 1 || m > n || k < 1) throw Error("fuk_nagaev_bound: need 1 <= m <= n, k >= 1");
  double c5 = 0.0;
  for (Index j = 1; j <= m; ++j) {
    double ratio =
        d.truncated_moment(j, 1) / (static_cast<double>(j) * d.phi_at(j));
    c5 = std::max(c5, ratio);
  }
  double base = c5 * std::exp(2.0) * static_cast<double>(k) *
                static_cast<double>(m) * d.phi_at(m) / static_cast<double>(n);
  double expo = static_cast<double>(n) / (2.0 * static_cast<double>(m));
  return std::min(1.0, std::pow(base, expo));
}

ReverseAvgPair reverse_avg_pair(const InterArrival& d, const RenewalTable& u,
                                Index n, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw Error("reverse_avg_pair: eps in (0,1)");
  Index w = static_cast<Index>(std::floor(eps * static_cast<double>(n)));
  if (w < 1) throw Error("reverse_avg_pair: need eps * n >= 1");
  if (n >= u.u.size()) throw Error("reverse_avg_pair: n beyond the table");
  Index lo = static_cast<Index>(
      std::floor((1.0 - eps) * static_cast<double>(n)));  // sum over k > lo
  double lhs = (d.tail(lo) - d.tail(n)) / static_cast<double>(w);
  double r = d.tail(n);
  return {lhs, r * r * u.u[n]};
}

SlowVariationReport slow_variation_check_U(const InterArrival& d,
                                           const RenewalTable& u) {
  Index N = u.u.size() - 1;
  if (N < 16) throw Error("slow_variation_check_U: table too short");
  SlowVariationReport rep{};
  double first = 0.0, last = 0.0;
  for (int j = 3; j >= 0; --j) {
    Index n = N >> j;
    double dev = std::abs(u.U[n] / u.U[n / 2] - 1.0);
    if (j == 3) first = dev;
    if (j == 0) last = dev;
  }
  rep.first_doubling_dev = first;
  rep.last_doubling_dev = last;
  rep.slowly_varying = last < 0.2;
  auto ur = [&](Index n) {
    return std::abs(u.U[n] * d.tail_real(static_cast<double>(n)) - 1.0);
  };
  rep.ur_dev = ur(N);
  rep.ur_trend_improving = ur(N) < ur(N / 16);
  return rep;
}

}  // namespace renewal0
