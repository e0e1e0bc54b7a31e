#include "renewal0/asymptotics.hpp"

#include <doctest.h>

#include <cmath>

#include "renewal0/interarrival.hpp"
#include "renewal0/kstep.hpp"
#include "renewal0/renewal_table.hpp"

using namespace renewal0;

namespace {
constexpr double kPi = 3.14159265358979323846;
// k choice that balances the local-law error terms for index-0 laws.
Index balanced_k(const InterArrival& d, Index n) {
  return static_cast<Index>(
      std::floor(1.0 / std::sqrt(d.phi_at(n) * d.tail(n))));
}
}  // namespace

TEST_CASE("regime resolution") {
  CHECK(resolve_regime(d0_family(200)).tag == RegimeTag::AlphaZero);
  CHECK(resolve_regime(alpha_half_family(200)).tag == RegimeTag::AlphaIn01);
  CHECK(resolve_regime(alpha_half_family(200)).alpha == 0.5);
  auto a1 = build_regvar(1.0, SlowlyVarying::constant(1.0), 1, 2000);
  CHECK(resolve_regime(a1).tag == RegimeTag::AlphaOne);
  auto a15 = build_regvar(1.5, SlowlyVarying::constant(1.0), 1, 2000);
  CHECK(resolve_regime(a15).tag == RegimeTag::FiniteMean);
  CHECK(resolve_regime(uniform12()).tag == RegimeTag::FiniteMean);
  auto def = build_defective(d0_family(200), 0.3);
  CHECK(resolve_regime(def).tag == RegimeTag::Transient);
  CHECK(resolve_regime(def).p_inf == doctest::Approx(0.3).epsilon(1e-15));
  ArrayXd part(2);
  part << 0.3, 0.3;
  CHECK_THROWS_AS(resolve_regime(build_explicit(part)), RegimeUnknown);
}

TEST_CASE("renewal mass prediction, finite mean") {
  auto d1 = delta1();
  auto t = renewal_mass(d1, 50);
  CHECK(predict_renewal_mass(d1, 50) == doctest::Approx(t.u[50]).epsilon(1e-13));
  auto u12 = uniform12();
  CHECK(predict_renewal_mass(u12, 30) == doctest::Approx(2.0 / 3.0).epsilon(1e-13));
  auto a15 = build_regvar(1.5, SlowlyVarying::constant(1.0), 1, 4000);
  auto t15 = renewal_mass(a15, 500);
  double pred = predict_renewal_mass(a15, 500);
  CHECK(pred == doctest::Approx(1.0 / a15.mean()).epsilon(1e-13));
  CHECK(std::abs(t15.u[500] / pred - 1.0) < 0.05);
}

TEST_CASE("renewal mass prediction, index one half") {
  auto d = alpha_half_family(2000);
  // Prefactor alpha sin(pi alpha) / pi = 1/(2 pi) at alpha = 1/2.
  double pred = predict_renewal_mass(d, 2000);
  double closed = (1.0 / (2.0 * kPi)) * std::pow(2000.0, -0.5) / d.phi_at(2000);
  CHECK(pred == doctest::Approx(closed).epsilon(1e-12));
  auto t = renewal_mass(d, 2000);
  double dev_hi = std::abs(t.u[2000] / pred - 1.0);
  double dev_lo = std::abs(t.u[100] / predict_renewal_mass(d, 100) - 1.0);
  CHECK(dev_hi < 0.1);
  CHECK(dev_hi < dev_lo);
}

TEST_CASE("renewal mass prediction, index one") {
  auto d = build_regvar(1.0, SlowlyVarying::constant(1.0), 1, 2000);
  CHECK(d.mean() == std::numeric_limits<double>::infinity());
  auto t = renewal_mass(d, 2000);
  double dev_hi = std::abs(t.u[2000] / predict_renewal_mass(d, 2000) - 1.0);
  double dev_lo = std::abs(t.u[200] / predict_renewal_mass(d, 200) - 1.0);
  CHECK(dev_hi < 0.4);
  CHECK(dev_hi < dev_lo);
}

TEST_CASE("renewal mass prediction, index zero and transient") {
  auto d = d0_family(2000);
  auto t = renewal_mass(d, 2000);
  double dev_hi = std::abs(t.u[2000] / predict_renewal_mass(d, 2000) - 1.0);
  double dev_lo = std::abs(t.u[100] / predict_renewal_mass(d, 100) - 1.0);
  CHECK(dev_hi < dev_lo);
  auto def = build_defective(d, 0.3);
  auto td = renewal_mass(def, 2000);
  double dev_t = std::abs(td.u[2000] / predict_renewal_mass(def, 2000) - 1.0);
  double dev_t0 = std::abs(td.u[200] / predict_renewal_mass(def, 200) - 1.0);
  CHECK(dev_t < 0.5);
  CHECK(dev_t < dev_t0);
}

TEST_CASE("local law predictor") {
  auto d = d0_family(10000);
  // k = 1 differs from the exact pmf by exactly the factor (1 - r_n).
  for (Index n : {100, 5000}) {
    double ratio = predict_local_pmf(d, 1, n) / d.pmf(n);
    CHECK(ratio == doctest::Approx(1.0 - d.tail(n)).epsilon(1e-12));
  }
  CHECK(predict_local_pmf(d, 7, 300) ==
        doctest::Approx(std::exp(predict_local_log_pmf(d, 7, 300))).epsilon(1e-13));
  // DP against the predictor at the balanced k, sharper at larger n.
  double dev[2];
  Index ns[2] = {1000, 10000};
  for (int i = 0; i < 2; ++i) {
    Index n = ns[i], k = balanced_k(d, n);
    auto tab = k_step_table(d, k, n);
    dev[i] = std::abs(tab.pmf(k, n) / predict_local_pmf(d, k, n) - 1.0);
  }
  CHECK(dev[1] < dev[0]);
  CHECK_THROWS_AS(predict_local_pmf(alpha_half_family(100), 2, 50), RegimeUnknown);
  CHECK_THROWS_AS(predict_local_pmf(d, 0, 50), Error);
}

TEST_CASE("darling limit cdf") {
  CHECK(darling_cdf(0.0) == 0.0);
  CHECK(darling_cdf(std::log(2.0)) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(darling_cdf(50.0) == doctest::Approx(1.0).epsilon(1e-15));
  double prev = -1.0;
  for (double y = 0.0; y <= 5.0; y += 0.25) {
    double v = darling_cdf(y);
    CHECK(v > prev);
    prev = v;
  }
  CHECK_THROWS_AS(darling_cdf(-0.1), Error);
}

TEST_CASE("lower bracket constant") {
  CHECK(extdarling_lower_const(0.1) == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(extdarling_lower_const(1.0) == doctest::Approx(1.0 / 32.0).epsilon(1e-14));
  CHECK(extdarling_lower_const(0.01) > 0.97);
  CHECK(extdarling_lower_const(1.0 / 3.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK_THROWS_AS(extdarling_lower_const(0.0), Error);
}

TEST_CASE("large deviation rate") {
  auto d = d0_family(10000);
  // Scale invariance: the per-step rate depends on n/k only.
  double a = ld_rate(d, 1000, 10) / 10.0;
  double b = ld_rate(d, 2000, 20) / 20.0;
  CHECK(a == doctest::Approx(b).epsilon(1e-13));
  bool ex = true;
  double rate = ld_rate(d, 1000, 100, &ex);
  CHECK_FALSE(ex);  // inner argument stays inside the horizon
  double lp = k_step_log_cdf_deep(d, 100, 1000);
  double ratio = -lp / rate;
  CHECK(ratio > 0.4);
  CHECK(ratio < 2.5);
  ld_rate(d, 10000, 1, &ex);
  CHECK(ex);  // n/k = 10^4 pushes the argument far past the horizon
  CHECK_THROWS_AS(ld_rate(alpha_half_family(100), 100, 10), RegimeUnknown);
}

TEST_CASE("rate function estimate near the conjugate form") {
  auto d = d0_family(10000);
  const double b = 1000.0;
  double est = -k_step_log_cdf_deep(d, 10, 10000) / 10.0;
  SlowlyVaryingConjugate conj(d.phi_func());
  double ref = d.tail_real(conj.invert_xphix(b));
  CHECK(est / ref > 0.5);
  CHECK(est / ref < 2.0);
}

TEST_CASE("explicit bound dominates the conditioned truncated tail") {
  for (auto d : {d0_family(2100), alpha_half_family(2100)}) {
    for (Index k : {2, 8, 32}) {
      for (Index m : {16, 64}) {
        auto t = k_step_table(d, k, k * m, m, TruncMode::Conditioned);
        for (Index n : {256, 1024}) {
          double bound = fuk_nagaev_bound(d, k, m, n);
          Index cut = std::min(n / 2 - 1, k * m);
          double exact = 1.0 - k_step_cdf(t, k, cut);
          CHECK(bound >= exact - 1e-12);
        }
      }
    }
  }
  auto d = d0_family(500);
  CHECK(fuk_nagaev_bound(d, 2, 50, 400) <= fuk_nagaev_bound(d, 8, 50, 400));
  CHECK(fuk_nagaev_bound(d, 8, 50, 400) <= fuk_nagaev_bound(d, 32, 50, 400));
  CHECK_THROWS_AS(fuk_nagaev_bound(uniform12(), 2, 1, 2), RegimeUnknown);
}

TEST_CASE("bound at m equal n collapses to the square root form") {
  auto d = d0_family(500);
  const Index n = 400, k = 3;
  double c5 = 0.0;
  for (Index j = 1; j <= n; ++j) {
    c5 = std::max(c5, d.truncated_moment(j, 1) /
                          (static_cast<double>(j) * d.phi_at(j)));
  }
  double want = std::min(
      1.0, std::sqrt(c5 * std::exp(2.0) * static_cast<double>(k) * d.phi_at(n)));
  CHECK(fuk_nagaev_bound(d, k, n, n) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("windowed average against the pointwise predictor") {
  auto d = d0_family(2000);
  auto t = renewal_mass(d, 2000);
  auto hi = reverse_avg_pair(d, t, 2000, 0.1);
  auto lo = reverse_avg_pair(d, t, 200, 0.1);
  CHECK(std::abs(hi.lhs / hi.rhs - 1.0) < std::abs(lo.lhs / lo.rhs - 1.0));
  // Regime-agnostic: bounded support just yields a zero pair.
  auto u12 = uniform12();
  auto tu = renewal_mass(u12, 20);
  auto z = reverse_avg_pair(u12, tu, 20, 0.25);
  CHECK(z.lhs == 0.0);
  CHECK(z.rhs == 0.0);
  CHECK_THROWS_AS(reverse_avg_pair(d, t, 5, 0.1), Error);
  CHECK_THROWS_AS(reverse_avg_pair(d, t, 3000, 0.5), Error);
}

TEST_CASE("interleaved law oscillates pointwise but averages out") {
  auto il = build_interleaved(d0_family(1000));
  auto t = renewal_mass(il, 2000);
  // Odd epochs carry no pmf mass at all; even ones sit near twice the
  // pointwise predictor.
  CHECK(il.pmf(1999) == 0.0);
  double r = il.tail(2000);
  double even_ratio = il.pmf(2000) / (r * r * t.u[2000]);
  CHECK(even_ratio > 1.2);
  CHECK(even_ratio < 3.0);
  auto hi = reverse_avg_pair(il, t, 2000, 0.1);
  auto lo = reverse_avg_pair(il, t, 200, 0.1);
  CHECK(std::abs(hi.lhs / hi.rhs - 1.0) < 0.5);
  CHECK(std::abs(hi.lhs / hi.rhs - 1.0) < std::abs(lo.lhs / lo.rhs - 1.0));
}

TEST_CASE("slow variation report on U") {
  auto d1 = delta1();
  auto t1 = renewal_mass(d1, 64);
  auto rep1 = slow_variation_check_U(d1, t1);
  CHECK_FALSE(rep1.slowly_varying);
  CHECK(rep1.last_doubling_dev > 0.8);

  auto geo = build_defective(delta1(), 0.5);
  auto tg = renewal_mass(geo, 64);
  auto repg = slow_variation_check_U(geo, tg);
  CHECK(repg.slowly_varying);
  CHECK(repg.last_doubling_dev < 1e-9);
  CHECK(repg.ur_dev < 1e-9);
  CHECK(repg.ur_trend_improving);

  auto d0 = d0_family(2000);
  auto t0 = renewal_mass(d0, 2000);
  auto rep0 = slow_variation_check_U(d0, t0);
  CHECK(rep0.slowly_varying);
  CHECK(rep0.ur_trend_improving);
}
