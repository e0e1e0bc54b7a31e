#include "renewal0/rare_event.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <vector>

#include "renewal0/convolution.hpp"
#include "renewal0/kstep.hpp"
#include "renewal0/numeric.hpp"
#include "renewal0/slowly_varying.hpp"

using namespace renewal0;

namespace {

// Sum over all gap tuples in [1, N]^k of tilted probability times importance
// weight times the event indicator; the ground truth the sampler must hit.
double enumerate_weighted(const TiltSolution& t, Index N, Index k, Index n) {
  KahanSum acc;
  std::vector<Index> gaps(k, 1);
  for (;;) {
    Index tau = 0;
    double p = 1.0;
    for (Index i = 0; i < k; ++i) {
      tau += gaps[i];
      p *= t.tilted_pmf[gaps[i]];
    }
    if (tau <= n) {
      double w = std::exp(t.lambda_star * static_cast<double>(tau) +
                          static_cast<double>(k) * t.log_norm);
      acc.add(p * w);
    }
    Index i = 0;
    while (i < k && ++gaps[i] > N) gaps[i++] = 1;
    if (i == k) break;
  }
  return acc.value();
}

// Same expectation through k-fold convolution of the tilted law; exhaustive
// in the sense that every path contributes, without tuple enumeration.
double convolved_weighted(const TiltSolution& t, Index N, Index k, Index n) {
  ArrayXd row = ArrayXd::Zero(n + 1);
  if (n >= 0) row[0] = 1.0;
  ArrayXd kernel = ArrayXd::Zero(n + 1);
  for (Index j = 1; j <= std::min(N, n); ++j) kernel[j] = t.tilted_pmf[j];
  for (Index step = 0; step < k; ++step) {
    row = convolve(row, kernel, n + 1, ConvBackend::Direct);
  }
  KahanSum acc;
  for (Index tau = 0; tau <= n; ++tau) {
    acc.add(row[tau] * std::exp(t.lambda_star * static_cast<double>(tau)));
  }
  return acc.value() * std::exp(static_cast<double>(k) * t.log_norm);
}

}  // namespace

TEST_CASE("counter rng is a pure function of seed, stream, counter") {
  CounterRng a(42, 1);
  CounterRng b(42, 1);
  CounterRng c(43, 1);
  CounterRng d(42, 2);
  CHECK(a.raw(7) == b.raw(7));
  CHECK(a.raw(7) != c.raw(7));
  CHECK(a.raw(7) != d.raw(7));
  CHECK(a.raw(7) != a.raw(8));
  KahanSum mean;
  for (std::uint64_t i = 0; i < 10000; ++i) {
    double u = a.u01(i);
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    mean.add(u);
  }
  CHECK(mean.value() / 10000.0 == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("alias table matches its weights and skips empty cells") {
  ArrayXd w(4);
  w << 0.4, 0.3, 0.2, 0.1;
  AliasTable alias(w);
  REQUIRE(alias.size() == 4);
  CounterRng rng(5, 9);
  Index count = 200000;
  std::vector<Index> freq(4, 0);
  for (Index i = 0; i < count; ++i) {
    std::uint64_t c = static_cast<std::uint64_t>(i) << 2;
    ++freq[alias.sample(rng.u01(c | 0), rng.u01(c | 1))];
  }
  for (Index j = 0; j < 4; ++j) {
    double p = w[j];
    double se = std::sqrt(p * (1.0 - p) / static_cast<double>(count));
    CHECK(std::abs(static_cast<double>(freq[j]) / count - p) < 4.0 * se);
  }

  ArrayXd wz(3);
  wz << 0.5, 0.0, 0.5;
  AliasTable az(wz);
  for (Index i = 0; i < 20000; ++i) {
    std::uint64_t c = static_cast<std::uint64_t>(i) << 2;
    CHECK(az.sample(rng.u01(c | 0), rng.u01(c | 1)) != 1);
  }

  ArrayXd one(1);
  one << 2.5;
  AliasTable a1(one);
  CHECK(a1.sample(0.99, 0.99) == 0);

  ArrayXd empty;
  CHECK_THROWS_AS(AliasTable{empty}, Error);
  ArrayXd neg(2);
  neg << 0.5, -0.1;
  CHECK_THROWS_AS(AliasTable{neg}, Error);
  ArrayXd zeros = ArrayXd::Zero(3);
  CHECK_THROWS_AS(AliasTable{zeros}, Error);
}

TEST_CASE("tilt solver hits the closed form on uniform12") {
  InterArrival d = uniform12();
  // (1 + 2q)/(1 + q) = 5/4 at q = e^-lambda = 1/3.
  TiltSolution t = solve_tilt(d, 1.25);
  CHECK(t.lambda_star == doctest::Approx(std::log(3.0)).epsilon(1e-6));
  CHECK(t.nu == doctest::Approx(7.0 / 9.0).epsilon(1e-7));
  CHECK(t.log_norm == doctest::Approx(std::log(2.0 / 9.0)).epsilon(1e-7));
  CHECK(t.tilted_pmf[1] == doctest::Approx(0.75).epsilon(1e-7));
  CHECK(t.tilted_pmf[2] == doctest::Approx(0.25).epsilon(1e-7));
  CHECK(t.horizon_deficit == 0.0);
  CHECK(kahan_total(t.tilted_pmf) == doctest::Approx(1.0).epsilon(1e-10));
  double mean = t.tilted_pmf[1] + 2.0 * t.tilted_pmf[2];
  CHECK(std::abs(mean - 1.25) <= 1e-6 * 1.25);

  TiltSolution t2 = solve_tilt(d, 4.0 / 3.0);
  CHECK(t2.lambda_star == doctest::Approx(std::log(2.0)).epsilon(1e-6));
}

TEST_CASE("tilt solver rejects unattainable targets") {
  InterArrival d = uniform12();
  CHECK_THROWS_AS(solve_tilt(d, 1.5), TargetOutOfRange);
  CHECK_THROWS_AS(solve_tilt(d, 1.0), TargetOutOfRange);
  CHECK_THROWS_AS(solve_tilt(d, 0.5), TargetOutOfRange);
  CHECK_THROWS_AS(solve_tilt(d, 2.0), TargetOutOfRange);
  CHECK_THROWS_AS(solve_tilt(delta1(), 1.2), TargetOutOfRange);
  CHECK_THROWS_AS(solve_tilt(d0_family(10000), 0.9), TargetOutOfRange);
}

TEST_CASE("tilt scale tracks the conjugate on the log-squared family") {
  InterArrival d = d0_family(100000);
  TiltSolution t = solve_tilt(d, 100.0);
  SlowlyVaryingConjugate conj(d.phi_func());
  double ystar = conj.invert_xphix(100.0);
  double scale = 1.0 / t.lambda_star;
  CHECK(scale / ystar > 0.5);
  CHECK(scale / ystar < 2.0);

  CHECK(t.horizon_deficit >= 0.0);
  CHECK(t.horizon_deficit < 1e-3);
  double mass = kahan_total(t.tilted_pmf);
  CHECK(std::abs(mass + t.horizon_deficit - 1.0) <=
        t.horizon_deficit_err + 1e-10);

  KahanSum m;
  for (Index j = 1; j < t.tilted_pmf.size(); ++j) {
    m.add(static_cast<double>(j) * t.tilted_pmf[j]);
  }
  double tail_t = d.tail_model()->laplace_tail_t(t.lambda_star).value;
  double mean = m.value() + tail_t / (1.0 - t.nu);
  CHECK(std::abs(mean - 100.0) <= 1e-6 * 100.0);
}

TEST_CASE("tilted second moment") {
  TiltSolution point;
  point.tilted_pmf = ArrayXd::Zero(2);
  point.tilted_pmf[1] = 1.0;
  CHECK(tilted_variance_check(point) == 1.0);

  // q = 1/2: tilted pmf (2/3, 1/3), second moment 2 exactly.
  TiltSolution t = solve_tilt(uniform12(), 4.0 / 3.0);
  CHECK(tilted_variance_check(t) == doctest::Approx(2.0).epsilon(1e-7));

  // Horizon chosen so the tilt at mean 1000 decays inside the array.
  InterArrival d = d0_family(1200000);
  TiltSolution th = solve_tilt(d, 1000.0);
  double ratio = tilted_variance_check(th) * th.lambda_star / 1000.0;
  CHECK(ratio > 0.5);
  CHECK(ratio < 2.0);
  KahanSum m;
  for (Index j = 1; j < th.tilted_pmf.size(); ++j) {
    m.add(static_cast<double>(j) * th.tilted_pmf[j]);
  }
  double tail_t = d.tail_model()->laplace_tail_t(th.lambda_star).value;
  double mean = m.value() + tail_t / (1.0 - th.nu);
  CHECK(std::abs(mean - 1000.0) <= 1e-6 * 1000.0);
}

TEST_CASE("plain path sampler") {
  PathBatch fixed = sample_paths(delta1(), 7, 100, 3);
  for (Index p = 0; p < 100; ++p) {
    CHECK(fixed.tau[p] == 7.0);
    CHECK(fixed.max_gap[p] == 1.0);
    CHECK(fixed.overflow_gaps[p] == 0);
  }

  InterArrival u = uniform12();
  Index count = 20000;
  PathBatch b = sample_paths(u, 5, count, 77);
  CHECK((b.overflow_gaps == 0).all());
  CHECK(b.tau.minCoeff() >= 5.0);
  CHECK(b.tau.maxCoeff() <= 10.0);
  CHECK(b.max_gap.maxCoeff() <= 2.0);
  double mean = b.tau.mean();
  double sd = std::sqrt((b.tau - mean).square().sum() /
                        static_cast<double>(count - 1));
  CHECK(std::abs(mean - 7.5) <= 3.0 * sd / std::sqrt(count));

  PathBatch b2 = sample_paths(u, 5, count, 77);
  CHECK((b.tau == b2.tau).all());
  CHECK((b.max_gap == b2.max_gap).all());

  InterArrival defect = build_defective(uniform12(), 0.3);
  PathBatch bd = sample_paths(defect, 3, 30000, 8);
  double ovf = bd.overflow_gaps.cast<double>().mean();
  CHECK(ovf > 0.87);
  CHECK(ovf < 0.93);

  CHECK_THROWS_AS(sample_paths(u, 0, 10, 1), Error);
  CHECK_THROWS_AS(sample_paths(u, 5, 0, 1), Error);
}

TEST_CASE("sampled k-step law matches the dp row") {
  InterArrival d = d0_family(1000);
  Index k = 10;
  Index cap = 200;
  KStepTable table = k_step_table(d, k, cap);
  Index count = 1000000;
  PathBatch b = sample_paths(d, k, count, 2024);

  std::vector<Index> obs(cap + 2, 0);
  for (Index p = 0; p < count; ++p) {
    Index tau = static_cast<Index>(b.tau[p]);
    if (b.overflow_gaps[p] == 0 && tau <= cap) {
      ++obs[tau];
    } else {
      ++obs[cap + 1];
    }
  }
  std::vector<double> probs(cap + 2, 0.0);
  for (Index n = k; n <= cap; ++n) probs[n] = table.pmf(k, n);
  probs[cap + 1] = 1.0 - k_step_cdf(table, k, cap);

  // Merge consecutive cells until each bin expects at least ten counts.
  double chi2 = 0.0;
  double px = 0.0;
  double ox = 0.0;
  Index bins = 0;
  for (Index cell = 0; cell < cap + 2; ++cell) {
    px += probs[cell] * static_cast<double>(count);
    ox += static_cast<double>(obs[cell]);
    bool last = cell == cap + 1;
    if (px >= 10.0 || (last && bins > 0)) {
      chi2 += (ox - px) * (ox - px) / std::max(px, 1e-9);
      px = 0.0;
      ox = 0.0;
      ++bins;
    }
  }
  REQUIRE(bins >= 20);
  CHECK(chi2 < chi2_quantile(0.999, static_cast<double>(bins - 1)));
}

TEST_CASE("tilted estimator sums exactly to the dp probability") {
  ArrayXd pmf(4);
  pmf << 0.4, 0.3, 0.2, 0.1;
  InterArrival d = build_explicit(pmf);
  TiltSolution t = solve_tilt(d, 1.6);

  struct Case {
    Index k, n;
  };
  for (Case c : {Case{1, 2}, Case{2, 5}, Case{3, 7}}) {
    KStepTable table = k_step_table(d, c.k, c.n, std::nullopt,
                                    TruncMode::Restricted, ConvBackend::Direct);
    double dp = k_step_cdf(table, c.k, c.n);
    double bridged = enumerate_weighted(t, 4, c.k, c.n);
    CHECK(std::abs(bridged - dp) <= 1e-10 * std::max(dp, 1e-3));
    // All paths, no indicator: total original mass, exactly one.
    double total = enumerate_weighted(t, 4, c.k, 4 * c.k);
    CHECK(std::abs(total - 1.0) <= 1e-10);
  }
  for (Case c : {Case{5, 12}, Case{8, 20}}) {
    KStepTable table = k_step_table(d, c.k, c.n, std::nullopt,
                                    TruncMode::Restricted, ConvBackend::Direct);
    double dp = k_step_cdf(table, c.k, c.n);
    double bridged = convolved_weighted(t, 4, c.k, c.n);
    CHECK(std::abs(bridged - dp) <= 1e-10 * std::max(dp, 1e-3));
  }

  // Unresolved explicit law: the Laplace correction cannot be certified.
  ArrayXd partial(3);
  partial << 0.3, 0.2, 0.1;
  CHECK_THROWS_AS(solve_tilt(build_explicit(partial), 1.8), TailDominates);
}

TEST_CASE("weight identity holds path by path") {
  ArrayXd pmf(4);
  pmf << 0.4, 0.3, 0.2, 0.1;
  InterArrival d = build_explicit(pmf);
  TiltSolution t = solve_tilt(d, 1.6);
  Index k = 12;
  CounterRng rng(99, 4);
  for (Index rep = 0; rep < 200; ++rep) {
    double log_orig = 0.0;
    double log_tilt = 0.0;
    Index tau = 0;
    for (Index i = 0; i < k; ++i) {
      std::uint64_t c = (static_cast<std::uint64_t>(rep) * k + i) << 2;
      Index g = 1 + static_cast<Index>(rng.u01(c) * 4.0);
      if (g > 4) g = 4;
      tau += g;
      log_orig += std::log(d.pmf(g));
      log_tilt += std::log(t.tilted_pmf[g]);
    }
    double log_w = t.lambda_star * static_cast<double>(tau) +
                   static_cast<double>(k) * t.log_norm;
    double defect = (log_w + log_tilt) - log_orig;
    CHECK(std::abs(defect) <= 1e-12 * (1.0 + std::abs(log_orig)));
  }
}

TEST_CASE("importance sampling agrees with the dp and cuts variance") {
  InterArrival d = d0_family(100000);

  Index n = 2000;
  Index k = 200;
  KStepTable table = k_step_table(d, k, n);
  double dp = k_step_cdf(table, k, n);
  REQUIRE(dp > 0.0);
  MCEstimate est = is_estimate_cdf(d, n, k, 0.1, 100000, 11);
  CHECK(est.method == McMethod::Tilted);
  CHECK(est.n_samples == 100000);
  CHECK(est.std_error > 0.0);
  CHECK(std::abs(est.value - dp) <= 3.0 * est.std_error);
  CHECK(est.value >= 0.0);
  CHECK(est.value <= 1.0);

  MCEstimate again = is_estimate_cdf(d, n, k, 0.1, 100000, 11);
  CHECK(again.value == est.value);
  CHECK(again.std_error == est.std_error);

  // Identical bits for any worker count: chunks own their counter ranges.
  setenv("RENEWAL_ZERO_THREADS", "4", 1);
  MCEstimate threaded = is_estimate_cdf(d, n, k, 0.1, 100000, 11);
  unsetenv("RENEWAL_ZERO_THREADS");
  CHECK(threaded.value == est.value);
  CHECK(threaded.std_error == est.std_error);

  Index kv = 100;
  KStepTable tv = k_step_table(d, kv, n);
  double dpv = k_step_cdf(tv, kv, n);
  MCEstimate plain = plain_estimate_cdf(d, n, kv, 100000, 21);
  MCEstimate tilted = is_estimate_cdf(d, n, kv, 0.1, 100000, 21);
  CHECK(plain.method == McMethod::Plain);
  CHECK(plain.std_error > 0.0);
  CHECK(std::abs(plain.value - dpv) <= 5.0 * plain.std_error);
  CHECK(std::abs(tilted.value - dpv) <= 3.0 * tilted.std_error);
  CHECK(tilted.std_error < plain.std_error);

  CHECK_THROWS_AS(is_estimate_cdf(d, n, k, 0.0, 10, 1), Error);
  CHECK_THROWS_AS(is_estimate_cdf(d, n, k, 1.0, 10, 1), Error);
  CHECK_THROWS_AS(is_estimate_cdf(d, 100001, k, 0.1, 10, 1), HorizonExceeded);
}

TEST_CASE("importance sampling in a non-rare regime stays unbiased") {
  InterArrival u = uniform12();
  Index k = 20;
  Index n = 30;
  KStepTable table = k_step_table(u, k, n);
  double dp = k_step_cdf(table, k, n);
  MCEstimate est = is_estimate_cdf(u, n, k, 0.02, 200000, 31);
  CHECK(std::abs(est.value - dp) <= 3.0 * est.std_error);
  MCEstimate plain = plain_estimate_cdf(u, n, k, 200000, 32);
  CHECK(std::abs(plain.value - dp) <= 3.0 * plain.std_error);
}

TEST_CASE("darling empirical law approaches the exponential limit") {
  InterArrival d = d0_family(2000);
  DarlingEmpirical e10 = darling_empirical(d, 10, 100000, 5);
  DarlingEmpirical e100 = darling_empirical(d, 100, 100000, 5);
  CHECK(e10.overflow_fraction <= 1e-3);
  CHECK(e100.overflow_fraction <= 1e-3);
  CHECK(e10.y_sorted[0] > 0.0);
  CHECK(e100.y_sorted[0] > 0.0);
  CHECK(e100.ks_distance < e10.ks_distance);
  CHECK(e100.ks_distance < 0.2);

  DarlingEmpirical rep = darling_empirical(d, 10, 100000, 5);
  CHECK(rep.ks_distance == e10.ks_distance);
  CHECK((rep.y_sorted == e10.y_sorted).all());
}

TEST_CASE("darling sampler reproduces the image law at k = 1") {
  InterArrival d = d0_family(500);
  Index count = 200000;
  DarlingEmpirical e = darling_empirical(d, 1, count, 14);
  REQUIRE(e.y_sorted.size() == count);
  for (Index m : {2, 5, 20, 100}) {
    // y = r(tau_1) <= r(m) exactly when tau_1 >= m, probability r(m - 1).
    double cut = d.tail(m) * (1.0 + 1e-12);
    Index cnt = 0;
    for (Index i = 0; i < count; ++i) cnt += e.y_sorted[i] <= cut;
    double emp = static_cast<double>(cnt) / static_cast<double>(count);
    double p = d.tail(m - 1);
    double se = std::sqrt(p * (1.0 - p) / static_cast<double>(count));
    CHECK(std::abs(emp - p) <= 4.0 * se);
  }
}

TEST_CASE("darling sampler guards its domain") {
  CHECK_THROWS_AS(darling_empirical(build_defective(uniform12(), 0.2), 5, 10, 1),
                  Error);
  CHECK_THROWS_AS(darling_empirical(uniform12(), 0, 10, 1), Error);
  ArrayXd partial(3);
  partial << 0.3, 0.2, 0.1;
  CHECK_THROWS_AS(darling_empirical(build_explicit(partial), 5, 10, 1), Error);
}

TEST_CASE("sampler thread count comes from the environment") {
  unsetenv("RENEWAL_ZERO_THREADS");
  CHECK(sampler_threads() == 1);
  setenv("RENEWAL_ZERO_THREADS", "4", 1);
  CHECK(sampler_threads() == 4);
  setenv("RENEWAL_ZERO_THREADS", "abc", 1);
  CHECK(sampler_threads() == 1);
  setenv("RENEWAL_ZERO_THREADS", "999", 1);
  CHECK(sampler_threads() == 64);
  unsetenv("RENEWAL_ZERO_THREADS");
  CHECK(sampler_threads() == 1);
}
