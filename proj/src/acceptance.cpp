#include "renewal0/acceptance.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <vector>

#include "renewal0/asymptotics.hpp"
#include "renewal0/kstep.hpp"
#include "renewal0/rare_event.hpp"
#include "renewal0/renewal_table.hpp"
#include "renewal0/slowly_varying.hpp"

namespace renewal0 {
namespace {

// Tolerances pinned at bring-up against the exact DP tables. The asymptotic
// statements fix only trends; these constants freeze the observed final
// deviations (with headroom) so regressions surface as FAIL lines.
constexpr double kT1StrongRenewal = 0.03;   // C04 final |u r^2/f - 1| at n = 1e5
constexpr double kLocalTrendTol = 0.12;     // C05 final local-limit deviation
constexpr double kLocalUniformC = 1.5;      // C05 max DP/predictor at n = 2000
constexpr double kEvenRatioFloor = 1.5;     // C11 even-n pointwise ratio floor
constexpr double kAvgEpsBudget = 0.5;       // C11 averaged dev <= this * eps_n
constexpr double kTransientTol = 0.4;       // C12 final |f/(p^2 u) - 1|
constexpr std::uint64_t kSeed = 20260822;   // all sampled criteria

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

struct Line {
  std::string name;
  bool pass = false;
  std::string detail;
};

std::string render(const Line& line) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-28s %s  %s", line.name.c_str(),
                line.pass ? "PASS" : "FAIL", line.detail.c_str());
  return std::string(buf) + "\n";
}

// The built-in laws every whole-family criterion sweeps.
std::vector<InterArrival> family_sweep(Index N) {
  std::vector<InterArrival> out;
  out.push_back(d0_family(N));
  out.push_back(alpha_half_family(N));
  out.push_back(ssrw_z2_family(N));
  out.push_back(uniform12());
  out.push_back(delta1());
  out.push_back(build_interleaved(d0_family(N / 2)));
  out.push_back(build_defective(d0_family(N), 0.3));
  return out;
}

Line c00_mass(bool corrupt) {
  Line line;
  line.name = "C00 mass-conservation";
  double worst = 0.0;
  for (const auto& d : family_sweep(20000)) {
    ArrayXd f = d.pmf_array();
    if (corrupt) f[d.support_min()] += 1e-6;
    double mass = kahan_total(f) + d.tail_at_horizon() + d.defect();
    worst = std::max(worst, std::abs(mass - 1.0));
  }
  line.pass = worst <= 1e-12;
  line.detail = "max |pmf+tail+defect-1| = " + num(worst) + " (tol 1e-12)" +
                (corrupt ? " [corrupt-pmf hook active]" : "");
  return line;
}

Line c01_roundtrip() {
  Line line;
  line.name = "C01 roundtrip-inversion";
  const Index N = 2000;
  double worst = 0.0;
  std::vector<InterArrival> laws;
  laws.push_back(d0_family(N));
  laws.push_back(uniform12());
  laws.push_back(build_interleaved(d0_family(N / 2)));
  for (const auto& d : laws) {
    auto t = renewal_mass(d, N);
    auto inv = invert_renewal(t.u);
    for (Index n = 0; n <= N; ++n) {
      worst = std::max(worst, std::abs(inv.pmf[n] - d.pmf(n)));
    }
  }
  line.pass = worst <= 1e-10;
  line.detail = "sup |invert(u(f)) - f| = " + num(worst) + " (tol 1e-10)";
  return line;
}

Line c02_recursion() {
  Line line;
  line.name = "C02 recursion-identity";
  const Index N = 10000;
  double worst = 0.0;
  for (const auto& d : family_sweep(N)) {
    auto t = renewal_mass(d, N);
    const ArrayXd& f = d.pmf_array();
    Index top = std::min<Index>(N, f.size() - 1);
    for (Index n = 1; n <= N; ++n) {
      KahanSum s;
      for (Index j = 1; j <= std::min(n, top); ++j) s.add(f[j] * t.u[n - j]);
      worst = std::max(worst, std::abs(t.u[n] - s.value()));
    }
  }
  line.pass = worst <= 1e-12;
  line.detail = "max |u_n - sum f_j u_{n-j}| = " + num(worst) + " (tol 1e-12)";
  return line;
}

Line c03_gf_identity() {
  Line line;
  line.name = "C03 gf-identity";
  const Index N = 40000;
  double worst = 0.0;
  std::vector<InterArrival> laws;
  laws.push_back(d0_family(N));
  laws.push_back(uniform12());
  for (const auto& d : laws) {
    auto t = renewal_mass(d, N);
    for (double s : {0.9, 0.99, 0.999}) {
      worst = std::max(worst, gf_identity_check(d, t, s));
    }
  }
  line.pass = worst <= 1e-9;
  line.detail =
      "max |u(s)(1-f(s)) - 1| = " + num(worst) + " (tol 1e-9, s up to 0.999)";
  return line;
}

Line c04_strong_renewal(const InterArrival& d0_big,
                        const RenewalTable& table) {
  Line line;
  line.name = "C04 strong-renewal-trend";
  std::string devs;
  double prev = 0.0, final_dev = 0.0;
  bool decreasing = true;
  for (Index n : {100, 1000, 10000, 100000}) {
    double r = d0_big.tail(n);
    double dev = std::abs(table.u[n] * r * r / d0_big.pmf(n) - 1.0);
    if (!devs.empty()) {
      devs += " > ";
      if (dev >= prev) decreasing = false;
    }
    devs += num(dev);
    prev = dev;
    final_dev = dev;
  }
  line.pass = decreasing && final_dev <= kT1StrongRenewal;
  line.detail = "|u r^2/f - 1| = " + devs + ", final tol " +
                num(kT1StrongRenewal);
  return line;
}

Line c05_local_limit(const InterArrival& d0_big) {
  Line line;
  line.name = "C05 local-limit";
  // Trend at the balanced k(n) = floor(1/sqrt(phi r)).
  std::vector<Index> ns = {1000, 10000, 100000};
  std::vector<Index> ks;
  Index k_max = 0;
  for (Index n : ns) {
    auto k = static_cast<Index>(
        1.0 / std::sqrt(d0_big.phi_at(n) * d0_big.tail(n)));
    ks.push_back(k);
    k_max = std::max(k_max, k);
  }
  auto table = k_step_table(d0_big, k_max, ns.back());
  std::string devs;
  double prev = 0.0, final_dev = 0.0;
  bool decreasing = true;
  for (size_t i = 0; i < ns.size(); ++i) {
    double dev = std::abs(table.pmf(ks[i], ns[i]) /
                              predict_local_pmf(d0_big, ks[i], ns[i]) -
                          1.0);
    if (!devs.empty()) {
      devs += " > ";
      if (dev >= prev) decreasing = false;
    }
    devs += num(dev);
    prev = dev;
    final_dev = dev;
  }
  // Uniform bound at n = 2000 over every k, against the exact log column.
  const Index n_u = 2000;
  auto dsmall = d0_family(n_u);
  ArrayXd col = k_step_log_column(dsmall, n_u);
  double cmax = 0.0;
  for (Index k = 1; k <= n_u; ++k) {
    cmax = std::max(cmax,
                    std::exp(col[k] - predict_local_log_pmf(dsmall, k, n_u)));
  }
  bool trend_ok = decreasing && final_dev <= kLocalTrendTol;
  bool uniform_ok = cmax > 0.0 && cmax <= kLocalUniformC;
  line.pass = trend_ok && uniform_ok;
  line.detail = "balanced-k dev = " + devs + " (final tol " +
                num(kLocalTrendTol) + "); max DP/pred = " + num(cmax) +
                " <= " + num(kLocalUniformC);
  return line;
}

Line c06_bracket() {
  Line line;
  line.name = "C06 darling-bracket";
  const Index n = 10000;
  auto d = d0_family(n);
  double phi = d.phi_at(n);
  double r = d.tail(n);
  std::string parts;
  bool ok = true;
  Index k_hi = std::max<Index>(1, std::llround(0.3 / phi));
  auto table = k_step_table(d, k_hi, n);
  for (double M : {0.1, 0.3}) {
    auto k = std::max<Index>(1, std::llround(M / phi));
    double m_eff = static_cast<double>(k) * phi;
    double a = extdarling_lower_const(m_eff);
    double upper = std::pow(1.0 - r, static_cast<double>(k));
    double mid = k_step_cdf(table, k, n);
    bool here = a * upper <= mid + 1e-12 && mid <= upper + 1e-12;
    ok = ok && here;
    if (!parts.empty()) parts += "; ";
    parts += "M=" + num(m_eff) + ": " + num(a * upper) + " <= " + num(mid) +
             " <= " + num(upper);
  }
  line.pass = ok;
  line.detail = parts;
  return line;
}

Line c07_ld_rate() {
  Line line;
  line.name = "C07 ld-rate";
  auto d = d0_family(30000);
  double dev_prev = 0.0;
  bool in_band = true, improving = true;
  std::string parts;
  const Index pairs[2][2] = {{1000, 10000}, {3000, 30000}};
  for (int i = 0; i < 2; ++i) {
    Index k = pairs[i][0], n = pairs[i][1];
    double neg_log = -k_step_log_cdf_deep(d, k, n);
    double rate = ld_rate(d, n, k);
    double ratio = neg_log / rate;
    in_band = in_band && ratio >= 0.5 && ratio <= 2.0;
    double dev = std::abs(ratio - 1.0);
    if (i == 1 && dev >= dev_prev) improving = false;
    dev_prev = dev;
    if (!parts.empty()) parts += ", ";
    parts += "ratio(" + std::to_string(static_cast<long long>(k)) + "," +
             std::to_string(static_cast<long long>(n)) + ") = " + num(ratio);
  }
  line.pass = in_band && improving;
  line.detail = parts + " (band [0.5,2], second closer to 1)";
  return line;
}

Line c08_fuk_nagaev() {
  Line line;
  line.name = "C08 fuk-nagaev-domination";
  Index violations = 0, checks = 0;
  for (const auto& d : {d0_family(2000), alpha_half_family(2000)}) {
    for (Index k : {2, 4, 8, 16}) {
      for (Index m : {20, 50, 100}) {
        auto t = k_step_table(d, k, std::min<Index>(1024, k * m), m,
                              TruncMode::Conditioned);
        for (Index n : {64, 256, 1024}) {
          if (m > n) continue;  // the bound demands a cutoff within range
          double bound = fuk_nagaev_bound(d, k, m, n);
          Index reach = std::min<Index>(n, std::min<Index>(1024, k * m));
          double exact = 1.0 - k_step_cdf(t, k, reach);
          ++checks;
          if (bound < exact - 1e-12) ++violations;
        }
      }
    }
  }
  line.pass = violations == 0;
  line.detail = std::to_string(static_cast<long long>(violations)) +
                " violations on " +
                std::to_string(static_cast<long long>(checks)) +
                " (k,m,n) points, two families";
  return line;
}

Line c09_darling(const InterArrival& d0_big) {
  Line line;
  line.name = "C09 darling-law";
  auto e10 = darling_empirical(d0_big, 10, 100000, kSeed);
  auto e100 = darling_empirical(d0_big, 100, 100000, kSeed);
  line.pass = e100.ks_distance < e10.ks_distance;
  line.detail = "sup-dist k=100: " + num(e100.ks_distance) +
                " < k=10: " + num(e10.ks_distance) + " (1e5 samples)";
  return line;
}

Line c10_is_correctness(const InterArrival& d0_big) {
  Line line;
  line.name = "C10 is-correctness";
  // Exhaustive: the reweighted tilted expectation must reproduce the DP cdf
  // to roundoff on a fully enumerable explicit law.
  ArrayXd pmf(4);
  pmf << 0.4, 0.3, 0.2, 0.1;
  auto dx = build_explicit(pmf, 0.0);
  auto tilt = solve_tilt(dx, 1.6);
  auto dp_table = k_step_table(dx, 8, 40);
  double worst = 0.0;
  for (Index k = 1; k <= 8; ++k) {
    for (Index n : {k, 2 * k, 3 * k, 4 * k}) {
      ArrayXd row = ArrayXd::Zero(n + 1);
      row[0] = 1.0;
      ArrayXd kernel = ArrayXd::Zero(n + 1);
      for (Index j = 1; j <= std::min<Index>(4, n); ++j)
        kernel[j] = tilt.tilted_pmf[j];
      for (Index step = 0; step < k; ++step)
        row = convolve(row, kernel, n + 1, ConvBackend::Direct);
      KahanSum acc;
      for (Index tau = 0; tau <= n; ++tau)
        acc.add(row[tau] * std::exp(tilt.lambda_star * double(tau)));
      double tilted = acc.value() * std::exp(double(k) * tilt.log_norm);
      worst = std::max(worst, std::abs(tilted - k_step_cdf(dp_table, k, n)));
    }
  }
  bool exhaustive_ok = worst <= 1e-10;
  // Sampled: tilted estimate against the exact DP value at a rare event.
  const Index k = 200, n = 2000;
  double dp = std::exp(k_step_log_cdf_deep(d0_big, k, n));
  auto est = is_estimate_cdf(d0_big, n, k, 0.1, 100000, kSeed);
  bool sampled_ok = std::abs(est.value - dp) <= 3.0 * est.std_error &&
                    est.std_error > 0.0;
  line.pass = exhaustive_ok && sampled_ok;
  line.detail = "exhaustive max |tilted - DP| = " + num(worst) +
                " (tol 1e-10); sampled |IS - DP|/SE = " +
                num(std::abs(est.value - dp) / est.std_error) + " <= 3";
  return line;
}

Line c11_counterexample() {
  Line line;
  line.name = "C11 interleaved-counterexample";
  auto di = build_interleaved(d0_family(50000));
  const Index N = 100000;
  auto table = renewal_mass(di, N);
  // Pointwise: odd entries vanish while even entries stay macroscopic.
  double f_odd = di.pmf(N - 1);
  double r_even = di.tail(N);
  double ratio_even = di.pmf(N) / (r_even * r_even * table.u[N]);
  bool pointwise_ok =
      f_odd == 0.0 && table.u[N - 1] > 0.0 && ratio_even >= kEvenRatioFloor;
  // Averaged: the windowed pair with eps_n = 1/log(n+e) stays within the
  // vanishing schedule's own scale at every grid point. (Averaging f across
  // the window against the right-endpoint predictor carries a first-order
  // bias of eps_n/2, so |ratio - 1| <= eps_n/2 is the rate form of the
  // convergence; it is not monotone across this grid because the bias
  // cancels the residual pointwise correction at the smallest n.)
  std::string devs;
  bool avg_ok = true;
  for (Index n : {1000, 10000, 100000}) {
    double eps = 1.0 / std::log(static_cast<double>(n) + std::exp(1.0));
    auto pair = reverse_avg_pair(di, table, n, eps);
    double dev = std::abs(pair.lhs / pair.rhs - 1.0);
    avg_ok = avg_ok && dev <= kAvgEpsBudget * eps;
    if (!devs.empty()) devs += ", ";
    devs += num(dev) + "/" + num(kAvgEpsBudget * eps);
  }
  line.pass = pointwise_ok && avg_ok;
  line.detail = "f(odd) = 0, even ratio = " + num(ratio_even) + " >= " +
                num(kEvenRatioFloor) + "; averaged dev/budget = " + devs;
  return line;
}

Line c12_transient() {
  Line line;
  line.name = "C12 transient-reverse";
  auto dd = build_defective(d0_family(10000), 0.3);
  auto table = renewal_mass(dd, 10000);
  std::string devs;
  double prev = 0.0, final_dev = 0.0;
  bool improving = true;
  for (Index n : {100, 1000, 10000}) {
    double dev =
        std::abs(dd.pmf(n) / (0.3 * 0.3 * table.u[n]) - 1.0);
    if (!devs.empty()) {
      devs += " > ";
      if (dev >= prev) improving = false;
    }
    devs += num(dev);
    prev = dev;
    final_dev = dev;
  }
  line.pass = improving && final_dev <= kTransientTol;
  line.detail = "|f/(p^2 u) - 1| = " + devs + " (final tol " +
                num(kTransientTol) + ")";
  return line;
}

Line c13_conjugate() {
  Line line;
  line.name = "C13 conjugate-property";
  const double y = 1e8;
  double worst = 0.0;
  std::vector<SlowlyVarying> phis;
  phis.push_back(SlowlyVarying::constant(2.0));
  for (double a : {-1.0, -1.5, -2.0, -2.5, -3.0})
    phis.push_back(SlowlyVarying::log_pow(a));
  for (const auto& phi : phis) {
    SlowlyVaryingConjugate conj(phi);
    double ystar = conj.invert_xphix(y);
    worst = std::max(worst, std::abs(ystar * phi(ystar) / y - 1.0));
  }
  line.pass = worst <= 0.05;
  line.detail = "max |g(h(y))/y - 1| = " + num(worst) +
                " (tol 0.05, y = 1e8, 6 shapes)";
  return line;
}

}  // namespace

AcceptanceReport acceptance_run(const AcceptanceOptions& opts) {
  AcceptanceReport report;
  auto d0_big = d0_family(100000);
  auto table_big = renewal_mass(d0_big, 100000);

  struct Crit {
    const char* name;
    std::function<Line()> fn;
  };
  std::vector<Crit> criteria = {
      {"C00 mass-conservation", [&] { return c00_mass(opts.corrupt_pmf); }},
      {"C01 roundtrip-inversion", [&] { return c01_roundtrip(); }},
      {"C02 recursion-identity", [&] { return c02_recursion(); }},
      {"C03 gf-identity", [&] { return c03_gf_identity(); }},
      {"C04 strong-renewal-trend",
       [&] { return c04_strong_renewal(d0_big, table_big); }},
      {"C05 local-limit", [&] { return c05_local_limit(d0_big); }},
      {"C06 darling-bracket", [&] { return c06_bracket(); }},
      {"C07 ld-rate", [&] { return c07_ld_rate(); }},
      {"C08 fuk-nagaev-domination", [&] { return c08_fuk_nagaev(); }},
      {"C09 darling-law", [&] { return c09_darling(d0_big); }},
      {"C10 is-correctness", [&] { return c10_is_correctness(d0_big); }},
      {"C11 interleaved-counterexample", [&] { return c11_counterexample(); }},
      {"C12 transient-reverse", [&] { return c12_transient(); }},
      {"C13 conjugate-property", [&] { return c13_conjugate(); }},
  };
  for (const auto& crit : criteria) {
    Line line;
    try {
      line = crit.fn();
    } catch (const std::exception& e) {
      line.name = crit.name;
      line.pass = false;
      line.detail = std::string("exception: ") + e.what();
    }
    report.all_pass = report.all_pass && line.pass;
    report.text += render(line);
  }
  return report;
}

AcceptanceReport acceptance_selftest(const AcceptanceOptions& opts) {
  AcceptanceReport first = acceptance_run(opts);
  AcceptanceReport second = acceptance_run(opts);
  Line det;
  det.name = "C14 determinism";
  det.pass = first.text == second.text;
  det.detail = det.pass ? "two runs byte-identical"
                        : "reports differ between runs";
  AcceptanceReport out;
  out.text = first.text + render(det);
  out.all_pass = first.all_pass && det.pass;
  return out;
}

}  // namespace renewal0
