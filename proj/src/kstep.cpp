#include "renewal0/kstep.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace renewal0 {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kRescaleBelow = 1e-100;

void check_row_col(const KStepTable& t, Index k, Index n) {
  if (k < 0 || k > t.k_max() || n < 0 || n > t.n_max()) {
    throw Error("k-step table index out of range");
  }
}

// Kahan prefix sum of a stored row through n.
double stored_prefix(const ArrayXd& row, Index n) {
  KahanSum s;
  for (Index i = 0; i <= n; ++i) s.add(row[i]);
  return s.value();
}

}  // namespace

double KStepTable::pmf(Index k, Index n) const {
  check_row_col(*this, k, n);
  return rows_[k][n] * std::exp(scale_[k]);
}

double KStepTable::log_pmf(Index k, Index n) const {
  check_row_col(*this, k, n);
  double v = rows_[k][n];
  if (v <= 0.0) return kNegInf;
  return std::log(v) + scale_[k];
}

double KStepTable::cdf(Index k, Index n) const {
  check_row_col(*this, k, n);
  return stored_prefix(rows_[k], n) * std::exp(scale_[k]);
}

double KStepTable::log_cdf(Index k, Index n) const {
  check_row_col(*this, k, n);
  double s = stored_prefix(rows_[k], n);
  if (s <= 0.0) return kNegInf;
  return std::log(s) + scale_[k];
}

double KStepTable::row_mass(Index k) const { return cdf(k, n_); }

double KStepTable::tail_deficit(Index k) const {
  check_row_col(*this, k, 0);
  return deficit_[k];
}

double KStepTable::row_total(Index k) const {
  check_row_col(*this, k, 0);
  return std::exp(static_cast<double>(k) * log_step_total_);
}

const ArrayXd& KStepTable::row(Index k) const {
  check_row_col(*this, k, 0);
  return rows_[k];
}

double KStepTable::row_log_scale(Index k) const {
  check_row_col(*this, k, 0);
  return scale_[k];
}

KStepTable k_step_table(const InterArrival& d, Index K, Index N,
                        std::optional<Index> trunc_m, TruncMode mode,
                        ConvBackend backend) {
  if (K < 0 || N < 0 || K > N) {
    throw Error("k_step_table: need 0 <= K <= N");
  }
  if (N > d.horizon() && !d.fully_resolved()) {
    throw HorizonExceeded("k-step table needs the pmf up to N");
  }
  if (trunc_m && *trunc_m < d.support_min()) {
    throw InvalidTruncation("cutoff below the minimal support");
  }
  if (trunc_m && *trunc_m > d.horizon() && !d.fully_resolved()) {
    throw HorizonExceeded("cutoff tail r(m) needs the pmf up to m");
  }

  // Gap kernel and its in-range tail q(j) = P(j < gap <= cutoff).
  ArrayXd kernel = ArrayXd::Zero(N + 1);
  Index top = std::min(N, d.horizon());
  if (trunc_m) top = std::min(top, *trunc_m);
  if (top >= 1) kernel.segment(1, top) = d.pmf_array().segment(1, top);
  ArrayXd q(N + 1);
  double r_m = trunc_m ? d.tail_real(std::min(*trunc_m, d.horizon())) : 0.0;
  for (Index j = 0; j <= N; ++j) {
    double t = d.tail_real(std::min(j, d.horizon()));
    q[j] = trunc_m ? std::max(0.0, t - r_m) : t;
  }
  double step_total = 1.0 - r_m;
  if (mode == TruncMode::Conditioned && trunc_m) {
    if (step_total <= 0.0) throw InvalidTruncation("no mass at or below cutoff");
    kernel /= step_total;
    q /= step_total;
  }

  KStepTable t;
  t.n_ = N;
  t.m_ = trunc_m;
  t.mode_ = mode;
  t.log_step_total_ =
      (trunc_m && mode == TruncMode::Restricted) ? std::log(step_total) : 0.0;
  t.rows_.reserve(K + 1);
  t.rows_.emplace_back(ArrayXd::Zero(N + 1));
  t.rows_[0][0] = 1.0;
  t.scale_.assign(1, 0.0);
  t.deficit_.assign(1, 0.0);

  // Mass already past N stays past N; under restricted truncation it also
  // pays the per-step survival factor P(gap <= m).
  double carry = (trunc_m && mode == TruncMode::Restricted) ? step_total : 1.0;
  for (Index k = 1; k <= K; ++k) {
    const ArrayXd& prev = t.rows_[k - 1];
    ArrayXd next = convolve(prev, kernel, N + 1, backend);
    for (Index n = 0; n <= N; ++n) next[n] = std::max(next[n], 0.0);
    // Mass escaping past N in this step, plus what had already escaped.
    KahanSum esc;
    for (Index n = 0; n <= N; ++n) esc.add(prev[n] * q[N - n]);
    double deficit =
        t.deficit_[k - 1] * carry + esc.value() * std::exp(t.scale_[k - 1]);
    double scale = t.scale_[k - 1];
    double mx = next.maxCoeff();
    if (mx > 0.0 && mx < kRescaleBelow) {
      next /= mx;
      scale += std::log(mx);
    }
    t.rows_.push_back(std::move(next));
    t.scale_.push_back(scale);
    t.deficit_.push_back(deficit);
  }
  return t;
}

double k_step_cdf(const KStepTable& table, Index k, Index n) {
  return table.cdf(k, n);
}

double big_jump_conditional(const InterArrival& d, Index k, Index n,
                            double eps, ConvBackend backend) {
  if (!(eps > 0.0 && eps < 1.0)) throw Error("big_jump_conditional: eps in (0,1)");
  if (k < 1 || n < 1) throw Error("big_jump_conditional: need k >= 1, n >= 1");
  auto full = k_step_table(d, k, n, std::nullopt, TruncMode::Restricted, backend);
  double denom_log = full.log_pmf(k, n);
  if (denom_log == kNegInf) throw ZeroDenominator("P(tau_k = n) = 0");
  Index m = static_cast<Index>(std::floor((1.0 - eps) * static_cast<double>(n)));
  if (m < d.support_min()) return 1.0;  // every gap already exceeds the cutoff
  auto cut = k_step_table(d, k, n, m, TruncMode::Restricted, backend);
  double kept_log = cut.log_pmf(k, n);
  if (kept_log == kNegInf) return 1.0;
  return 1.0 - std::exp(kept_log - denom_log);
}

ArrayXd k_step_log_column(const InterArrival& d, Index n) {
  if (n < 0) throw Error("k_step_log_column: n must be nonnegative");
  if (n > d.horizon() && !d.fully_resolved()) {
    throw HorizonExceeded("column recursion needs the pmf up to n");
  }
  std::vector<long double> f(n + 1, 0.0L);
  Index top = std::min(n, d.horizon());
  for (Index j = 1; j <= top; ++j) f[j] = d.pmf(j);
  ArrayXd col(n + 1);
  col[0] = (n == 0) ? 0.0 : kNegInf;
  std::vector<long double> prev(n + 1, 0.0L), cur(n + 1, 0.0L);
  prev[0] = 1.0L;
  for (Index k = 1; k <= n; ++k) {
    // prev is row k-1, supported on [k-1, n].
    for (Index i = k; i <= n; ++i) {
      long double acc = 0.0L;
      Index jmax = i - (k - 1);
      for (Index j = 1; j <= jmax; ++j) acc += f[j] * prev[i - j];
      cur[i] = acc;
    }
    cur[k - 1] = 0.0L;
    col[k] = cur[n] > 0.0L ? static_cast<double>(std::log(cur[n])) : kNegInf;
    std::swap(prev, cur);
  }
  return col;
}

double k_step_log_cdf_deep(const InterArrival& d, Index k, Index n,
                           ConvBackend backend) {
  if (k < 1 || n < 0) throw Error("k_step_log_cdf_deep: need k >= 1, n >= 0");
  if (n > d.horizon() && !d.fully_resolved()) {
    throw HorizonExceeded("tilted recursion needs the pmf up to n");
  }
  const Index s0 = d.support_min();
  if (n < k * s0) return kNegInf;
  if (n == k * s0) return static_cast<double>(k) * std::log(d.pmf(s0));

  ArrayXd f = ArrayXd::Zero(n + 1);
  Index top = std::min(n, d.horizon());
  if (top >= 1) f.segment(1, top) = d.pmf_array().segment(1, top);

  // Tilted mean step, with the factor exp(-lambda s0) pulled out for range.
  auto tilted_mean = [&](double lam) {
    KahanSum S, M;
    for (Index j = s0; j <= n; ++j) {
      double w = f[j] * std::exp(-lam * static_cast<double>(j - s0));
      S.add(w);
      M.add(w * static_cast<double>(j - s0));
    }
    return static_cast<double>(s0) + M.value() / S.value();
  };
  const double target = static_cast<double>(n) / static_cast<double>(k);
  double lam = 0.0;
  if (tilted_mean(0.0) > target) {
    double lo = 0.0, hi = 1e-6;
    while (tilted_mean(hi) > target && hi < 1e6) {
      lo = hi;
      hi *= 2.0;
    }
    for (int it = 0; it < 200 && hi - lo > 1e-12 * (1.0 + hi); ++it) {
      double mid = 0.5 * (lo + hi);
      (tilted_mean(mid) > target ? lo : hi) = mid;
    }
    lam = 0.5 * (lo + hi);
  }

  // Tilted law g_j = f_j e^{-lam j} / Z; the identity
  //   P(tau_k <= n) = Z^k sum_{t <= n} e^{lam t} P_g(sum of k steps = t)
  // holds exactly for every lam, since paths reaching t <= n use gaps <= n.
  KahanSum Zs;
  for (Index j = s0; j <= n; ++j) {
    Zs.add(f[j] * std::exp(-lam * static_cast<double>(j - s0)));
  }
  double log_Z = std::log(Zs.value()) - lam * static_cast<double>(s0);
  ArrayXd g = ArrayXd::Zero(n + 1);
  for (Index j = s0; j <= n; ++j) {
    g[j] = f[j] * std::exp(-lam * static_cast<double>(j - s0)) / Zs.value();
  }

  // Binary-power convolution of g, rescaling each intermediate to max 1.
  auto renorm = [](ArrayXd& a, double& ls) {
    for (Index i = 0; i < a.size(); ++i) a[i] = std::max(a[i], 0.0);
    double mx = a.maxCoeff();
    if (mx > 0.0) {
      a /= mx;
      ls += std::log(mx);
    }
  };
  ArrayXd base = g, acc;
  double base_ls = 0.0, acc_ls = 0.0;
  Index rem = k;
  while (rem > 0) {
    if (rem & 1) {
      if (acc.size() == 0) {
        acc = base;
        acc_ls = base_ls;
      } else {
        acc = convolve(acc, base, n + 1, backend);
        acc_ls += base_ls;
        renorm(acc, acc_ls);
      }
    }
    rem >>= 1;
    if (rem > 0) {
      base = convolve(base, base, n + 1, backend);
      base_ls *= 2.0;
      renorm(base, base_ls);
    }
  }

  // log-sum-exp of ln acc[t] + lam t, then undo tilt and normalization.
  double mx = kNegInf;
  for (Index t = 0; t <= n; ++t) {
    if (acc[t] > 0.0) mx = std::max(mx, std::log(acc[t]) + lam * static_cast<double>(t));
  }
  if (mx == kNegInf) return kNegInf;
  KahanSum s;
  for (Index t = 0; t <= n; ++t) {
    if (acc[t] > 0.0) {
      s.add(std::exp(std::log(acc[t]) + lam * static_cast<double>(t) - mx));
    }
  }
  return static_cast<double>(k) * log_Z + acc_ls + mx + std::log(s.value());
}

}  // namespace renewal0
