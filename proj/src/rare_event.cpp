#include "renewal0/rare_event.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <thread>

namespace renewal0 {

namespace {

constexpr std::uint64_t kStreamPlainPaths = 1;
constexpr std::uint64_t kStreamTiltedCdf = 2;
constexpr std::uint64_t kStreamDarling = 3;
constexpr std::uint64_t kStreamPlainCdf = 4;

// Counters are laid out ((path * k + gap) << 2) | slot so every uniform a
// sampler may need has a unique address; slot 0/1 feed the alias draw and
// slot 2 the tail quantile.
inline std::uint64_t gap_counter(Index path, Index k, Index gap) {
  return (static_cast<std::uint64_t>(path) * static_cast<std::uint64_t>(k) +
          static_cast<std::uint64_t>(gap))
         << 2;
}

inline std::uint64_t splitmix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

constexpr Index kChunk = 4096;

// Runs fn(chunk_index, begin, end) over [0, count) in fixed chunks. Chunks
// are independent (disjoint counters, disjoint output slots), so the thread
// count never changes any result bit.
template <class Fn>
void run_chunks(Index count, const Fn& fn) {
  Index nchunks = (count + kChunk - 1) / kChunk;
  auto run_one = [&](Index c) {
    Index b = c * kChunk;
    fn(c, b, std::min(count, b + kChunk));
  };
  int nt = sampler_threads();
  if (nt <= 1 || nchunks <= 1) {
    for (Index c = 0; c < nchunks; ++c) run_one(c);
    return;
  }
  std::atomic<Index> next{0};
  auto worker = [&]() {
    for (;;) {
      Index c = next.fetch_add(1);
      if (c >= nchunks) return;
      run_one(c);
    }
  };
  std::vector<std::thread> pool;
  int spawn = std::min<int>(nt, static_cast<int>(nchunks)) - 1;
  pool.reserve(spawn);
  for (int t = 0; t < spawn; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
}

Index chunk_count(Index count) { return (count + kChunk - 1) / kChunk; }

// Fixed-shape pairwise reduction; the order is a function of the length only.
double tree_reduce(std::vector<double> v) {
  if (v.empty()) return 0.0;
  while (v.size() > 1) {
    std::size_t h = 0;
    std::size_t i = 0;
    for (; i + 1 < v.size(); i += 2) v[h++] = v[i] + v[i + 1];
    if (i < v.size()) v[h++] = v[i];
    v.resize(h);
  }
  return v[0];
}

inline double log_add(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

}  // namespace

int sampler_threads() {
  const char* s = std::getenv("RENEWAL_ZERO_THREADS");
  if (s == nullptr || *s == '\0') return 1;
  char* end = nullptr;
  long v = std::strtol(s, &end, 10);
  if (end == s || v < 1) return 1;
  return static_cast<int>(std::min(v, 64L));
}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : base_(splitmix(splitmix(seed) ^ stream)) {}

std::uint64_t CounterRng::raw(std::uint64_t counter) const {
  return splitmix(base_ ^ counter);
}

double CounterRng::u01(std::uint64_t counter) const {
  return static_cast<double>(raw(counter) >> 11) * 0x1.0p-53;
}

AliasTable::AliasTable(const ArrayXd& weights) {
  Index n = weights.size();
  if (n <= 0) throw Error("alias: empty weight vector");
  for (Index i = 0; i < n; ++i) {
    if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) {
      throw Error("alias: weights must be finite and nonnegative");
    }
  }
  double total = kahan_total(weights);
  if (!(total > 0.0)) throw Error("alias: total weight must be positive");
  prob_ = ArrayXd::Ones(n);
  alias_.resize(n);
  for (Index i = 0; i < n; ++i) alias_[i] = i;
  ArrayXd scaled = weights * (static_cast<double>(n) / total);
  std::vector<Index> small, large;
  for (Index i = 0; i < n; ++i) (scaled[i] < 1.0 ? small : large).push_back(i);
  while (!small.empty() && !large.empty()) {
    Index s = small.back();
    small.pop_back();
    Index l = large.back();
    large.pop_back();
    prob_[s] = scaled[s];
    alias_[s] = l;
    scaled[l] = (scaled[l] + scaled[s]) - 1.0;
    (scaled[l] < 1.0 ? small : large).push_back(l);
  }
  // Leftovers are 1 up to rounding; they keep themselves as alias.
}

Index AliasTable::sample(double u_cell, double u_coin) const {
  Index n = size();
  Index i = static_cast<Index>(u_cell * static_cast<double>(n));
  if (i >= n) i = n - 1;
  return u_coin < prob_[i] ? i : alias_[i];
}

TiltSolution solve_tilt(const InterArrival& d, double target_mean) {
  double smin = static_cast<double>(d.support_min());
  if (!std::isfinite(target_mean) || !(target_mean > smin)) {
    throw TargetOutOfRange("solve_tilt: target at or below the support floor");
  }
  auto mean_at = [&d](double lam) {
    LaplacePair lp = d.laplace(lam);
    double denom = 1.0 - lp.nu;
    if (!(denom > 0.0)) throw Error("solve_tilt: normalizer vanished");
    return lp.nu_prime / denom;
  };
  // lambda -> 0+ proxy; above it the tilted mean only decreases. The heavy
  // families cannot certify their Laplace corrections arbitrarily close to
  // zero, so the proxy backs off until the transform is quoted with margin.
  double lo = 1e-12;
  double mean_lo = 0.0;
  for (;;) {
    try {
      mean_lo = mean_at(lo);
      break;
    } catch (const TailDominates&) {
      lo *= 100.0;
      if (lo > 1e-3) throw;
    }
  }
  if (!(mean_lo > target_mean)) {
    throw TargetOutOfRange("solve_tilt: target not below the attainable mean");
  }
  double hi = std::max(1e-6, 1.0 / target_mean);
  double mean_hi = mean_at(hi);
  int guard = 0;
  while (mean_hi > target_mean) {
    lo = hi;
    mean_lo = mean_hi;
    hi *= 2.0;
    if (++guard > 64) {
      throw TargetOutOfRange("solve_tilt: no bracket below the target");
    }
    mean_hi = mean_at(hi);
  }
  if (!(mean_lo >= mean_hi)) {
    throw NonMonotoneBracket("solve_tilt: tilted mean rose across the bracket");
  }
  double lam = 0.5 * (lo + hi);
  bool converged = false;
  for (int it = 0; it < 200; ++it) {
    lam = 0.5 * (lo + hi);
    double m = mean_at(lam);
    double slack = 1e-9 * (std::abs(mean_lo) + std::abs(mean_hi));
    if (m > mean_lo + slack || m < mean_hi - slack) {
      throw NonMonotoneBracket("solve_tilt: midpoint left the bracket range");
    }
    if (std::abs(m - target_mean) <= 1e-8 * target_mean) {
      converged = true;
      break;
    }
    if (m > target_mean) {
      lo = lam;
      mean_lo = m;
    } else {
      hi = lam;
      mean_hi = m;
    }
  }
  if (!converged) {
    throw NonMonotoneBracket("solve_tilt: bisection failed to meet tolerance");
  }

  LaplacePair lp = d.laplace(lam);
  double denom = 1.0 - lp.nu;
  TiltSolution t;
  t.lambda_star = lam;
  t.nu = lp.nu;
  t.nu_prime = lp.nu_prime;
  t.target_ratio = target_mean;
  t.log_norm = std::log1p(-lp.nu);
  const ArrayXd& f = d.pmf_array();
  Index N = d.horizon();
  t.tilted_pmf = ArrayXd::Zero(N + 1);
  for (Index j = d.support_min(); j <= N; ++j) {
    double ex = -lam * static_cast<double>(j);
    if (ex >= -745.0) t.tilted_pmf[j] = f[j] * std::exp(ex) / denom;
  }
  if (d.tail_at_horizon() > 0.0) {
    if (d.tail_model()) {
      TailModel::Correction c = d.tail_model()->laplace_tail(lam);
      t.horizon_deficit = c.value / denom;
      t.horizon_deficit_err = c.error / denom;
    } else {
      double b =
          d.tail_at_horizon() * std::exp(-lam * (static_cast<double>(N) + 1.0));
      t.horizon_deficit = 0.5 * b / denom;
      t.horizon_deficit_err = 0.5 * b / denom;
    }
  }
  return t;
}

double tilted_variance_check(const TiltSolution& t) {
  KahanSum s;
  for (Index j = 0; j < t.tilted_pmf.size(); ++j) {
    s.add(static_cast<double>(j) * static_cast<double>(j) * t.tilted_pmf[j]);
  }
  return s.value();
}

PathBatch sample_paths(const InterArrival& d, Index k, Index count,
                       std::uint64_t seed) {
  if (k < 1) throw Error("sample_paths: k must be positive");
  if (count < 1) throw Error("sample_paths: count must be positive");
  const ArrayXd& f = d.pmf_array();
  Index N = d.horizon();
  ArrayXd w(N + 1);
  for (Index j = 1; j <= N; ++j) w[j - 1] = f[j];
  w[N] = d.tail_at_horizon() + d.defect();
  AliasTable alias(w);
  CounterRng rng(seed, kStreamPlainPaths);
  PathBatch out;
  out.k = k;
  out.seed = seed;
  out.tau = ArrayXd::Zero(count);
  out.max_gap = ArrayXd::Zero(count);
  out.overflow_gaps = ArrayXi::Zero(count);
  run_chunks(count, [&](Index, Index b, Index e) {
    for (Index p = b; p < e; ++p) {
      double tau = 0.0;
      double mg = 0.0;
      std::int64_t ov = 0;
      for (Index i = 0; i < k; ++i) {
        std::uint64_t c = gap_counter(p, k, i);
        Index cell = alias.sample(rng.u01(c | 0), rng.u01(c | 1));
        if (cell == N) {
          ++ov;
          continue;
        }
        double g = static_cast<double>(cell) + 1.0;
        tau += g;
        if (g > mg) mg = g;
      }
      out.tau[p] = tau;
      out.max_gap[p] = mg;
      out.overflow_gaps[p] = ov;
    }
  });
  return out;
}

namespace {

MCEstimate reduce_moments(std::vector<double> s1, std::vector<double> s2,
                          Index count, std::uint64_t seed, McMethod method) {
  double sum = tree_reduce(std::move(s1));
  double sumsq = tree_reduce(std::move(s2));
  MCEstimate est;
  est.n_samples = count;
  est.seed = seed;
  est.method = method;
  est.value = sum / static_cast<double>(count);
  if (count > 1) {
    double var = (sumsq - static_cast<double>(count) * est.value * est.value) /
                 (static_cast<double>(count) - 1.0);
    est.std_error = std::sqrt(std::max(0.0, var) / static_cast<double>(count));
  }
  return est;
}

}  // namespace

MCEstimate is_estimate_cdf(const InterArrival& d, Index n, Index k, double eps,
                           Index count, std::uint64_t seed) {
  if (n < 1 || k < 1 || count < 1) {
    throw Error("is_estimate_cdf: n, k, count must be positive");
  }
  if (n > d.horizon() && !d.fully_resolved()) {
    throw HorizonExceeded("is_estimate_cdf: n past horizon");
  }
  if (!(eps > 0.0 && eps < 1.0)) {
    throw Error("is_estimate_cdf: eps must lie in (0, 1)");
  }
  double target = (1.0 - eps) * static_cast<double>(n) / static_cast<double>(k);
  TiltSolution t = solve_tilt(d, target);
  Index N = d.horizon();
  ArrayXd w(N + 1);
  for (Index j = 1; j <= N; ++j) w[j - 1] = t.tilted_pmf[j];
  // The overflow cell absorbs exactly the mass the array lacks, so every
  // in-horizon cell keeps probability tilted_pmf(j) and the weight identity
  // stays exact; overflow paths have tau > horizon >= n and score zero.
  w[N] = std::max(0.0, 1.0 - kahan_total(t.tilted_pmf));
  AliasTable alias(w);
  CounterRng rng(seed, kStreamTiltedCdf);
  std::vector<double> s1(chunk_count(count), 0.0);
  std::vector<double> s2(chunk_count(count), 0.0);
  double lam = t.lambda_star;
  double klog = static_cast<double>(k) * t.log_norm;
  run_chunks(count, [&](Index ci, Index b, Index e) {
    KahanSum a1, a2;
    for (Index p = b; p < e; ++p) {
      std::int64_t tau = 0;
      bool over = false;
      for (Index i = 0; i < k; ++i) {
        std::uint64_t c = gap_counter(p, k, i);
        Index cell = alias.sample(rng.u01(c | 0), rng.u01(c | 1));
        if (cell == N) {
          over = true;
          break;
        }
        tau += cell + 1;
      }
      if (over || tau > n) continue;
      double wgt = std::exp(lam * static_cast<double>(tau) + klog);
      a1.add(wgt);
      a2.add(wgt * wgt);
    }
    s1[ci] = a1.value();
    s2[ci] = a2.value();
  });
  return reduce_moments(std::move(s1), std::move(s2), count, seed,
                        McMethod::Tilted);
}

MCEstimate plain_estimate_cdf(const InterArrival& d, Index n, Index k,
                              Index count, std::uint64_t seed) {
  if (n < 1 || k < 1 || count < 1) {
    throw Error("plain_estimate_cdf: n, k, count must be positive");
  }
  if (n > d.horizon() && !d.fully_resolved()) {
    throw HorizonExceeded("plain_estimate_cdf: n past horizon");
  }
  const ArrayXd& f = d.pmf_array();
  Index N = d.horizon();
  ArrayXd w(N + 1);
  for (Index j = 1; j <= N; ++j) w[j - 1] = f[j];
  w[N] = d.tail_at_horizon() + d.defect();
  AliasTable alias(w);
  CounterRng rng(seed, kStreamPlainCdf);
  std::vector<double> s1(chunk_count(count), 0.0);
  std::vector<double> s2(chunk_count(count), 0.0);
  run_chunks(count, [&](Index ci, Index b, Index e) {
    KahanSum a1, a2;
    for (Index p = b; p < e; ++p) {
      std::int64_t tau = 0;
      bool over = false;
      for (Index i = 0; i < k; ++i) {
        std::uint64_t c = gap_counter(p, k, i);
        Index cell = alias.sample(rng.u01(c | 0), rng.u01(c | 1));
        if (cell == N) {
          over = true;
          break;
        }
        tau += cell + 1;
      }
      if (over || tau > n) continue;
      a1.add(1.0);
      a2.add(1.0);
    }
    s1[ci] = a1.value();
    s2[ci] = a2.value();
  });
  return reduce_moments(std::move(s1), std::move(s2), count, seed,
                        McMethod::Plain);
}

DarlingEmpirical darling_empirical(const InterArrival& d, Index k, Index count,
                                   std::uint64_t seed) {
  if (k < 1) throw Error("darling_empirical: k must be positive");
  if (count < 1) throw Error("darling_empirical: count must be positive");
  if (d.defect() > 0.0) {
    throw Error("darling_empirical: law must be recurrent");
  }
  const TailModel* model = d.tail_model().get();
  if (!d.fully_resolved() && model == nullptr) {
    throw Error("darling_empirical: unresolved law with no tail completion");
  }
  const ArrayXd& f = d.pmf_array();
  Index N = d.horizon();
  double r_n = d.tail_at_horizon();
  ArrayXd w(N + 1);
  for (Index j = 1; j <= N; ++j) w[j - 1] = f[j];
  w[N] = r_n;
  AliasTable alias(w);
  CounterRng rng(seed, kStreamDarling);
  std::vector<double> ys(count, 0.0);
  std::vector<unsigned char> bad(count, 0);
  run_chunks(count, [&](Index, Index b, Index e) {
    for (Index p = b; p < e; ++p) {
      bool tail_draw = false;
      bool overflow = false;
      double tau_lin = 0.0;
      double ln_tau = -std::numeric_limits<double>::infinity();
      for (Index i = 0; i < k; ++i) {
        std::uint64_t c = gap_counter(p, k, i);
        Index cell = alias.sample(rng.u01(c | 0), rng.u01(c | 1));
        double lg;
        if (cell < N) {
          double g = static_cast<double>(cell) + 1.0;
          tau_lin += g;
          lg = std::log(g);
        } else {
          tail_draw = true;
          double v = rng.u01(c | 2) * r_n;
          // v == 0 sits below every representable tail value, so it escapes
          // the completion's range exactly like a +inf quantile.
          double u = v > 0.0 ? model->quantile_log(v)
                             : std::numeric_limits<double>::infinity();
          if (!std::isfinite(u)) {
            overflow = true;
            break;
          }
          lg = u;
        }
        ln_tau = log_add(ln_tau, lg);
      }
      if (overflow) {
        bad[p] = 1;
        continue;
      }
      // A tail draw certifies tau > horizon, where only the completion
      // speaks; otherwise the integer sum keeps tail lookups step-exact.
      ys[p] = tail_draw ? static_cast<double>(k) * d.tail_log(ln_tau)
                        : static_cast<double>(k) * d.tail_real(tau_lin);
    }
  });
  Index n_over = 0;
  for (Index p = 0; p < count; ++p) n_over += bad[p];
  DarlingEmpirical out;
  out.k = k;
  out.seed = seed;
  out.overflow_fraction =
      static_cast<double>(n_over) / static_cast<double>(count);
  if (out.overflow_fraction > 1e-3) {
    throw ExcessOverflow("darling_empirical: overflow fraction above 0.1%");
  }
  Index kept = count - n_over;
  out.y_sorted = ArrayXd::Zero(kept);
  Index h = 0;
  for (Index p = 0; p < count; ++p) {
    if (!bad[p]) out.y_sorted[h++] = ys[p];
  }
  std::sort(out.y_sorted.data(), out.y_sorted.data() + kept);
  double ks = 0.0;
  for (Index i = 0; i < kept; ++i) {
    double fy = -std::expm1(-out.y_sorted[i]);
    double lo = fy - static_cast<double>(i) / static_cast<double>(kept);
    double hi = static_cast<double>(i + 1) / static_cast<double>(kept) - fy;
    ks = std::max(ks, std::max(std::abs(lo), std::abs(hi)));
  }
  out.ks_distance = ks;
  return out;
}

}  // namespace renewal0
