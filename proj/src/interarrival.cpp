#include "renewal0/interarrival.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "renewal0/numeric.hpp"

namespace renewal0 {

namespace detail {

struct InterArrivalData {
  Family family = Family::Explicit;
  Index N = 0;
  Index smin = 1;
  double p_inf = 0.0;
  double tail_at_horizon = 0.0;
  ArrayXd f;     // f[0..N], f[0] = 0
  ArrayXd r;     // r[n] = P(tau > n), r[0..N]
  ArrayXd mom1;  // prefix sums of n f_n
  ArrayXd mom2;  // prefix sums of n^2 f_n
  std::optional<double> alpha;
  std::optional<SlowlyVarying> phi;
  double cnorm = 0.0;
  std::shared_ptr<const TailModel> model;
  nlohmann::json spec;
};

}  // namespace detail

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// ---- analytic machinery for the regularly varying family ----------------
// Throughout, g(t) = phi(t) t^-(1+alpha) is the un-normalized pmf shape and
// integrals over [x, inf) are taken in w = log t coordinates:
//   int_x^inf g(t) dt = int_{log x}^inf phi(e^w) e^{-alpha w} dw.

double g_at_log(const SlowlyVarying& phi, double alpha, double u) {
  double ex = -(1.0 + alpha) * u;
  if (ex < -745.0) return 0.0;
  return phi.eval_log(u) * std::exp(ex);
}

// d/dt [phi(t) t^-(1+alpha)] at t = e^u; zero once t overflows.
double g_prime_at_log(const SlowlyVarying& phi, double alpha, double u) {
  if (u > 700.0) return 0.0;
  double t = std::exp(u);
  return g_at_log(phi, alpha, u) * (phi.log_derivative(t) - (1.0 + alpha) / t);
}

QuadResult integrate_two_stage(const std::function<double(double)>& f,
                               double a, double b) {
  if (!(b > a)) return {0.0, 0.0};
  double rough = (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b));
  double tol = std::max(1e-320, std::abs(rough) * 1e-14);
  return integrate_adaptive(f, a, b, tol);
}

// int_V^inf e^{-beta v} v^B dv; continued fraction when safely inside its
// region, segmented quadrature otherwise.
double exp_poly_upper(double B, double beta, double V) {
  if (beta * V >= B + 2.0 && beta * V > 1.0) {
    return std::pow(beta, -(B + 1.0)) * upper_gamma(B + 1.0, beta * V);
  }
  double total = 0.0;
  double lo = V;
  double L = 8.0 / beta;
  for (int seg = 0; seg < 20000; ++seg) {
    auto h = [&](double v) { return std::exp(-beta * v) * std::pow(v, B); };
    double part = integrate_two_stage(h, lo, lo + L).value;
    total += part;
    lo += L;
    if (seg >= 3 && std::abs(part) < 1e-17 * std::abs(total)) break;
  }
  return total;
}

// int_{u_lo}^inf phi(e^w) e^{-aeff w} dw. For aeff = 0 the integrand has no
// decay beyond poly-log, so past the asymptotic threshold the combinator
// tree collapses to K w^A (log w)^B and the integral closes in terms of the
// upper incomplete gamma. Divergent series surface as NotNormalizable.
double tail_integral(const SlowlyVarying& phi, double aeff, double u_lo) {
  if (aeff < 1e-12) {
    double U1 = std::max(u_lo, SlowlyVarying::asym_u0());
    double quad = 0.0;
    if (u_lo < U1) {
      auto f = [&](double w) { return phi.eval_log(w); };
      quad = integrate_two_stage(f, u_lo, U1).value;
    }
    double A = phi.log_exponent();
    double B = phi.loglog_exponent();
    double K = phi.lead();
    double beta = -(A + 1.0);
    double rem;
    if (beta > 1e-12) {
      rem = K * exp_poly_upper(B, beta, std::log(U1));
    } else if (std::abs(A + 1.0) <= 1e-12 && B < -1.0 - 1e-12) {
      rem = K * std::pow(std::log(U1), B + 1.0) / (-(B + 1.0));
    } else {
      throw NotNormalizable("series phi(n) n^-(1+alpha) diverges");
    }
    return quad + rem;
  }
  double total = 0.0;
  double lo = u_lo;
  double L = std::min(8.0 / aeff, 64.0);
  for (int seg = 0; seg < 20000; ++seg) {
    auto f = [&](double w) { return phi.eval_log(w) * std::exp(-aeff * (w - u_lo)); };
    double part = integrate_two_stage(f, lo, lo + L).value;
    total += part;
    lo += L;
    if (seg >= 3 && std::abs(part) < 1e-17 * std::abs(total)) break;
  }
  return total;
}

// Note: for aeff > 0 the returned value is int phi e^{-aeff (w - u_lo)} dw,
// i.e. the factor e^{-aeff u_lo} is factored out to avoid underflow; callers
// that need the raw integral multiply it back.
double tail_integral_raw(const SlowlyVarying& phi, double aeff, double u_lo) {
  double v = tail_integral(phi, aeff, u_lo);
  if (aeff < 1e-12) return v;
  double ex = -aeff * u_lo;
  if (ex < -745.0) return 0.0;
  return v * std::exp(ex);
}

// Euler-Maclaurin completion of sum_{n >= a} g(n) given the integral part:
// + g(a)/2 - g'(a)/12; the next term is ~ g'''(a)/720 and is used only as an
// error estimate.
double em_terms(const SlowlyVarying& phi, double alpha, double u_a) {
  return 0.5 * g_at_log(phi, alpha, u_a) - g_prime_at_log(phi, alpha, u_a) / 12.0;
}

double em_error_estimate(const SlowlyVarying& phi, double alpha, double a) {
  double h = std::max(1.0, 0.01 * a);
  auto gp = [&](double t) { return g_prime_at_log(phi, alpha, std::log(t)); };
  double g3 = (gp(a + h) - 2.0 * gp(a) + gp(a - h)) / (h * h);
  return 4.0 * std::abs(g3) / 720.0;
}

// ---- tail models ---------------------------------------------------------

// Regularly varying completion: r~(x) = r_N * R(x)/R(N) with
// R(x) = int_x^inf g + g(x)/2 - g'(x)/12, tabulated as a piecewise-linear
// function of (log log x, log R). The quantile is the exact inverse of the
// same interpolant, so sampling and evaluation agree by construction.
class RegVarTail : public TailModel {
 public:
  RegVarTail(double alpha, SlowlyVarying phi, double cs, double x0, double r0)
      : TailModel(x0, r0), alpha_(alpha), phi_(std::move(phi)), cs_(cs) {
    build_table();
  }

  double tail_log(double u) const override {
    double u0 = std::log(x0_);
    if (u < u0) u = u0;
    double w = std::log(u);
    return r0_ * std::exp(interp_y(w) - lnRt0_);
  }

  double quantile_log(double v) const override {
    if (!(v > 0.0)) throw Error("tail quantile: v must be positive");
    if (v >= r0_) return std::log(x0_);
    double yt = lnRt0_ + std::log(v / r0_);
    double w = invert_y(yt);
    if (w > 690.0) return kInf;  // gap magnitude beyond double range
    return std::exp(w);
  }

  Correction laplace_tail(double l) const override {
    double a = x0_ + 1.0;
    if (l * a > 740.0) return {0.0, 0.0};
    auto gg = [&](double t) { return g_at_log(phi_, alpha_, std::log(t)); };
    double pref = cs_ * std::exp(-l * a) / l;
    auto h = [&](double s) { return gg(a + s / l) * std::exp(-s); };
    QuadResult q = integrate_two_stage(h, 0.0, 60.0);
    double Ga = cs_ * gg(a) * std::exp(-l * a);
    double Gpa = Ga * (phi_.log_derivative(a) - (1.0 + alpha_) / a - l);
    double value = pref * q.value + 0.5 * Ga - Gpa / 12.0;
    double err = pref * (q.error + 2.0 * std::exp(-60.0) * std::abs(h(59.0))) +
                 std::abs(Ga) * 1e-6;
    return {std::max(value, 0.0), err};
  }

  Correction laplace_tail_t(double l) const override {
    double a = x0_ + 1.0;
    if (l * a > 740.0) return {0.0, 0.0};
    auto gg = [&](double t) { return t * g_at_log(phi_, alpha_, std::log(t)); };
    double pref = cs_ * std::exp(-l * a) / l;
    auto h = [&](double s) { return gg(a + s / l) * std::exp(-s); };
    QuadResult q = integrate_two_stage(h, 0.0, 60.0);
    double Ga = cs_ * gg(a) * std::exp(-l * a);
    double Gpa = Ga * (phi_.log_derivative(a) - alpha_ / a - l);
    double value = pref * q.value + 0.5 * Ga - Gpa / 12.0;
    double err = pref * (q.error + 2.0 * std::exp(-60.0) * std::abs(h(59.0))) +
                 std::abs(Ga) * 1e-6;
    return {std::max(value, 0.0), err};
  }

  double first_moment_tail() const override {
    if (alpha_ < 1.0 - 1e-12) return kInf;
    double a = x0_ + 1.0;
    double I;
    try {
      I = tail_integral_raw(phi_, alpha_ - 1.0, std::log(a));
    } catch (const NotNormalizable&) {
      return kInf;
    }
    double G2a = cs_ * a * g_at_log(phi_, alpha_, std::log(a));
    double G2pa = G2a * (phi_.log_derivative(a) - alpha_ / a);
    return cs_ * I + 0.5 * G2a - G2pa / 12.0;
  }

 private:
  double rt_direct(double u) const {
    return tail_integral_raw(phi_, alpha_, u) + em_terms(phi_, alpha_, u);
  }

  void build_table() {
    double u0 = std::log(x0_);
    double rt0 = rt_direct(u0);
    if (!(rt0 > 0.0)) throw Error("tail model: vanishing tail at horizon");
    double floor = rt0 * 1e-17;
    double u_hi = u0 + 2.0;
    for (int it = 0; it < 600 && rt_direct(u_hi) > floor; ++it) {
      u_hi = u_hi * 1.3 + 1.0;
    }
    double w0 = std::log(u0), w1 = std::log(u_hi);
    Index M = std::clamp<Index>(static_cast<Index>((w1 - w0) / 0.02) + 1, 64,
                                20000);
    w_.resize(M + 1);
    y_.resize(M + 1);
    double dw = (w1 - w0) / static_cast<double>(M);
    for (Index j = 0; j <= M; ++j) w_[j] = w0 + dw * static_cast<double>(j);
    // One backward sweep accumulates the integral part; each cell uses a
    // fixed composite Simpson rule so the table is deterministic.
    std::vector<double> I(M + 1);
    I[M] = tail_integral_raw(phi_, alpha_, std::exp(w_[M]));
    auto f = [&](double w) {
      double u = std::exp(w);
      double ex = -alpha_ * u;
      if (ex < -745.0) return 0.0;
      return phi_.eval_log(u) * std::exp(ex) * u;
    };
    for (Index j = M; j-- > 0;) {
      double lo = w_[j], hi = w_[j + 1];
      double seg = 0.0;
      const int panels = 8;
      double step = (hi - lo) / panels;
      for (int p = 0; p < panels; ++p) {
        double a = lo + p * step, b = a + step;
        seg += step / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b));
      }
      I[j] = I[j + 1] + seg;
    }
    for (Index j = 0; j <= M; ++j) {
      double u = std::exp(w_[j]);
      double val = I[j] + em_terms(phi_, alpha_, u);
      if (!(val > 0.0)) throw Error("tail model: non-positive shape value");
      y_[j] = std::log(val);
    }
    for (Index j = 0; j + 1 <= M; ++j) {
      if (!(y_[j + 1] < y_[j])) throw Error("tail model: shape not decreasing");
    }
    lnRt0_ = y_[0];
  }

  double interp_y(double w) const {
    if (w <= w_.front()) return y_.front();
    if (w >= w_.back()) {
      size_t b = w_.size() - 1;
      double slope = (y_[b] - y_[b - 1]) / (w_[b] - w_[b - 1]);
      return y_[b] + slope * (w - w_[b]);
    }
    size_t j = static_cast<size_t>(
        std::upper_bound(w_.begin(), w_.end(), w) - w_.begin()) - 1;
    double t = (w - w_[j]) / (w_[j + 1] - w_[j]);
    return y_[j] + t * (y_[j + 1] - y_[j]);
  }

  double invert_y(double yt) const {
    if (yt >= y_.front()) return w_.front();
    if (yt <= y_.back()) {
      size_t b = w_.size() - 1;
      double slope = (y_[b] - y_[b - 1]) / (w_[b] - w_[b - 1]);
      return w_[b] + (yt - y_[b]) / slope;
    }
    // y_ is strictly decreasing; find the cell containing yt.
    size_t lo = 0, hi = y_.size() - 1;
    while (hi - lo > 1) {
      size_t mid = (lo + hi) / 2;
      if (y_[mid] > yt) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    double t = (yt - y_[lo]) / (y_[hi] - y_[lo]);
    return w_[lo] + t * (w_[hi] - w_[lo]);
  }

  double alpha_;
  SlowlyVarying phi_;
  double cs_;
  std::vector<double> w_, y_;
  double lnRt0_ = 0.0;
};

// Defective wrapper: r(x) = p_inf + (1-p_inf) r_base(x).
class DefectiveTail : public TailModel {
 public:
  DefectiveTail(std::shared_ptr<const TailModel> base, double p_inf)
      : TailModel(base->x0(), p_inf + (1.0 - p_inf) * base->tail_at_x0()),
        base_(std::move(base)),
        p_(p_inf) {}

  double tail_log(double u) const override {
    return p_ + (1.0 - p_) * base_->tail_log(u);
  }
  double quantile_log(double v) const override {
    if (v <= p_) return kInf;  // inside the defect atom
    return base_->quantile_log((v - p_) / (1.0 - p_));
  }
  Correction laplace_tail(double l) const override {
    Correction c = base_->laplace_tail(l);
    return {(1.0 - p_) * c.value, (1.0 - p_) * c.error};
  }
  Correction laplace_tail_t(double l) const override {
    Correction c = base_->laplace_tail_t(l);
    return {(1.0 - p_) * c.value, (1.0 - p_) * c.error};
  }
  double first_moment_tail() const override {
    return (1.0 - p_) * base_->first_moment_tail();
  }

 private:
  std::shared_ptr<const TailModel> base_;
  double p_;
};

// Interleaved wrapper: gaps are 1 or twice a sigma-gap, so beyond the horizon
// r(x) = r_sigma(x/2)/2 and the Laplace tail contracts to the sigma model at
// doubled argument.
class InterleavedTail : public TailModel {
 public:
  explicit InterleavedTail(std::shared_ptr<const TailModel> sigma)
      : TailModel(2.0 * sigma->x0(), 0.5 * sigma->tail_at_x0()),
        sigma_(std::move(sigma)) {}

  double tail_log(double u) const override {
    return 0.5 * sigma_->tail_log(u - std::log(2.0));
  }
  double quantile_log(double v) const override {
    double u = sigma_->quantile_log(2.0 * v);
    return u + std::log(2.0);
  }
  Correction laplace_tail(double l) const override {
    Correction c = sigma_->laplace_tail(2.0 * l);
    return {0.5 * c.value, 0.5 * c.error};
  }
  Correction laplace_tail_t(double l) const override {
    return sigma_->laplace_tail_t(2.0 * l);
  }
  double first_moment_tail() const override {
    return sigma_->first_moment_tail();
  }

 private:
  std::shared_ptr<const TailModel> sigma_;
};

void fill_moment_prefixes(detail::InterArrivalData& d) {
  d.mom1.resize(d.N + 1);
  d.mom2.resize(d.N + 1);
  KahanSum m1, m2;
  d.mom1[0] = 0.0;
  d.mom2[0] = 0.0;
  for (Index n = 1; n <= d.N; ++n) {
    double x = static_cast<double>(n);
    m1.add(x * d.f[n]);
    m2.add(x * x * d.f[n]);
    d.mom1[n] = m1.value();
    d.mom2[n] = m2.value();
  }
}

void fill_tail_backward(detail::InterArrivalData& d, double r_at_N) {
  d.r.resize(d.N + 1);
  d.r[d.N] = r_at_N;
  for (Index n = d.N; n-- > 0;) d.r[n] = d.r[n + 1] + d.f[n + 1];
}

void check_mass(const detail::InterArrivalData& d) {
  KahanSum s;
  for (Index n = 1; n <= d.N; ++n) s.add(d.f[n]);
  double total = s.value() + d.tail_at_horizon + d.p_inf;
  if (std::abs(total - 1.0) > 1e-12) {
    throw NotNormalizable("mass conservation violated at build");
  }
}

}  // namespace

// ---- InterArrival --------------------------------------------------------

InterArrival::InterArrival(detail::InterArrivalData&& data)
    : d_(std::make_shared<const detail::InterArrivalData>(std::move(data))) {}

Family InterArrival::family() const { return d_->family; }
Index InterArrival::horizon() const { return d_->N; }
Index InterArrival::support_min() const { return d_->smin; }
double InterArrival::defect() const { return d_->p_inf; }
double InterArrival::tail_at_horizon() const { return d_->tail_at_horizon; }
bool InterArrival::fully_resolved() const { return d_->tail_at_horizon == 0.0; }
const ArrayXd& InterArrival::pmf_array() const { return d_->f; }
const std::shared_ptr<const TailModel>& InterArrival::tail_model() const {
  return d_->model;
}
std::optional<double> InterArrival::alpha() const { return d_->alpha; }
bool InterArrival::has_phi() const { return d_->phi.has_value(); }
const SlowlyVarying& InterArrival::phi_tag() const {
  if (!d_->phi) throw Error("distribution carries no slowly varying tag");
  return *d_->phi;
}
double InterArrival::norm_const() const { return d_->cnorm; }
const nlohmann::json& InterArrival::spec_json() const { return d_->spec; }

double InterArrival::pmf(Index n) const {
  if (n <= 0) return 0.0;
  if (n <= d_->N) return d_->f[n];
  if (fully_resolved()) return 0.0;
  throw HorizonExceeded("pmf query past horizon of an unresolved law");
}

double InterArrival::tail(Index n) const {
  if (n < 0) return 1.0;
  if (n <= d_->N) return d_->r[n];
  if (fully_resolved()) return d_->p_inf;
  if (d_->model) return d_->model->tail(static_cast<double>(n));
  throw HorizonExceeded("tail query past horizon of an unresolved law");
}

double InterArrival::tail_real(double x) const {
  if (x < 0.0) return 1.0;
  if (x <= static_cast<double>(d_->N)) {
    return d_->r[static_cast<Index>(std::floor(x))];
  }
  if (fully_resolved()) return d_->p_inf;
  if (d_->model) return d_->model->tail(x);
  throw HorizonExceeded("tail query past horizon of an unresolved law");
}

double InterArrival::tail_log(double u) const {
  double lnN = std::log(static_cast<double>(d_->N));
  if (u <= lnN) return tail_real(std::exp(u));
  if (fully_resolved()) return d_->p_inf;
  if (d_->model) return d_->model->tail_log(u);
  throw HorizonExceeded("tail query past horizon of an unresolved law");
}

SlowlyVarying InterArrival::phi_func() const {
  if (!d_->phi) throw Error("distribution carries no slowly varying tag");
  return SlowlyVarying::product(
      {SlowlyVarying::constant(d_->cnorm), *d_->phi});
}

double InterArrival::phi_at(Index n) const {
  if (!d_->alpha || !d_->phi) {
    throw RegimeUnknown("phi requested without regular variation tags");
  }
  if (n < 1) return 0.0;
  if (n <= d_->N) {
    return d_->f[n] * std::pow(static_cast<double>(n), 1.0 + *d_->alpha);
  }
  return d_->cnorm * (*d_->phi)(static_cast<double>(n));
}

double InterArrival::truncated_moment(Index m, int j) const {
  if (m > d_->N) throw HorizonExceeded("truncated moment past horizon");
  if (m < 0) m = 0;
  if (j == 1) return d_->mom1[m];
  if (j == 2) return d_->mom2[m];
  throw Error("truncated_moment: j must be 1 or 2");
}

double InterArrival::mean_truncated_at(Index n) const {
  if (n > d_->N) throw HorizonExceeded("truncated mean past horizon");
  return d_->mom1[n] + static_cast<double>(n) * d_->r[n];
}

double InterArrival::mean() const {
  if (d_->p_inf > 0.0) return kInf;
  if (d_->alpha) {
    double a = *d_->alpha;
    if (a < 1.0 - 1e-12) return kInf;
    if (!d_->model) throw HorizonExceeded("mean needs the tail completion");
    double t = d_->model->first_moment_tail();
    if (std::isinf(t)) return kInf;
    return d_->mom1[d_->N] + t;
  }
  if (fully_resolved()) return d_->mom1[d_->N];
  throw HorizonExceeded("mean not resolvable within horizon");
}

LaplacePair InterArrival::laplace(double lambda) const {
  if (!(lambda > 0.0)) throw Error("laplace: lambda must be positive");
  KahanSum s0, s1;
  for (Index n = d_->smin; n <= d_->N; ++n) {
    double ex = -lambda * static_cast<double>(n);
    if (ex < -745.0) break;
    double e = d_->f[n] * std::exp(ex);
    s0.add(e);
    s1.add(static_cast<double>(n) * e);
  }
  TailModel::Correction t0, t1;
  if (d_->tail_at_horizon > 0.0) {
    if (d_->model) {
      t0 = d_->model->laplace_tail(lambda);
      t1 = d_->model->laplace_tail_t(lambda);
    } else {
      double Np1 = static_cast<double>(d_->N) + 1.0;
      double b0 = d_->tail_at_horizon * std::exp(-lambda * Np1);
      t0 = {0.5 * b0, 0.5 * b0};
      // sup_{n > N} n e^{-lambda n}: attained at N+1 once lambda(N+1) >= 1,
      // at 1/lambda otherwise.
      double sup = lambda * Np1 >= 1.0 ? Np1 * std::exp(-lambda * Np1)
                                       : std::exp(-1.0) / lambda;
      double b1 = d_->tail_at_horizon * sup;
      t1 = {0.5 * b1, 0.5 * b1};
    }
  }
  LaplacePair out;
  out.lambda = lambda;
  out.nu = 1.0 - s0.value() - t0.value;
  out.nu_prime = s1.value() + t1.value;
  out.nu_error = t0.error;
  out.nu_prime_error = t1.error;
  if (t0.error > 1e-8 * std::max(out.nu, 1e-300) ||
      t1.error > 1e-8 * std::max(out.nu_prime, 1e-300)) {
    throw TailDominates("horizon tail correction exceeds 1e-8 relative");
  }
  return out;
}

// ---- builders ------------------------------------------------------------

InterArrival build_regvar(double alpha, const SlowlyVarying& phi,
                          Index support_min, Index horizon) {
  if (alpha < 0.0) throw Error("build_regvar: alpha must be >= 0");
  if (support_min < 1) throw Error("build_regvar: support_min must be >= 1");
  if (horizon < 10 * support_min) {
    throw Error("build_regvar: horizon must be at least 10 * support_min");
  }
  // Summability gate before any summation work.
  if (alpha < 1e-12) {
    double A = phi.log_exponent(), B = phi.loglog_exponent();
    bool ok = A < -1.0 - 1e-12 ||
              (std::abs(A + 1.0) <= 1e-12 && B < -1.0 - 1e-12);
    if (!ok) throw NotNormalizable("alpha = 0 with non-summable phi");
  }

  auto g = [&](Index n) {
    double x = static_cast<double>(n);
    return phi(x) * std::pow(x, -(1.0 + alpha));
  };
  KahanSum sn;
  for (Index n = support_min; n <= horizon; ++n) sn.add(g(n));

  // Extend the direct sum until the Euler-Maclaurin remainder at the cut is
  // certifiably below 1e-14 of the total; the remainder itself is added
  // analytically.
  KahanSum sb;
  Index np = 2 * horizon;
  for (Index n = horizon + 1; n <= np; ++n) sb.add(g(n));
  double rem = 0.0;
  for (int round = 0; round < 24; ++round) {
    double a = static_cast<double>(np) + 1.0;
    rem = tail_integral_raw(phi, alpha, std::log(a)) + em_terms(phi, alpha, std::log(a));
    double est = em_error_estimate(phi, alpha, a);
    double total = sn.value() + sb.value() + rem;
    if (est <= 1e-14 * total || np >= (Index{1} << 26)) break;
    Index next = np * 2;
    for (Index n = np + 1; n <= next; ++n) sb.add(g(n));
    np = next;
  }

  double total = sn.value() + sb.value() + rem;
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw NotNormalizable("normalization failed");
  }
  double C = 1.0 / total;

  detail::InterArrivalData d;
  d.family = Family::RegVar;
  d.N = horizon;
  d.smin = support_min;
  d.f = ArrayXd::Zero(horizon + 1);
  for (Index n = support_min; n <= horizon; ++n) d.f[n] = C * g(n);
  d.tail_at_horizon = C * (sb.value() + rem);
  fill_tail_backward(d, d.tail_at_horizon);
  fill_moment_prefixes(d);
  d.alpha = alpha;
  d.phi = phi;
  d.cnorm = C;
  d.model = std::make_shared<RegVarTail>(alpha, phi, C,
                                         static_cast<double>(horizon),
                                         d.tail_at_horizon);
  d.spec = {{"family", "regvar"},
            {"alpha", alpha},
            {"phi", phi.to_json()},
            {"support_min", support_min},
            {"horizon", horizon}};
  check_mass(d);
  return InterArrival(std::move(d));
}

InterArrival build_defective(const InterArrival& base, double p_inf) {
  if (!(p_inf > 0.0 && p_inf < 1.0)) {
    throw Error("build_defective: p_inf must lie in (0,1)");
  }
  if (base.defect() != 0.0) throw Error("build_defective: base must be recurrent");
  detail::InterArrivalData d;
  d.family = Family::Defective;
  d.N = base.horizon();
  d.smin = base.support_min();
  d.p_inf = p_inf;
  d.f = (1.0 - p_inf) * base.pmf_array();
  d.tail_at_horizon = (1.0 - p_inf) * base.tail_at_horizon();
  fill_tail_backward(d, p_inf + d.tail_at_horizon);
  fill_moment_prefixes(d);
  d.alpha = base.alpha();
  if (base.has_phi()) d.phi = base.phi_tag();
  d.cnorm = (1.0 - p_inf) * base.norm_const();
  if (base.tail_model()) {
    d.model = std::make_shared<DefectiveTail>(base.tail_model(), p_inf);
  }
  d.spec = {{"family", "defective"}, {"p_inf", p_inf}, {"base", base.spec_json()}};
  check_mass(d);
  return InterArrival(std::move(d));
}

InterArrival build_interleaved(const InterArrival& sigma) {
  if (sigma.defect() != 0.0) {
    throw Error("build_interleaved: sigma must be recurrent");
  }
  if (!sigma.alpha() || std::abs(*sigma.alpha()) > 1e-12) {
    throw Error("build_interleaved: sigma must carry an alpha = 0 tag");
  }
  detail::InterArrivalData d;
  d.family = Family::Interleaved;
  Index Ns = sigma.horizon();
  d.N = 2 * Ns;
  d.smin = 1;
  d.f = ArrayXd::Zero(d.N + 1);
  d.f[1] = 0.5;
  for (Index m = 1; m <= Ns; ++m) d.f[2 * m] = 0.5 * sigma.pmf_array()[m];
  d.tail_at_horizon = 0.5 * sigma.tail_at_horizon();
  // P(tau > n) = P(2 sigma > n)/2 = r_sigma(floor(n/2))/2 for n >= 1; this
  // closed form keeps r(n) - r(n+1) = f_{n+1} exact in floating point.
  d.r.resize(d.N + 1);
  d.r[0] = 1.0;
  for (Index n = 1; n <= d.N; ++n) d.r[n] = 0.5 * sigma.tail(n / 2);
  fill_moment_prefixes(d);
  if (sigma.tail_model()) {
    d.model = std::make_shared<InterleavedTail>(sigma.tail_model());
  }
  d.spec = {{"family", "interleaved"}, {"sigma", sigma.spec_json()}};
  check_mass(d);
  return InterArrival(std::move(d));
}

InterArrival build_explicit(const ArrayXd& pmf_from_1, double p_inf) {
  if (pmf_from_1.size() < 1) throw Error("build_explicit: empty pmf");
  if (!(p_inf >= 0.0 && p_inf < 1.0)) {
    throw Error("build_explicit: p_inf must lie in [0,1)");
  }
  detail::InterArrivalData d;
  d.family = Family::Explicit;
  d.N = pmf_from_1.size();
  d.p_inf = p_inf;
  d.f = ArrayXd::Zero(d.N + 1);
  Index smin = 0;
  Index period = 0;
  KahanSum s;
  for (Index n = 1; n <= d.N; ++n) {
    double v = pmf_from_1[n - 1];
    if (v < 0.0) throw NotNormalizable("negative pmf entry");
    d.f[n] = v;
    if (v > 0.0) {
      if (smin == 0) smin = n;
      period = std::gcd(period, n);
      s.add(v);
    }
  }
  if (smin == 0) throw NotNormalizable("pmf has no support");
  if (period > 1) throw PeriodicInput("support gcd exceeds 1");
  d.smin = smin;
  double resolved = s.value() + p_inf;
  if (resolved > 1.0 + 1e-12) throw NotNormalizable("mass exceeds 1");
  d.tail_at_horizon = std::max(0.0, 1.0 - resolved);
  if (d.tail_at_horizon < 1e-12) d.tail_at_horizon = 0.0;
  fill_tail_backward(d, d.p_inf + d.tail_at_horizon);
  fill_moment_prefixes(d);
  std::vector<double> pv(pmf_from_1.data(), pmf_from_1.data() + pmf_from_1.size());
  d.spec = {{"family", "explicit"}, {"pmf", pv}, {"p_inf", p_inf}};
  check_mass(d);
  return InterArrival(std::move(d));
}

InterArrival d0_family(Index horizon) {
  return build_regvar(0.0, SlowlyVarying::log_pow(-2.0), 1, horizon);
}

InterArrival ssrw_z2_family(Index horizon) {
  SlowlyVarying phi = SlowlyVarying::product(
      {SlowlyVarying::constant(std::acos(-1.0)), SlowlyVarying::log_pow(-2.0)});
  return build_regvar(0.0, phi, 1, horizon);
}

InterArrival alpha_half_family(Index horizon) {
  return build_regvar(0.5, SlowlyVarying::constant(1.0), 1, horizon);
}

InterArrival uniform12() {
  ArrayXd p(2);
  p << 0.5, 0.5;
  return build_explicit(p);
}

InterArrival delta1() {
  ArrayXd p(1);
  p << 1.0;
  return build_explicit(p);
}

InterArrival distribution_from_json(const nlohmann::json& spec) {
  const std::string family = spec.at("family").get<std::string>();
  if (family == "regvar") {
    return build_regvar(spec.at("alpha").get<double>(),
                        SlowlyVarying::from_json(spec.at("phi")),
                        spec.value("support_min", Index{1}),
                        spec.at("horizon").get<Index>());
  }
  if (family == "defective") {
    return build_defective(distribution_from_json(spec.at("base")),
                           spec.at("p_inf").get<double>());
  }
  if (family == "interleaved") {
    return build_interleaved(distribution_from_json(spec.at("sigma")));
  }
  if (family == "explicit") {
    const auto& arr = spec.at("pmf");
    ArrayXd p(arr.size());
    for (size_t i = 0; i < arr.size(); ++i) p[i] = arr[i].get<double>();
    return build_explicit(p, spec.value("p_inf", 0.0));
  }
  if (family == "named") {
    const std::string name = spec.at("name").get<std::string>();
    Index horizon = spec.value("horizon", Index{100000});
    if (name == "d0") return d0_family(horizon);
    if (name == "ssrw-z2") return ssrw_z2_family(horizon);
    if (name == "alpha-half") return alpha_half_family(horizon);
    if (name == "uniform12") return uniform12();
    if (name == "delta1") return delta1();
    throw BadConfig("unknown named distribution: " + name);
  }
  throw BadConfig("unknown distribution family: " + family);
}

}  // namespace renewal0
