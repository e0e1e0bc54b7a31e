#include "renewal0/numeric.hpp"

#include <cmath>
#include <limits>

namespace renewal0 {

namespace {

QuadResult adapt(const std::function<double(double)>& f, double a, double b,
                 double fa, double fm, double fb, double whole, double tol,
                 int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
    return {left + right + delta / 15.0, std::abs(delta) / 15.0};
  }
  QuadResult l = adapt(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1);
  QuadResult r = adapt(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
  return {l.value + r.value, l.error + r.error};
}

}  // namespace

QuadResult integrate_adaptive(const std::function<double(double)>& f, double a,
                              double b, double abs_tol, int max_depth) {
  if (!(b > a)) return {0.0, 0.0};
  double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adapt(f, a, b, fa, fm, fb, whole, abs_tol, max_depth);
}

double upper_gamma(double a, double x) {
  if (!(x > 0.0)) throw Error("upper_gamma: x must be positive");
  if (x < a + 1.0) {
    throw Error("upper_gamma: continued fraction needs x >= a + 1");
  }
  // Gamma(a,x) = exp(-x) x^a * CF, CF via modified Lentz.
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 400; ++i) {
    double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x)) * h;
}

double chi2_quantile(double p, double df) {
  double z = normal_quantile(p);
  double t = 1.0 - 2.0 / (9.0 * df) + z * std::sqrt(2.0 / (9.0 * df));
  return df * t * t * t;
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error("normal_quantile: p in (0,1)");
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  if (p < plow) {
    double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - plow) return -normal_quantile(1.0 - p);
  double q = p - 0.5, r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

double bisect_decreasing(const std::function<double(double)>& g, double lo,
                         double hi, double target, double rel_tol) {
  double glo = g(lo), ghi = g(hi);
  if (!(glo >= target && target >= ghi)) {
    throw NonMonotoneBracket("bisect_decreasing: target not bracketed");
  }
  for (int it = 0; it < 400; ++it) {
    double mid = 0.5 * (lo + hi);
    double gm = g(mid);
    if (std::abs(gm - target) <= rel_tol * std::abs(target)) return mid;
    if (gm > target) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(mid)) {
      return mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace renewal0
