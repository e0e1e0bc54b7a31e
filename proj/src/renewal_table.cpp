#include "renewal0/renewal_table.hpp"

#include <algorithm>
#include <cmath>

namespace renewal0 {

RenewalTable renewal_mass(const InterArrival& d, Index N, ConvBackend backend) {
  if (N < 0) throw Error("renewal_mass: N must be nonnegative");
  if (N > d.horizon() && !d.fully_resolved()) {
    throw HorizonExceeded("renewal mass needs the pmf up to N");
  }
  ArrayXd f = ArrayXd::Zero(N + 1);
  Index m = std::min(N, d.horizon());
  f.segment(0, m + 1) = d.pmf_array().segment(0, m + 1);
  ArrayXd x = ArrayXd::Zero(N + 1);
  x[0] = 1.0;
  RenewalTable t;
  t.u = online_convolve(f, x, backend);
  for (Index n = 0; n <= N; ++n) t.u[n] = std::clamp(t.u[n], 0.0, 1.0);
  t.U.resize(N + 1);
  KahanSum s;
  for (Index n = 0; n <= N; ++n) {
    s.add(t.u[n]);
    t.U[n] = s.value();
  }
  return t;
}

InvertResult invert_renewal(const ArrayXd& u) {
  if (u.size() < 1 || u[0] != 1.0) {
    throw Error("invert_renewal: u[0] must be exactly 1");
  }
  const Index N = u.size() - 1;
  InvertResult r;
  r.pmf = ArrayXd::Zero(N + 1);
  for (Index n = 1; n <= N; ++n) {
    double acc = u[n];
    for (Index j = 1; j < n; ++j) acc -= r.pmf[j] * u[n - j];
    r.pmf[n] = acc;
    if (acc < -1e-9) r.negative_pmf = true;
  }
  return r;
}

ArrayXd intersect_renewals(const ArrayXd& u1, const ArrayXd& u2) {
  if (u1.size() != u2.size()) {
    throw Error("intersect_renewals: length mismatch");
  }
  return u1 * u2;
}

double gf_identity_check(const InterArrival& d, const RenewalTable& table,
                         double s) {
  if (!(s > 0.0 && s < 1.0)) throw Error("gf_identity_check: s in (0,1)");
  const Index N = table.u.size() - 1;
  if ((1.0 - s) * static_cast<double>(N) < 40.0) {
    throw TailDominates("series truncation not negligible at this s");
  }
  const double ls = std::log(s);
  KahanSum us, fs;
  for (Index n = 0; n <= N; ++n) {
    double w = std::exp(ls * static_cast<double>(n));
    if (w < 1e-320) break;
    us.add(table.u[n] * w);
    if (n >= 1 && n <= d.horizon()) fs.add(d.pmf(n) * w);
  }
  return std::abs(us.value() * (1.0 - fs.value()) - 1.0);
}

}  // namespace renewal0
