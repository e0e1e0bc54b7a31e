#pragma once

#include "renewal0/convolution.hpp"
#include "renewal0/interarrival.hpp"

namespace renewal0 {

struct RenewalTable {
  ArrayXd u;  // u[n] = P(n is a renewal epoch), n = 0..N, u[0] = 1
  ArrayXd U;  // running sums U[n] = u[0] + ... + u[n]
};

// Forward pass of u[n] = sum_{j=1}^n f_j u[n-j], u[0] = 1. Entries are
// clamped to [0, 1] after the pass. Needs the pmf up to N, so N past the
// horizon of an unresolved law throws HorizonExceeded.
RenewalTable renewal_mass(const InterArrival& d, Index N,
                          ConvBackend backend = ConvBackend::Auto);

struct InvertResult {
  ArrayXd pmf;              // reconstructed f[0..N], f[0] = 0
  bool negative_pmf = false;  // some entry fell below -1e-9
};

// Recovers the gap pmf from a renewal mass sequence (u[0] must be 1).
// Entries in [-1e-9, 0) are rounding debris and are kept as computed; the
// flag trips only below that.
InvertResult invert_renewal(const ArrayXd& u);

// Renewal mass of the intersection of two independent renewal sets.
ArrayXd intersect_renewals(const ArrayXd& u1, const ArrayXd& u2);

// |u(s)(1 - f(s)) - 1| with both series truncated at the table length.
// Demands (1 - s) * N >= 40 so the discarded tails are provably negligible;
// otherwise throws TailDominates.
double gf_identity_check(const InterArrival& d, const RenewalTable& table,
                         double s);

}  // namespace renewal0
