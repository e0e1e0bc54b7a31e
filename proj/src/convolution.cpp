#include "renewal0/convolution.hpp"

#include <algorithm>
#include <complex>
#include <vector>

#include <unsupported/Eigen/FFT>

namespace renewal0 {

namespace {

Index next_pow2(Index n) {
  Index p = 1;
  while (p < n) p <<= 1;
  return p;
}

void conv_direct(const double* a, Index la, const double* b, Index lb,
                 double* out, Index out_len) {
  for (Index i = 0; i < la && i < out_len; ++i) {
    double ai = a[i];
    if (ai == 0.0) continue;
    Index jmax = std::min(lb, out_len - i);
    for (Index j = 0; j < jmax; ++j) out[i + j] += ai * b[j];
  }
}

void conv_fft(const double* a, Index la, const double* b, Index lb,
              double* out, Index out_len) {
  Index full = la + lb - 1;
  Index L = next_pow2(full);
  static thread_local Eigen::FFT<long double> fft;
  std::vector<long double> ta(L, 0.0L), tb(L, 0.0L);
  for (Index i = 0; i < la; ++i) ta[i] = a[i];
  for (Index i = 0; i < lb; ++i) tb[i] = b[i];
  std::vector<std::complex<long double>> fa, fb;
  fft.fwd(fa, ta);
  fft.fwd(fb, tb);
  for (Index i = 0; i < L; ++i) fa[i] *= fb[i];
  std::vector<long double> res;
  fft.inv(res, fa);
  Index m = std::min(out_len, full);
  for (Index i = 0; i < m; ++i) out[i] += static_cast<double>(res[i]);
}

bool use_direct(Index la, Index lb, ConvBackend backend) {
  if (backend == ConvBackend::Direct) return true;
  if (backend == ConvBackend::Fft) return false;
  return la * lb <= conv_auto_cutoff();
}

}  // namespace

Index conv_auto_cutoff() { return Index{1} << 21; }

ArrayXd convolve(const ArrayXd& a, const ArrayXd& b, Index out_len,
                 ConvBackend backend) {
  if (a.size() == 0 || b.size() == 0 || out_len <= 0) {
    throw Error("convolve: empty operand or nonpositive out_len");
  }
  ArrayXd out = ArrayXd::Zero(out_len);
  if (use_direct(a.size(), b.size(), backend)) {
    conv_direct(a.data(), a.size(), b.data(), b.size(), out.data(), out_len);
  } else {
    conv_fft(a.data(), a.size(), b.data(), b.size(), out.data(), out_len);
  }
  return out;
}

ArrayXd online_convolve(const ArrayXd& f, const ArrayXd& x,
                        ConvBackend backend) {
  if (f.size() != x.size()) {
    throw Error("online_convolve: operand lengths differ");
  }
  if (f.size() == 0) return ArrayXd();
  if (f[0] != 0.0) throw Error("online_convolve: f[0] must be 0");
  const Index N = f.size();
  ArrayXd y = x;
  const Index leaf = 64;
  auto rec = [&](auto&& self, Index l, Index r) -> void {
    if (r - l <= leaf) {
      for (Index n = l; n < r; ++n) {
        double acc = y[n];
        for (Index i = l; i < n; ++i) acc += y[i] * f[n - i];
        y[n] = acc;
      }
      return;
    }
    Index mid = l + (r - l) / 2;
    self(self, l, mid);
    // Push contributions of the finished half onto (mid, r): the product
    // y[l..mid) * f[1..r-l-1] lands at offsets l+1+t.
    ArrayXd A = y.segment(l, mid - l);
    ArrayXd B = f.segment(1, r - l - 1);
    ArrayXd C = convolve(A, B, r - l - 1, backend);
    for (Index t = mid - l - 1; t < r - l - 1; ++t) y[l + 1 + t] += C[t];
    self(self, mid, r);
  };
  rec(rec, 0, N);
  return y;
}

}  // namespace renewal0
