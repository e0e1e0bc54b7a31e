#pragma once

#include "renewal0/common.hpp"

namespace renewal0 {

// Direct is exact summation in doubles; Fft pads to a power of two and
// accumulates in long double before one final rounding per entry. Auto picks
// by operand size. All paths are deterministic for fixed inputs.
enum class ConvBackend { Auto, Direct, Fft };

// c[n] = sum_{i+j=n} a[i] b[j] for 0 <= n < out_len.
ArrayXd convolve(const ArrayXd& a, const ArrayXd& b, Index out_len,
                 ConvBackend backend = ConvBackend::Auto);

// Solves y[n] = x[n] + sum_{j=1}^{n} f[j] y[n-j] for all n < f.size() in one
// forward pass (divide and conquer with convolution pushes). f[0] must be 0;
// x and f must have equal length.
ArrayXd online_convolve(const ArrayXd& f, const ArrayXd& x,
                        ConvBackend backend = ConvBackend::Auto);

// Operand-size product above which Auto switches to the FFT path.
Index conv_auto_cutoff();

}  // namespace renewal0
