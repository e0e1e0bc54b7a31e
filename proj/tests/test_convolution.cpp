#include "renewal0/convolution.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdint>

using namespace renewal0;

namespace {

// Deterministic LCG so both backends see identical inputs.
double lcg_unit(std::uint64_t& state) {
  state = state * 6364136223846793005ULL + 1442695040888963407ULL;
  return static_cast<double>(state >> 11) * 0x1p-53;
}

ArrayXd random_array(Index n, std::uint64_t seed) {
  ArrayXd a(n);
  std::uint64_t s = seed;
  for (Index i = 0; i < n; ++i) a[i] = lcg_unit(s);
  return a;
}

ArrayXd brute_online(const ArrayXd& f, const ArrayXd& x) {
  const Index N = x.size();
  ArrayXd y(N);
  for (Index n = 0; n < N; ++n) {
    double acc = x[n];
    for (Index j = 1; j <= n; ++j) acc += f[j] * y[n - j];
    y[n] = acc;
  }
  return y;
}

}  // namespace

TEST_CASE("convolve small exact") {
  ArrayXd a(3), b(2);
  a << 1, 2, 3;
  b << 4, 5;
  for (auto backend : {ConvBackend::Direct, ConvBackend::Fft}) {
    ArrayXd c = convolve(a, b, 4, backend);
    REQUIRE(c.size() == 4);
    CHECK(c[0] == doctest::Approx(4).epsilon(1e-14));
    CHECK(c[1] == doctest::Approx(13).epsilon(1e-14));
    CHECK(c[2] == doctest::Approx(22).epsilon(1e-14));
    CHECK(c[3] == doctest::Approx(15).epsilon(1e-14));
  }
}

TEST_CASE("convolve truncation to out_len") {
  ArrayXd a(4), b(4);
  a << 1, 1, 1, 1;
  b << 1, 1, 1, 1;
  ArrayXd c = convolve(a, b, 3, ConvBackend::Direct);
  REQUIRE(c.size() == 3);
  CHECK(c[0] == 1);
  CHECK(c[1] == 2);
  CHECK(c[2] == 3);
  // Asking for more than the full support zero-pads.
  ArrayXd d = convolve(a, b, 9, ConvBackend::Fft);
  REQUIRE(d.size() == 9);
  CHECK(d[6] == doctest::Approx(1).epsilon(1e-13));
  CHECK(std::abs(d[7]) < 1e-12);
  CHECK(std::abs(d[8]) < 1e-12);
}

TEST_CASE("convolve backends agree on random input") {
  ArrayXd a = random_array(700, 12345);
  ArrayXd b = random_array(900, 67890);
  ArrayXd cd = convolve(a, b, 1599, ConvBackend::Direct);
  ArrayXd cf = convolve(a, b, 1599, ConvBackend::Fft);
  double max_rel = 0.0;
  for (Index i = 0; i < cd.size(); ++i) {
    double denom = std::max(std::abs(cd[i]), 1.0);
    max_rel = std::max(max_rel, std::abs(cd[i] - cf[i]) / denom);
  }
  CHECK(max_rel < 1e-12);
}

TEST_CASE("convolve rejects empty input") {
  ArrayXd a(1), e(0);
  a << 1;
  CHECK_THROWS_AS(convolve(e, a, 1), Error);
  CHECK_THROWS_AS(convolve(a, a, 0), Error);
}

TEST_CASE("online_convolve matches brute recursion") {
  const Index N = 500;
  ArrayXd f = random_array(N, 111) * 0.002;  // keep the recursion stable
  f[0] = 0.0;
  ArrayXd x = random_array(N, 222);
  ArrayXd ref = brute_online(f, x);
  for (auto backend : {ConvBackend::Direct, ConvBackend::Fft, ConvBackend::Auto}) {
    ArrayXd y = online_convolve(f, x, backend);
    REQUIRE(y.size() == N);
    double max_rel = 0.0;
    for (Index n = 0; n < N; ++n) {
      double denom = std::max(std::abs(ref[n]), 1e-6);
      max_rel = std::max(max_rel, std::abs(y[n] - ref[n]) / denom);
    }
    CHECK(max_rel < 1e-12);
  }
}

TEST_CASE("online_convolve input validation") {
  ArrayXd f(3), x(2);
  f << 0, 0.5, 0.5;
  x << 1, 0;
  CHECK_THROWS_AS(online_convolve(f, x), Error);
  ArrayXd g(2);
  g << 0.5, 0.5;  // g[0] != 0
  CHECK_THROWS_AS(online_convolve(g, x), Error);
}

TEST_CASE("online_convolve deterministic per backend") {
  ArrayXd f = random_array(300, 9);
  f[0] = 0.0;
  f *= 0.003;
  ArrayXd x = random_array(300, 10);
  for (auto backend : {ConvBackend::Direct, ConvBackend::Fft}) {
    ArrayXd y1 = online_convolve(f, x, backend);
    ArrayXd y2 = online_convolve(f, x, backend);
    for (Index n = 0; n < y1.size(); ++n) CHECK(y1[n] == y2[n]);
  }
}
