#include "renewal0/renewal_table.hpp"

#include <doctest.h>

#include <cmath>

#include "renewal0/interarrival.hpp"

using namespace renewal0;

TEST_CASE("delta1 renewal mass is identically one") {
  auto d = delta1();
  auto t = renewal_mass(d, 50);
  for (Index n = 0; n <= 50; ++n) CHECK(t.u[n] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(t.U[50] == doctest::Approx(51.0).epsilon(1e-13));
}

TEST_CASE("uniform12 renewal mass closed form") {
  // u_n = 2/3 + (-1/2)^n / 3 for the fair {1,2} law.
  auto d = uniform12();
  auto t = renewal_mass(d, 30);
  CHECK(t.u[0] == 1.0);
  for (Index n = 1; n <= 30; ++n) {
    double expect = 2.0 / 3.0 + std::pow(-0.5, static_cast<double>(n)) / 3.0;
    CHECK(t.u[n] == doctest::Approx(expect).epsilon(1e-14));
  }
  CHECK(t.u[1] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(t.u[2] == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(t.u[3] == doctest::Approx(0.625).epsilon(1e-15));
}

TEST_CASE("renewal mass backends agree") {
  auto d = d0_family(4000);
  auto td = renewal_mass(d, 4000, ConvBackend::Direct);
  auto tf = renewal_mass(d, 4000, ConvBackend::Fft);
  double max_abs = 0.0;
  for (Index n = 0; n <= 4000; ++n) {
    max_abs = std::max(max_abs, std::abs(td.u[n] - tf.u[n]));
  }
  CHECK(max_abs < 1e-10);
}

TEST_CASE("renewal mass past horizon") {
  ArrayXd two(2);
  two << 0.5, 0.5;
  auto d = build_explicit(two);  // resolved, support {1,2}
  auto t = renewal_mass(d, 10);
  CHECK(t.u[10] == doctest::Approx(2.0 / 3.0 + std::pow(-0.5, 10.0) / 3.0).epsilon(1e-14));
  auto u = build_regvar(0.0, SlowlyVarying::log_pow(-2.0), 1, 100);
  CHECK_THROWS_AS(renewal_mass(u, 200), HorizonExceeded);
}

TEST_CASE("invert recovers the fair two point law") {
  ArrayXd u(4);
  u << 1.0, 0.5, 0.75, 0.625;
  auto r = invert_renewal(u);
  CHECK_FALSE(r.negative_pmf);
  CHECK(r.pmf[0] == 0.0);
  CHECK(r.pmf[1] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(r.pmf[2] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(std::abs(r.pmf[3]) < 1e-15);
}

TEST_CASE("invert round trips a heavy tailed mass sequence") {
  auto d = d0_family(2000);
  auto t = renewal_mass(d, 2000);
  auto r = invert_renewal(t.u);
  CHECK_FALSE(r.negative_pmf);
  double max_abs = 0.0;
  for (Index n = 1; n <= 2000; ++n) {
    max_abs = std::max(max_abs, std::abs(r.pmf[n] - d.pmf(n)));
  }
  CHECK(max_abs < 1e-10);
}

TEST_CASE("invert flags an inconsistent sequence") {
  ArrayXd u(4);
  u << 1.0, 0.9, 0.1, 0.9;  // u[2] far too small for u[1] = 0.9
  auto r = invert_renewal(u);
  CHECK(r.negative_pmf);
  ArrayXd bad(2);
  bad << 0.99, 0.5;
  CHECK_THROWS_AS(invert_renewal(bad), Error);
}

TEST_CASE("intersect with the trivial process is the identity") {
  auto d = d0_family(1000);
  auto t = renewal_mass(d, 1000);
  ArrayXd ones = ArrayXd::Ones(1001);
  ArrayXd v = intersect_renewals(t.u, ones);
  for (Index n = 0; n <= 1000; ++n) CHECK(v[n] == t.u[n]);
  ArrayXd wrong(5);
  CHECK_THROWS_AS(intersect_renewals(t.u, wrong), Error);
}

TEST_CASE("intersection of a mass sequence with itself inverts to a pmf") {
  auto d = uniform12();
  auto t = renewal_mass(d, 400);
  ArrayXd v = intersect_renewals(t.u, t.u);
  auto r = invert_renewal(v);
  CHECK_FALSE(r.negative_pmf);
  KahanSum mass;
  for (Index n = 1; n < r.pmf.size(); ++n) {
    CHECK(r.pmf[n] > -1e-12);
    mass.add(r.pmf[n]);
  }
  // The intersected process visits 2/3 * 2/3 of the lattice in the long run,
  // so the pmf sums to below 1 only by its tail past the table.
  CHECK(mass.value() < 1.0 + 1e-12);
  CHECK(mass.value() > 0.9);
}

TEST_CASE("generating function identity") {
  auto d = d0_family(40000);
  auto t = renewal_mass(d, 40000);
  CHECK(gf_identity_check(d, t, 0.9) < 1e-9);
  CHECK(gf_identity_check(d, t, 0.99) < 1e-9);
  CHECK(gf_identity_check(d, t, 0.999) < 1e-9);
  CHECK_THROWS_AS(gf_identity_check(d, t, 0.999999), TailDominates);
  CHECK_THROWS_AS(gf_identity_check(d, t, 1.5), Error);
}
