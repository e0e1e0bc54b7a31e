#include <doctest.h>

#include <cmath>

#include "renewal0/numeric.hpp"

using namespace renewal0;

TEST_CASE("adaptive quadrature reproduces smooth closed forms") {
  auto q1 = integrate_adaptive([](double x) { return x * x; }, 0.0, 1.0, 1e-13);
  CHECK(std::abs(q1.value - 1.0 / 3.0) < 1e-12);

  const double pi = std::acos(-1.0);
  auto q2 = integrate_adaptive([](double x) { return std::sin(x); }, 0.0, pi, 1e-12);
  CHECK(std::abs(q2.value - 2.0) < 1e-10);

  auto q3 = integrate_adaptive([](double x) { return std::exp(-x); }, 0.0, 40.0, 1e-14);
  CHECK(std::abs(q3.value - (1.0 - std::exp(-40.0))) < 1e-11);

  auto q0 = integrate_adaptive([](double) { return 0.0; }, 0.0, 5.0, 1e-320);
  CHECK(q0.value == 0.0);
}

TEST_CASE("upper incomplete gamma against 30-digit references") {
  // References computed with 30-digit arbitrary precision arithmetic.
  CHECK(upper_gamma(1.0, 3.0) ==
        doctest::Approx(std::exp(-3.0)).epsilon(1e-12));
  CHECK(upper_gamma(0.5, 2.0) ==
        doctest::Approx(0.080647117960317690788626073021).epsilon(1e-11));
  CHECK(upper_gamma(3.0, 5.0) ==
        doctest::Approx(0.249304038966162282575533791656).epsilon(1e-11));
  CHECK(upper_gamma(-2.0, 3.0) ==
        doctest::Approx(0.000992294061780302819656771175).epsilon(1e-10));
  CHECK(upper_gamma(-0.5, 4.0) ==
        doctest::Approx(0.001733500127388845567307198247).epsilon(1e-10));
  CHECK(upper_gamma(2.5, 7.0) ==
        doctest::Approx(0.020750227257978491628477972497).epsilon(1e-11));
  CHECK_THROWS_AS(upper_gamma(5.0, 2.0), Error);
}

TEST_CASE("chi-square quantile approximation near table values") {
  CHECK(std::abs(chi2_quantile(0.999, 10.0) / 29.58829844507442 - 1.0) < 0.01);
  CHECK(std::abs(chi2_quantile(0.999, 100.0) / 149.44925277903886 - 1.0) < 0.005);
  CHECK(std::abs(chi2_quantile(0.95, 50.0) / 67.5048065495412 - 1.0) < 0.005);
}

TEST_CASE("normal quantile against table values") {
  CHECK(std::abs(normal_quantile(0.975) - 1.959963984540054) < 1e-7);
  CHECK(std::abs(normal_quantile(0.999) - 3.090232306167813) < 1e-7);
  CHECK(std::abs(normal_quantile(1e-9) - (-5.9978070150076865)) < 1e-5);
  CHECK(std::abs(normal_quantile(0.5)) < 1e-12);
  CHECK(normal_quantile(0.25) == doctest::Approx(-normal_quantile(0.75)).epsilon(1e-9));
}

TEST_CASE("bisection on a decreasing function") {
  auto g = [](double x) { return 1.0 / x; };
  double x = bisect_decreasing(g, 1.0, 100.0, 0.1, 1e-12);
  CHECK(std::abs(x - 10.0) < 1e-9);

  auto h = [](double x) { return std::exp(-x); };
  double y = bisect_decreasing(h, 0.0, 50.0, 0.25, 1e-13);
  CHECK(std::abs(y - std::log(4.0)) < 1e-10);

  CHECK_THROWS_AS(bisect_decreasing(g, 1.0, 100.0, 2.0, 1e-10),
                  NonMonotoneBracket);
}
