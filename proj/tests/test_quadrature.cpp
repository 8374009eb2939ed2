#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "ldbar/quadrature.hpp"

using namespace ldbar;

namespace {

double gl_integral(const QuadratureRule& q, auto&& f) {
  double s = 0.0;
  for (std::size_t i = 0; i < q.node.size(); ++i) s += q.weight[i] * f(q.node[i]);
  return s;
}

}  // namespace

TEST_CASE("Gauss-Legendre integrates monomials exactly", "[quadrature]") {
  const auto q = gauss_legendre(12);
  CHECK(gl_integral(q, [](double) { return 1.0; }) == Catch::Approx(2.0).epsilon(1e-14));
  CHECK(gl_integral(q, [](double x) { return x * x; }) == Catch::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(gl_integral(q, [](double x) { return std::pow(x, 6); }) == Catch::Approx(2.0 / 7.0).epsilon(1e-14));
  CHECK(std::abs(gl_integral(q, [](double x) { return std::pow(x, 7); })) < 1e-15);
  // degree 23 = 2n-1 still exact
  CHECK(gl_integral(q, [](double x) { return std::pow(x, 22); }) ==
        Catch::Approx(2.0 / 23.0).epsilon(1e-13));
}

TEST_CASE("Beta integral on [0,1] against the quadrature oracle", "[quadrature]") {
  // int_0^1 t^3 (1-t)^2 dt = 3! 2! / 6! = 1/60
  const auto q = gauss_legendre(40, 0.0, 1.0);
  const double oracle = gl_integral(q, [](double t) { return t * t * t * (1 - t) * (1 - t); });
  CHECK(oracle == Catch::Approx(1.0 / 60.0).epsilon(1e-14));
  CHECK(oracle == Catch::Approx(0.016666666666666666).epsilon(1e-14));
}

TEST_CASE("weighted monomial norms match the closed form and the oracle", "[quadrature]") {
  // pinned values
  CHECK(weighted_monomial_norm_sq(0, 1) == Catch::Approx(1.5707963267948966).epsilon(1e-15));
  CHECK(weighted_monomial_norm_sq(2, 1) == Catch::Approx(0.2617993877991494).epsilon(1e-15));
  CHECK(weighted_monomial_norm_sq(5, 2) == Catch::Approx(0.018699956271367816).epsilon(1e-15));

  // oracle: pi * int_0^1 t^j (1-t)^p dt by Gauss-Legendre, j <= 24, p <= 6
  const auto q = gauss_legendre(64, 0.0, 1.0);
  for (int j = 0; j <= 24; ++j) {
    for (int p = 0; p <= 6; ++p) {
      const double oracle =
          std::numbers::pi *
          gl_integral(q, [&](double t) { return std::pow(t, j) * std::pow(1 - t, p); });
      REQUIRE_THAT(weighted_monomial_norm_sq(j, p),
                   Catch::Matchers::WithinRel(oracle, 1e-8));
    }
  }
}

TEST_CASE("incomplete beta integral matches partial quadrature", "[quadrature]") {
  for (int j : {0, 1, 3, 7, 24}) {
    for (int p : {0, 1, 2, 6}) {
      for (double x : {0.1, 0.5, 0.9}) {
        const auto q = gauss_legendre(48, 0.0, x);
        const double oracle =
            gl_integral(q, [&](double t) { return std::pow(t, j) * std::pow(1 - t, p); });
        REQUIRE_THAT(incomplete_beta_integral(j, p, x),
                     Catch::Matchers::WithinAbs(oracle, 1e-14));
      }
    }
  }
}

TEST_CASE("quadrature input validation", "[quadrature]") {
  CHECK_THROWS_AS(gauss_legendre(0), std::invalid_argument);
  CHECK_THROWS_AS(weighted_monomial_norm_sq(-1, 0), std::invalid_argument);
}
