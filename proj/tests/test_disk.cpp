#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <numbers>

#include "ldbar/disk_geometry.hpp"
#include "ldbar/mobius.hpp"
#include "ldbar/quadrature.hpp"
#include "ldbar/rng.hpp"

using ldbar::Complex;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("mobius transforms compose, invert, and differentiate consistently", "[disk]") {
  ldbar::Rng rng(401);
  for (int trial = 0; trial < 200; ++trial) {
    const ldbar::MobiusTransform f{rng.disk_point(0.95),
                                   rng.uniform(0.0, 2.0 * std::numbers::pi)};
    const ldbar::MobiusTransform g{rng.disk_point(0.95),
                                   rng.uniform(0.0, 2.0 * std::numbers::pi)};
    const Complex z = rng.disk_point(0.95);

    const ldbar::MobiusTransform fg = ldbar::mobius_compose(f, g);
    REQUIRE_THAT(std::abs(ldbar::mobius_apply(fg, z) -
                          ldbar::mobius_apply(f, ldbar::mobius_apply(g, z))),
                 WithinAbs(0.0, 1e-14));

    const ldbar::MobiusTransform finv = ldbar::mobius_invert(f);
    REQUIRE_THAT(std::abs(ldbar::mobius_apply(finv, ldbar::mobius_apply(f, z)) - z),
                 WithinAbs(0.0, 1e-14));

    // chain rule through the group law
    const Complex chain = ldbar::mobius_derivative(f, ldbar::mobius_apply(g, z)) *
                          ldbar::mobius_derivative(g, z);
    REQUIRE_THAT(std::abs(ldbar::mobius_derivative(fg, z) - chain), WithinAbs(0.0, 1e-13));
  }

  // phi'(0) = e^{i beta} (1 - |a|^2)
  const ldbar::MobiusTransform h{Complex(0.3, -0.4), 1.1};
  const Complex expect = std::polar(1.0 - 0.25, 1.1);
  REQUIRE_THAT(std::abs(ldbar::mobius_derivative(h, Complex(0.0)) - expect),
               WithinAbs(0.0, 1e-15));

  // designated origin image
  const ldbar::MobiusTransform t = ldbar::mobius_with_origin_image(Complex(0.5, 0.25), 0.7);
  REQUIRE_THAT(std::abs(ldbar::mobius_apply(t, Complex(0.0)) - Complex(0.5, 0.25)),
               WithinAbs(0.0, 1e-15));

  REQUIRE_THROWS_AS(ldbar::mobius_translation_to(Complex(1.0, 0.1)), std::domain_error);
}

TEST_CASE("log-density, distance, and shell index match closed forms", "[disk]") {
  REQUIRE_THAT(ldbar::psi(Complex(0.5, 0.0)), WithinAbs(-0.2876820724517809, 1e-15));
  REQUIRE_THAT(ldbar::psi(Complex(0.0)), WithinAbs(0.0, 1e-16));
  REQUIRE_THAT(ldbar::poincare_density(Complex(0.5, 0.0)), WithinRel(4.0 / 3.0, 1e-15));

  // d_P(0, 1/2) = (1/2) log 3
  REQUIRE_THAT(ldbar::poincare_distance(Complex(0.0), Complex(0.5, 0.0)),
               WithinAbs(0.5493061443340548, 1e-15));
  REQUIRE_THAT(ldbar::poincare_distance(Complex(0.0), Complex(0.0, 0.9)),
               WithinAbs(1.4722194895832204, 1e-14));

  // independent oracle: integrate the metric density along the radial geodesic
  const ldbar::QuadratureRule q = ldbar::gauss_legendre(48, 0.0, 0.9);
  double arc = 0.0;
  for (std::size_t i = 0; i < q.node.size(); ++i)
    arc += q.weight[i] / (1.0 - q.node[i] * q.node[i]);
  REQUIRE_THAT(ldbar::poincare_distance(Complex(0.0), Complex(0.9, 0.0)),
               WithinRel(arc, 1e-12));

  REQUIRE(ldbar::annulus_index(Complex(0.0)) == 0);
  REQUIRE(ldbar::annulus_index(Complex(0.3, 0.0)) == 0);
  REQUIRE(ldbar::annulus_index(Complex(0.5, 0.0)) == 1);
  REQUIRE(ldbar::annulus_index(Complex(0.0, 0.75)) == 2);
  REQUIRE(ldbar::annulus_index(Complex(0.9, 0.0)) == 3);
  REQUIRE_THAT(ldbar::annulus_inner_radius(3), WithinAbs(0.875, 0.0));
  REQUIRE_THAT(ldbar::annulus_outer_radius(3), WithinAbs(0.9375, 0.0));
  REQUIRE_THAT(ldbar::closed_disk_radius(2), WithinAbs(0.875, 0.0));

  // shell index is constant on each shell and the sampler lands inside it
  ldbar::Rng rng(77);
  for (int n = 0; n <= 10; ++n)
    for (int i = 0; i < 100; ++i)
      REQUIRE(ldbar::annulus_index(ldbar::sample_annulus(rng, n)) == n);

  REQUIRE_THROWS_AS(ldbar::psi(Complex(1.2, 0.0)), std::domain_error);
  REQUIRE_THROWS_AS(ldbar::poincare_distance(Complex(0.0), Complex(1.0, 0.0)),
                    std::domain_error);
  REQUIRE_THROWS_AS(ldbar::annulus_index(Complex(0.0, -1.0)), std::domain_error);
}

TEST_CASE("rotation about the origin realizes the extreme automorphy slack", "[disk]") {
  // a = 0, n = 0: density ratio e^{-psi(phi z)} / e^{-psi(z)} = 1, so the
  // 2^{n+3} bound is met with slack exactly 8.
  const ldbar::MobiusTransform rot = ldbar::mobius_with_origin_image(Complex(0.0), 2.3);
  ldbar::Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    const Complex z = rng.disk_point(0.999);
    const double ratio = ldbar::poincare_density(ldbar::mobius_apply(rot, z)) /
                         (8.0 * ldbar::poincare_density(z));
    REQUIRE_THAT(ratio, WithinRel(0.125, 1e-12));
  }
}

TEST_CASE("automorphism inequality sweep reports no violations", "[disk]") {
  const ldbar::DiskLemmaReport rep = ldbar::verify_disk_lemmas(20000, 2026, 10);
  INFO(rep.first_witness);
  REQUIRE(rep.violations == 0);
  REQUIRE(rep.samples == 20000);

  const double slack = 1.0 + 1e-12;
  REQUIRE(rep.max_ratio_density_automorphy <= slack);
  REQUIRE(rep.max_ratio_cover <= slack);
  REQUIRE(rep.max_ratio_derivative_global <= slack);
  REQUIRE(rep.max_ratio_derivative_disk <= slack);
  REQUIRE(rep.max_ratio_modulus_drop <= slack);
  REQUIRE(rep.max_ratio_one_minus_sq_hi <= slack);
  REQUIRE(rep.min_ratio_one_minus_sq_lo >= 1.0 / slack);
  REQUIRE(rep.max_ratio_density_hi <= slack);
  REQUIRE(rep.min_ratio_density_lo >= 1.0 / slack);
  REQUIRE(rep.max_ratio_distance <= slack);
  REQUIRE(rep.max_schwarz_pick_rel <= 1e-12);
  REQUIRE(rep.max_distance_invariance_rel <= 1e-12);

  // the bounds are actually exercised: the worst cases get close to them
  REQUIRE(rep.max_ratio_density_automorphy > 0.1);
  REQUIRE(rep.max_ratio_derivative_global > 0.1);
  REQUIRE(rep.max_ratio_distance > 0.1);

  // density floors decrease with the evaluation radius and stay positive
  REQUIRE(rep.density_floor_quarter > rep.density_floor_half);
  REQUIRE(rep.density_floor_half > rep.density_floor_threequarter);
  REQUIRE(rep.density_floor_threequarter > 0.0);

  // the empirical floor constant is stable (within 10%) when samples double
  const ldbar::DiskLemmaReport rep2 = ldbar::verify_disk_lemmas(40000, 2026, 10);
  REQUIRE(rep2.violations == 0);
  REQUIRE(rep2.density_floor_half <= rep.density_floor_half);
  REQUIRE(rep2.density_floor_half >= 0.9 * rep.density_floor_half);
  REQUIRE(rep2.density_floor_quarter >= 0.9 * rep.density_floor_quarter);
  REQUIRE(rep2.density_floor_threequarter >= 0.9 * rep.density_floor_threequarter);

  REQUIRE_THROWS_AS(ldbar::verify_disk_lemmas(100, 1, 0), std::invalid_argument);
  REQUIRE_THROWS_AS(ldbar::verify_disk_lemmas(0, 1, 5), std::invalid_argument);
}
