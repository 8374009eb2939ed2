#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "ldbar/bergman.hpp"
#include "ldbar/quadrature.hpp"
#include "ldbar/rng.hpp"
#include "ldbar/solver.hpp"

using ldbar::Complex;
using ldbar::GridField;
using ldbar::GridKind;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Complex cubic_bump(Complex z, Complex a, double R) {
  const double q = std::norm(z - a) / (R * R);
  return q < 1.0 ? std::pow(1.0 - q, 3) : 0.0;
}
Complex cubic_bump_dbar(Complex z, Complex a, double R) {
  const double q = std::norm(z - a) / (R * R);
  if (q >= 1.0) return 0.0;
  return -(3.0 / (R * R)) * std::pow(1.0 - q, 2) * (z - a);
}

double rel_weighted_diff(const GridField& got, const GridField& want,
                         const ldbar::WeightSpec& w) {
  GridField diff = got;
  for (std::size_t i = 0; i < diff.samples.size(); ++i)
    diff.samples[i] -= want.samples[i];
  return std::sqrt(ldbar::weighted_norm_sq(diff, w) / ldbar::weighted_norm_sq(want, w));
}

}  // namespace

TEST_CASE("monomial norms: closed form vs radial quadrature", "[bergman]") {
  // pi * integral_0^1 t^j (1-t)^p dt after t = r^2
  const ldbar::QuadratureRule gl = ldbar::gauss_legendre(40, 0.0, 1.0);
  for (int p = 0; p <= 6; ++p)
    for (int j = 0; j <= 24; ++j) {
      double q = 0.0;
      for (std::size_t i = 0; i < gl.node.size(); ++i)
        q += gl.weight[i] * std::pow(gl.node[i], j) * std::pow(1.0 - gl.node[i], p);
      q *= std::numbers::pi;
      REQUIRE_THAT(ldbar::weighted_monomial_norm_sq(j, p), WithinRel(q, 1e-8));
    }

  // discrete grid diagonal: the midpoint sum runs over |z| <= rho_max, so the
  // matching closed form is the truncated integral, pi * B(j, 1; rho_max^2)
  GridField geom = ldbar::make_grid_field(6, 1.0 / 256, GridKind::section);
  const ldbar::WeightSpec w = ldbar::make_weight_spec(6, 5);
  const double x = geom.rho_max * geom.rho_max;
  for (int j : {0, 2, 8, 16, 24}) {
    GridField mono = geom;
    ldbar::fill_grid(mono, [&](Complex z) { return std::pow(z, j); });
    const double trunc = std::numbers::pi * ldbar::incomplete_beta_integral(j, 1, x);
    REQUIRE_THAT(ldbar::weighted_norm_sq(mono, w), WithinAbs(trunc, 3e-5));
    REQUIRE(trunc < ldbar::weighted_monomial_norm_sq(j, 1));
  }
}

TEST_CASE("hermitian eigensolver diagonalizes", "[bergman]") {
  // fixed 2x2 with hand-computed spectrum: [[2, 1-i], [1+i, 3]] has
  // trace 5 and determinant 4, hence eigenvalues {1, 4}
  std::vector<Complex> two = {Complex(2, 0), Complex(1, 1), Complex(1, -1), Complex(3, 0)};
  const ldbar::detail::HermitianEig e2 = ldbar::detail::hermitian_eig(two, 2);
  REQUIRE_THAT(e2.values[0], WithinAbs(1.0, 1e-12));
  REQUIRE_THAT(e2.values[1], WithinAbs(4.0, 1e-12));

  // random 12x12 Hermitian: A V = V diag(values) and V unitary
  const int n = 12;
  ldbar::Rng rng(97);
  std::vector<Complex> a(n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) {
      const Complex b(rng.uniform(-1.0, 1.0), i == j ? 0.0 : rng.uniform(-1.0, 1.0));
      a[i * n + j] = b;
      a[j * n + i] = std::conj(b);
    }
  const ldbar::detail::HermitianEig eig = ldbar::detail::hermitian_eig(a, n);
  for (int k = 1; k < n; ++k) REQUIRE(eig.values[k - 1] <= eig.values[k]);
  for (int col = 0; col < n; ++col)
    for (int i = 0; i < n; ++i) {
      Complex av = 0.0, gram = 0.0;
      for (int k = 0; k < n; ++k) {
        av += a[i * n + k] * eig.vectors[k * n + col];
        gram += std::conj(eig.vectors[k * n + i]) * eig.vectors[k * n + col];
      }
      REQUIRE_THAT(std::abs(av - eig.values[col] * eig.vectors[i * n + col]),
                   WithinAbs(0.0, 1e-11));
      REQUIRE_THAT(std::abs(gram - (i == col ? 1.0 : 0.0)), WithinAbs(0.0, 1e-12));
    }
}

TEST_CASE("projection fixes polynomials and kills antiholomorphic data", "[bergman]") {
  GridField u = ldbar::make_grid_field(5, 1.0 / 128, GridKind::section);
  const ldbar::WeightSpec w = ldbar::make_weight_spec(6, 5);

  ldbar::fill_grid(u, [](Complex z) {
    return 0.3 * std::pow(z, 5) - Complex(1.1, -0.2) * z * z + 0.05 * std::pow(z, 24) + 0.7;
  });
  const ldbar::BergmanProjection p = ldbar::bergman_project(u, w, 24);
  REQUIRE(p.rank == 25);
  REQUIRE(rel_weighted_diff(p.field, u, w) < 1e-10);
  REQUIRE_THAT(std::abs(p.monomial_coefficients[2] - Complex(-1.1, 0.2)), WithinAbs(0.0, 1e-9));

  /* Antiholomorphic data: in the continuum P(conj z) is the constant
     <conj z, 1>/||1||^2, which vanishes by angular symmetry.  The lattice
     kills that constant coupling exactly (90-degree rotation symmetry) but
     leaves O(h^2)-scale couplings into the z^{4k-1} classes, so the full
     projection only decays under refinement instead of vanishing. */
  GridField anti = u;
  ldbar::fill_grid(anti, [](Complex z) { return std::conj(z); });
  const ldbar::BergmanProjection pa = ldbar::bergman_project(anti, w, 24);
  REQUIRE(std::abs(pa.monomial_coefficients[0]) < 1e-12);
  const double rel_coarse =
      std::sqrt(ldbar::weighted_norm_sq(pa.field, w) / ldbar::weighted_norm_sq(anti, w));
  REQUIRE(rel_coarse < 1e-3);

  GridField anti_fine = ldbar::make_grid_field(5, 1.0 / 256, GridKind::section);
  ldbar::fill_grid(anti_fine, [](Complex z) { return std::conj(z); });
  const ldbar::BergmanProjection paf = ldbar::bergman_project(anti_fine, w, 24);
  const double rel_fine =
      std::sqrt(ldbar::weighted_norm_sq(paf.field, w) / ldbar::weighted_norm_sq(anti_fine, w));
  REQUIRE(rel_fine < 0.55 * rel_coarse);

  GridField form = u;
  form.kind = GridKind::form;
  REQUIRE_THROWS_AS(ldbar::bergman_project(form, w, 24), std::invalid_argument);
  REQUIRE_THROWS_AS(ldbar::monomial_moments(u, [](Complex) { return 1.0; }, -1),
                    std::invalid_argument);
}

TEST_CASE("projection is idempotent with exact orthogonality residuals", "[bergman]") {
  GridField u = ldbar::make_grid_field(5, 1.0 / 128, GridKind::section);
  const ldbar::WeightSpec w = ldbar::make_weight_spec(6, 5);
  ldbar::fill_grid(u, [](Complex z) {
    return cubic_bump(z, Complex(0.15, -0.1), 0.3) * (1.0 + std::conj(z)) + 0.2 * z;
  });
  const auto density = [&](Complex c) { return ldbar::weight_density(w, c); };

  const ldbar::BergmanProjection p = ldbar::bergman_project(u, w, 24);
  const ldbar::BergmanProjection pp = ldbar::bergman_project(p.field, w, 24);
  REQUIRE(rel_weighted_diff(pp.field, p.field, w) < 1e-10);

  GridField resid = u;
  for (std::size_t i = 0; i < resid.samples.size(); ++i)
    resid.samples[i] -= p.field.samples[i];
  REQUIRE(ldbar::orthogonality_defect(resid, density, 24) < 1e-10);

  // the WeightSpec entry point is the same Gram route under the hood
  const ldbar::BergmanProjection pg = ldbar::bergman_project_gram(u, density, 24);
  REQUIRE(pg.rank == 25);
  REQUIRE(rel_weighted_diff(pg.field, p.field, w) < 1e-12);
}

TEST_CASE("gram-basis projection handles a non-radial weight", "[bergman]") {
  GridField u = ldbar::make_grid_field(5, 1.0 / 128, GridKind::section);
  const auto density = [](Complex c) {
    return (1.0 - std::norm(c)) * (1.0 + 0.3 * c.real());
  };
  ldbar::fill_grid(u, [](Complex z) {
    return std::conj(z) * 0.4 + 0.1 * std::pow(z, 3) - Complex(0.0, 0.6);
  });

  const ldbar::BergmanProjection p = ldbar::bergman_project_gram(u, density, 12);
  REQUIRE(p.rank == 13);

  const ldbar::BergmanProjection pp = ldbar::bergman_project_gram(p.field, density, 12);
  GridField diff = pp.field;
  for (std::size_t i = 0; i < diff.samples.size(); ++i)
    diff.samples[i] -= p.field.samples[i];
  REQUIRE(std::sqrt(ldbar::l2_norm_sq(diff) / ldbar::l2_norm_sq(p.field)) < 1e-10);

  GridField resid = u;
  for (std::size_t i = 0; i < resid.samples.size(); ++i)
    resid.samples[i] -= p.field.samples[i];
  REQUIRE(ldbar::orthogonality_defect(resid, density, 12) < 1e-10);

  // polynomials below the degree cap are reproduced exactly
  GridField poly = u;
  ldbar::fill_grid(poly, [](Complex z) { return Complex(0.2, 1.0) * z * z - 0.9; });
  const ldbar::BergmanProjection pf = ldbar::bergman_project_gram(poly, density, 12);
  GridField pdiff = pf.field;
  for (std::size_t i = 0; i < pdiff.samples.size(); ++i)
    pdiff.samples[i] -= poly.samples[i];
  REQUIRE(std::sqrt(ldbar::l2_norm_sq(pdiff) / ldbar::l2_norm_sq(poly)) < 1e-9);
}

TEST_CASE("minimal solution matches the analytic-difference oracle", "[solver]") {
  const Complex a(0.1, 0.05);
  const double R = 0.25;
  const ldbar::WeightSpec w = ldbar::make_weight_spec(6, 5);

  GridField v = ldbar::make_grid_field(6, 1.0 / 256, GridKind::form);
  ldbar::fill_grid(v, [&](Complex z) { return cubic_bump_dbar(z, a, R); });
  const ldbar::SolveReport rep = ldbar::minimal_solution_report(v, w, 24);

  GridField F = ldbar::make_grid_field(6, 1.0 / 256, GridKind::section);
  ldbar::fill_grid(F, [&](Complex z) { return cubic_bump(z, a, R); });
  const ldbar::BergmanProjection pF = ldbar::bergman_project(F, w, 24);
  GridField oracle = F;
  for (std::size_t i = 0; i < oracle.samples.size(); ++i)
    oracle.samples[i] -= pF.field.samples[i];

  REQUIRE(rel_weighted_diff(rep.u, oracle, w) < 0.01);
  REQUIRE(rep.minimality_defect < 1e-10);
  REQUIRE(rep.basis_rank == 25);
  REQUIRE(rep.hormander_ratio > 0.0);
  REQUIRE(rep.hormander_ratio < 10.0);

  // minimality: adding any holomorphic polynomial strictly increases the norm
  ldbar::Rng rng(414);
  const double base = ldbar::weighted_norm_sq(rep.u, w);
  for (int trial = 0; trial < 10; ++trial) {
    const int deg = static_cast<int>(rng.raw() % 25);
    const Complex coef = std::polar(1e-3 + rng.uniform(), rng.uniform(0.0, 6.28));
    GridField shifted = rep.u;
    for (int ix = 0; ix < shifted.side(); ++ix)
      for (int iy = 0; iy < shifted.side(); ++iy) {
        const Complex z = shifted.cell_center(ix, iy);
        if (std::abs(z) < shifted.rho_max)
          shifted.at(ix, iy) += coef * std::pow(z, deg);
      }
    REQUIRE(ldbar::weighted_norm_sq(shifted, w) > base);
  }

  // zero data
  GridField zeros = ldbar::make_grid_field(4, 1.0 / 64, GridKind::form);
  const ldbar::SolveReport z0 = ldbar::minimal_solution_report(zeros, w, 8);
  REQUIRE(ldbar::l2_norm_sq(z0.u) == 0.0);
  REQUIRE(z0.hormander_ratio == 0.0);
}

TEST_CASE("solver residual is first order and degree truncation is guarded", "[solver]") {
  const Complex a(0.1, 0.05);
  const double R = 0.25;
  const ldbar::WeightSpec w = ldbar::make_weight_spec(6, 5);

  auto residual_at = [&](int n_grid, double h) {
    GridField v = ldbar::make_grid_field(n_grid, h, GridKind::form);
    ldbar::fill_grid(v, [&](Complex z) { return cubic_bump_dbar(z, a, R); });
    const GridField u = ldbar::minimal_solution(v, w, 24);
    const GridField r = ldbar::dbar_forward(u);
    GridField diff = v;
    for (std::size_t i = 0; i < diff.samples.size(); ++i)
      diff.samples[i] = r.samples[i] - v.samples[i];
    return std::sqrt(ldbar::l2_norm_sq(diff, 0.45) / ldbar::l2_norm_sq(v, 0.45));
  };
  const double coarse = residual_at(5, 1.0 / 128);
  const double fine = residual_at(6, 1.0 / 256);
  REQUIRE(coarse / fine > 1.4);
  REQUIRE(coarse / fine < 2.6);

  GridField v = ldbar::make_grid_field(5, 1.0 / 128, GridKind::form);
  ldbar::fill_grid(v, [&](Complex z) { return cubic_bump_dbar(z, a, R); });
  REQUIRE(ldbar::degree_sufficient(v, w, 24));
  REQUIRE_FALSE(ldbar::degree_sufficient(v, w, 2));
}

TEST_CASE("pullback: composition rule, form factor, norm identity", "[solver]") {
  const ldbar::WeightSpec w = ldbar::make_weight_spec(6, 5);

  // psi transformation behind the distortion lemma: e^{-psi(phi z)} = e^{-psi(z)}/|phi'(z)|
  ldbar::Rng rng(2718);
  for (int i = 0; i < 200; ++i) {
    const ldbar::MobiusTransform phi{rng.disk_point(0.9), rng.uniform(0.0, 6.28)};
    const Complex z = rng.disk_point(0.97);
    const double lhs = std::exp(-ldbar::psi(ldbar::mobius_apply(phi, z)));
    const double rhs = std::exp(-ldbar::psi(z)) / std::abs(ldbar::mobius_derivative(phi, z));
    REQUIRE_THAT(lhs / rhs, WithinAbs(1.0, 1e-12));
  }

  GridField f = ldbar::make_grid_field(6, 1.0 / 256, GridKind::section);
  ldbar::fill_grid(f, [](Complex z) { return cubic_bump(z, Complex(0.1, 0.05), 0.25); });

  REQUIRE(ldbar::pullback(ldbar::mobius_identity(), f) == f);

  const ldbar::MobiusTransform phi = ldbar::mobius_translation_to(Complex(0.3, -0.1));
  const GridField pf = ldbar::pullback(phi, f);
  const double lhs = std::real(ldbar::grid_inner_product(pf, pf, [&](Complex xi) {
    return ldbar::weight_density(w, ldbar::mobius_apply(phi, xi)) *
           std::norm(ldbar::mobius_derivative(phi, xi));
  }));
  REQUIRE_THAT(lhs, WithinRel(ldbar::weighted_norm_sq(f, w), 0.01));

  // (0,1)-coefficients acquire conj(phi'); conj(z) interpolates exactly
  GridField g = ldbar::make_grid_field(5, 1.0 / 128, GridKind::form);
  ldbar::fill_grid(g, [](Complex z) { return std::conj(z); });
  const GridField pg = ldbar::pullback(phi, g);
  for (int ix : {60, 124, 180})
    for (int iy : {90, 140}) {
      const Complex xi = pg.cell_center(ix, iy);
      const Complex want = std::conj(ldbar::mobius_apply(phi, xi)) *
                           std::conj(ldbar::mobius_derivative(phi, xi));
      if (std::abs(ldbar::mobius_apply(phi, xi)) < 0.9 * g.rho_max)
        REQUIRE_THAT(std::abs(pg.at(ix, iy) - want), WithinAbs(0.0, 1e-12));
    }
}
