#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>
#include <vector>

#include "ldbar/cauchy.hpp"
#include "ldbar/grid_field.hpp"
#include "ldbar/weight.hpp"

using ldbar::Complex;
using ldbar::GridField;
using ldbar::GridKind;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// cubic bump with closed-form dbar, the reconstruction reference pair
Complex cubic_bump(Complex z, Complex a, double R) {
  const double q = std::norm(z - a) / (R * R);
  return q < 1.0 ? std::pow(1.0 - q, 3) : 0.0;
}
Complex cubic_bump_dbar(Complex z, Complex a, double R) {
  const double q = std::norm(z - a) / (R * R);
  if (q >= 1.0) return 0.0;
  return -(3.0 / (R * R)) * std::pow(1.0 - q, 2) * (z - a);
}

double bump_c1(Complex z, double R = 0.2) {
  const double u = std::abs(z) / R;
  return u < 1.0 ? std::pow(1.0 - u * u, 2) : 0.0;
}
double bump_smooth(Complex z, double R = 0.2) {
  const double u2 = std::norm(z) / (R * R);
  return u2 < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - u2)) : 0.0;
}

double rel_l2(const std::vector<Complex>& got, const std::vector<Complex>& want) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    num += std::norm(got[i] - want[i]);
    den += std::norm(want[i]);
  }
  return std::sqrt(num / den);
}

}  // namespace

TEST_CASE("grid geometry and quadrature", "[grid]") {
  const GridField f = ldbar::make_grid_field(6, 1.0 / 256, GridKind::section);
  REQUIRE(f.rho_max == 0.9921875);
  REQUIRE(f.m == 254);
  REQUIRE(f.side() == 508);
  REQUIRE_THAT(std::abs(f.cell_center(254, 254) - Complex(0.5 / 256, 0.5 / 256)),
               WithinAbs(0.0, 1e-15));
  REQUIRE_FALSE(f.in_disk(0, 0));
  REQUIRE(f.in_disk(254, 254));

  const GridField p = ldbar::make_patch_grid(1.0 / 64, 20, GridKind::form);
  REQUIRE(p.rho_max == 0.3125);
  REQUIRE_THROWS_AS(ldbar::make_grid_field(-1, 0.1, GridKind::section), std::invalid_argument);
  REQUIRE_THROWS_AS(ldbar::make_patch_grid(0.1, 0, GridKind::form), std::invalid_argument);

  // midpoint quadrature against the monomial closed forms
  GridField ones = ldbar::make_grid_field(6, 1.0 / 256, GridKind::section);
  ldbar::fill_grid(ones, [](Complex) { return 1.0; });
  const ldbar::WeightSpec w65 = ldbar::make_weight_spec(6, 5);
  REQUIRE_THAT(ldbar::weighted_norm_sq(ones, w65), WithinRel(std::numbers::pi / 2, 2e-3));
  REQUIRE_THAT(ldbar::l2_norm_sq(ones), WithinRel(std::numbers::pi * ones.rho_max * ones.rho_max, 2e-2));

  GridField zsq = ldbar::make_grid_field(6, 1.0 / 256, GridKind::section);
  ldbar::fill_grid(zsq, [](Complex z) { return z * z; });
  REQUIRE_THAT(ldbar::weighted_norm_sq(zsq, w65), WithinRel(std::numbers::pi / 12, 2e-3));

  // annulus restriction: integral of (1-r^2) over 0.5 <= r < 0.75
  const auto prim = [](double r) { return r * r - 0.5 * r * r * r * r; };
  REQUIRE_THAT(ldbar::weighted_norm_sq(ones, w65, 0.5, 0.75),
               WithinRel(std::numbers::pi * (prim(0.75) - prim(0.5)), 1e-2));

  REQUIRE_THROWS_AS(ldbar::make_weight_spec(5, 5), std::invalid_argument);
  REQUIRE_THROWS_AS(ldbar::make_weight_spec(0, 0), std::invalid_argument);
  REQUIRE(ldbar::curvature_constant(w65) == 24.0);
  REQUIRE(ldbar::hormander_gap(w65) == 4.0);
}

TEST_CASE("difference operators on analytic samples", "[grid]") {
  GridField u = ldbar::make_grid_field(5, 1.0 / 128, GridKind::section);
  ldbar::fill_grid(u, [](Complex z) { return std::conj(z); });
  const GridField c = ldbar::dbar_central(u);
  const GridField fwd = ldbar::dbar_forward(u);
  REQUIRE(c.kind == GridKind::form);
  for (int ix : {40, 127, 200})
    for (int iy : {64, 130}) {
      REQUIRE_THAT(std::abs(c.at(ix, iy) - 1.0), WithinAbs(0.0, 1e-12));
      REQUIRE_THAT(std::abs(fwd.at(ix, iy) - 1.0), WithinAbs(0.0, 1e-12));
    }

  GridField q = ldbar::make_grid_field(5, 1.0 / 128, GridKind::section);
  ldbar::fill_grid(q, [](Complex z) { return z * z; });
  const GridField qc = ldbar::dbar_central(q);
  const GridField qf = ldbar::dbar_forward(q);
  const Complex expected_fwd = q.h * Complex(1.0, -1.0) / 2.0;
  REQUIRE_THAT(std::abs(qc.at(128, 128)), WithinAbs(0.0, 1e-10));
  REQUIRE_THAT(std::abs(qf.at(128, 128) - expected_fwd), WithinAbs(0.0, 1e-10));

  REQUIRE_THROWS_AS(ldbar::dbar_forward(c), std::invalid_argument);

  // dd^c of s*psi against the closed form, the curvature normalization check
  for (Complex z : {Complex(0.0), Complex(0.3, 0.2), Complex(0.0, 0.7), Complex(0.88, 0.0)})
    REQUIRE(ldbar::ddc_s_psi_fd_rel_error(5, z) < 0.01);
  REQUIRE(ldbar::ddc_s_psi_fd_rel_error(0, Complex(0.4, 0.1)) < 1e-6);
  REQUIRE_THROWS_AS(ldbar::ddc_s_psi_fd_rel_error(5, Complex(0.9999, 0.0)), std::domain_error);
}

TEST_CASE("bilinear interpolation and serialization round-trip", "[grid]") {
  GridField f = ldbar::make_patch_grid(1.0 / 32, 12, GridKind::section);
  ldbar::fill_grid(f, [](Complex z) { return z.real() + 2.0 * z.imag(); });
  REQUIRE_THAT(std::abs(ldbar::bilinear_value(f, Complex(0.11, -0.07)) - Complex(0.11 - 0.14)),
               WithinAbs(0.0, 1e-12));
  REQUIRE(ldbar::bilinear_value(f, Complex(5.0, 5.0)) == Complex(0.0));
  REQUIRE(ldbar::bilinear_value(f, f.cell_center(7, 9)) == f.at(7, 9));

  GridField b = ldbar::make_patch_grid(1.0 / 64, 20, GridKind::form);
  ldbar::fill_grid(b, [](Complex z) { return bump_c1(z) * Complex(0.3, -1.1); });
  b.support_radius = ldbar::measured_support_radius(b);
  REQUIRE(b.support_radius <= 0.2);
  REQUIRE(b.support_radius > 0.15);

  std::ostringstream os1, os2;
  ldbar::write_grid_field(os1, b);
  ldbar::write_grid_field(os2, b);
  REQUIRE(os1.str() == os2.str());
  std::istringstream is(os1.str());
  const GridField back = ldbar::read_grid_field(is);
  REQUIRE(back == b);

  std::istringstream bad("ldbar-gridfield 7\nkind form\n");
  REQUIRE_THROWS_AS(ldbar::read_grid_field(bad), std::runtime_error);
  std::string truncated = os1.str();
  truncated.resize(truncated.size() / 2);
  std::istringstream trunc(truncated);
  REQUIRE_THROWS_AS(ldbar::read_grid_field(trunc), std::runtime_error);
}

TEST_CASE("kernel sum reconstructs a bump from its dbar data", "[cauchy]") {
  const Complex a(0.1, 0.05);
  const double R = 0.25;
  const std::vector<Complex> zeval = ldbar::cells_in_disk(1.0 / 64, 0.45);
  std::vector<Complex> want(zeval.size());
  for (std::size_t i = 0; i < zeval.size(); ++i) want[i] = cubic_bump(zeval[i], a, R);

  const double frozen[3] = {5.75e-6, 5.25e-7, 5.19e-8};
  double prev = 1.0;
  int idx = 0;
  for (double h : {1.0 / 128, 1.0 / 256, 1.0 / 512}) {
    const std::vector<Complex> cells = ldbar::cells_in_disk(h, R, a);
    std::vector<Complex> vals(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) vals[i] = cubic_bump_dbar(cells[i], a, R);
    const std::vector<Complex> u0 = ldbar::cauchy_transform_at(zeval, cells, vals, h);
    const double err = rel_l2(u0, want);
    REQUIRE(err < frozen[idx] * 1.3);
    REQUIRE(err > frozen[idx] * 0.7);
    REQUIRE(err < prev);
    prev = err;
    ++idx;
  }
}

TEST_CASE("fft correlation path equals the direct kernel sum", "[cauchy]") {
  GridField v = ldbar::make_patch_grid(1.0 / 64, 20, GridKind::form);
  ldbar::fill_grid(v, [](Complex z) { return bump_c1(z); });

  const GridField u_fft = ldbar::cauchy_transform(v);
  const GridField u_dir = ldbar::cauchy_transform_direct(v);
  double max_err = 0.0, max_ref = 0.0;
  for (std::size_t i = 0; i < u_fft.samples.size(); ++i) {
    max_err = std::max(max_err, std::abs(u_fft.samples[i] - u_dir.samples[i]));
    max_ref = std::max(max_ref, std::abs(u_dir.samples[i]));
  }
  REQUIRE(max_err / max_ref < 1e-13);

  const GridField u_again = ldbar::cauchy_transform(v);
  REQUIRE(u_again == u_fft);  // bit-for-bit repeatable

  GridField zeros = ldbar::make_patch_grid(1.0 / 64, 20, GridKind::form);
  const GridField uz = ldbar::cauchy_transform(zeros);
  REQUIRE(ldbar::l2_norm_sq(uz) == 0.0);

  GridField touching = v;
  touching.at(0, 20) = 1.0;  // corner cell, outside rho_max - 1.5h
  REQUIRE_THROWS_AS(ldbar::cauchy_transform(touching), std::invalid_argument);
  REQUIRE_THROWS_AS(ldbar::cauchy_transform(u_fft), std::invalid_argument);
}

TEST_CASE("production-size transform agrees with pointwise sums", "[cauchy]") {
  const Complex a(0.1, 0.05);
  const double R = 0.25;
  GridField v = ldbar::make_grid_field(6, 1.0 / 256, GridKind::form);
  ldbar::fill_grid(v, [&](Complex z) { return cubic_bump_dbar(z, a, R); });
  const GridField u = ldbar::cauchy_transform(v);

  for (int k = 0; k < 20; ++k) {
    const int ix = 254 + 7 * k, iy = 254 - 5 * k;
    const Complex z = u.cell_center(ix, iy);
    const Complex ref = ldbar::cauchy_transform_at(v, z);
    REQUIRE(std::abs(u.at(ix, iy) - ref) < 1e-12 * std::abs(ref) + 5e-15);
  }

  // one-sided dbar returns the data to first order
  const GridField r = ldbar::dbar_forward(u);
  GridField diff = v;
  for (std::size_t i = 0; i < diff.samples.size(); ++i)
    diff.samples[i] = r.samples[i] - v.samples[i];
  const double rel =
      std::sqrt(ldbar::l2_norm_sq(diff, 0.3) / ldbar::l2_norm_sq(v, 0.3));
  REQUIRE(rel < 0.08);
}

TEST_CASE("far field matches the moment expansion", "[cauchy]") {
  GridField v = ldbar::make_patch_grid(1.0 / 64, 20, GridKind::form);
  ldbar::fill_grid(v, [](Complex z) { return bump_c1(z - 0.07); });

  const ldbar::LaurentExpansion e = ldbar::laurent_moments(v, Complex(0.0), 60);
  REQUIRE(e.valid_radius < 0.28);
  // mass moment: integral of the bump is pi R^2 / 3
  REQUIRE_THAT(e.moments[0].real(), WithinRel(0.2 * 0.2 / 3.0, 1e-2));
  REQUIRE_THAT(e.moments[0].imag(), WithinAbs(0.0, 1e-12));

  for (Complex z : {Complex(2.0, 0.5), Complex(-1.4, 3.0)}) {
    const Complex direct = ldbar::cauchy_transform_at(v, z);
    REQUIRE(std::abs(ldbar::laurent_eval(e, z) - direct) < 1e-12 * std::abs(direct) + 1e-16);
    const Complex leading = e.moments[0] / z;
    const double tail = std::abs(direct - leading);
    REQUIRE(tail < 3.0 * std::abs(e.moments[1]) / std::norm(z));
    REQUIRE(tail > 0.2 * std::abs(e.moments[1]) / std::norm(z));
  }
  REQUIRE_THROWS_AS(ldbar::laurent_eval(e, Complex(0.1, 0.0)), std::domain_error);
  REQUIRE_THROWS_AS(ldbar::laurent_moments(v, Complex(0.0), 0), std::invalid_argument);
}

TEST_CASE("weighted plane formula: order-k vanishing and residual", "[cauchy]") {
  const Complex a(0.35, 0.0);
  const double R = 0.12, h = 1.0 / 128;
  GridField v = ldbar::make_patch_grid(h, 64, GridKind::form);
  ldbar::fill_grid(v, [&](Complex z) { return cubic_bump_dbar(z, a, R); });

  // k = 0 collapses to the standard transform
  for (Complex z : {Complex(0.2, 0.0), Complex(-0.3, 0.4)})
    REQUIRE(std::abs(ldbar::weighted_cauchy_plane(v, 0, z) - ldbar::cauchy_transform_at(v, z)) <
            1e-15 * std::abs(ldbar::cauchy_transform_at(v, z)));

  GridField zeros = ldbar::make_patch_grid(h, 64, GridKind::form);
  REQUIRE(ldbar::weighted_cauchy_plane(zeros, 2, Complex(0.3, 0.0)) == Complex(0.0));
  REQUIRE_THROWS_AS(ldbar::weighted_cauchy_plane(v, 2, Complex(0.0)), std::domain_error);
  REQUIRE_THROWS_AS(ldbar::weighted_cauchy_plane(v, -1, Complex(0.3, 0.0)),
                    std::invalid_argument);

  // dbar residual on a ring inside the support, away from the origin
  const std::vector<Complex> ring = ldbar::cells_in_disk(h, R - 3 * h, a);
  std::vector<Complex> got(ring.size()), want(ring.size());
  for (std::size_t i = 0; i < ring.size(); ++i) {
    const Complex z = ring[i];
    const Complex u0 = ldbar::weighted_cauchy_plane(v, 2, z);
    const Complex ux = ldbar::weighted_cauchy_plane(v, 2, z + h);
    const Complex uy = ldbar::weighted_cauchy_plane(v, 2, z + Complex(0, h));
    got[i] = (ux - u0) / (2 * h) + Complex(0, 1) * (uy - u0) / (2 * h);
    want[i] = cubic_bump_dbar(z, a, R);
  }
  REQUIRE(rel_l2(got, want) < 0.15);

  // vanishing order at infinity improves by |z|^-k over the plain transform
  const Complex dir = std::polar(1.0, std::numbers::pi / 7);
  const double q6 = std::abs(ldbar::weighted_cauchy_plane(v, 2, 6.0 * dir) /
                             ldbar::weighted_cauchy_plane(v, 0, 6.0 * dir));
  const double q12 = std::abs(ldbar::weighted_cauchy_plane(v, 2, 12.0 * dir) /
                              ldbar::weighted_cauchy_plane(v, 0, 12.0 * dir));
  REQUIRE(q12 / q6 > 0.18);
  REQUIRE(q12 / q6 < 0.35);
}

TEST_CASE("one-sided residual halves with the grid; centered is second order",
          "[cauchy]") {
  auto run = [&](auto vfun, double h) {
    const std::vector<Complex> cells = ldbar::cells_in_disk(h, 0.2 + 2 * h);
    std::vector<Complex> vc(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) vc[i] = vfun(cells[i]);

    const int stride = std::max(1, static_cast<int>(std::lround((1.0 / h) / 128)));
    const int mm = static_cast<int>(0.26 / h);
    std::vector<Complex> zz;
    for (int i = -mm; i < mm; i += stride)
      for (int j = -mm; j < mm; j += stride) {
        const Complex z((i + 0.5) * h, (j + 0.5) * h);
        if (std::abs(z) < 0.25) zz.push_back(z);
      }
    std::vector<Complex> stack;
    for (Complex z : zz) stack.push_back(z);
    for (Complex z : zz) stack.push_back(z + h);
    for (Complex z : zz) stack.push_back(z - h);
    for (Complex z : zz) stack.push_back(z + Complex(0, h));
    for (Complex z : zz) stack.push_back(z - Complex(0, h));
    const std::vector<Complex> u = ldbar::cauchy_transform_at(stack, cells, vc, h);

    const std::size_t n = zz.size();
    std::vector<Complex> central(n), forward(n), v0(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Complex u0 = u[i], upx = u[n + i], umx = u[2 * n + i];
      const Complex upy = u[3 * n + i], umy = u[4 * n + i];
      central[i] = (upx - umx) / (4 * h) + Complex(0, 1) * (upy - umy) / (4 * h);
      forward[i] = (upx - u0) / (2 * h) + Complex(0, 1) * (upy - u0) / (2 * h);
      v0[i] = vfun(zz[i]);
    }
    return std::pair<double, double>(rel_l2(central, v0), rel_l2(forward, v0));
  };

  auto c1 = [](Complex z) { return Complex(bump_c1(z)); };
  auto smooth = [](Complex z) { return Complex(bump_smooth(z)); };

  const auto [c1_c_coarse, c1_f_coarse] = run(c1, 1.0 / 128);
  const auto [c1_c_fine, c1_f_fine] = run(c1, 1.0 / 256);
  REQUIRE_THAT(c1_f_fine, WithinRel(2.13e-2, 0.25));
  const double c1_ratio = c1_f_coarse / c1_f_fine;
  REQUIRE(c1_ratio > 1.4);
  REQUIRE(c1_ratio < 2.6);

  const auto [sm_c_coarse, sm_f_coarse] = run(smooth, 1.0 / 128);
  const auto [sm_c_fine, sm_f_fine] = run(smooth, 1.0 / 256);
  const double sm_f_ratio = sm_f_coarse / sm_f_fine;
  REQUIRE(sm_f_ratio > 1.4);
  REQUIRE(sm_f_ratio < 2.6);
  const double sm_c_ratio = sm_c_coarse / sm_c_fine;
  REQUIRE(sm_c_ratio > 3.2);
  REQUIRE(sm_c_ratio < 4.8);
  REQUIRE(sm_c_fine < sm_f_fine);  // centered beats one-sided on smooth data
}
