#pragma once

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ldbar/bergman.hpp"
#include "ldbar/cauchy.hpp"
#include "ldbar/grid_field.hpp"
#include "ldbar/partition.hpp"
#include "ldbar/rng.hpp"
#include "ldbar/solver.hpp"
#include "ldbar/weight.hpp"

namespace ldbar {

/*
 * Correction step across one dyadic shell: the data v = dbar(chi_n u), with u
 * holomorphic near A_n, is split through the shell partition of unity; every
 * window piece is recentred by the Mobius transform of its window, solved
 * minimally against the pulled-back metric, and pushed forward; the correction
 * is the sum of the pieces.
 *
 * Two structural facts keep the 17 * 2^{n+9} window sum affordable:
 *
 *  - With the recentring transform written as z = e^{i beta} g(xi),
 *    g(xi) = (xi - rho)/(1 - rho xi), rho the window-center radius, the
 *    pulled-back metric density on the recentred disk depends only on rho.
 *    All windows of one radial ring therefore share their geometry, Gram
 *    eigensystem, and moment kernels; the angular slot enters only through
 *    the rotation phase.  In the same frame the projection pushes forward to
 *    a plain polynomial in z, so the minimal subtraction of every piece
 *    accumulates into one global polynomial.
 *
 *  - Outside its own window a piece's particular solution is a short Laurent
 *    tail about the window center.  Summed over a ring of equally spaced
 *    centers this is a circular convolution in the angle, so the whole ring
 *    is evaluated on concentric circles by length-2^{n+9} FFTs, with the
 *    kernel spectra in closed form away from the shell and sampled (with the
 *    near-window slots replaced by exact local sums) on circles through it.
 *    The reported norm of the correction integrates this polar representation.
 */

// dbar of the shell cutoff chi_n, via the radial chain rule; zero off the ramp
inline Complex dbar_tilde_chi(int n, Complex z) {
  const double r = std::abs(z);
  const double x = (r - annulus_inner_radius(n)) * std::ldexp(1.0, n + 1);
  if (x <= 0.25 || x >= 0.75 || r == 0.0) return 0.0;
  const double u = 1.5 - 2.0 * x;               // smoothstep argument of chi
  const double dchi_dx = -12.0 * u * (1.0 - u); // d/dx smoothstep(1.5 - 2x)
  return dchi_dx * std::ldexp(1.0, n + 1) * z / (2.0 * r);
}

struct CorrectionOptions {
  int degree = 10;          // per-piece projection degree
  int laurent_terms = 26;   // far-field order of the particular solutions
  double patch_radius = 0.03; // recentred window quadrature: the window image
  int patch_m = 15;           // has radius ~0.021, so h_p = radius/m covers it
  int solve_n_grid = 6;     // recentred-frame metric grid for the projections
  double solve_h = 1.0 / 32.0;
  double local_radius = 0.12; // window neighborhood refined for the kernels
  double local_h = 0.005;
  int out_n_grid = 6;       // geometry of the returned correction field
  double out_h = 1.0 / 24.0;
  int radial_base = 48;     // polar norm circles: uniform base, shell band,
  int radial_shell = 32;    // geometric tail toward the boundary
  int radial_tail = 16;
  int sample_target = 14;    // summand-bound samples per call
  int residual_probes = 100; // dbar spot checks inside the ramp
  double precondition_slope = 25.0; // input dbar residual must be < slope * h
};

struct CorrectionSummand {
  int k = 0;
  long long l = 0;
  double ratio = 0.0; // ||solved piece||_w^2 / window mass of u
};

struct CorrectionReport {
  GridField u_n;                 // accumulated correction
  double c1 = 0.0;               // ||u_n||_w^2 / ||u||_{w, A_n}^2
  double correction_mass = 0.0;  // ||u_n||_w^2, from the polar representation
  double annulus_mass = 0.0;     // ||u||_{w, A_n}^2
  long long pieces = 0;          // windows that carried data
  double dbar_residual_rel = 0.0;
  std::vector<CorrectionSummand> sampled;
};

namespace detail {

// 1-D complex transform; planning serialized as in the 2-D case, estimate
// mode keeps runs deterministic
inline void fft_1d(std::vector<Complex>& data, int sign) {
  std::vector<Complex> out(data.size());
  fftw_plan p;
  {
    std::lock_guard<std::mutex> g(fftw_mutex());
    p = fftw_plan_dft_1d(static_cast<int>(data.size()),
                         reinterpret_cast<fftw_complex*>(data.data()),
                         reinterpret_cast<fftw_complex*>(out.data()), sign, FFTW_ESTIMATE);
  }
  if (!p) throw std::runtime_error("correction: fftw plan creation failed");
  fftw_execute(p);
  {
    std::lock_guard<std::mutex> g(fftw_mutex());
    fftw_destroy_plan(p);
  }
  data.swap(out);
}

// Pascal rows through n = rows - 1
inline std::vector<double> binomial_table(int rows) {
  std::vector<double> b(static_cast<std::size_t>(rows) * rows, 0.0);
  for (int n = 0; n < rows; ++n) {
    b[static_cast<std::size_t>(n) * rows] = 1.0;
    for (int k = 1; k <= n; ++k)
      b[static_cast<std::size_t>(n) * rows + k] =
          b[static_cast<std::size_t>(n - 1) * rows + (k - 1)] +
          (k <= n - 1 ? b[static_cast<std::size_t>(n - 1) * rows + k] : 0.0);
  }
  return b;
}

/* Everything about one radial ring of windows that is independent of the
 * angular slot.  Window (k,l) is recentred by z = e^{i beta_l} g(xi) with
 * beta_l = arg(center) + pi, so g maps the recentred patch onto the l = const
 * geometry once per ring: with this choice the window-membership tests, the
 * partition weights, the cutoff gradient chain factors, and the pulled-back
 * metric density
 *
 *     (1 - |y|^2)^{m-s} (|1 - rho y|^2 / (1 - rho^2))^{s-2}
 *
 * (in the rotated disk coordinate y = e^{-i beta} z) are all ring constants.
 * The Gram matrix of the monomial basis y^j in that metric and the moment
 * functionals K_j(c) = <Cauchy(delta_c), y^j> are tabulated here; the metric
 * quadrature runs on the solve grid away from the window and on a finer local
 * lattice around it, where the Cauchy kernel is singular. */
struct RingTables {
  double rho = 0.0;
  double support_xi = 0.0; // largest data-cell radius in the recentred frame
  std::vector<Complex> xi;   // recentred lattice point of each window cell
  std::vector<Complex> gxi;  // g(xi); the cell sits at z = e^{i beta} g(xi)
  std::vector<Complex> avf;  // partition x cutoff-gradient x conj(phi') factor
  std::vector<double> mass;  // |phi'|^2 w(z) h_p^2, for the window mass of u
  std::vector<char> carries; // cell lies on the cutoff ramp (nonzero data)
  HermitianEig eig;
  std::vector<std::vector<Complex>> kernel; // kernel[j][cell]
};

inline RingTables make_ring_tables(int k, int n, const WeightSpec& w,
                                   const CorrectionOptions& opt, const GridField& ygrid) {
  RingTables rt;
  const double inner = annulus_inner_radius(n);
  rt.rho = inner + (k + 1.0) / 32.0 * std::ldexp(1.0, -(n + 1));
  const double rho = rt.rho;
  const double hp = opt.patch_radius / opt.patch_m;
  const double two_pow = std::ldexp(1.0, n + 1);
  const double slots = static_cast<double>(y_window_count(n));
  const double half_turn = 0.5 * slots;

  for (int ix = 0; ix < 2 * opt.patch_m; ++ix)
    for (int iy = 0; iy < 2 * opt.patch_m; ++iy) {
      const Complex c((ix - opt.patch_m + 0.5) * hp, (iy - opt.patch_m + 0.5) * hp);
      if (std::abs(c) > opt.patch_radius) continue;
      const Complex den = 1.0 - rho * c;
      const Complex gv = (c - rho) / den;
      const double r = std::abs(gv);
      const double x = (r - inner) * two_pow;
      const double tx = 32.0 * x - k;
      if (tx <= 0.0 || tx >= 2.0) continue;
      // angular window coordinate: beta cancels the slot offset, so the
      // membership test and the partition weight are ring constants
      const double sa = std::arg(gv) * slots / (2.0 * std::numbers::pi);
      double ty = std::fmod(1.0 + half_turn + sa, slots);
      if (ty < 0.0) ty += slots;
      if (ty <= 0.0 || ty >= 2.0) continue;
      const double uf = sa - std::floor(sa);
      const double alpha =
          (bump(tx) * bump(ty)) / (x_local_sum(x) * (bump(uf) + bump(uf + 1.0)));
      const Complex dg = (1.0 - rho * rho) / (den * den); // phi' = e^{i beta} dg
      rt.xi.push_back(c);
      rt.gxi.push_back(gv);
      rt.mass.push_back(std::norm(dg) * weight_density(w, gv) * hp * hp);
      const bool on_ramp = x > 0.25 && x < 0.75;
      rt.carries.push_back(on_ramp ? 1 : 0);
      if (on_ramp) {
        const double u = 1.5 - 2.0 * x;
        const double dfac = -12.0 * u * (1.0 - u) * two_pow / (2.0 * r);
        rt.avf.push_back(alpha * dfac * gv * std::conj(dg));
        rt.support_xi = std::max(rt.support_xi, std::abs(c));
      } else {
        rt.avf.push_back(Complex(0.0));
      }
    }

  const int nb = opt.degree + 1;
  const std::size_t nc = rt.xi.size();
  std::vector<Complex> gram(static_cast<std::size_t>(nb) * nb, Complex(0.0));
  rt.kernel.assign(nb, std::vector<Complex>(nc, Complex(0.0)));
  std::vector<Complex> ypow(nb), cw(nb);
  const double spow = static_cast<double>(w.s) - 2.0;
  const double inv_pi = 1.0 / std::numbers::pi;

  const auto add_point = [&](Complex y, Complex xi_img, double dens, double guard) {
    ypow[0] = Complex(1.0, 0.0);
    for (int j = 1; j < nb; ++j) ypow[j] = ypow[j - 1] * y;
    for (int j = 0; j < nb; ++j) cw[j] = std::conj(ypow[j]) * dens;
    for (int i = 0; i < nb; ++i)
      for (int j = 0; j < nb; ++j)
        gram[static_cast<std::size_t>(i) * nb + j] += ypow[i] * cw[j];
    for (std::size_t p = 0; p < nc; ++p) {
      const Complex d = rt.xi[p] - xi_img;
      if (std::abs(d) < guard) continue;
      const Complex q = -inv_pi / d;
      for (int j = 0; j < nb; ++j) rt.kernel[j][p] += cw[j] * q;
    }
  };

  // metric quadrature away from the window, on the solve grid
  const double hs2 = ygrid.h * ygrid.h;
  for (int ix = 0; ix < ygrid.side(); ++ix)
    for (int iy = 0; iy < ygrid.side(); ++iy) {
      const Complex y = ygrid.cell_center(ix, iy);
      if (std::abs(y) >= ygrid.rho_max) continue;
      const Complex xi_img = (rho + y) / (1.0 + rho * y);
      if (std::abs(xi_img) < opt.local_radius) continue;
      const double lam = std::norm(1.0 + rho * y) / (1.0 - rho * rho);
      add_point(y, xi_img, weight_density(w, y) * std::pow(lam, spow) * hs2, 0.0);
    }
  // window neighborhood on its own finer lattice
  const int lm = static_cast<int>(std::ceil(opt.local_radius / opt.local_h));
  const double hl2 = opt.local_h * opt.local_h;
  for (int ix = 0; ix < 2 * lm; ++ix)
    for (int iy = 0; iy < 2 * lm; ++iy) {
      const Complex xi_img((ix - lm + 0.5) * opt.local_h, (iy - lm + 0.5) * opt.local_h);
      if (std::abs(xi_img) >= opt.local_radius) continue;
      const Complex den = 1.0 - rho * xi_img;
      const Complex y = (xi_img - rho) / den;
      // at y = g(xi) the ring factor collapses to the conformal one:
      // |1 + rho y|^2 / (1 - rho^2) = (1 - rho^2) / |1 - rho xi|^2
      const double jac = (1.0 - rho * rho) / std::norm(den);
      add_point(y, xi_img,
                weight_density(w, y) * std::pow(jac, spow) * jac * jac * hl2,
                0.5 * opt.local_h);
    }

  // enforce hermiticity before the eigensolver
  for (int i = 0; i < nb; ++i)
    for (int j = i; j < nb; ++j) {
      const Complex g =
          0.5 * (gram[static_cast<std::size_t>(i) * nb + j] +
                 std::conj(gram[static_cast<std::size_t>(j) * nb + i]));
      gram[static_cast<std::size_t>(i) * nb + j] = g;
      gram[static_cast<std::size_t>(j) * nb + i] = std::conj(g);
    }
  rt.eig = hermitian_eig(gram, nb);
  return rt;
}

// projection coefficients from the moments, through the eigensystem
inline std::vector<Complex> ring_gram_solve(const HermitianEig& eig, int nb,
                                            const std::vector<Complex>& mu) {
  std::vector<Complex> b(nb, Complex(0.0));
  const double cutoff = 1e-12 * eig.values.back();
  for (int a = 0; a < nb; ++a) {
    if (eig.values[a] <= cutoff) continue;
    Complex coeff = 0.0;
    for (int i = 0; i < nb; ++i) coeff += eig.vectors[static_cast<std::size_t>(i) * nb + a] * mu[i];
    coeff /= eig.values[a];
    for (int j = 0; j < nb; ++j)
      b[j] += coeff * std::conj(eig.vectors[static_cast<std::size_t>(j) * nb + a]);
  }
  return b;
}

}  // namespace detail

inline CorrectionReport correction_solve(const GridField& u_hol, int n, const WeightSpec& w,
                                         const CorrectionOptions& opt = {}) {
  if (u_hol.kind != GridKind::section)
    throw std::invalid_argument("correction: u must be a section field");
  if (n < 0) throw std::invalid_argument("correction: shell index must be >= 0");
  const double inner = annulus_inner_radius(n), outer = annulus_outer_radius(n);
  {
    // the widest sampled window reaches x = 25/32; the input grid must cover
    // its bilinear reach, or interpolated u values would mix in zero padding
    const double required = 1.0 - (39.0 / 64.0) * std::ldexp(1.0, -n) + 1.5 * u_hol.h;
    if (u_hol.rho_max < required)
      throw std::invalid_argument("correction: input grid truncates before the cutoff band, "
                                  "rho_max " + std::to_string(u_hol.rho_max) + " < " +
                                  std::to_string(required));
  }
  GridField out = make_grid_field(opt.out_n_grid, opt.out_h, GridKind::section);
  if (out.rho_max < outer)
    throw std::invalid_argument("correction: output grid does not contain shell " +
                                std::to_string(n));

  // precondition: u holomorphic near the shell (central dbar residual ~ C h)
  {
    double num = 0.0, den = 0.0;
    const GridField d = dbar_central(u_hol);
    const double lo = std::max(0.0, inner - 3.0 * u_hol.h);
    const double hi = std::min(u_hol.rho_max - 2.0 * u_hol.h, outer + 3.0 * u_hol.h);
    for (int ix = 0; ix < u_hol.side(); ++ix)
      for (int iy = 0; iy < u_hol.side(); ++iy) {
        const double r = std::abs(u_hol.cell_center(ix, iy));
        if (r < lo || r >= hi) continue;
        num += std::norm(d.at(ix, iy));
        den += std::norm(u_hol.at(ix, iy));
      }
    if (den > 0.0 && std::sqrt(num / den) > opt.precondition_slope * u_hol.h)
      throw std::invalid_argument("correction: u is not holomorphic near shell " +
                                  std::to_string(n) + " (dbar residual " +
                                  std::to_string(std::sqrt(num / den)) + ")");
  }

  CorrectionReport rep;
  rep.u_n = out;

  // shell mass of u, on a ring lattice fine enough for every shell width
  {
    const int nr = 24, na = 256;
    const double dr = (outer - inner) / nr;
    const double dth = 2.0 * std::numbers::pi / na;
    double acc = 0.0;
    for (int t = 0; t < nr; ++t) {
      const double r = inner + (t + 0.5) * dr;
      for (int a = 0; a < na; ++a) {
        const Complex z = std::polar(r, (a + 0.5) * dth);
        acc += std::norm(bilinear_value(u_hol, z)) * weight_density(w, z) * r;
      }
    }
    rep.annulus_mass = acc * dr * dth;
  }

  const long long L = y_window_count(n);
  const std::size_t Ls = static_cast<std::size_t>(L);
  const int T = opt.laurent_terms;
  const int nb = opt.degree + 1;
  const double hp = opt.patch_radius / opt.patch_m;
  const double hp2 = hp * hp;
  const double inv_pi = 1.0 / std::numbers::pi;

  // skip the ring machinery entirely when the band carries no data
  bool band_has_data = false;
  for (int ix = 0; ix < u_hol.side() && !band_has_data; ++ix)
    for (int iy = 0; iy < u_hol.side(); ++iy) {
      const double r = std::abs(u_hol.cell_center(ix, iy));
      if (r <= inner - 2.0 * u_hol.h || r >= outer + 2.0 * u_hol.h) continue;
      if (u_hol.at(ix, iy) != Complex(0.0)) {
        band_has_data = true;
        break;
      }
    }

  // ring center radii: the windows meeting the cutoff ramp have k in [7, 23]
  std::vector<int> ring_k;
  std::vector<double> ring_R;
  for (int k = 7; k <= 23; ++k) {
    ring_k.push_back(k);
    ring_R.push_back(inner + (k + 1.0) / 32.0 * std::ldexp(1.0, -(n + 1)));
  }

  // norm circles: uniform base, a refined band across the shell, a geometric
  // tail toward the boundary; nudged off the ring radii so no kernel sample
  // sits on a window center
  std::vector<double> radii;
  for (int q = 0; q < opt.radial_base; ++q) radii.push_back((q + 0.5) / opt.radial_base);
  {
    const double width = outer - inner;
    const double lo = std::max(0.02, inner - 0.35 * width);
    const double hi = std::min(0.9995, outer + 0.35 * width);
    for (int j = 0; j < opt.radial_shell; ++j)
      radii.push_back(lo + (j + 0.5) * (hi - lo) / opt.radial_shell);
  }
  for (int j = 1; j <= opt.radial_tail; ++j)
    radii.push_back(1.0 - 0.01 * std::pow(0.72, j));
  {
    const double step = 2.0 * std::numbers::pi / static_cast<double>(L);
    for (double& r : radii)
      for (std::size_t i = 0; i < ring_R.size(); ++i) {
        const double R = ring_R[i];
        if (std::abs(r - R) < 0.3 * R * step) r = R + (r < R ? -0.3 : 0.3) * R * step;
      }
    std::sort(radii.begin(), radii.end());
    radii.erase(std::unique(radii.begin(), radii.end(),
                            [](double a, double b) { return std::abs(a - b) < 1e-9; }),
                radii.end());
  }
  const std::size_t Q = radii.size();
  std::vector<double> rweight(Q, 0.0);
  for (std::size_t q = 0; q < Q; ++q) {
    const double lo = q == 0 ? 0.0 : 0.5 * (radii[q - 1] + radii[q]);
    const double hi = q + 1 == Q ? 1.0 : 0.5 * (radii[q] + radii[q + 1]);
    rweight[q] = hi - lo;
  }

  std::vector<std::vector<Complex>> spec(Q, std::vector<Complex>(Ls, Complex(0.0)));
  std::vector<std::vector<Complex>> corr(Q, std::vector<Complex>(Ls, Complex(0.0)));

  // dbar probe stencils inside the ramp
  std::vector<Complex> probe_base;
  std::vector<double> probe_step;
  {
    Rng rng(4242);
    for (int i = 0; i < opt.residual_probes; ++i) {
      const double x = 0.30 + 0.40 * rng.uniform();
      const double y = rng.uniform() * std::ldexp(1.0, n + 1);
      const Complex z0 = annulus_map(n, x, y);
      probe_base.push_back(z0);
      // two patch cells wide: the stencil must straddle several lattice
      // charges or the difference sees the discrete kernel, not the field
      probe_step.push_back(2.0 * hp * (1.0 - std::norm(z0)));
    }
  }
  std::vector<Complex> probe_acc(3 * probe_base.size(), Complex(0.0));

  const long long stride = std::max(1LL, 17LL * L / std::max(1, opt.sample_target));
  const std::vector<double> binom = detail::binomial_table(T + 2);
  const GridField ygrid = make_grid_field(opt.solve_n_grid, opt.solve_h, GridKind::section);
  const double hs2 = ygrid.h * ygrid.h;
  const int lm = static_cast<int>(std::ceil(opt.local_radius / opt.local_h));
  const double hl2 = opt.local_h * opt.local_h;

  std::vector<Complex> poly(nb, Complex(0.0)); // accumulated minimal subtractions
  Complex const_sum = 0.0;                     // accumulated far-field constants

  std::vector<Complex> mu(nb), mom(T), b;
  std::vector<std::vector<Complex>> A(T, std::vector<Complex>(Ls));
  std::vector<double> gmax(T + 1, 0.0);
  std::vector<std::size_t> piece_begin;
  std::vector<int> piece_cells;
  std::vector<Complex> piece_vals;
  std::vector<Complex> piece_C;
  std::vector<double> rho_pow(T + 2), one_rho_pow(T + 2);

  for (std::size_t rk = 0; rk < ring_k.size() && band_has_data; ++rk) {
    const int k = ring_k[rk];
    const detail::RingTables rt = detail::make_ring_tables(k, n, w, opt, ygrid);
    const double R = rt.rho;
    const std::size_t nc = rt.xi.size();
    if (nc == 0) continue;

    rho_pow[0] = 1.0;
    one_rho_pow[0] = 1.0;
    for (int t = 1; t <= T + 1; ++t) {
      rho_pow[t] = rho_pow[t - 1] * R;
      one_rho_pow[t] = one_rho_pow[t - 1] * (1.0 - R * R);
    }

    for (int i = 0; i < T; ++i) std::fill(A[i].begin(), A[i].end(), Complex(0.0));
    std::fill(gmax.begin(), gmax.end(), 0.0);
    piece_begin.assign(1, 0);
    piece_cells.clear();
    piece_vals.clear();
    piece_C.assign(Ls, Complex(0.0));
    bool ring_has_data = false;

    for (long long l = 0; l < L; ++l) {
      const double theta_c = 2.0 * std::numbers::pi * (l + 1.0) / static_cast<double>(L);
      const Complex phase = -std::polar(1.0, theta_c);  // e^{i beta}
      double wmass = 0.0;
      const std::size_t begin = piece_cells.size();
      for (std::size_t i = 0; i < nc; ++i) {
        const Complex z = phase * rt.gxi[i];
        const Complex uv = bilinear_value(u_hol, z);
        if (uv == Complex(0.0)) continue;
        wmass += std::norm(uv) * rt.mass[i];
        if (!rt.carries[i]) continue;
        const Complex val = rt.avf[i] * uv;
        if (val == Complex(0.0)) continue;
        piece_cells.push_back(static_cast<int>(i));
        piece_vals.push_back(val);
      }
      piece_begin.push_back(piece_cells.size());
      if (piece_cells.size() == begin) continue;
      ring_has_data = true;
      ++rep.pieces;

      std::fill(mu.begin(), mu.end(), Complex(0.0));
      std::fill(mom.begin(), mom.end(), Complex(0.0));
      for (std::size_t s = begin; s < piece_cells.size(); ++s) {
        const int ci = piece_cells[s];
        const Complex v = piece_vals[s];
        for (int j = 0; j < nb; ++j) mu[j] += v * rt.kernel[j][ci];
        Complex pw = v;
        const Complex c = rt.xi[ci];
        for (int t = 0; t < T; ++t) {
          mom[t] += pw;
          pw *= c;
        }
      }
      for (Complex& m : mu) m *= hp2;
      for (Complex& m : mom) m *= hp2 * inv_pi;
      b = detail::ring_gram_solve(rt.eig, nb, mu);

      /* Far field about the window center: with q = e^{-i beta} z and
       * u = q + rho the recentred coordinate satisfies 1/xi = rho +
       * (1 - rho^2)/u, so the Laurent tail in 1/xi regroups exactly into
       * a constant plus inverse powers of u; in z that is a pole expansion
       * at the window center, and the phase e^{i beta i} reduces to the
       * ring-uniform sign (-1)^i. */
      Complex C = 0.0;
      for (int t = 0; t < T; ++t) C += mom[t] * rho_pow[t + 1];
      piece_C[static_cast<std::size_t>((l + 1) % L)] = C;
      const_sum += C;
      const std::size_t slot = static_cast<std::size_t>((l + 1) % L);
      for (int i = 1; i <= T; ++i) {
        Complex g = 0.0;
        for (int t = i - 1; t < T; ++t)
          g += mom[t] * binom[static_cast<std::size_t>(t + 1) * (T + 2) + i] *
               rho_pow[t + 1 - i];
        g *= one_rho_pow[i];
        A[i - 1][slot] = (i % 2 ? -g : g);
        gmax[i] = std::max(gmax[i], std::abs(g));
      }

      const Complex phase_c = std::conj(phase);
      Complex pj(1.0, 0.0);
      for (int j = 0; j < nb; ++j) {
        poly[j] += b[j] * pj;
        pj *= phase_c;
      }

      if ((rep.pieces - 1) % stride == 0 && wmass > 0.0) {
        // summand bound sample: the pushed-forward minimal piece against the
        // window mass, both in the plain weight; quadrature matches the
        // metric split (solve grid away from the window, local lattice near)
        const auto u0_direct = [&](Complex q) {
          Complex acc = 0.0;
          for (std::size_t s = begin; s < piece_cells.size(); ++s) {
            const Complex d = rt.xi[piece_cells[s]] - q;
            if (std::abs(d) < 0.5 * hp) continue;
            acc += piece_vals[s] / d;
          }
          return acc * (-hp2 * inv_pi);
        };
        const auto poly_at = [&](Complex y) {
          Complex acc = b[nb - 1];
          for (int j = nb - 2; j >= 0; --j) acc = acc * y + b[j];
          return acc;
        };
        double num = 0.0;
        for (int ix = 0; ix < ygrid.side(); ++ix)
          for (int iy = 0; iy < ygrid.side(); ++iy) {
            const Complex y = ygrid.cell_center(ix, iy);
            if (std::abs(y) >= ygrid.rho_max) continue;
            const Complex xi_img = (R + y) / (1.0 + R * y);
            if (std::abs(xi_img) < opt.local_radius) continue;
            num += std::norm(u0_direct(xi_img) - poly_at(y)) * weight_density(w, y) * hs2;
          }
        for (int ix = 0; ix < 2 * lm; ++ix)
          for (int iy = 0; iy < 2 * lm; ++iy) {
            const Complex q((ix - lm + 0.5) * opt.local_h, (iy - lm + 0.5) * opt.local_h);
            if (std::abs(q) >= opt.local_radius) continue;
            const Complex den = 1.0 - R * q;
            const Complex y = (q - R) / den;
            const double pull = (1.0 - R * R) * (1.0 - std::norm(q)) / std::norm(den);
            const double jac = (1.0 - R * R) / std::norm(den);
            num += std::norm(u0_direct(q) - poly_at(y)) *
                   std::pow(pull, w.m - w.s) * jac * jac * hl2;
          }
        rep.sampled.push_back({k, l, num / wmass});
      }
    }
    if (!ring_has_data) continue;

    for (int i = 0; i < T; ++i) detail::fft_1d(A[i], FFTW_FORWARD);

    /* The ring's far field on every circle.  Near the ring (circle points
     * within cut_z of a window center) the pole expansion is not reliable:
     * those kernel slots are cleared and the exact local sums added after
     * the transforms.  Away from it the kernel spectra are geometric series
     * in closed form, so no kernel transform is needed. */
    const double cut_z = std::max(1.45 * rt.support_xi, 0.033) * (1.0 - R * R) * 1.15;
    const double step = 2.0 * std::numbers::pi / static_cast<double>(L);
    std::vector<Complex> base(Ls), kpw(Ls), ktmp;
    for (std::size_t q = 0; q < Q; ++q) {
      const double r = radii[q];
      const double dist = std::abs(r - R);
      const auto slot_dist = [&](long long d) {
        return std::sqrt(std::max(0.0, r * r + R * R -
                                  2.0 * r * R * std::cos(step * static_cast<double>(d))));
      };
      long long dmax = -1;
      while (dmax + 1 < L / 2 && slot_dist(dmax + 1) < cut_z) ++dmax;
      const double ratio = std::min(r, R) / std::max(r, R);
      const bool need_samples =
          dmax >= 0 || static_cast<double>(L) * std::log(ratio) > std::log(1e-10);
      const double dist_eff = dmax >= 0 ? slot_dist(dmax + 1) : dist;
      double sref = 0.0;
      for (int i = 1; i <= T; ++i)
        sref = std::max(sref, gmax[i] * std::pow(dist_eff, -static_cast<double>(i)));

      if (sref <= 0.0) {
        // no far field to spread, but cleared slots still take exact sums
      } else if (need_samples) {
        for (long long d = 0; d < L; ++d) {
          // the clearing test must match the correction range below exactly
          base[static_cast<std::size_t>(d)] =
              slot_dist(d) < cut_z
                  ? Complex(0.0)
                  : 1.0 / (std::polar(r, step * static_cast<double>(d)) - R);
        }
        kpw = base;
        for (int i = 1; i <= T; ++i) {
          if (gmax[i] * std::pow(dist_eff, -static_cast<double>(i)) > 1e-13 * sref) {
            ktmp = kpw;
            detail::fft_1d(ktmp, FFTW_FORWARD);
            const double invL = 1.0 / static_cast<double>(L);
            for (std::size_t m = 0; m < Ls; ++m)
              spec[q][m] += A[i - 1][m] * ktmp[m] * invL;
          }
          if (i < T)
            for (std::size_t d = 0; d < Ls; ++d) kpw[d] *= base[d];
        }
      } else if (r < R) {
        for (int i = 1; i <= T; ++i) {
          if (gmax[i] * std::pow(dist, -static_cast<double>(i)) < 1e-13 * sref) continue;
          double c = (i % 2 ? -1.0 : 1.0) * std::pow(R, -static_cast<double>(i));
          double peak = std::abs(c);
          const double g = r / R;
          for (long long p = 0; p < L; ++p) {
            spec[q][static_cast<std::size_t>(p)] += A[i - 1][static_cast<std::size_t>(p)] * c;
            c *= g * (static_cast<double>(p) + i) / (static_cast<double>(p) + 1.0);
            const double ac = std::abs(c);
            if (ac > peak)
              peak = ac;
            else if (ac < 1e-14 * peak)
              break;
          }
        }
      } else {
        for (int i = 1; i <= T; ++i) {
          if (gmax[i] * std::pow(dist, -static_cast<double>(i)) < 1e-13 * sref) continue;
          double c = std::pow(r, -static_cast<double>(i));
          double peak = c;
          const double g = R / r;
          long long m = ((-static_cast<long long>(i)) % L + L) % L;
          for (long long p = 0; p < L; ++p) {
            spec[q][static_cast<std::size_t>(m)] += A[i - 1][static_cast<std::size_t>(m)] * c;
            c *= g * (static_cast<double>(p) + i) / (static_cast<double>(p) + 1.0);
            m = (m - 1 + L) % L;
            const double ac = std::abs(c);
            if (ac > peak)
              peak = ac;
            else if (ac < 1e-14 * peak)
              break;
          }
        }
      }

      if (dmax >= 0) {
        // exact local sums where the kernel slots were cleared
        for (long long l = 0; l < L; ++l) {
          const std::size_t begin = piece_begin[static_cast<std::size_t>(l)];
          const std::size_t end = piece_begin[static_cast<std::size_t>(l) + 1];
          if (begin == end) continue;
          const double theta_c = 2.0 * std::numbers::pi * (l + 1.0) / static_cast<double>(L);
          const Complex phase_c = -std::polar(1.0, -theta_c);  // e^{-i beta}
          const std::size_t slot = static_cast<std::size_t>((l + 1) % L);
          for (long long d = -dmax; d <= dmax; ++d) {
            const std::size_t j = static_cast<std::size_t>(((static_cast<long long>(slot) + d) % L + L) % L);
            const Complex z = std::polar(r, step * static_cast<double>(j));
            const Complex qe = phase_c * z;
            const Complex xi_pt = (R + qe) / (1.0 + R * qe);
            Complex acc = 0.0;
            for (std::size_t s = begin; s < end; ++s) {
              const Complex dd = rt.xi[piece_cells[s]] - xi_pt;
              if (std::abs(dd) < 0.5 * hp) continue;
              acc += piece_vals[s] / dd;
            }
            corr[q][j] += acc * (-hp2 * inv_pi) - piece_C[slot];
          }
        }
      }
    }

    // probe stencils: only nearby pieces contribute to a dbar difference
    // quotient (the rest of the sum is holomorphic at the probe), so each
    // ring adds its local windows exactly while their data is in scope
    for (std::size_t pi = 0; pi < probe_base.size(); ++pi) {
      const Complex z0 = probe_base[pi];
      const double r0 = std::abs(z0);
      const double cosd = (r0 * r0 + R * R - 0.49) / (2.0 * r0 * R);
      const double dtheta = cosd >= 1.0 ? 0.0 : (cosd <= -1.0 ? std::numbers::pi : std::acos(cosd));
      const long long dslot =
          std::min(L / 2, static_cast<long long>(std::ceil(dtheta / step)) + 1);
      const double th0 = std::arg(z0);
      const long long s0 = static_cast<long long>(std::llround(th0 / step));
      for (long long d = -dslot; d <= dslot; ++d) {
        const long long slot = ((s0 + d) % L + L) % L;
        const long long l = ((slot - 1) % L + L) % L;
        const std::size_t begin = piece_begin[static_cast<std::size_t>(l)];
        const std::size_t end = piece_begin[static_cast<std::size_t>(l) + 1];
        if (begin == end) continue;
        const double theta_c = 2.0 * std::numbers::pi * (l + 1.0) / static_cast<double>(L);
        const Complex phase_c = -std::polar(1.0, -theta_c);
        const Complex qe0 = phase_c * z0;
        const Complex xi0 = (R + qe0) / (1.0 + R * qe0);
        if (std::abs(xi0) >= 0.35) continue;
        for (int e = 0; e < 3; ++e) {
          const Complex zp =
              z0 + (e == 0 ? Complex(0.0)
                           : (e == 1 ? Complex(probe_step[pi], 0.0)
                                     : Complex(0.0, probe_step[pi])));
          const Complex qe = phase_c * zp;
          const Complex xi_pt = (R + qe) / (1.0 + R * qe);
          Complex acc = 0.0;
          for (std::size_t s = begin; s < end; ++s) {
            const Complex dd = rt.xi[piece_cells[s]] - xi_pt;
            if (std::abs(dd) < 0.5 * hp) continue;
            acc += piece_vals[s] / dd;
          }
          probe_acc[3 * pi + e] += acc * (-hp2 * inv_pi);
        }
      }
    }
  }

  // assemble the polar field, its weighted norm, and the returned grid
  if (rep.pieces > 0) {
    const double step = 2.0 * std::numbers::pi / static_cast<double>(L);
    double cmass = 0.0;
    for (std::size_t q = 0; q < Q; ++q) {
      detail::fft_1d(spec[q], FFTW_BACKWARD);
      const double r = radii[q];
      const double wq = weight_density(w, Complex(r, 0.0)) * r * rweight[q] * step;
      for (std::size_t j = 0; j < Ls; ++j) {
        const Complex z = std::polar(r, step * static_cast<double>(j));
        Complex pv = poly[nb - 1];
        for (int t = nb - 2; t >= 0; --t) pv = pv * z + poly[t];
        const Complex val = spec[q][j] + corr[q][j] + const_sum - pv;
        spec[q][j] = val;
        cmass += std::norm(val) * wq;
      }
    }
    rep.correction_mass = cmass;

    for (int ix = 0; ix < out.side(); ++ix)
      for (int iy = 0; iy < out.side(); ++iy) {
        const Complex z = out.cell_center(ix, iy);
        const double r = std::abs(z);
        if (r >= out.rho_max) continue;
        const auto hi_it = std::upper_bound(radii.begin(), radii.end(), r);
        std::size_t q1 = static_cast<std::size_t>(hi_it - radii.begin());
        if (q1 == 0) q1 = 1;
        if (q1 >= Q) q1 = Q - 1;
        const std::size_t q0 = q1 - 1;
        const double tr = std::clamp((r - radii[q0]) / (radii[q1] - radii[q0]), 0.0, 1.0);
        double th = std::arg(z);
        if (th < 0.0) th += 2.0 * std::numbers::pi;
        const double tj = th / step;
        const std::size_t j0 = static_cast<std::size_t>(tj) % Ls;
        const std::size_t j1 = (j0 + 1) % Ls;
        const double ta = tj - std::floor(tj);
        const Complex v0 = (1.0 - ta) * spec[q0][j0] + ta * spec[q0][j1];
        const Complex v1 = (1.0 - ta) * spec[q1][j0] + ta * spec[q1][j1];
        rep.u_n.samples[rep.u_n.index(ix, iy)] = (1.0 - tr) * v0 + tr * v1;
      }
  }
  rep.c1 = rep.annulus_mass > 0.0 ? rep.correction_mass / rep.annulus_mass : 0.0;

  double rnum = 0.0, rden = 0.0;
  for (std::size_t i = 0; i < probe_base.size(); ++i) {
    const double delta = probe_step[i];
    const Complex fd = ((probe_acc[3 * i + 1] - probe_acc[3 * i]) +
                        Complex(0.0, 1.0) * (probe_acc[3 * i + 2] - probe_acc[3 * i])) /
                       (2.0 * delta);
    const Complex ref = bilinear_value(u_hol, probe_base[i]) * dbar_tilde_chi(n, probe_base[i]);
    rnum += std::norm(fd - ref);
    rden += std::norm(ref);
  }
  rep.dbar_residual_rel = rden > 0.0 ? std::sqrt(rnum / rden) : 0.0;
  return rep;
}

// --- truncated-disk comparison ----------------------------------------------

// copy src onto another geometry of the same lattice spacing
inline GridField resample_to_geometry(const GridField& src, const GridField& geom) {
  if (std::abs(src.h - geom.h) > 1e-15)
    throw std::invalid_argument("resample_to_geometry: lattice spacings differ");
  GridField out = geom;
  out.kind = src.kind;
  out.support_center = src.support_center;
  out.support_radius = src.support_radius;
  for (int ix = 0; ix < out.side(); ++ix)
    for (int iy = 0; iy < out.side(); ++iy) {
      const int jx = ix - out.m + src.m, jy = iy - out.m + src.m;
      if (jx < 0 || jy < 0 || jx >= src.side() || jy >= src.side()) continue;
      if (std::abs(out.cell_center(ix, iy)) >= out.rho_max) continue;
      out.samples[out.index(ix, iy)] = src.at(jx, jy);
    }
  return out;
}

struct RestrictionReport {
  double solution_gap = 0.0;  // ||u_n - u||_w over the truncated disk
  double band_norm = 0.0;     // ||u_n||_w on the shell A_n
  double c2 = 0.0;            // implied comparison constant
  GridField u_full;
  GridField u_truncated;
};

/* Minimal solution on the truncated disk D(n) against the full-grid solution,
 * for data supported strictly inside the shells below n. */
inline RestrictionReport restricted_vs_global(const GridField& v, int n, const WeightSpec& w,
                                              int degree) {
  if (v.kind != GridKind::form)
    throw std::invalid_argument("restricted_vs_global: v must be a form field");
  double r_supp = 0.0;
  for (int ix = 0; ix < v.side(); ++ix)
    for (int iy = 0; iy < v.side(); ++iy)
      if (v.at(ix, iy) != Complex(0.0))
        r_supp = std::max(r_supp, std::abs(v.cell_center(ix, iy)));
  const double inner = annulus_inner_radius(n);
  if (r_supp >= inner)
    throw std::invalid_argument("restricted_vs_global: data support radius " +
                                std::to_string(r_supp) + " meets shell " + std::to_string(n) +
                                " starting at " + std::to_string(inner));

  RestrictionReport rep;
  rep.u_full = minimal_solution(v, w, degree);
  const GridField trunc_geom = make_grid_field(n, v.h, GridKind::form);
  const GridField v_trunc = resample_to_geometry(v, trunc_geom);
  rep.u_truncated = minimal_solution(v_trunc, w, degree);

  const GridField u_full_on_trunc = resample_to_geometry(rep.u_full, rep.u_truncated);
  GridField diff = rep.u_truncated;
  for (std::size_t i = 0; i < diff.samples.size(); ++i)
    diff.samples[i] -= u_full_on_trunc.samples[i];
  rep.solution_gap = std::sqrt(weighted_norm_sq(diff, w));
  rep.band_norm =
      std::sqrt(weighted_norm_sq(rep.u_truncated, w, inner, annulus_outer_radius(n)));
  rep.c2 = rep.band_norm > 0.0 ? rep.solution_gap / rep.band_norm : 0.0;
  return rep;
}

// --- weight perturbation -----------------------------------------------------

struct PerturbationReport {
  double solution_diff = 0.0;  // ||u1 - u2|| in the base weight
  double data_diff = 0.0;      // ||v1 - v2|| in the base weight
  double reference_norm = 0.0; // ||v2|| in the perturbed weight
  double implied_eps = 0.0;    // slack once the data term is removed
  GridField u1;
  GridField u2;
};

/* Solutions under the base density and a multiplicatively perturbed one,
 * (1 + delta * pert); the perturbed weight must keep a definite curvature
 * margin or the comparison constant is meaningless. */
template <class Pert>
inline PerturbationReport metric_perturbation(const GridField& v1, const GridField& v2,
                                              const WeightSpec& w, Pert&& pert, double delta,
                                              int degree) {
  if (v1.kind != GridKind::form || v2.kind != GridKind::form)
    throw std::invalid_argument("metric_perturbation: data must be form fields");
  if (v1.m != v2.m || v1.h != v2.h)
    throw std::invalid_argument("metric_perturbation: data grids differ");

  const auto d1 = [&](Complex c) { return weight_density(w, c); };
  const auto d2 = [&](Complex c) { return weight_density(w, c) * (1.0 + delta * pert(c)); };
  {
    Rng rng(77);
    const double fd = 1e-3;
    for (int i = 0; i < 60; ++i) {
      const Complex z = rng.disk_point(0.75);
      const double f = 1.0 + delta * pert(z);
      double curv_ok = f > 0.05 ? 1.0 : -1.0;
      if (curv_ok > 0.0) {
        // laplacian of -log(1 + delta pert) against the base curvature
        const auto g = [&](Complex q) { return -std::log(1.0 + delta * pert(q)); };
        const double lap =
            (g(z + Complex(fd, 0)) + g(z - Complex(fd, 0)) + g(z + Complex(0, fd)) +
             g(z - Complex(0, fd)) - 4.0 * g(z)) /
            (fd * fd);
        const double r2 = std::norm(z);
        const double base = 4.0 * (w.m - w.s) / ((1.0 - r2) * (1.0 - r2));
        if (base + lap < 0.25 * base) curv_ok = -1.0;
      }
      if (curv_ok < 0.0)
        throw std::domain_error("metric_perturbation: perturbed weight violates the curvature "
                                "bound near z = " + std::to_string(z.real()) + "+" +
                                std::to_string(z.imag()) + "i");
    }
  }

  PerturbationReport rep;
  {
    const GridField u01 = cauchy_transform(v1);
    const BergmanProjection p1 = bergman_project_gram(u01, d1, degree);
    rep.u1 = u01;
    for (std::size_t i = 0; i < rep.u1.samples.size(); ++i)
      rep.u1.samples[i] -= p1.field.samples[i];
    rep.u1.kind = GridKind::section;
  }
  {
    const GridField u02 = cauchy_transform(v2);
    const BergmanProjection p2 = bergman_project_gram(u02, d2, degree);
    rep.u2 = u02;
    for (std::size_t i = 0; i < rep.u2.samples.size(); ++i)
      rep.u2.samples[i] -= p2.field.samples[i];
    rep.u2.kind = GridKind::section;
  }

  double sd = 0.0, dd = 0.0, rn = 0.0;
  for (int ix = 0; ix < v1.side(); ++ix)
    for (int iy = 0; iy < v1.side(); ++iy) {
      const Complex c = v1.cell_center(ix, iy);
      if (std::abs(c) >= v1.rho_max) continue;
      sd += std::norm(rep.u1.at(ix, iy) - rep.u2.at(ix, iy)) * d1(c);
      dd += std::norm(v1.at(ix, iy) - v2.at(ix, iy)) * d1(c);
      rn += std::norm(v2.at(ix, iy)) * d2(c);
    }
  const double h2 = v1.h * v1.h;
  rep.solution_diff = std::sqrt(sd * h2);
  rep.data_diff = std::sqrt(dd * h2);
  rep.reference_norm = std::sqrt(rn * h2);
  rep.implied_eps =
      rep.reference_norm > 0.0
          ? std::max(0.0, rep.solution_diff - rep.data_diff / hormander_gap(w)) /
                rep.reference_norm
          : 0.0;
  return rep;
}

// --- continuity along the transversal parameter ------------------------------

struct ContinuityReport {
  std::vector<double> offsets;  // halving offsets from t0
  std::vector<double> modulus;  // sup over |t - t0| = offset of ||u_t - u_{t0}||
  double lipschitz = 0.0;       // max modulus / offset
};

/* Continuity of t -> u_t in the t0 weight, for a family of data fields and
 * densities; the sweep halves the offset `levels` times.  Densities must stay
 * positive on the sweep (the desk stand-in for the family hypotheses). */
template <class FormAt, class DensityAt>
inline ContinuityReport family_continuity(FormAt&& form_at, DensityAt&& density_at, double t0,
                                          double max_offset, int levels, int degree) {
  if (levels < 2) throw std::invalid_argument("family_continuity: need at least two levels");
  if (!(max_offset > 0.0))
    throw std::invalid_argument("family_continuity: offset must be positive");

  const auto solve_at = [&](double t) {
    const GridField v = form_at(t);
    if (v.kind != GridKind::form)
      throw std::invalid_argument("family_continuity: data must be form fields");
    const auto dens = density_at(t);
    {
      Rng rng(11);
      for (int i = 0; i < 24; ++i) {
        const double d = dens(rng.disk_point(0.9));
        if (!(d > 0.0) || !std::isfinite(d))
          throw std::domain_error("family_continuity: density not positive at t = " +
                                  std::to_string(t));
      }
    }
    const GridField u0 = cauchy_transform(v);
    const BergmanProjection p = bergman_project_gram(u0, dens, degree);
    GridField u = u0;
    for (std::size_t i = 0; i < u.samples.size(); ++i) u.samples[i] -= p.field.samples[i];
    u.kind = GridKind::section;
    return u;
  };

  const GridField u_ref = solve_at(t0);
  const auto dens0 = density_at(t0);
  const auto diff_norm = [&](const GridField& a) {
    double acc = 0.0;
    for (int ix = 0; ix < a.side(); ++ix)
      for (int iy = 0; iy < a.side(); ++iy) {
        const Complex c = a.cell_center(ix, iy);
        if (std::abs(c) >= a.rho_max) continue;
        acc += std::norm(a.at(ix, iy) - u_ref.at(ix, iy)) * dens0(c);
      }
    return std::sqrt(acc) * a.h;
  };

  ContinuityReport rep;
  for (int j = 0; j < levels; ++j) {
    const double off = max_offset * std::ldexp(1.0, -j);
    const double m =
        std::max(diff_norm(solve_at(t0 + off)), diff_norm(solve_at(t0 - off)));
    rep.offsets.push_back(off);
    rep.modulus.push_back(m);
    if (off > 0.0) rep.lipschitz = std::max(rep.lipschitz, m / off);
  }
  return rep;
}

}  // namespace ldbar
