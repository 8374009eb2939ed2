#pragma once

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "ldbar/grid_field.hpp"

namespace ldbar {

/* Particular solution of dbar u = v by the Cauchy kernel:
 *
 *   u(z) = (-1/pi) integral v(zeta)/(zeta - z) dV(zeta)
 *
 * discretized with cell weight h^2.  Any cell closer to the evaluation point
 * than h/2 is dropped: on the offset lattice that is exactly the singular
 * cell, whose principal value vanishes by the symmetry of a centered square. */
inline std::vector<Complex> cauchy_transform_at(const std::vector<Complex>& eval,
                                                const std::vector<Complex>& cells,
                                                const std::vector<Complex>& values, double h) {
  if (cells.size() != values.size())
    throw std::invalid_argument("cauchy: one value per source cell required");
  std::vector<Complex> out(eval.size(), Complex(0.0));
  for (std::size_t p = 0; p < cells.size(); ++p) {
    const Complex c = cells[p];
    const Complex vc = values[p];
    if (vc == Complex(0.0)) continue;
    for (std::size_t i = 0; i < eval.size(); ++i) {
      const Complex d = c - eval[i];
      if (std::abs(d) < 0.5 * h) continue;
      out[i] += vc / d;
    }
  }
  const double scale = -h * h / std::numbers::pi;
  for (Complex& u : out) u *= scale;
  return out;
}

inline Complex cauchy_transform_at(const GridField& v, Complex z) {
  Complex acc = 0.0;
  for (int ix = 0; ix < v.side(); ++ix)
    for (int iy = 0; iy < v.side(); ++iy) {
      const Complex vc = v.at(ix, iy);
      if (vc == Complex(0.0)) continue;
      const Complex d = v.cell_center(ix, iy) - z;
      if (std::abs(d) < 0.5 * v.h) continue;
      acc += vc / d;
    }
  return acc * (-v.h * v.h / std::numbers::pi);
}

namespace detail {

inline void require_form_inside(const GridField& v) {
  if (v.kind != GridKind::form)
    throw std::invalid_argument("cauchy: data must be a (0,1)-form coefficient");
  for (int ix = 0; ix < v.side(); ++ix)
    for (int iy = 0; iy < v.side(); ++iy)
      if (v.at(ix, iy) != Complex(0.0) &&
          std::abs(v.cell_center(ix, iy)) >= v.rho_max - 1.5 * v.h)
        throw std::invalid_argument("cauchy: support touching the grid boundary");
}

// fftw planning is not thread-safe; execution of a private plan is
inline std::mutex& fftw_mutex() {
  static std::mutex mu;
  return mu;
}

struct FftwPlan {
  fftw_plan p = nullptr;
  FftwPlan(int n, Complex* in, Complex* out, int sign) {
    std::lock_guard<std::mutex> g(fftw_mutex());
    p = fftw_plan_dft_2d(n, n, reinterpret_cast<fftw_complex*>(in),
                         reinterpret_cast<fftw_complex*>(out), sign, FFTW_ESTIMATE);
    if (!p) throw std::runtime_error("cauchy: fftw plan creation failed");
  }
  void run() const { fftw_execute(p); }
  ~FftwPlan() {
    std::lock_guard<std::mutex> g(fftw_mutex());
    fftw_destroy_plan(p);
  }
  FftwPlan(const FftwPlan&) = delete;
  FftwPlan& operator=(const FftwPlan&) = delete;
};

}  // namespace detail

/* Same sum for every cell center at once, as a zero-padded FFT correlation:
 * u[i] = sum_p K[p - i] v[p] with the kernel tabulated on the offset lattice
 * (4m-1 offsets per axis), flipped, linearly convolved at padding >= 6m-2,
 * and read off the window [2m-1, 4m-1).  Bit-for-bit deterministic: the
 * estimate-mode planner never measures at runtime. */
inline GridField cauchy_transform(const GridField& v) {
  detail::require_form_inside(v);
  const int m = v.m;
  const int L = 4 * m - 1;
  int n2 = 1;
  while (n2 < 6 * m - 2) n2 *= 2;
  const std::size_t nn = static_cast<std::size_t>(n2) * n2;

  std::vector<Complex> a(nn, Complex(0.0)), b(nn, Complex(0.0));
  std::vector<Complex> fa(nn), fb(nn);

  // flipped kernel, zero-padded: a[q] = K[(4m-2-qx, 4m-2-qy)]
  for (int qx = 0; qx < L; ++qx)
    for (int qy = 0; qy < L; ++qy) {
      const double ox = ((L - 1 - qx) - (2 * m - 1)) * v.h;
      const double oy = ((L - 1 - qy) - (2 * m - 1)) * v.h;
      const Complex d(ox, oy);
      if (std::abs(d) < 0.5 * v.h) continue;
      a[static_cast<std::size_t>(qx) * n2 + qy] = 1.0 / d;
    }
  for (int ix = 0; ix < v.side(); ++ix)
    for (int iy = 0; iy < v.side(); ++iy)
      b[static_cast<std::size_t>(ix) * n2 + iy] = v.at(ix, iy);

  {
    detail::FftwPlan pa(n2, a.data(), fa.data(), FFTW_FORWARD);
    pa.run();
  }
  {
    detail::FftwPlan pb(n2, b.data(), fb.data(), FFTW_FORWARD);
    pb.run();
  }
  for (std::size_t i = 0; i < nn; ++i) fa[i] *= fb[i];
  {
    detail::FftwPlan pc(n2, fa.data(), a.data(), FFTW_BACKWARD);
    pc.run();
  }

  GridField u = v;
  u.kind = GridKind::section;
  const double scale = -v.h * v.h / (std::numbers::pi * nn);
  for (int ix = 0; ix < v.side(); ++ix)
    for (int iy = 0; iy < v.side(); ++iy)
      u.at(ix, iy) = a[static_cast<std::size_t>(ix + 2 * m - 1) * n2 + (iy + 2 * m - 1)] * scale;
  return u;
}

// small-grid reference path for the transform; quadratic cost, used in tests
inline GridField cauchy_transform_direct(const GridField& v) {
  detail::require_form_inside(v);
  GridField u = v;
  u.kind = GridKind::section;
  for (int ix = 0; ix < u.side(); ++ix)
    for (int iy = 0; iy < u.side(); ++iy)
      u.at(ix, iy) = cauchy_transform_at(v, v.cell_center(ix, iy));
  return u;
}

/* Weighted plane formula with a zero of order k at infinity:
 *
 *   u(z) = (-1/(pi z^k)) integral v(zeta) zeta^k / (zeta - z) dV(zeta)
 *
 * (area form dV; the dzeta wedge dzetabar statement differs by a fixed factor
 * absorbed into the kernel normalization so that dbar u = v holds). */
inline Complex weighted_cauchy_plane(const GridField& v, int k, Complex z) {
  if (k < 0) throw std::invalid_argument("weighted cauchy: order k must be non-negative");
  if (v.kind != GridKind::form)
    throw std::invalid_argument("weighted cauchy: data must be a (0,1)-form coefficient");
  if (k > 0 && z == Complex(0.0))
    throw std::domain_error("weighted cauchy: z = 0 is excluded when k > 0");
  Complex acc = 0.0;
  for (int ix = 0; ix < v.side(); ++ix)
    for (int iy = 0; iy < v.side(); ++iy) {
      const Complex vc = v.at(ix, iy);
      if (vc == Complex(0.0)) continue;
      const Complex c = v.cell_center(ix, iy);
      const Complex d = c - z;
      if (std::abs(d) < 0.5 * v.h) continue;
      acc += vc * std::pow(c, k) / d;
    }
  return acc * (-v.h * v.h / std::numbers::pi) / std::pow(z, k);
}

/* Far-field Laurent data of the transform:  u(z) = sum_j M_j (z-c0)^-(j+1)
 * for |z - c0| beyond the support, with M_j = (h^2/pi) sum v(c) (c-c0)^j. */
struct LaurentExpansion {
  Complex center = 0.0;
  double valid_radius = 0.0;
  std::vector<Complex> moments;
};

inline LaurentExpansion laurent_moments(const GridField& v, Complex center, int terms) {
  if (terms < 1) throw std::invalid_argument("laurent: need at least one moment");
  if (v.kind != GridKind::form)
    throw std::invalid_argument("laurent: data must be a (0,1)-form coefficient");
  LaurentExpansion e;
  e.center = center;
  e.moments.assign(terms, Complex(0.0));
  double rad = 0.0;
  for (int ix = 0; ix < v.side(); ++ix)
    for (int iy = 0; iy < v.side(); ++iy) {
      const Complex vc = v.at(ix, iy);
      if (vc == Complex(0.0)) continue;
      const Complex d = v.cell_center(ix, iy) - center;
      rad = std::max(rad, std::abs(d));
      Complex p = vc;
      for (int j = 0; j < terms; ++j) {
        e.moments[j] += p;
        p *= d;
      }
    }
  const double scale = v.h * v.h / std::numbers::pi;
  for (Complex& mj : e.moments) mj *= scale;
  e.valid_radius = rad;
  return e;
}

inline Complex laurent_eval(const LaurentExpansion& e, Complex z) {
  const Complex d = z - e.center;
  if (std::abs(d) <= e.valid_radius)
    throw std::domain_error("laurent: evaluation point inside the source support");
  const Complex w = 1.0 / d;
  Complex acc = 0.0, p = w;
  for (const Complex& mj : e.moments) {
    acc += mj * p;
    p *= w;
  }
  return acc;
}

}  // namespace ldbar
