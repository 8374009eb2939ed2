#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "ldbar/grid_field.hpp"

namespace ldbar {

/* Orthogonal projection onto holomorphic polynomials of degree <= D in the
 * discrete inner product  <f,g> = h^2 sum f(c) conj(g(c)) w(c)  over cells of
 * the field's disk.  Working in the grid's own inner product (instead of the
 * continuum one) is what makes idempotence and the orthogonality residuals
 * exact to rounding rather than to quadrature error. */

template <class Density>
inline std::vector<Complex> monomial_moments(const GridField& f, Density&& w, int degree) {
  if (degree < 0) throw std::invalid_argument("moments: degree must be non-negative");
  std::vector<Complex> mu(degree + 1, Complex(0.0));
  for (int ix = 0; ix < f.side(); ++ix)
    for (int iy = 0; iy < f.side(); ++iy) {
      const Complex c = f.cell_center(ix, iy);
      if (std::abs(c) >= f.rho_max) continue;
      const Complex base = f.at(ix, iy) * w(c);
      if (base == Complex(0.0)) continue;
      Complex p = 1.0;
      const Complex cc = std::conj(c);
      for (int j = 0; j <= degree; ++j) {
        mu[j] += base * p;
        p *= cc;
      }
    }
  const double h2 = f.h * f.h;
  for (Complex& v : mu) v *= h2;
  return mu;
}

// Gram matrix G[i][j] = <zeta^i, zeta^j>, row-major (degree+1)^2
template <class Density>
inline std::vector<Complex> monomial_gram(const GridField& geom, Density&& w, int degree) {
  const int n = degree + 1;
  std::vector<Complex> g(static_cast<std::size_t>(n) * n, Complex(0.0));
  std::vector<Complex> pow(n);
  for (int ix = 0; ix < geom.side(); ++ix)
    for (int iy = 0; iy < geom.side(); ++iy) {
      const Complex c = geom.cell_center(ix, iy);
      if (std::abs(c) >= geom.rho_max) continue;
      const double wc = w(c);
      if (wc == 0.0) continue;
      pow[0] = 1.0;
      for (int j = 1; j < n; ++j) pow[j] = pow[j - 1] * c;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j) g[static_cast<std::size_t>(i) * n + j] += pow[i] * std::conj(pow[j]) * wc;
    }
  const double h2 = geom.h * geom.h;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) {
      Complex& lower = g[static_cast<std::size_t>(i) * n + j];
      lower *= h2;
      g[static_cast<std::size_t>(j) * n + i] = std::conj(lower);
    }
  return g;
}

namespace detail {

struct HermitianEig {
  std::vector<double> values;             // ascending
  std::vector<Complex> vectors;           // column a = eigenvector of values[a]
};

/* Cyclic Jacobi for a Hermitian matrix: each 2x2 pivot is diagonalized by a
 * unitary rotation whose phase absorbs arg(A_pq).  Deterministic sweep order,
 * quadratic convergence; plenty for the basis sizes used here (n <= 64). */
inline HermitianEig hermitian_eig(std::vector<Complex> a, int n) {
  std::vector<Complex> v(static_cast<std::size_t>(n) * n, Complex(0.0));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i) * n + i] = 1.0;
  auto A = [&](int i, int j) -> Complex& { return a[static_cast<std::size_t>(i) * n + j]; };
  auto V = [&](int i, int j) -> Complex& { return v[static_cast<std::size_t>(i) * n + j]; };

  double scale = 0.0;
  for (int i = 0; i < n; ++i) scale = std::max(scale, std::abs(A(i, i)));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i; ++j) scale = std::max(scale, std::abs(A(i, j)));
  if (scale == 0.0) scale = 1.0;

  for (int sweep = 0; sweep < 60; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < i; ++j) off = std::max(off, std::abs(A(i, j)));
    if (off < 1e-15 * scale) break;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        const Complex apq = A(p, q);
        const double r = std::abs(apq);
        if (r < 1e-18 * scale) continue;
        const Complex phase = apq / r;  // A_pq = r * phase
        const double theta = (std::real(A(q, q)) - std::real(A(p, p))) / (2.0 * r);
        /* smaller-magnitude root of tau^2 - 2*theta*tau - 1 = 0, so the
           rotation angle stays below pi/4 and the sweep converges */
        const double tau =
            (theta >= 0 ? -1.0 : 1.0) / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
        const double c = 1.0 / std::sqrt(1.0 + tau * tau);
        const Complex s = tau * c * std::conj(phase);  // rotation [c, -conj(s); s, c]
        for (int i = 0; i < n; ++i) {  // A <- A R
          const Complex aip = A(i, p), aiq = A(i, q);
          A(i, p) = c * aip + s * aiq;
          A(i, q) = -std::conj(s) * aip + c * aiq;
        }
        for (int i = 0; i < n; ++i) {  // A <- R^* A
          const Complex api = A(p, i), aqi = A(q, i);
          A(p, i) = c * api + std::conj(s) * aqi;
          A(q, i) = -s * api + c * aqi;
        }
        for (int i = 0; i < n; ++i) {  // V <- V R
          const Complex vip = V(i, p), viq = V(i, q);
          V(i, p) = c * vip + s * viq;
          V(i, q) = -std::conj(s) * vip + c * viq;
        }
      }
  }
  {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < i; ++j) off = std::max(off, std::abs(A(i, j)));
    if (off > 1e-10 * scale)
      throw std::runtime_error("eig: jacobi sweep failed to converge");
  }

  HermitianEig e;
  e.values.resize(n);
  for (int i = 0; i < n; ++i) e.values[i] = std::real(A(i, i));
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](int x, int y) { return e.values[x] < e.values[y]; });
  HermitianEig out;
  out.values.resize(n);
  out.vectors.assign(static_cast<std::size_t>(n) * n, Complex(0.0));
  for (int a2 = 0; a2 < n; ++a2) {
    out.values[a2] = e.values[order[a2]];
    for (int i = 0; i < n; ++i)
      out.vectors[static_cast<std::size_t>(i) * n + a2] = V(i, order[a2]);
  }
  return out;
}

}  // namespace detail

struct BergmanProjection {
  GridField field;                            // P u, sampled on u's grid
  std::vector<Complex> monomial_coefficients; // P u = sum_i b_i zeta^i
  int rank = 0;                               // basis functions kept
};

namespace detail {

inline GridField evaluate_polynomial(const GridField& geom, const std::vector<Complex>& b) {
  GridField out = geom;
  for (int ix = 0; ix < out.side(); ++ix)
    for (int iy = 0; iy < out.side(); ++iy) {
      const Complex z = out.cell_center(ix, iy);
      if (std::abs(z) >= out.rho_max) {
        out.at(ix, iy) = 0.0;
        continue;
      }
      Complex acc = 0.0;
      for (std::size_t i = b.size(); i-- > 0;) acc = acc * z + b[i];
      out.at(ix, iy) = acc;
    }
  return out;
}

}  // namespace detail

/* Full Gram matrix, Hermitian eigen-orthonormalization, relative eigenvalue
 * cutoff for conditioning.  The Gram route is used even for radial weights:
 * on the square lattice, monomials with exponents congruent mod 4 retain
 * O(h^2) discrete inner products (the grid is only 4-fold symmetric), which
 * the 1e-10 orthogonality contract cannot absorb. */
template <class Density>
inline BergmanProjection bergman_project_gram(const GridField& u, Density&& w, int degree,
                                              double eig_cutoff = 1e-12) {
  if (u.kind != GridKind::section)
    throw std::invalid_argument("projection: operand must be a section");
  const int n = degree + 1;
  const std::vector<Complex> g = monomial_gram(u, w, degree);
  const std::vector<Complex> mu = monomial_moments(u, w, degree);
  const detail::HermitianEig eig = detail::hermitian_eig(g, n);
  const double lmax = eig.values.back();
  if (!(lmax > 0.0)) throw std::runtime_error("projection: weight degenerates on the grid");

  BergmanProjection out;
  out.monomial_coefficients.assign(n, Complex(0.0));
  for (int a = 0; a < n; ++a) {
    if (eig.values[a] <= eig_cutoff * lmax) continue;
    ++out.rank;
    // basis element e_a = lambda^{-1/2} sum_i conj(V_{ia}) zeta^i
    Complex coeff_u = 0.0;  // <u, e_a>
    for (int i = 0; i < n; ++i)
      coeff_u += eig.vectors[static_cast<std::size_t>(i) * n + a] * mu[i];
    coeff_u /= eig.values[a];
    for (int i = 0; i < n; ++i)
      out.monomial_coefficients[i] +=
          coeff_u * std::conj(eig.vectors[static_cast<std::size_t>(i) * n + a]);
  }
  out.field = detail::evaluate_polynomial(u, out.monomial_coefficients);
  out.field.kind = GridKind::section;
  return out;
}

inline BergmanProjection bergman_project(const GridField& u, const WeightSpec& w, int degree) {
  return bergman_project_gram(u, [&](Complex c) { return weight_density(w, c); }, degree);
}

/* max_j |<u, zeta^j>| / (||zeta^j|| ||u||) in the discrete weighted product —
 * the orthogonality defect reported by the minimality tests. */
template <class Density>
inline double orthogonality_defect(const GridField& u, Density&& w, int degree) {
  const std::vector<Complex> mu = monomial_moments(u, w, degree);
  std::vector<double> diag(degree + 1, 0.0);
  double u2 = 0.0;
  for (int ix = 0; ix < u.side(); ++ix)
    for (int iy = 0; iy < u.side(); ++iy) {
      const Complex c = u.cell_center(ix, iy);
      if (std::abs(c) >= u.rho_max) continue;
      const double wc = w(c);
      u2 += std::norm(u.at(ix, iy)) * wc;
      double p = wc;
      const double r2 = std::norm(c);
      for (int j = 0; j <= degree; ++j) {
        diag[j] += p;
        p *= r2;
      }
    }
  const double h2 = u.h * u.h;
  u2 *= h2;
  if (u2 == 0.0) return 0.0;
  double worst = 0.0;
  for (int j = 0; j <= degree; ++j)
    worst = std::max(worst, std::abs(mu[j]) / std::sqrt(diag[j] * h2 * u2));
  return worst;
}

}  // namespace ldbar
