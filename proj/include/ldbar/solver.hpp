#pragma once

#include <cmath>
#include <stdexcept>

#include "ldbar/bergman.hpp"
#include "ldbar/cauchy.hpp"
#include "ldbar/mobius.hpp"

namespace ldbar {

/* Minimal solution of dbar u = v in the discrete weighted product: the Cauchy
 * particular solution minus its holomorphic projection.  Orthogonality to the
 * polynomial range is what characterizes norm minimality, so the projection
 * degree stands in for "all holomorphic functions"; degree_sufficient below
 * checks that the truncation has converged. */
struct SolveReport {
  GridField u;
  double hormander_ratio = 0.0;   // ||u||_w^2 / ||v||_w^2, recorded against 1/(c-4s)
  double minimality_defect = 0.0; // orthogonality residual of u against the basis
  int basis_rank = 0;
};

inline SolveReport minimal_solution_report(const GridField& v, const WeightSpec& w,
                                           int degree) {
  const GridField u0 = cauchy_transform(v);
  const BergmanProjection p = bergman_project(u0, w, degree);
  SolveReport out;
  out.u = u0;
  for (std::size_t i = 0; i < out.u.samples.size(); ++i)
    out.u.samples[i] -= p.field.samples[i];
  out.basis_rank = p.rank;
  const double v2 = weighted_norm_sq(v, w);
  const double u2 = weighted_norm_sq(out.u, w);
  out.hormander_ratio = (v2 > 0.0) ? u2 / v2 : 0.0;
  out.minimality_defect =
      orthogonality_defect(out.u, [&](Complex c) { return weight_density(w, c); }, degree);
  return out;
}

inline GridField minimal_solution(const GridField& v, const WeightSpec& w, int degree) {
  return minimal_solution_report(v, w, degree).u;
}

/* Truncation guard: raising the degree must not move the solution.  The two
 * solves share the Cauchy transform, so only the projections differ.  The
 * default tolerance sits above the lattice-harmonic floor of the discrete
 * Cauchy transform (~3e-5 at h = 1/128, concentrated in the z^{4k} classes,
 * O(h^2) but degree-independent) and three orders below a genuinely
 * insufficient basis, which moves the solution at the 1e-1 scale. */
inline bool degree_sufficient(const GridField& v, const WeightSpec& w, int degree,
                              int probe = 6, double rel_tol = 1e-4) {
  const GridField u0 = cauchy_transform(v);
  const BergmanProjection pa = bergman_project(u0, w, degree);
  const BergmanProjection pb = bergman_project(u0, w, degree + probe);
  GridField diff = pa.field;
  for (std::size_t i = 0; i < diff.samples.size(); ++i)
    diff.samples[i] -= pb.field.samples[i];
  const double base = weighted_norm_sq(u0, w);
  if (base == 0.0) return true;
  return std::sqrt(weighted_norm_sq(diff, w) / base) <= rel_tol;
}

/* Pullback along a disk automorphism on the field's own geometry: sections by
 * composition, (0,1)-coefficients with the extra conj(phi') factor, values
 * read off the source grid bilinearly. */
inline GridField pullback(const MobiusTransform& phi, const GridField& f) {
  GridField out = f;
  for (int ix = 0; ix < out.side(); ++ix)
    for (int iy = 0; iy < out.side(); ++iy) {
      const Complex xi = out.cell_center(ix, iy);
      if (std::abs(xi) >= out.rho_max) {
        out.at(ix, iy) = 0.0;
        continue;
      }
      Complex val = bilinear_value(f, mobius_apply(phi, xi));
      if (f.kind == GridKind::form) val *= std::conj(mobius_derivative(phi, xi));
      out.at(ix, iy) = val;
    }
  return out;
}

}  // namespace ldbar
