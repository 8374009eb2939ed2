#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "ldbar/disk_geometry.hpp"

namespace ldbar {

/* Weight data for the line bundle: sigma = -m*psi, auxiliary power s, so the
 * combined density is e^{-(sigma + s*psi)} = (1 - |zeta|^2)^{m-s}.  With the
 * Laplacian normalization dd^c = (Laplacian) dV used throughout,
 * dd^c sigma = 4m/(1-|zeta|^2)^2 dV, so the curvature constant is c = 4m. */
struct WeightSpec {
  int m = 6;
  int s = 5;
};

inline WeightSpec make_weight_spec(int m, int s) {
  if (m < 1) throw std::invalid_argument("weight: m must be a positive integer");
  if (s < 0) throw std::invalid_argument("weight: s must be non-negative");
  if (m <= s)
    throw std::invalid_argument("weight: m > s required for an integrable density, got m = " +
                                std::to_string(m) + ", s = " + std::to_string(s));
  return WeightSpec{m, s};
}

inline double curvature_constant(const WeightSpec& w) { return 4.0 * w.m; }

// c - 4s, the denominator of the Hoermander bound 1/(c - 4s)
inline double hormander_gap(const WeightSpec& w) { return 4.0 * (w.m - w.s); }

inline double weight_density(const WeightSpec& w, Complex zeta) {
  const double t = 1.0 - std::norm(zeta);
  if (t <= 0.0) return 0.0;
  return std::pow(t, w.m - w.s);
}

/* Five-point finite-difference Laplacian of s*psi against the closed form
 * -4s/(1-|zeta|^2)^2.  Returns the relative deviation. */
inline double ddc_s_psi_fd_rel_error(int s, Complex z, double h = 1e-3) {
  if (std::abs(z) + h >= 1.0) throw std::domain_error("ddc check: stencil leaves the disk");
  const auto f = [s](Complex w) { return s * psi(w); };
  const double lap = (f(z + h) + f(z - h) + f(z + Complex(0, h)) + f(z - Complex(0, h)) -
                      4.0 * f(z)) /
                     (h * h);
  const double t = 1.0 - std::norm(z);
  const double exact = -4.0 * s / (t * t);
  if (s == 0) return std::abs(lap);
  return std::abs(lap - exact) / std::abs(exact);
}

}  // namespace ldbar
