#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ldbar/disk_geometry.hpp"
#include "ldbar/mobius.hpp"
#include "ldbar/rng.hpp"

namespace ldbar {

/*
 * The strip S = {0 < x < 1} carries an overlapping cover by rectangles
 * S_{k,l} = (k/32, (k+2)/32) x (l/256, (l+2)/256), k in [0,30], l in Z, and a
 * C^1 partition of unity subordinate to it: a tensor product of cubic
 * smoothstep windows, normalized by the local window sum, exactly translation
 * invariant in y. The map
 *
 *     f_n(x, y) = (1 - (1/2)^n + x (1/2)^{n+1}) e^{2 pi i y (1/2)^{n+1}}
 *
 * pushes one y-period of the strip onto the dyadic shell A_n; pulled back
 * through f_n^{-1} the windows become the shell partition, with gradients that
 * scale like 2^n (the Jacobian of f_n^{-1}).
 */

struct RectangleIndex {
  int k = 0;       // x-window, in [0, 30]
  long long l = 0; // y-window, in [0, 2^{n+9}) for shell n
  int n = 0;       // shell index
};

inline long long y_window_count(int n) { return 1LL << (n + 9); }

// --- annulus maps -----------------------------------------------------------

inline Complex annulus_map(int n, double x, double y) {
  if (n < 0) throw std::invalid_argument("annulus_map: n must be >= 0");
  if (!(x > 0.0 && x < 1.0)) throw std::domain_error("annulus_map: x must lie in (0,1)");
  const double r = 1.0 - std::ldexp(1.0, -n) + x * std::ldexp(1.0, -(n + 1));
  const double theta = 2.0 * std::numbers::pi * y * std::ldexp(1.0, -(n + 1));
  return std::polar(r, theta);
}

// Inverse on the closed shell; y lands in [0, 2^{n+1}).
inline std::pair<double, double> annulus_map_inverse(int n, Complex zeta) {
  if (n < 0) throw std::invalid_argument("annulus_map_inverse: n must be >= 0");
  const double r = std::abs(zeta);
  if (r < annulus_inner_radius(n) - 1e-12 || r > annulus_outer_radius(n) + 1e-12)
    throw std::domain_error("annulus_map_inverse: point not in the closed shell");
  const double x = (r - annulus_inner_radius(n)) * std::ldexp(1.0, n + 1);
  const double period = std::ldexp(1.0, n + 1);
  double y = std::arg(zeta) * period / (2.0 * std::numbers::pi);
  y = std::fmod(y, period);
  if (y < 0.0) y += period;
  return {x, y};
}

// --- window profiles --------------------------------------------------------

namespace detail {

// cubic smoothstep and the tent bump b built from it; w(u) + w(1-u) = 1.
inline double smoothstep(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  return u * u * (3.0 - 2.0 * u);
}

inline double bump(double t) {
  if (t <= 0.0 || t >= 2.0) return 0.0;
  return t <= 1.0 ? smoothstep(t) : smoothstep(2.0 - t);
}

// x-window k evaluated at t = 32 x - k. The first and last windows absorb
// their missing neighbors, so the windows sum to one on all of (0,1) and the
// profile continues smoothly past the strip edges (the annulus pullback needs
// one-sided probes there).
inline double x_window(int k, double x) {
  const double t = 32.0 * x - k;
  if (k == 0) return t <= 1.0 ? 1.0 : bump(t);
  if (k == 30) return t >= 1.0 ? 1.0 : bump(t);
  return bump(t);
}

// periodic y-window l for shell n, at most one period wide
inline double y_window(long long l, double y, int n) {
  const double period = static_cast<double>(y_window_count(n));
  double t = std::fmod(256.0 * y - static_cast<double>(l), period);
  if (t < 0.0) t += period;
  return bump(t);
}

inline double x_local_sum(double x) {
  const int kx = static_cast<int>(std::floor(32.0 * x));
  double s = 0.0;
  for (int k = std::max(0, kx - 1); k <= std::min(30, kx); ++k) s += x_window(k, x);
  if (kx < 0) s = x_window(0, x);
  if (kx > 30) s = x_window(30, x);
  return s;
}

inline double y_local_sum(double y, int n) {
  const double u = 256.0 * y - std::floor(256.0 * y);
  (void)n;
  return bump(u) + bump(u + 1.0);
}

// strip partition function alpha_{k,l}; exactly translation invariant in l
inline double alpha_strip(const RectangleIndex& idx, double x, double y) {
  const double num = x_window(idx.k, x) * y_window(idx.l, y, idx.n);
  if (num == 0.0) return 0.0;
  return (num / x_local_sum(x)) / y_local_sum(y, idx.n);
}

// pullback to the shell without the domain guard; FD probes may step a hair
// across the shell boundary, where the window formulas continue smoothly
inline double tilde_alpha_extended(const RectangleIndex& idx, Complex zeta) {
  const double r = std::abs(zeta);
  const double x = (r - annulus_inner_radius(idx.n)) * std::ldexp(1.0, idx.n + 1);
  const double period = std::ldexp(1.0, idx.n + 1);
  double y = std::arg(zeta) * period / (2.0 * std::numbers::pi);
  y = std::fmod(y, period);
  if (y < 0.0) y += period;
  return alpha_strip(idx, x, y);
}

}  // namespace detail

struct PartitionSpec {
  double x_spacing = 1.0 / 32.0;
  double x_width = 2.0 / 32.0;
  double y_spacing = 1.0 / 256.0;
  double y_width = 2.0 / 256.0;
  double chi_one_below = 0.25;
  double chi_zero_above = 0.75;
  double c1_bound = 0.0;  // measured uniform strip C^1 bound c_p
};

// decreasing cutoff profile: 1 on (-inf, 1/4], 0 on [3/4, inf)
inline double chi_profile(double x) {
  if (x <= 0.25) return 1.0;
  if (x >= 0.75) return 0.0;
  return detail::smoothstep(2.0 * (0.75 - x));
}

// --- shell partition and cutoff --------------------------------------------

inline double tilde_alpha(const RectangleIndex& idx, Complex zeta) {
  if (idx.k < 0 || idx.k > 30) throw std::invalid_argument("tilde_alpha: k out of range");
  if (idx.l < 0 || idx.l >= y_window_count(idx.n))
    throw std::invalid_argument("tilde_alpha: l out of range");
  const double r = std::abs(zeta);
  if (r < annulus_inner_radius(idx.n) - 1e-12 || r > annulus_outer_radius(idx.n) + 1e-12)
    throw std::domain_error("tilde_alpha: point not in the closed shell");
  return detail::tilde_alpha_extended(idx, zeta);
}

// chi_n: the radial cutoff of shell n extended to the whole disk — identically
// 1 on the closed disk D(n-1) inside the shell, the smoothstep ramp across the
// shell, 0 outside.
inline double tilde_chi(int n, Complex zeta) {
  if (n < 0) throw std::invalid_argument("tilde_chi: n must be >= 0");
  const int m = annulus_index(zeta);
  if (m < n) return 1.0;
  if (m > n) return 0.0;
  const double x = (std::abs(zeta) - annulus_inner_radius(n)) * std::ldexp(1.0, n + 1);
  return chi_profile(x);
}

inline Complex rectangle_center(const RectangleIndex& idx) {
  return annulus_map(idx.n, (idx.k + 1.0) / 32.0, (idx.l + 1.0) / 256.0);
}

inline MobiusTransform rectangle_transform(const RectangleIndex& idx) {
  return mobius_with_origin_image(rectangle_center(idx), 0.0);
}

// --- sweeps and measurements ------------------------------------------------

struct PartitionSweep {
  long long points = 0;
  double max_sum_defect = 0.0;  // max |sum alpha - 1|
  int max_overlap = 0;          // most simultaneously nonzero windows
  double min_value = std::numeric_limits<double>::infinity();
  double max_value = -std::numeric_limits<double>::infinity();
};

// Random strip points pushed to shell n; at each, scan every x-window and the
// y-windows near the point, accumulating the partition sum and the overlap.
inline PartitionSweep partition_invariant_sweep(int n, long long points, std::uint64_t seed) {
  if (points < 1) throw std::invalid_argument("partition_invariant_sweep: points must be >= 1");
  Rng rng(seed);
  PartitionSweep sw;
  sw.points = points;
  const long long ln = y_window_count(n);
  for (long long i = 0; i < points; ++i) {
    const double x = rng.uniform();
    const double y = rng.uniform() * std::ldexp(1.0, n + 1);
    const Complex zeta = annulus_map(n, x, y);
    const long long ly = static_cast<long long>(std::floor(256.0 * y));
    double sum = 0.0;
    int live = 0;
    for (int k = 0; k <= 30; ++k) {
      for (long long dl = -2; dl <= 2; ++dl) {
        long long l = (ly + dl) % ln;
        if (l < 0) l += ln;
        const double v = tilde_alpha({k, l, n}, zeta);
        // ignore sub-ulp slivers from the polar round-trip at window nodes
        if (v > 1e-14) {
          ++live;
          sum += v;
          sw.min_value = std::min(sw.min_value, v);
          sw.max_value = std::max(sw.max_value, v);
        }
      }
    }
    sw.max_sum_defect = std::max(sw.max_sum_defect, std::abs(sum - 1.0));
    sw.max_overlap = std::max(sw.max_overlap, live);
  }
  return sw;
}

// Sup over one rectangle of the first-derivative magnitude of the pulled-back
// window, measured as strip-coordinate finite differences divided by the
// chord length in the disk (spacing 1e-4 in (x, y)).
inline double measured_gradient_sup(int n, int k) {
  const RectangleIndex idx{k, 0, n};
  const double xlo = k / 32.0, xhi = (k + 2) / 32.0;
  const double delta = 1e-4;
  double sup = 0.0;
  for (int i = 0; i < 24; ++i) {
    const double x = xlo + (i + 0.5) * (xhi - xlo) / 24.0;
    for (int j = 0; j < 24; ++j) {
      const double y = (j + 0.5) * (2.0 / 256.0) / 24.0;
      const Complex zp = annulus_map(n, x + delta, y);
      const Complex zm = annulus_map(n, x - delta, y);
      const double gx = std::abs(detail::tilde_alpha_extended(idx, zp) -
                                 detail::tilde_alpha_extended(idx, zm)) /
                        std::abs(zp - zm);
      const Complex wp = annulus_map(n, x, y + delta);
      const Complex wm = annulus_map(n, x, y - delta);
      const double gy = std::abs(detail::tilde_alpha_extended(idx, wp) -
                                 detail::tilde_alpha_extended(idx, wm)) /
                        std::abs(wp - wm);
      sup = std::max({sup, gx, gy});
    }
  }
  return sup;
}

// Measured strip C^1 bound of the partition functions (one interior window;
// translation invariance makes it universal).
inline PartitionSpec make_partition_spec() {
  PartitionSpec spec;
  const RectangleIndex idx{8, 0, 0};
  const double delta = 1e-4;
  double sup = 0.0, supv = 0.0;
  for (int i = 0; i < 40; ++i) {
    const double x = 8.0 / 32.0 + (i + 0.5) * (2.0 / 32.0) / 40.0;
    for (int j = 0; j < 40; ++j) {
      const double y = (j + 0.5) * (2.0 / 256.0) / 40.0;
      const double v = detail::alpha_strip(idx, x, y);
      const double gx =
          (detail::alpha_strip(idx, x + delta, y) - detail::alpha_strip(idx, x - delta, y)) /
          (2.0 * delta);
      const double gy =
          (detail::alpha_strip(idx, x, y + delta) - detail::alpha_strip(idx, x, y - delta)) /
          (2.0 * delta);
      supv = std::max(supv, v);
      sup = std::max(sup, std::hypot(gx, gy));
    }
  }
  spec.c1_bound = supv + sup;
  return spec;
}

struct ComposedNorms {
  double alpha_c1 = 0.0;
  double chi_c1 = 0.0;
};

// C^1 norms of tilde_alpha . phi and chi_n . phi over the preimage of the
// rectangle, with central differences at spacing 1e-4 in the disk variable.
// Requires phi(0) inside the open rectangle image.
inline ComposedNorms composed_regularity_check(const RectangleIndex& idx,
                                               const MobiusTransform& phi) {
  const auto [x0, y0] = annulus_map_inverse(idx.n, mobius_apply(phi, Complex(0.0)));
  const double period = static_cast<double>(y_window_count(idx.n));
  double dy = std::fmod(256.0 * y0 - static_cast<double>(idx.l), period);
  if (dy < 0.0) dy += period;
  if (!(x0 > idx.k / 32.0 && x0 < (idx.k + 2) / 32.0) || !(dy > 0.0 && dy < 2.0))
    throw std::domain_error("composed_regularity_check: phi(0) not inside the rectangle image");

  const MobiusTransform inv = mobius_invert(phi);
  const double h = 1e-4;
  ComposedNorms out;
  double sup_a = 0.0, sup_ga = 0.0, sup_c = 0.0, sup_gc = 0.0;
  for (int i = 0; i < 12; ++i) {
    const double x = idx.k / 32.0 + (i + 0.5) * (2.0 / 32.0) / 12.0;
    for (int j = 0; j < 12; ++j) {
      const double y = (idx.l + (j + 0.5) * 2.0 / 12.0) / 256.0;
      const Complex zeta = mobius_apply(inv, annulus_map(idx.n, x, y));
      const auto alpha_at = [&](Complex z) {
        return detail::tilde_alpha_extended(idx, mobius_apply(phi, z));
      };
      const auto chi_at = [&](Complex z) { return tilde_chi(idx.n, mobius_apply(phi, z)); };
      sup_a = std::max(sup_a, alpha_at(zeta));
      sup_c = std::max(sup_c, chi_at(zeta));
      const Complex ex(h, 0.0), ey(0.0, h);
      sup_ga = std::max(sup_ga, std::hypot((alpha_at(zeta + ex) - alpha_at(zeta - ex)) / (2 * h),
                                           (alpha_at(zeta + ey) - alpha_at(zeta - ey)) / (2 * h)));
      sup_gc = std::max(sup_gc, std::hypot((chi_at(zeta + ex) - chi_at(zeta - ex)) / (2 * h),
                                           (chi_at(zeta + ey) - chi_at(zeta - ey)) / (2 * h)));
    }
  }
  out.alpha_c1 = sup_a + sup_ga;
  out.chi_c1 = sup_c + sup_gc;
  return out;
}

// --- separated sets ---------------------------------------------------------

struct SeparatedCount {
  long long count = 0;
  double ratio = 0.0;  // count / 2^n
};

// Verifies the collection lies in one shell and is pairwise r-separated in the
// Poincare metric, then reports the count normalized by the shell's 2^n.
inline SeparatedCount separated_count_bound(const std::vector<Complex>& points, double r) {
  if (points.empty()) throw std::invalid_argument("separated_count_bound: empty collection");
  if (!(r > 0.0)) throw std::invalid_argument("separated_count_bound: r must be positive");
  const int n = annulus_index(points.front());
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (annulus_index(points[i]) != n)
      throw std::invalid_argument("separated_count_bound: point " + std::to_string(i) +
                                  " lies outside shell " + std::to_string(n));
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      const double d = poincare_distance(points[i], points[j]);
      if (d < r)
        throw std::invalid_argument("separated_count_bound: points " + std::to_string(i) +
                                    " and " + std::to_string(j) + " are " + std::to_string(d) +
                                    " apart, below separation " + std::to_string(r));
    }
  }
  SeparatedCount out;
  out.count = static_cast<long long>(points.size());
  out.ratio = static_cast<double>(points.size()) / std::ldexp(1.0, n);
  return out;
}

// Greedy maximal r-separated subset of a fixed shell grid: 16 radial levels,
// 128 * 2^n angles, scanned radially outward, angle-major within each level.
inline std::vector<Complex> greedy_separated_packing(int n, double r) {
  const double lo = annulus_inner_radius(n), hi = annulus_outer_radius(n);
  const long long na = 128LL << n;
  std::vector<Complex> kept;
  for (int i = 0; i < 16; ++i) {
    const double rad = lo + (i + 0.5) * (hi - lo) / 16.0;
    for (long long j = 0; j < na; ++j) {
      const Complex z = std::polar(rad, 2.0 * std::numbers::pi * j / na);
      double dmin = std::numeric_limits<double>::infinity();
      for (const Complex& q : kept)
        dmin = std::min(dmin, std::abs((z - q) / (1.0 - std::conj(q) * z)));
      if (!kept.empty() && std::atanh(dmin) < r) continue;
      kept.push_back(z);
    }
  }
  return kept;
}

}  // namespace ldbar
