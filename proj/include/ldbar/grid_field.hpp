#pragma once

#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ldbar/weight.hpp"

namespace ldbar {

enum class GridKind { section, form };

/* Cell-centered Cartesian sampling of a function (or the dzetabar coefficient
 * of a (0,1)-form) on the truncated disk |zeta| < rho_max.  Cell centers sit
 * at ((i - m + 1/2) h, (j - m + 1/2) h) for 0 <= i, j < 2m, row-major in i;
 * the quadrature weight of every cell is h^2 (midpoint rule).  Samples at
 * centers outside the disk are stored but kept at zero. */
struct GridField {
  double rho_max = 0.0;
  double h = 0.0;
  int m = 0;
  GridKind kind = GridKind::section;
  Complex support_center = 0.0;
  double support_radius = 0.0;
  std::vector<Complex> samples;

  int side() const { return 2 * m; }
  std::size_t index(int ix, int iy) const {
    return static_cast<std::size_t>(ix) * side() + iy;
  }
  Complex cell_center(int ix, int iy) const {
    return Complex((ix - m + 0.5) * h, (iy - m + 0.5) * h);
  }
  bool in_disk(int ix, int iy) const { return std::abs(cell_center(ix, iy)) < rho_max; }
  Complex& at(int ix, int iy) { return samples[index(ix, iy)]; }
  Complex at(int ix, int iy) const { return samples[index(ix, iy)]; }

  bool operator==(const GridField&) const = default;
};

/* Disk grid: truncation radius 1 - (1/2)^{n_grid+1}. */
inline GridField make_grid_field(int n_grid, double h, GridKind kind) {
  if (n_grid < 0) throw std::invalid_argument("grid: n_grid must be non-negative");
  if (!(h > 0.0) || h >= 1.0) throw std::invalid_argument("grid: spacing must lie in (0,1)");
  GridField f;
  f.rho_max = 1.0 - std::ldexp(1.0, -(n_grid + 1));
  f.h = h;
  f.m = static_cast<int>(std::ceil(f.rho_max / h - 1e-12));
  f.kind = kind;
  f.samples.assign(static_cast<std::size_t>(f.side()) * f.side(), Complex(0.0));
  return f;
}

/* Plane patch of half-side m*h, for compactly supported data away from the
 * disk geometry (the weighted plane formula and kernel tests). */
inline GridField make_patch_grid(double h, int m, GridKind kind) {
  if (m < 1) throw std::invalid_argument("grid: patch half-width must be positive");
  if (!(h > 0.0)) throw std::invalid_argument("grid: spacing must be positive");
  GridField f;
  f.rho_max = m * h;
  f.h = h;
  f.m = m;
  f.kind = kind;
  f.samples.assign(static_cast<std::size_t>(f.side()) * f.side(), Complex(0.0));
  return f;
}

template <class Fn>
inline void fill_grid(GridField& f, Fn&& fn) {
  for (int ix = 0; ix < f.side(); ++ix)
    for (int iy = 0; iy < f.side(); ++iy) {
      const Complex c = f.cell_center(ix, iy);
      f.at(ix, iy) = (std::abs(c) < f.rho_max) ? Complex(fn(c)) : Complex(0.0);
    }
}

// largest |center - support_center| over nonzero cells; 0 when the field is 0
inline double measured_support_radius(const GridField& f) {
  double r = 0.0;
  for (int ix = 0; ix < f.side(); ++ix)
    for (int iy = 0; iy < f.side(); ++iy)
      if (f.at(ix, iy) != Complex(0.0))
        r = std::max(r, std::abs(f.cell_center(ix, iy) - f.support_center));
  return r;
}

inline double weighted_norm_sq(const GridField& f, const WeightSpec& w, double r_lo = 0.0,
                               double r_hi = std::numeric_limits<double>::infinity()) {
  const int p = w.m - w.s;
  double acc = 0.0;
  for (int ix = 0; ix < f.side(); ++ix)
    for (int iy = 0; iy < f.side(); ++iy) {
      const Complex c = f.cell_center(ix, iy);
      const double r = std::abs(c);
      if (r >= f.rho_max || r < r_lo || r >= r_hi) continue;
      acc += std::norm(f.at(ix, iy)) * std::pow(1.0 - r * r, p);
    }
  return acc * f.h * f.h;
}

inline double l2_norm_sq(const GridField& f,
                         double r_hi = std::numeric_limits<double>::infinity()) {
  double acc = 0.0;
  for (int ix = 0; ix < f.side(); ++ix)
    for (int iy = 0; iy < f.side(); ++iy) {
      const Complex c = f.cell_center(ix, iy);
      if (std::abs(c) >= f.rho_max || std::abs(c) >= r_hi) continue;
      acc += std::norm(f.at(ix, iy));
    }
  return acc * f.h * f.h;
}

template <class Density>
inline Complex grid_inner_product(const GridField& f, const GridField& g, Density&& density) {
  if (f.m != g.m || f.h != g.h)
    throw std::invalid_argument("inner product: fields live on different grids");
  Complex acc = 0.0;
  for (int ix = 0; ix < f.side(); ++ix)
    for (int iy = 0; iy < f.side(); ++iy) {
      const Complex c = f.cell_center(ix, iy);
      if (std::abs(c) >= f.rho_max) continue;
      acc += f.at(ix, iy) * std::conj(g.at(ix, iy)) * density(c);
    }
  return acc * (f.h * f.h);
}

/* dbar = (d/dx + i d/dy)/2 by one-sided differences: first-order accurate but
 * with an exactly self-similar error under grid halving, which the residual
 * ratio tests rely on.  Cells whose forward neighbor leaves the square get 0. */
inline GridField dbar_forward(const GridField& u) {
  if (u.kind != GridKind::section)
    throw std::invalid_argument("dbar: operand must be a section");
  GridField v = u;
  v.kind = GridKind::form;
  const double inv = 1.0 / (2.0 * u.h);
  for (int ix = 0; ix < u.side(); ++ix)
    for (int iy = 0; iy < u.side(); ++iy) {
      if (ix + 1 >= u.side() || iy + 1 >= u.side()) {
        v.at(ix, iy) = 0.0;
        continue;
      }
      const Complex u0 = u.at(ix, iy);
      v.at(ix, iy) = (u.at(ix + 1, iy) - u0) * inv + Complex(0, 1) * (u.at(ix, iy + 1) - u0) * inv;
    }
  return v;
}

inline GridField dbar_central(const GridField& u) {
  if (u.kind != GridKind::section)
    throw std::invalid_argument("dbar: operand must be a section");
  GridField v = u;
  v.kind = GridKind::form;
  const double inv = 1.0 / (4.0 * u.h);
  for (int ix = 0; ix < u.side(); ++ix)
    for (int iy = 0; iy < u.side(); ++iy) {
      if (ix < 1 || iy < 1 || ix + 1 >= u.side() || iy + 1 >= u.side()) {
        v.at(ix, iy) = 0.0;
        continue;
      }
      v.at(ix, iy) = (u.at(ix + 1, iy) - u.at(ix - 1, iy)) * inv +
                     Complex(0, 1) * (u.at(ix, iy + 1) - u.at(ix, iy - 1)) * inv;
    }
  return v;
}

/* Bilinear interpolation between cell centers; 0 outside the sampled square. */
inline Complex bilinear_value(const GridField& f, Complex z) {
  const double fx = z.real() / f.h + f.m - 0.5;
  const double fy = z.imag() / f.h + f.m - 0.5;
  const int ix = static_cast<int>(std::floor(fx));
  const int iy = static_cast<int>(std::floor(fy));
  const double tx = fx - ix, ty = fy - iy;
  auto sample = [&](int a, int b) -> Complex {
    if (a < 0 || b < 0 || a >= f.side() || b >= f.side()) return 0.0;
    return f.at(a, b);
  };
  return (1 - tx) * (1 - ty) * sample(ix, iy) + tx * (1 - ty) * sample(ix + 1, iy) +
         (1 - tx) * ty * sample(ix, iy + 1) + tx * ty * sample(ix + 1, iy + 1);
}

/* Cell centers of a square lattice clipped to |z - center| < R; row-major in
 * the x index.  The shared sampling convention for compactly supported data. */
inline std::vector<Complex> cells_in_disk(double h, double R, Complex center = 0.0) {
  const int m = static_cast<int>(std::ceil((R + std::abs(center)) / h)) + 2;
  std::vector<Complex> out;
  for (int ix = -m; ix < m; ++ix)
    for (int iy = -m; iy < m; ++iy) {
      const Complex z((ix + 0.5) * h, (iy + 0.5) * h);
      if (std::abs(z - center) < R) out.push_back(z);
    }
  return out;
}

namespace detail {
inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}
}  // namespace detail

/* Text serialization.  Stable, self-describing, byte-deterministic (printf
 * %.17g round-trips every finite double). */
inline void write_grid_field(std::ostream& os, const GridField& f) {
  os << "ldbar-gridfield 1\n";
  os << "kind " << (f.kind == GridKind::section ? "section" : "form") << "\n";
  os << "rho_max " << detail::format_double(f.rho_max) << "\n";
  os << "h " << detail::format_double(f.h) << "\n";
  os << "m " << f.m << "\n";
  os << "support " << detail::format_double(f.support_center.real()) << " "
     << detail::format_double(f.support_center.imag()) << " "
     << detail::format_double(f.support_radius) << "\n";
  os << "samples " << f.samples.size() << "\n";
  for (const Complex& v : f.samples)
    os << detail::format_double(v.real()) << " " << detail::format_double(v.imag()) << "\n";
}

inline GridField read_grid_field(std::istream& is) {
  std::string tag, kind_word;
  int version = 0;
  is >> tag >> version;
  if (tag != "ldbar-gridfield" || version != 1)
    throw std::runtime_error("gridfield: unrecognized header '" + tag + "'");
  GridField f;
  std::size_t count = 0;
  double sre = 0.0, sim = 0.0;
  is >> tag >> kind_word;
  if (tag != "kind" || (kind_word != "section" && kind_word != "form"))
    throw std::runtime_error("gridfield: bad kind line");
  f.kind = (kind_word == "section") ? GridKind::section : GridKind::form;
  is >> tag >> f.rho_max;
  if (tag != "rho_max") throw std::runtime_error("gridfield: bad rho_max line");
  is >> tag >> f.h;
  if (tag != "h") throw std::runtime_error("gridfield: bad h line");
  is >> tag >> f.m;
  if (tag != "m") throw std::runtime_error("gridfield: bad m line");
  is >> tag >> sre >> sim >> f.support_radius;
  if (tag != "support") throw std::runtime_error("gridfield: bad support line");
  f.support_center = Complex(sre, sim);
  is >> tag >> count;
  if (tag != "samples" || count != static_cast<std::size_t>(f.side()) * f.side())
    throw std::runtime_error("gridfield: sample count does not match the grid");
  f.samples.resize(count);
  for (Complex& v : f.samples) {
    double re = 0.0, im = 0.0;
    if (!(is >> re >> im)) throw std::runtime_error("gridfield: truncated sample table");
    v = Complex(re, im);
  }
  return f;
}

}  // namespace ldbar
