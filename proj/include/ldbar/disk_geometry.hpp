#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "ldbar/mobius.hpp"
#include "ldbar/rng.hpp"

namespace ldbar {

// psi(zeta) = log(1 - |zeta|^2), the log-density of the Poincare metric
// e^{-psi}|d zeta|.
inline double psi(Complex zeta) {
  const double r = std::abs(zeta);
  if (r >= 1.0) throw std::domain_error("psi: point must lie in the open unit disk");
  return std::log1p(-r * r);
}

// e^{-psi(zeta)} = 1/(1 - |zeta|^2) without going through the logarithm.
inline double poincare_density(Complex zeta) {
  const double r = std::abs(zeta);
  if (r >= 1.0) throw std::domain_error("poincare_density: point must lie in the open unit disk");
  return 1.0 / ((1.0 - r) * (1.0 + r));
}

// d_P(z, w); for w = 0 this is (1/2) log[(1+|z|)/(1-|z|)] = artanh|z|.
inline double poincare_distance(Complex z, Complex w) {
  if (std::abs(z) >= 1.0 || std::abs(w) >= 1.0)
    throw std::domain_error("poincare_distance: points must lie in the open unit disk");
  return std::atanh(std::abs((w - z) / (1.0 - std::conj(z) * w)));
}

// Dyadic shells A_n = {1-(1/2)^n <= |zeta| < 1-(1/2)^{n+1}}; every point of the
// open disk lies in exactly one.
inline int annulus_index(Complex zeta) {
  const double r = std::abs(zeta);
  if (r >= 1.0) throw std::domain_error("annulus_index: point must lie in the open unit disk");
  const int n = static_cast<int>(std::floor(-std::log2(1.0 - r)));
  return n < 0 ? 0 : n;
}

inline double annulus_inner_radius(int n) { return 1.0 - std::ldexp(1.0, -n); }
inline double annulus_outer_radius(int n) { return 1.0 - std::ldexp(1.0, -(n + 1)); }
// Closed disk D(n) = {|zeta| <= 1-(1/2)^{n+1}} = closure of A_0 ... A_n.
inline double closed_disk_radius(int n) { return 1.0 - std::ldexp(1.0, -(n + 1)); }

// Point of A_n, uniform in the strip coordinates (x, y) that the annulus map
// pushes onto A_n (linear in modulus, uniform in angle). Keeps coverage near
// the outer edge from collapsing.
inline Complex sample_annulus(Rng& rng, int n) {
  const double r = annulus_inner_radius(n) + rng.uniform() * std::ldexp(1.0, -(n + 1));
  return std::polar(r, rng.uniform(0.0, 2.0 * std::numbers::pi));
}

// The automorphism with phi(0) = target and rotation parameter beta.
inline MobiusTransform mobius_with_origin_image(Complex target, double beta) {
  if (std::abs(target) >= 1.0)
    throw std::domain_error("mobius_with_origin_image: target must lie in the open unit disk");
  return {-std::polar(1.0, -beta) * target, beta};
}

struct DiskLemmaReport {
  long long samples = 0;
  long long violations = 0;
  std::string first_witness;  // empty when every sampled instance passed

  // Each inequality is recorded as the worst ratio (checked side / bound),
  // so anything <= 1 + slack passes.
  double max_ratio_density_automorphy = 0.0;   // e^{-psi(phi z)} vs 2^{n+3} e^{-psi z}
  double max_ratio_cover = 0.0;                // |phi^{-1}(w)| vs (1/2)^k, w on the small circle
  double max_ratio_derivative_global = 0.0;    // |phi'(z)| vs 2^{n+2}, z anywhere
  double max_ratio_derivative_disk = 0.0;      // |phi'(z)| vs (1-r)^{-2} (1/2)^{n-1}, z in D_r
  double max_ratio_modulus_drop = 0.0;         // 1-|phi(z)| vs (1/2)^n [1 + 2r/(1-r)^2]
  double max_ratio_one_minus_sq_hi = 0.0;      // (1-|a|^2) vs (1/2)^{n-1}
  double min_ratio_one_minus_sq_lo = std::numeric_limits<double>::infinity();  // vs (1/2)^{n+1}
  double max_ratio_density_hi = 0.0;           // e^{-psi(a)} vs 2^{n+1}
  double min_ratio_density_lo = std::numeric_limits<double>::infinity();       // vs 2^{n-1}
  double max_ratio_distance = 0.0;             // d_P(0,a) vs n+2

  // Empirical infimum of e^{-psi(phi z)} / 2^n over z in D_r: the largest
  // admissible lower-bound constant seen, by evaluation radius.
  double density_floor_quarter = std::numeric_limits<double>::infinity();
  double density_floor_half = std::numeric_limits<double>::infinity();
  double density_floor_threequarter = std::numeric_limits<double>::infinity();

  double max_schwarz_pick_rel = 0.0;
  double max_distance_invariance_rel = 0.0;
};

// Seeded property sweep over the disk-automorphism inequalities and the exact
// identities behind them. Transforms are sampled with phi(0) uniform in each
// A_n, n <= n_max round-robin.
//
// The inequality checks run essentially to the boundary (their bounds carry
// slack factors >= 2, which swallows cancellation noise in 1 - |z|^2). The
// identity-grade checks (Schwarz-Pick, distance invariance) sample inside
// radius 0.97: beyond that, 1 - |phi(z)|^2 sinks toward floating-point
// cancellation and a 1e-12 relative comparison stops being meaningful.
inline DiskLemmaReport verify_disk_lemmas(long long sample_count, std::uint64_t seed, int n_max) {
  if (n_max < 1) throw std::invalid_argument("verify_disk_lemmas: n_max must be >= 1");
  if (sample_count < 1) throw std::invalid_argument("verify_disk_lemmas: sample_count must be >= 1");
  constexpr double kSlack = 1.0 + 1e-12;
  Rng rng(seed);
  DiskLemmaReport rep;
  rep.samples = sample_count;

  const auto record = [&rep](bool ok, const char* lemma, Complex a, double beta, Complex z, int n) {
    if (ok) return;
    ++rep.violations;
    if (rep.first_witness.empty()) {
      rep.first_witness = std::string(lemma) + " at a=(" + std::to_string(a.real()) + "," +
                          std::to_string(a.imag()) + ") beta=" + std::to_string(beta) +
                          " zeta=(" + std::to_string(z.real()) + "," + std::to_string(z.imag()) +
                          ") n=" + std::to_string(n);
    }
  };

  for (long long i = 0; i < sample_count; ++i) {
    const int n = static_cast<int>(i % (n_max + 1));
    const Complex target = sample_annulus(rng, n);
    const double beta = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const MobiusTransform phi = mobius_with_origin_image(target, beta);
    const MobiusTransform phi_inv = mobius_invert(phi);
    const double pow_n = std::ldexp(1.0, n);

    // shell facts for a = phi(0)
    {
      const double om = (1.0 - std::abs(target)) * (1.0 + std::abs(target));
      const double hi = om / std::ldexp(1.0, -(n - 1));
      const double lo = om / std::ldexp(1.0, -(n + 1));
      rep.max_ratio_one_minus_sq_hi = std::max(rep.max_ratio_one_minus_sq_hi, hi);
      rep.min_ratio_one_minus_sq_lo = std::min(rep.min_ratio_one_minus_sq_lo, lo);
      record(hi <= kSlack && lo >= 1.0 / kSlack, "shell-fact-i", target, beta, 0.0, n);

      const double dens = poincare_density(target);
      const double dhi = dens / std::ldexp(1.0, n + 1);
      const double dlo = dens / std::ldexp(1.0, n - 1);
      rep.max_ratio_density_hi = std::max(rep.max_ratio_density_hi, dhi);
      rep.min_ratio_density_lo = std::min(rep.min_ratio_density_lo, dlo);
      record(dhi <= kSlack && dlo >= 1.0 / kSlack, "shell-fact-ii", target, beta, 0.0, n);

      const double dist = poincare_distance(0.0, target) / (n + 2);
      rep.max_ratio_distance = std::max(rep.max_ratio_distance, dist);
      record(dist <= kSlack, "shell-fact-iii", target, beta, 0.0, n);
    }

    // density automorphy and the global derivative bound, z deep into the disk
    {
      const Complex z = rng.disk_point(1.0 - 1e-6);
      const Complex pz = mobius_apply(phi, z);
      const double ratio = poincare_density(pz) / (8.0 * pow_n * poincare_density(z));
      rep.max_ratio_density_automorphy = std::max(rep.max_ratio_density_automorphy, ratio);
      record(ratio <= kSlack, "density-automorphy", target, beta, z, n);

      const double dratio = std::abs(mobius_derivative(phi, z)) / (4.0 * pow_n);
      rep.max_ratio_derivative_global = std::max(rep.max_ratio_derivative_global, dratio);
      record(dratio <= kSlack, "derivative-global", target, beta, z, n);
    }

    // radius-restricted derivative bound and modulus drop on D_r
    {
      const double r = rng.uniform(0.05, 0.95);
      const Complex z = rng.disk_point(r);
      const double bound = std::ldexp(1.0, -(n - 1)) / ((1.0 - r) * (1.0 - r));
      const double dratio = std::abs(mobius_derivative(phi, z)) / bound;
      rep.max_ratio_derivative_disk = std::max(rep.max_ratio_derivative_disk, dratio);
      record(dratio <= kSlack, "derivative-disk", target, beta, z, n);

      const double drop = (1.0 - std::abs(mobius_apply(phi, z))) /
                          ((1.0 + 2.0 * r / ((1.0 - r) * (1.0 - r))) / pow_n);
      rep.max_ratio_modulus_drop = std::max(rep.max_ratio_modulus_drop, drop);
      record(drop <= kSlack, "modulus-drop", target, beta, z, n);
    }

    // covering: the disk of radius (1/2)^{n+k+3} around phi(0) pulls back into
    // the disk of radius (1/2)^k; checked on 256 boundary points
    {
      const int k = 1 + static_cast<int>(i % 8);
      const double small = std::ldexp(1.0, -(n + k + 3));
      double worst = 0.0;
      for (int j = 0; j < 256; ++j) {
        const double th = 2.0 * std::numbers::pi * j / 256.0;
        const Complex w = target + std::polar(small, th);
        worst = std::max(worst, std::abs(mobius_apply(phi_inv, w)) * std::ldexp(1.0, k));
      }
      rep.max_ratio_cover = std::max(rep.max_ratio_cover, worst);
      record(worst <= kSlack, "cover", target, beta, target, n);
    }

    // density floor on D_r at the three reporting radii
    {
      const Complex zq = rng.disk_point(0.25);
      const Complex zh = rng.disk_point(0.5);
      const Complex zt = rng.disk_point(0.75);
      rep.density_floor_quarter =
          std::min(rep.density_floor_quarter, poincare_density(mobius_apply(phi, zq)) / pow_n);
      rep.density_floor_half =
          std::min(rep.density_floor_half, poincare_density(mobius_apply(phi, zh)) / pow_n);
      rep.density_floor_threequarter =
          std::min(rep.density_floor_threequarter, poincare_density(mobius_apply(phi, zt)) / pow_n);
    }

    // exact identities, sampled away from the cancellation zone
    {
      Rng inner = rng.fork(7);
      const Complex a2 = inner.disk_point(0.97);
      const double b2 = inner.uniform(0.0, 2.0 * std::numbers::pi);
      const MobiusTransform id_phi{a2, b2};
      const Complex z = inner.disk_point(0.97);
      const Complex w = inner.disk_point(0.97);
      const Complex pz = mobius_apply(id_phi, z);
      const double lhs = std::abs(mobius_derivative(id_phi, z)) *
                         ((1.0 - std::abs(z)) * (1.0 + std::abs(z)));
      const double rhs = (1.0 - std::abs(pz)) * (1.0 + std::abs(pz));
      const double sp = std::abs(lhs - rhs) / rhs;
      rep.max_schwarz_pick_rel = std::max(rep.max_schwarz_pick_rel, sp);
      record(sp <= 1e-12, "schwarz-pick", a2, b2, z, n);

      const double d0 = poincare_distance(z, w);
      const double d1 = poincare_distance(mobius_apply(id_phi, z), mobius_apply(id_phi, w));
      const double di = std::abs(d1 - d0) / std::max(1.0, d0);
      rep.max_distance_invariance_rel = std::max(rep.max_distance_invariance_rel, di);
      record(di <= 1e-12, "distance-invariance", a2, b2, z, n);
    }
  }
  return rep;
}

}  // namespace ldbar
