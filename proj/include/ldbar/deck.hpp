#pragma once

/* Equivariant deck-sum solver on the disk cover.
 *
 * The leafwise right-hand side is a modulated bump planted on every orbit
 * point; by exact linearity each pulled-back piece is the one centered profile
 * times a scalar amplitude, so a single centered minimal solve is shared by
 * the whole orbit.  Deck elements act on scalar avatars with the automorphy
 * twist ((w^{-1})')^{m/2} (forms carry an extra conjugate factor); this is the
 * trivialized form of the bounded invariant bundle metric, transports the
 * pointwise invariant norm exactly, and commutes with dbar.  The truncated sum
 * is assembled shell by shell with geometric tail bookkeeping, plus the
 * equivariance, transversal-Lipschitz and transversal-derivative diagnostics.
 */

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "ldbar/bergman.hpp"
#include "ldbar/cauchy.hpp"
#include "ldbar/disk_geometry.hpp"
#include "ldbar/fuchsian.hpp"
#include "ldbar/grid_field.hpp"
#include "ldbar/mobius.hpp"
#include "ldbar/rng.hpp"
#include "ldbar/solver.hpp"
#include "ldbar/suspension.hpp"
#include "ldbar/weight.hpp"

namespace ldbar {

/* Norms of leaf solutions, residuals and decay diagnostics are taken on this
 * central disk. */
inline constexpr double deck_eval_radius = 0.5;

struct ProblemSpec {
  SuspensionModel model = make_suspension();
  WeightSpec weight = make_weight_spec(6, 5);
  double bump_radius = 0.2;       // Euclidean support radius of the centered data
  double bump_amplitude = 1.0;    // overall data scale; 0 gives the zero problem
  double modulation_depth = 0.5;  // transversal factor 1 + depth cos(t')
  int max_annulus = 8;            // shell truncation N
  int max_word_length = 12;       // word cap; whichever cap binds first wins
  int n_grid = 6;                 // truncation of the centered solve grid
  double h = 1.0 / 64.0;
  int degree = 12;                // holomorphic projection degree
  int laurent_terms = 40;         // far-field expansion length
  std::uint64_t seed = 1;
};

inline void validate_problem(const ProblemSpec& p) {
  const int m = p.weight.m, s = p.weight.s;
  if (m <= s)
    throw std::invalid_argument("problem: weight needs m > s, got m = " + std::to_string(m) +
                                ", s = " + std::to_string(s));
  if (4 * m <= 20)
    throw std::invalid_argument("problem: curvature constraint 4m > 20 fails, got m = " +
                                std::to_string(m));
  if (m % 2 != 0)
    throw std::invalid_argument(
        "problem: the weight power m must be even (the deck twist carries the exponent m/2), "
        "got m = " + std::to_string(m));
  if (s < 5)
    throw std::invalid_argument(
        "problem: the shell tail needs s >= 5 (decay exponent (s-4)/2 must be positive), got s = " +
        std::to_string(s));
  if (!(p.bump_radius > 0.0) || p.bump_radius > 0.25)
    throw std::invalid_argument(
        "problem: bump radius must lie in (0, 0.25] so the far-field switch at 0.45 converges, "
        "got " + detail::format_double(p.bump_radius));
  if (2.0 * std::atanh(p.bump_radius) >= p.model.group.orbit_separation)
    throw std::invalid_argument(
        "problem: data supports overlap; twice the Kobayashi radius of the bump must stay below "
        "the orbit separation " + detail::format_double(p.model.group.orbit_separation));
  if (!(p.bump_amplitude >= 0.0) || !std::isfinite(p.bump_amplitude))
    throw std::invalid_argument("problem: bump amplitude must be finite and non-negative");
  if (!(p.modulation_depth >= 0.0 && p.modulation_depth < 1.0))
    throw std::invalid_argument(
        "problem: modulation depth must lie in [0, 1) so the leafwise data never vanishes "
        "identically along the transversal");
  if (p.max_annulus < 1 || p.max_annulus > 16)
    throw std::invalid_argument("problem: shell truncation must lie in [1, 16]");
  if (p.max_word_length < 1 || p.max_word_length > 24)
    throw std::invalid_argument("problem: word cap must lie in [1, 24]");
  if (p.n_grid < 2 || p.n_grid > 12)
    throw std::invalid_argument("problem: solve grid truncation must lie in [2, 12]");
  if (!(p.h > 0.0) || p.h > p.bump_radius / 4.0)
    throw std::invalid_argument(
        "problem: grid step must resolve the bump support (0 < h <= bump_radius/4), got h = " +
        detail::format_double(p.h));
  if (p.degree < 2 || p.degree > 64)
    throw std::invalid_argument("problem: projection degree must lie in [2, 64]");
  if (p.laurent_terms < 8 || p.laurent_terms > 512)
    throw std::invalid_argument("problem: far-field expansion needs between 8 and 512 terms");
}

namespace detail {

// C^2 radial profile (1 - |z|^2/R^2)^3 supported on |z| < R
inline double bump_profile(double radius, Complex z) {
  const double q = std::norm(z) / (radius * radius);
  if (q >= 1.0) return 0.0;
  const double p = 1.0 - q;
  return p * p * p;
}

inline double modulated_amplitude(const ProblemSpec& p, double shifted_t) {
  return p.bump_amplitude * (1.0 + p.modulation_depth * std::cos(shifted_t));
}

// d/dt of the shifted parameter: 1 for rotations, the boundary derivative of
// the inverse transform for the boundary action.
inline double shift_rate(const ProblemSpec& p, const DeckElement& w, double t) {
  if (p.model.action == TransversalAction::rotations) return 1.0;
  const MobiusTransform inv = mobius_invert(w.transform);
  return std::abs(mobius_derivative(inv, std::polar(1.0, t)));
}

inline double amplitude_rate(const ProblemSpec& p, const DeckElement& w, double t) {
  const double tp = base_point_shift(p.model, w, t);
  return -p.bump_amplitude * p.modulation_depth * std::sin(tp) * shift_rate(p, w, t);
}

inline void trim_trailing(std::vector<Complex>& v) {
  double peak = 0.0;
  for (const Complex& c : v) peak = std::max(peak, std::abs(c));
  if (peak == 0.0) {
    v.clear();
    return;
  }
  while (!v.empty() && std::abs(v.back()) < 1e-14 * peak) v.pop_back();
}

}  // namespace detail

struct LeafSolution {
  double t = 0.0;
  GridField u;                         // truncated section on the central chart
  std::vector<double> annulus_norms;   // per-shell contribution norms on the eval disk
  std::vector<long long> annulus_counts;
  long long pieces = 0;
  int truncation_n = 0;
  int truncation_words = 0;
  bool word_cap_binding = false;  // true when the word cap, not the shell cap, bit first
  double residual_rel = 0.0;      // ||dbar u - v|| / ||v|| on the eval disk
  double tail_bound = 0.0;        // constant-chain bound on the discarded shells
};

struct EquivarianceReport {
  double defect_rel = 0.0;             // truncation mismatch of the two sides
  double data_identity_residual = 0.0; // amp(e, t) vs amp(w e, w.t), max over elements
  int n_cap = 0;
  double t = 0.0;
  double t_image = 0.0;
};

struct LipschitzReport {
  double ratio = 0.0;     // ||piece(t2) - piece(t1)|| / d0(t1, t2)
  double envelope = 0.0;  // (1/2)^{n (s - 2(k+1)) / 2}
  int n = 0;
  int k = 0;
};

struct DerivativeReport {
  std::vector<double> deltas;
  std::vector<double> defects;   // ||centered difference - derivative solve||, per delta
  double derivative_norm = 0.0;  // norm of the differentiated-data solve
  double fitted_order = 0.0;     // log-log slope of defect against delta
};

struct ConstantsReport {
  double c1 = 0.0;  // sup of localized data norms (stratified sample)
  double c2 = 0.0;  // measured Hoermander ratio of the unit solve
  double c3 = 0.0;  // min of 2^{-n} / (1 - |zeta|^2) over preimages of the eval disk
  double c4 = 0.0;  // sup of shell count / 2^n
  int k = 0;        // fitted transversal distortion exponent
  double decay_rho = 0.0;         // (1/2)^{(s-4)/2}
  double tail_coefficient = 0.0;  // 4 c1 c2 c4 c3^{-s/2}
};

// Tail of the shell-norm chain beyond shell n_from.
inline double predicted_tail(const ConstantsReport& c, int n_from) {
  return c.tail_coefficient * std::pow(c.decay_rho, n_from + 1) / (1.0 - c.decay_rho);
}

/* Centered data in the chart recentred at the orbit point of w: the fixed
 * profile times the modulated amplitude at the shifted transversal parameter. */
inline GridField localize_rhs(const ProblemSpec& spec, double t, const DeckElement& w) {
  validate_problem(spec);
  GridField f = make_grid_field(spec.n_grid, spec.h, GridKind::form);
  const double a = detail::modulated_amplitude(spec, base_point_shift(spec.model, w, t));
  fill_grid(f, [&](Complex z) { return a * detail::bump_profile(spec.bump_radius, z); });
  f.support_radius = spec.bump_radius;
  return f;
}

class DeckSolver {
 public:
  explicit DeckSolver(const ProblemSpec& spec) : spec_(spec) {
    validate_problem(spec_);
    deck_ = enumerate_deck(spec_.model.group, spec_.max_word_length, spec_.max_annulus);
    shell_members_.assign(deck_.shell_counts.size(), {});
    for (int i = 0; i < static_cast<int>(deck_.elements.size()); ++i)
      shell_members_[deck_.elements[i].n].push_back(i);

    // one centered unit solve shared by every piece
    GridField bump = make_grid_field(spec_.n_grid, spec_.h, GridKind::form);
    fill_grid(bump, [&](Complex z) { return detail::bump_profile(spec_.bump_radius, z); });
    bump.support_radius = spec_.bump_radius;
    bump_norm_sq_ = weighted_norm_sq(bump, spec_.weight);
    unit_u_ = cauchy_transform(bump);
    BergmanProjection proj = bergman_project(unit_u_, spec_.weight, spec_.degree);
    for (std::size_t i = 0; i < unit_u_.samples.size(); ++i)
      unit_u_.samples[i] -= proj.field.samples[i];
    ratio_ = weighted_norm_sq(unit_u_, spec_.weight) / bump_norm_sq_;
    poly_ = proj.monomial_coefficients;
    detail::trim_trailing(poly_);
    far_ = laurent_moments(bump, 0.0, spec_.laurent_terms);
    detail::trim_trailing(far_.moments);

    measure();
  }

  const ProblemSpec& problem() const { return spec_; }
  const DeckEnumeration& deck() const { return deck_; }
  const GridField& unit_solution() const { return unit_u_; }
  double unit_data_norm() const { return std::sqrt(bump_norm_sq_); }
  double unit_hormander_ratio() const { return ratio_; }
  const ConstantsReport& constants() const { return constants_; }

  LeafSolution solve(double t) const { return solve_impl(t, nullptr); }

  /* Same truncated sum with every amplitude multiplied by window(t'), t' the
   * shifted transversal parameter of the piece.  A partition of windows summing
   * to 1 splits the solve additively. */
  LeafSolution solve_windowed(double t, const std::function<double(double)>& window) const {
    if (!window) throw std::invalid_argument("solve_windowed: window must be callable");
    return solve_impl(t, &window);
  }

  /* Compares the truncated sum at t against the twisted pullback by w of the
   * truncated sum at w.t, both capped at shell n_cap; pass -1 for the full cap. */
  EquivarianceReport equivariance(double t, const DeckElement& w, int n_cap = -1) const {
    if (n_cap < 0) n_cap = spec_.max_annulus;
    if (n_cap > spec_.max_annulus)
      throw std::invalid_argument(
          "equivariance: shell cap " + std::to_string(n_cap) + " exceeds the enumerated truncation " +
          std::to_string(spec_.max_annulus) + "; both sides must share one cap");
    EquivarianceReport out;
    out.n_cap = n_cap;
    out.t = t;
    out.t_image = act_on_transversal(spec_.model, w, t);

    GridField lhs = make_grid_field(1, spec_.h, GridKind::section);
    GridField rhs = lhs;
    const double lim = deck_eval_radius + 2.0 * spec_.h;
    const bool w_trivial = w.word.empty();

    std::vector<Complex> mapped;
    if (!w_trivial) {
      mapped.resize(lhs.samples.size());
      for (int ix = 0; ix < lhs.side(); ++ix)
        for (int iy = 0; iy < lhs.side(); ++iy)
          mapped[lhs.index(ix, iy)] = mobius_apply(w.transform, lhs.cell_center(ix, iy));
    }

    for (const DeckElement& e : deck_.elements) {
      if (e.n > n_cap) continue;
      const double a1 = detail::modulated_amplitude(spec_, base_point_shift(spec_.model, e, t));
      const double a2 =
          detail::modulated_amplitude(spec_, base_point_shift(spec_.model, e, out.t_image));
      add_piece(lhs, lim, e, a1);
      if (w_trivial) {
        add_piece(rhs, lim, e, a2);
      } else {
        const MobiusTransform inv = mobius_invert(e.transform);
        for (int ix = 0; ix < rhs.side(); ++ix)
          for (int iy = 0; iy < rhs.side(); ++iy) {
            if (std::abs(rhs.cell_center(ix, iy)) >= lim) continue;
            const Complex p = mapped[rhs.index(ix, iy)];
            rhs.at(ix, iy) +=
                a2 * unit_value(mobius_apply(inv, p)) * twist_pow(mobius_derivative(inv, p));
          }
      }
    }
    if (!w_trivial) {
      for (int ix = 0; ix < rhs.side(); ++ix)
        for (int iy = 0; iy < rhs.side(); ++iy) {
          if (std::abs(rhs.cell_center(ix, iy)) >= lim) continue;
          rhs.at(ix, iy) *= twist_pow(mobius_derivative(w.transform, rhs.cell_center(ix, iy)));
        }
    }

    GridField diff = lhs;
    for (std::size_t i = 0; i < diff.samples.size(); ++i) diff.samples[i] -= rhs.samples[i];
    const double base = weighted_norm_sq(lhs, spec_.weight, 0.0, deck_eval_radius);
    const double dev = weighted_norm_sq(diff, spec_.weight, 0.0, deck_eval_radius);
    out.defect_rel = base > 0.0 ? std::sqrt(dev / base) : 0.0;

    // the scalar identity behind the reindexing: amp(e, t) = amp(w e, w.t)
    for (const DeckElement& e : deck_.elements) {
      if (e.n > n_cap) continue;
      DeckElement prod;
      prod.word = w.word;
      prod.word.insert(prod.word.end(), e.word.begin(), e.word.end());
      prod.transform = mobius_compose(w.transform, e.transform);
      const double lhs_amp =
          detail::modulated_amplitude(spec_, base_point_shift(spec_.model, e, t));
      const double rhs_amp =
          detail::modulated_amplitude(spec_, base_point_shift(spec_.model, prod, out.t_image));
      out.data_identity_residual = std::max(out.data_identity_residual, std::abs(lhs_amp - rhs_amp));
    }
    return out;
  }

  /* Increment of one piece between two leaves against the transversal distance. */
  LipschitzReport lipschitz(double t1, double t2, const DeckElement& w) const {
    require_lipschitz_regime();
    const double d0 = transversal_distance(t1, t2);
    if (d0 == 0.0)
      throw std::invalid_argument("transversal increments: the two parameters coincide");
    const double a1 = detail::modulated_amplitude(spec_, base_point_shift(spec_.model, w, t1));
    const double a2 = detail::modulated_amplitude(spec_, base_point_shift(spec_.model, w, t2));
    LipschitzReport out;
    out.n = w.n;
    out.k = constants_.k;
    out.ratio = std::abs(a2 - a1) * piece_norm(w) / d0;
    out.envelope = std::pow(0.5, w.n * (spec_.weight.s - 2.0 * (constants_.k + 1)) / 2.0);
    return out;
  }

  // max increment ratio per shell
  std::vector<double> shell_lipschitz(double t1, double t2) const {
    require_lipschitz_regime();
    const double d0 = transversal_distance(t1, t2);
    if (d0 == 0.0)
      throw std::invalid_argument("transversal increments: the two parameters coincide");
    std::vector<double> out(deck_.shell_counts.size(), 0.0);
    for (const DeckElement& e : deck_.elements) {
      const double a1 = detail::modulated_amplitude(spec_, base_point_shift(spec_.model, e, t1));
      const double a2 = detail::modulated_amplitude(spec_, base_point_shift(spec_.model, e, t2));
      out[e.n] = std::max(out[e.n], std::abs(a2 - a1) * piece_norm(e) / d0);
    }
    return out;
  }

  /* Centered differences of the solve against the differentiated-data solve. */
  DerivativeReport derivative_fd(double t, const std::vector<double>& deltas) const {
    if (deltas.empty())
      throw std::invalid_argument("transversal derivative: need at least one step size");
    for (double d : deltas)
      if (!(d > 0.0) || d > 1.0)
        throw std::invalid_argument("transversal derivative: step sizes must lie in (0, 1]");
    DerivativeReport out;
    out.deltas = deltas;
    const double lim = deck_eval_radius + 2.0 * spec_.h;

    GridField deriv = make_grid_field(1, spec_.h, GridKind::section);
    for (const DeckElement& e : deck_.elements)
      add_piece(deriv, lim, e, detail::amplitude_rate(spec_, e, t));
    out.derivative_norm = std::sqrt(weighted_norm_sq(deriv, spec_.weight, 0.0, deck_eval_radius));

    for (double d : deltas) {
      GridField defect = make_grid_field(1, spec_.h, GridKind::section);
      for (const DeckElement& e : deck_.elements) {
        const double ap =
            detail::modulated_amplitude(spec_, base_point_shift(spec_.model, e, t + d));
        const double am =
            detail::modulated_amplitude(spec_, base_point_shift(spec_.model, e, t - d));
        const double c = (ap - am) / (2.0 * d) - detail::amplitude_rate(spec_, e, t);
        add_piece(defect, lim, e, c);
      }
      out.defects.push_back(
          std::sqrt(weighted_norm_sq(defect, spec_.weight, 0.0, deck_eval_radius)));
    }

    // log-log slope over the steps with defects above noise floor
    const double floor = 1e-13 * std::max(1.0, out.derivative_norm);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int np = 0;
    for (std::size_t i = 0; i < deltas.size(); ++i) {
      if (out.defects[i] <= floor) continue;
      const double x = std::log(deltas[i]), y = std::log(out.defects[i]);
      sx += x; sy += y; sxx += x * x; sxy += x * y;
      ++np;
    }
    if (np >= 2 && sxx * np - sx * sx > 0.0)
      out.fitted_order = (np * sxy - sx * sy) / (np * sxx - sx * sx);
    return out;
  }

  // norm on the eval disk of the twisted pushforward piece of w (unit amplitude)
  double piece_norm(const DeckElement& w) const {
    GridField f = make_grid_field(1, spec_.h, GridKind::section);
    add_piece(f, deck_eval_radius + 2.0 * spec_.h, w, 1.0);
    return std::sqrt(weighted_norm_sq(f, spec_.weight, 0.0, deck_eval_radius));
  }

 private:
  LeafSolution solve_impl(double t, const std::function<double(double)>* window) const {
    LeafSolution out;
    out.t = t;
    out.u = make_grid_field(1, spec_.h, GridKind::section);
    const double fill = eval_fill(out.u);

    std::vector<GridField> shells(deck_.shell_counts.size(), out.u);
    int words = 0;
    for (const DeckElement& e : deck_.elements) {
      const double tp = base_point_shift(spec_.model, e, t);
      double a = detail::modulated_amplitude(spec_, tp);
      if (window) a *= (*window)(tp);
      add_piece(shells[e.n], fill, e, a);
      words = std::max(words, static_cast<int>(e.word.size()));
    }

    out.annulus_counts = deck_.shell_counts;
    for (const GridField& s : shells)
      out.annulus_norms.push_back(
          std::sqrt(weighted_norm_sq(s, spec_.weight, 0.0, deck_eval_radius)));

    // two consecutive strict increases mean the shell sums stopped converging
    for (std::size_t n = 0; n + 2 < out.annulus_norms.size(); ++n) {
      const bool up1 = out.annulus_norms[n] > 0.0 &&
                       out.annulus_norms[n + 1] > out.annulus_norms[n] * (1.0 + 1e-9);
      const bool up2 = out.annulus_norms[n + 1] > 0.0 &&
                       out.annulus_norms[n + 2] > out.annulus_norms[n + 1] * (1.0 + 1e-9);
      if (up1 && up2)
        throw std::runtime_error(
            "deck solve: shell contributions grew across shells " + std::to_string(n) + ".." +
            std::to_string(n + 2) + "; the truncated sum is not converging");
    }

    for (const GridField& s : shells)
      for (std::size_t i = 0; i < out.u.samples.size(); ++i) out.u.samples[i] += s.samples[i];

    out.pieces = static_cast<long long>(deck_.elements.size());
    out.truncation_n = spec_.max_annulus;
    out.truncation_words = words;
    out.word_cap_binding = words >= spec_.max_word_length;
    out.tail_bound = predicted_tail(constants_, spec_.max_annulus);
    out.residual_rel = residual(out.u, t, window, fill);
    return out;
  }

  double residual(const GridField& u, double t, const std::function<double(double)>* window,
                  double fill) const {
    GridField vf = make_grid_field(1, spec_.h, GridKind::form);
    const double reach = std::atanh(spec_.bump_radius) + 0.05;
    for (const DeckElement& e : deck_.elements) {
      const double d0 = std::atanh(std::min(std::abs(mobius_apply(e.transform, Complex(0.0))),
                                            1.0 - 1e-15));
      if (d0 - std::atanh(fill) > reach) continue;  // support misses the evaluation disk
      const double tp = base_point_shift(spec_.model, e, t);
      double a = detail::modulated_amplitude(spec_, tp);
      if (window) a *= (*window)(tp);
      if (a == 0.0) continue;
      if (e.word.empty()) {
        for (int ix = 0; ix < vf.side(); ++ix)
          for (int iy = 0; iy < vf.side(); ++iy) {
            const Complex z = vf.cell_center(ix, iy);
            if (std::abs(z) >= fill) continue;
            vf.at(ix, iy) += a * detail::bump_profile(spec_.bump_radius, z);
          }
      } else {
        const MobiusTransform inv = mobius_invert(e.transform);
        for (int ix = 0; ix < vf.side(); ++ix)
          for (int iy = 0; iy < vf.side(); ++iy) {
            const Complex z = vf.cell_center(ix, iy);
            if (std::abs(z) >= fill) continue;
            const Complex zeta = mobius_apply(inv, z);
            const double b = detail::bump_profile(spec_.bump_radius, zeta);
            if (b == 0.0) continue;
            const Complex g = mobius_derivative(inv, z);
            vf.at(ix, iy) += a * b * std::conj(g) * twist_pow(g);
          }
      }
    }
    GridField diff = dbar_central(u);
    for (std::size_t i = 0; i < diff.samples.size(); ++i) diff.samples[i] -= vf.samples[i];
    const double den = weighted_norm_sq(vf, spec_.weight, 0.0, deck_eval_radius);
    if (den == 0.0) return 0.0;
    return std::sqrt(weighted_norm_sq(diff, spec_.weight, 0.0, deck_eval_radius) / den);
  }

  /* Adds coef times the twisted pushforward of the unit solution by e, on cells
   * with |z| < fill.  The identity copies lattice-aligned samples verbatim; any
   * other deck element keeps the preimage of the evaluation disk at modulus
   * >= tanh(separation - atanh(0.75)) > 0.5, clear of the far-field switch. */
  void add_piece(GridField& out, double fill, const DeckElement& e, double coef) const {
    if (coef == 0.0) return;
    if (e.word.empty()) {
      const int off = unit_u_.m - out.m;
      for (int ix = 0; ix < out.side(); ++ix)
        for (int iy = 0; iy < out.side(); ++iy) {
          if (std::abs(out.cell_center(ix, iy)) >= fill) continue;
          out.at(ix, iy) += coef * unit_u_.at(ix + off, iy + off);
        }
      return;
    }
    const MobiusTransform inv = mobius_invert(e.transform);
    for (int ix = 0; ix < out.side(); ++ix)
      for (int iy = 0; iy < out.side(); ++iy) {
        const Complex z = out.cell_center(ix, iy);
        if (std::abs(z) >= fill) continue;
        out.at(ix, iy) +=
            coef * far_value(mobius_apply(inv, z)) * twist_pow(mobius_derivative(inv, z));
      }
  }

  Complex far_value(Complex zeta) const {
    Complex horner = 0.0;
    for (std::size_t i = poly_.size(); i-- > 0;) horner = horner * zeta + poly_[i];
    return laurent_eval(far_, zeta) - horner;
  }

  Complex unit_value(Complex zeta) const {
    if (std::abs(zeta) <= far_switch_) return bilinear_value(unit_u_, zeta);
    return far_value(zeta);
  }

  Complex twist_pow(Complex g) const {
    Complex t = 1.0;
    for (int i = 0; i < spec_.weight.m / 2; ++i) t *= g;
    return t;
  }

  double eval_fill(const GridField& g) const {
    return std::min(g.rho_max - 2.0 * g.h, deck_eval_radius + 6.0 * g.h);
  }

  void require_lipschitz_regime() const {
    const int bound = 2 * (constants_.k + 1);
    if (spec_.weight.s <= bound)
      throw std::invalid_argument(
          "transversal increments: need s > 2(k + 1) for the fitted distortion exponent k = " +
          std::to_string(constants_.k) + ", got s = " + std::to_string(spec_.weight.s) +
          " <= " + std::to_string(bound));
  }

  void measure() {
    // deterministic lift-distortion envelope: rotations are circle isometries;
    // the boundary action of an element with parameter |a| stretches the circle
    // by at most (1+|a|)/(1-|a|), so k is the least integer with sup <= 2^{kn}
    int k = 0;
    if (spec_.model.action == TransversalAction::boundary)
      for (const DeckElement& e : deck_.elements) {
        if (e.n < 1) continue;
        const double amod = std::abs(e.transform.a);
        const double sup = (1.0 + amod) / (1.0 - amod);
        k = std::max(k, static_cast<int>(std::ceil(std::log2(sup) / e.n - 1e-12)));
      }
    constants_.k = k;
    constants_.c2 = std::sqrt(ratio_);

    double c3 = std::numeric_limits<double>::infinity();
    for (const DeckElement& e : deck_.elements) {
      const MobiusTransform inv = mobius_invert(e.transform);
      const double sc = std::ldexp(1.0, -e.n);
      for (int j = -1; j < 256; ++j) {
        const Complex z = j < 0 ? Complex(0.0)
                                : deck_eval_radius *
                                      std::polar(1.0, j * std::numbers::pi / 128.0);
        c3 = std::min(c3, sc / (1.0 - std::norm(mobius_apply(inv, z))));
      }
    }
    constants_.c3 = c3;

    double c4 = 0.0;
    for (std::size_t n = 0; n < deck_.shell_counts.size(); ++n)
      if (deck_.shell_counts[n] > 0)
        c4 = std::max(c4, static_cast<double>(deck_.shell_counts[n]) / std::ldexp(1.0, n));
    constants_.c4 = c4;

    // stratified sup of the localized data norms across the populated shells
    int populated = 0;
    for (long long c : deck_.shell_counts) populated += c > 0 ? 1 : 0;
    const int per_shell = std::max(1, 500 / std::max(1, populated));
    Rng rng(spec_.seed);
    double c1 = 0.0;
    for (std::size_t n = 0; n < shell_members_.size(); ++n) {
      if (shell_members_[n].empty()) continue;
      for (int j = 0; j < per_shell; ++j) {
        const int pick = static_cast<int>(rng.uniform() * shell_members_[n].size());
        const DeckElement& e =
            deck_.elements[std::min<std::size_t>(pick, shell_members_[n].size() - 1)];
        const double t = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double a =
            detail::modulated_amplitude(spec_, base_point_shift(spec_.model, e, t));
        c1 = std::max(c1, std::abs(a) * std::sqrt(bump_norm_sq_));
      }
    }
    constants_.c1 = c1;

    constants_.decay_rho = std::pow(0.5, (spec_.weight.s - 4.0) / 2.0);
    constants_.tail_coefficient = 4.0 * constants_.c1 * constants_.c2 * constants_.c4 *
                                  std::pow(constants_.c3, -spec_.weight.s / 2.0);
  }

  ProblemSpec spec_;
  DeckEnumeration deck_;
  std::vector<std::vector<int>> shell_members_;
  GridField unit_u_;
  double bump_norm_sq_ = 0.0;
  double ratio_ = 0.0;
  std::vector<Complex> poly_;
  LaurentExpansion far_;
  ConstantsReport constants_;
  double far_switch_ = 0.45;
};

inline LeafSolution solve_leaf(const ProblemSpec& spec, double t) {
  return DeckSolver(spec).solve(t);
}

inline EquivarianceReport equivariance_check(const ProblemSpec& spec, double t,
                                             const DeckElement& w, int n_cap = -1) {
  return DeckSolver(spec).equivariance(t, w, n_cap);
}

inline LipschitzReport transversal_lipschitz(const ProblemSpec& spec, double t1, double t2,
                                             const DeckElement& w) {
  return DeckSolver(spec).lipschitz(t1, t2, w);
}

inline DerivativeReport transversal_derivative_fd(const ProblemSpec& spec, double t,
                                                  const std::vector<double>& deltas) {
  return DeckSolver(spec).derivative_fd(t, deltas);
}

inline ConstantsReport measure_constants(const ProblemSpec& spec) {
  return DeckSolver(spec).constants();
}

}  // namespace ldbar
