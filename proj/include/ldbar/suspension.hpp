#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "ldbar/disk_geometry.hpp"
#include "ldbar/fuchsian.hpp"
#include "ldbar/mobius.hpp"
#include "ldbar/rng.hpp"

namespace ldbar {

/*
 * Suspension of the surface group over the circle: (zeta, t) ~ (g zeta, g.t).
 * Two transversal actions are shipped — rigid rotations with one configured
 * angle per generator (isometric, so lift distortion is trivially 1), and the
 * boundary action where each generator moves e^{it} by its own Mobius map
 * (non-isometric; distortion is controlled by the boundary derivative).
 * Points of the circle are angles in [0, 2 pi).
 */

enum class TransversalAction { rotations, boundary };

struct SuspensionModel {
  SurfaceGroup group;
  TransversalAction action = TransversalAction::rotations;
  std::array<double, 4> angles{1.0, std::numbers::sqrt2, std::numbers::sqrt3, std::sqrt(5.0)};
};

inline SuspensionModel make_suspension(TransversalAction action = TransversalAction::rotations) {
  SuspensionModel m;
  m.group = octagon_surface_group();
  m.action = action;
  return m;
}

inline double wrap_circle(double t) {
  t = std::fmod(t, 2.0 * std::numbers::pi);
  return t < 0.0 ? t + 2.0 * std::numbers::pi : t;
}

// arc-length metric on the circle
inline double transversal_distance(double t1, double t2) {
  const double d = std::abs(wrap_circle(t1) - wrap_circle(t2));
  return std::min(d, 2.0 * std::numbers::pi - d);
}

namespace detail {

inline double rotation_angle_of_word(const SuspensionModel& m, const std::vector<int>& word) {
  double total = 0.0;
  for (int letter : word) total += letter < 4 ? m.angles[letter] : -m.angles[letter - 4];
  return total;
}

inline double boundary_action(const MobiusTransform& t, double angle) {
  return wrap_circle(std::arg(mobius_apply(t, std::polar(1.0, angle))));
}

}  // namespace detail

inline double act_on_transversal(const SuspensionModel& m, const std::vector<int>& word,
                                 double t) {
  if (m.action == TransversalAction::rotations)
    return wrap_circle(t + detail::rotation_angle_of_word(m, word));
  return detail::boundary_action(word_transform(m.group, word), t);
}

inline double act_on_transversal(const SuspensionModel& m, const DeckElement& w, double t) {
  if (m.action == TransversalAction::rotations)
    return wrap_circle(t + detail::rotation_angle_of_word(m, w.word));
  return detail::boundary_action(w.transform, t);
}

// Transversal parameter of the leaf through t at the orbit point w(0): the
// suspension identification pulls the point back through the deck element.
inline double base_point_shift(const SuspensionModel& m, const DeckElement& w, double t) {
  if (m.action == TransversalAction::rotations)
    return wrap_circle(t - detail::rotation_angle_of_word(m, w.word));
  return detail::boundary_action(mobius_invert(w.transform), t);
}

// d0(w^{-1}.t1, w^{-1}.t2) / d0(t1, t2)
inline double lift_distortion(const SuspensionModel& m, const DeckElement& w, double t1,
                              double t2) {
  const double base = transversal_distance(t1, t2);
  if (base == 0.0) throw std::invalid_argument("lift_distortion: coincident transversal points");
  return transversal_distance(base_point_shift(m, w, t1), base_point_shift(m, w, t2)) / base;
}

// Kobayashi density of the leaf through (zeta, t) in the global chart: the
// leafwise metric is the chart metric, so this is the Poincare density,
// independent of t.
inline double kobayashi_in_chart(const SuspensionModel&, double /*t*/, Complex zeta) {
  return poincare_density(zeta);
}

// sup over a circle grid of the action's deviation from the identity under
// the defining relation
inline double relation_action_residual(const SuspensionModel& m, int grid = 256) {
  const std::vector<int> rel(m.group.relation.begin(), m.group.relation.end());
  double worst = 0.0;
  for (int i = 0; i < grid; ++i) {
    const double t = 2.0 * std::numbers::pi * i / grid;
    worst = std::max(worst, transversal_distance(act_on_transversal(m, rel, t), t));
  }
  return worst;
}

// max over random (word pair, t) of the homomorphism defect
// d0(act(w1 w2, t), act(w1, act(w2, t)))
inline double homomorphism_residual(const SuspensionModel& m, long long samples,
                                    std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  const auto random_word = [&rng](int len) {
    std::vector<int> w;
    for (int i = 0; i < len; ++i) {
      int letter = static_cast<int>(rng.raw() % 8);
      while (!w.empty() && letter == inverse_letter(w.back()))
        letter = static_cast<int>(rng.raw() % 8);
      w.push_back(letter);
    }
    return w;
  };
  for (long long i = 0; i < samples; ++i) {
    const std::vector<int> w1 = random_word(1 + static_cast<int>(rng.raw() % 4));
    const std::vector<int> w2 = random_word(1 + static_cast<int>(rng.raw() % 4));
    std::vector<int> w12 = w1;
    w12.insert(w12.end(), w2.begin(), w2.end());
    const double t = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double lhs = act_on_transversal(m, w12, t);
    const double rhs = act_on_transversal(m, w1, act_on_transversal(m, w2, t));
    worst = std::max(worst, transversal_distance(lhs, rhs));
  }
  return worst;
}

struct DistortionFit {
  int k = 0;              // smallest integer with ratio <= 2^{k n} on all samples
  double max_ratio = 0.0;
  double max_ratio_vs_derivative_bound = 0.0;  // ratio / 2^{n+2}
};

// Samples transversal pairs against every enumerated element and fits the
// smallest exponent k with distortion <= 2^{k n}; also records the worst
// ratio against the boundary-derivative bound 2^{n+2}.
inline DistortionFit fit_distortion_exponent(const SuspensionModel& m, const DeckEnumeration& deck,
                                             int pairs_per_element, std::uint64_t seed) {
  Rng rng(seed);
  DistortionFit fit;
  double worst_excess = 0.0;  // max over elements with n >= 1 of log2(ratio)/n
  for (const DeckElement& e : deck.elements) {
    for (int i = 0; i < pairs_per_element; ++i) {
      const double t1 = rng.uniform(0.0, 2.0 * std::numbers::pi);
      double t2 = rng.uniform(0.0, 2.0 * std::numbers::pi);
      if (transversal_distance(t1, t2) == 0.0) t2 = wrap_circle(t1 + 1.0);
      const double ratio = lift_distortion(m, e, t1, t2);
      fit.max_ratio = std::max(fit.max_ratio, ratio);
      if (e.n >= 1) {
        worst_excess = std::max(worst_excess, std::log2(ratio) / e.n);
        fit.max_ratio_vs_derivative_bound =
            std::max(fit.max_ratio_vs_derivative_bound, ratio / std::ldexp(1.0, e.n + 2));
      }
    }
  }
  fit.k = std::max(0, static_cast<int>(std::ceil(worst_excess - 1e-12)));
  return fit;
}

}  // namespace ldbar
