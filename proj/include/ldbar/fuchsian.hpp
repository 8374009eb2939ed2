#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ldbar/disk_geometry.hpp"
#include "ldbar/mobius.hpp"

namespace ldbar {

/*
 * Genus-2 surface group from the regular right-angled octagon (vertex angles
 * pi/4), generators pairing opposite sides. Each generator is the hyperbolic
 * translation along the ray through side k with
 *
 *     a_k = -tau e^{i k pi/4},  beta = 0,  tau = tanh(arccosh(1 + sqrt 2)),
 *
 * so t_k(0) = tau e^{i k pi/4}: the eight orbit points of the neighbors sit at
 * equal modulus. cosh(apothem) = cot(pi/8) = 1 + sqrt 2 and the translation
 * length is twice the apothem. Identifying opposite sides makes the vertex
 * cycle — hence the defining relation — the alternating word
 * t0 t1^{-1} t2 t3^{-1} t0^{-1} t1 t2^{-1} t3, whose exponent sums all vanish.
 */

inline double octagon_cosh_apothem() { return 1.0 + std::numbers::sqrt2; }
inline double octagon_cosh_circumradius() { return 3.0 + 2.0 * std::numbers::sqrt2; }
inline double octagon_side_parameter() { return std::tanh(std::acosh(octagon_cosh_apothem())); }

struct SurfaceGroup {
  std::array<MobiusTransform, 4> generators;
  std::array<int, 8> relation;  // letters; 0..3 generators, 4..7 inverses
  double orbit_separation = 0.0;
};

inline int inverse_letter(int letter) { return (letter + 4) % 8; }

inline MobiusTransform letter_transform(const SurfaceGroup& g, int letter) {
  if (letter < 0 || letter > 7) throw std::invalid_argument("letter_transform: letter out of range");
  return letter < 4 ? g.generators[letter] : mobius_invert(g.generators[letter - 4]);
}

inline MobiusTransform word_transform(const SurfaceGroup& g, const std::vector<int>& word) {
  MobiusTransform t = mobius_identity();
  for (int letter : word) t = mobius_compose(t, letter_transform(g, letter));
  return t;
}

inline SurfaceGroup octagon_surface_group() {
  SurfaceGroup g;
  const double tau = octagon_side_parameter();
  for (int k = 0; k < 4; ++k)
    g.generators[k] = {-tau * std::polar(1.0, k * std::numbers::pi / 4.0), 0.0};
  g.relation = {0, 5, 2, 7, 4, 1, 6, 3};
  g.orbit_separation = std::acosh(octagon_cosh_apothem());
  return g;
}

// distance of a transform from the identity in the (a, beta) parameters
inline double identity_residual(const MobiusTransform& t) {
  const double wrapped = std::min(t.beta, 2.0 * std::numbers::pi - t.beta);
  return std::abs(t.a) + std::abs(wrapped);
}

// Translation length (curvature -1 normalization) from the SU(1,1) trace;
// zero for elliptic or parabolic elements.
inline double translation_length(const MobiusTransform& t) {
  const double half_trace = std::abs(detail::to_su(t).A.real());
  if (half_trace <= 1.0) return 0.0;
  return 2.0 * std::acosh(half_trace);
}

inline bool is_hyperbolic(const MobiusTransform& t) {
  return std::abs(detail::to_su(t).A.real()) > 1.0 + 1e-12;
}

// --- deck enumeration -------------------------------------------------------

struct DeckElement {
  std::vector<int> word;  // reduced letters
  MobiusTransform transform;
  int n = 0;  // shell index of transform(0)
};

struct DeckEnumeration {
  std::vector<DeckElement> elements;  // ordered by (word length, lexicographic)
  std::vector<long long> shell_counts;
  long long merged_duplicates = 0;
};

inline std::string word_string(const std::vector<int>& word) {
  static const char* names = "abcdABCD";
  std::string s;
  for (int letter : word) s.push_back(names[letter]);
  return s.empty() ? std::string("e") : s;
}

/*
 * Breadth-first walk over reduced words, pruned by orbit radius: a prefix is
 * expanded only while its orbit point stays inside the shells up to
 * n_cap + margin (one letter moves a point by at most one translation length,
 * so anything beyond the margin can never re-enter the kept shells; margin 3
 * reproduces the exhaustive counts). Elements are deduplicated by their orbit
 * point on a 1e-9 grid — far below the orbit separation — keeping the first
 * (shortest, then lexicographically least) word.
 */
inline DeckEnumeration enumerate_deck(const SurfaceGroup& g, int max_word_len, int n_cap,
                                      int margin = 3) {
  if (max_word_len < 0) throw std::invalid_argument("enumerate_deck: negative word cap");
  if (n_cap < 0) throw std::invalid_argument("enumerate_deck: negative shell cap");
  const double prune_radius = 1.0 - std::ldexp(1.0, -(n_cap + margin + 1));

  const auto key_of = [](Complex p) {
    return std::pair<long long, long long>{std::llround(p.real() * 1e9),
                                           std::llround(p.imag() * 1e9)};
  };

  DeckEnumeration out;
  out.shell_counts.assign(n_cap + 1, 0);
  std::map<std::pair<long long, long long>, bool> seen;

  struct Node {
    std::vector<int> word;
    MobiusTransform transform;
  };
  std::vector<Node> frontier{{{}, mobius_identity()}};
  seen[key_of(Complex(0.0))] = true;
  out.elements.push_back({{}, mobius_identity(), 0});
  ++out.shell_counts[0];

  for (int len = 1; len <= max_word_len && !frontier.empty(); ++len) {
    std::vector<Node> next;
    for (const Node& node : frontier) {
      for (int letter = 0; letter < 8; ++letter) {
        if (!node.word.empty() && letter == inverse_letter(node.word.back())) continue;
        Node child;
        child.word = node.word;
        child.word.push_back(letter);
        child.transform = mobius_compose(node.transform, letter_transform(g, letter));
        const Complex p = mobius_apply(child.transform, Complex(0.0));
        const double r = std::abs(p);
        if (r >= prune_radius) continue;
        auto [it, fresh] = seen.emplace(key_of(p), true);
        (void)it;
        if (!fresh) {
          // same orbit point = same group element (the stabilizer of 0 is
          // trivial), so the whole subtree repeats: merge and do not expand
          ++out.merged_duplicates;
          continue;
        }
        const int n = annulus_index(p);
        if (n <= n_cap) {
          out.elements.push_back({child.word, child.transform, n});
          ++out.shell_counts[n];
        }
        next.push_back(std::move(child));
      }
    }
    frontier = std::move(next);
  }

  std::sort(out.elements.begin(), out.elements.end(), [](const DeckElement& a, const DeckElement& b) {
    if (a.word.size() != b.word.size()) return a.word.size() < b.word.size();
    return a.word < b.word;
  });
  return out;
}

// Minimum pairwise Poincare distance between enumerated orbit points.
inline double measured_orbit_separation(const DeckEnumeration& deck) {
  if (deck.elements.size() < 2)
    throw std::invalid_argument("measured_orbit_separation: need at least two elements");
  double best = std::numeric_limits<double>::infinity();
  std::vector<Complex> pts;
  pts.reserve(deck.elements.size());
  for (const DeckElement& e : deck.elements) pts.push_back(mobius_apply(e.transform, Complex(0.0)));
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      best = std::min(best, poincare_distance(pts[i], pts[j]));
  return best;
}

}  // namespace ldbar
