#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

namespace ldbar {

using Complex = std::complex<double>;

/*
  Disk automorphism phi(zeta) = e^{i beta} (zeta - a)/(1 - conj(a) zeta),
  |a| < 1. The pair (a, beta) is the stored parameterization; composition and
  inversion run through the matrix form

      phi(z) = (A z + B) / (conj(B) z + conj(A)),   |A|^2 - |B|^2 = 1,

  because products of such matrices keep exactly that coefficient structure:

      (A1 z + B1)/(c(B1) z + c(A1)) after (A2 z + B2)/(c(B2) z + c(A2))
        = (A z + B)/(c(B) z + c(A)),  A = A1 A2 + B1 c(B2),  B = A1 B2 + B1 c(A2).

  One renormalization by the real determinant |A|^2 - |B|^2 after each product
  keeps the representation on the group and the round trip back to (a, beta)
  exact: a = -B/A, beta = 2 arg(A) (the sign ambiguity A -> -A shifts beta by
  2 pi, so the class is well defined).
*/
struct MobiusTransform {
  Complex a{0.0, 0.0};  // the zero of phi
  double beta{0.0};     // rotation angle, kept in [0, 2 pi)
};

namespace detail {

struct SuPair {
  Complex A{1.0, 0.0};
  Complex B{0.0, 0.0};
};

inline SuPair to_su(const MobiusTransform& phi) {
  const double s2 = 1.0 - std::norm(phi.a);
  const Complex half_rot = std::polar(1.0 / std::sqrt(s2), 0.5 * phi.beta);
  return {half_rot, -phi.a * half_rot};
}

inline double wrap_angle(double beta) {
  const double two_pi = 2.0 * std::numbers::pi;
  beta = std::fmod(beta, two_pi);
  return beta < 0 ? beta + two_pi : beta;
}

inline MobiusTransform from_su(SuPair m) {
  const double det = std::sqrt(std::norm(m.A) - std::norm(m.B));
  m.A /= det;
  m.B /= det;
  return {-m.B / m.A, wrap_angle(2.0 * std::arg(m.A))};
}

inline SuPair su_mul(const SuPair& f, const SuPair& g) {
  return {f.A * g.A + f.B * std::conj(g.B), f.A * g.B + f.B * std::conj(g.A)};
}

}  // namespace detail

inline MobiusTransform mobius_identity() { return {}; }

// The automorphism translating 0 to p (and -p to 0) with no added rotation.
inline MobiusTransform mobius_translation_to(Complex p) {
  if (std::abs(p) >= 1.0) throw std::domain_error("mobius_translation_to: |p| must be < 1");
  return {-p, 0.0};
}

inline Complex mobius_apply(const MobiusTransform& phi, Complex zeta) {
  return std::polar(1.0, phi.beta) * (zeta - phi.a) / (1.0 - std::conj(phi.a) * zeta);
}

// phi'(zeta) = e^{i beta} (1 - |a|^2)/(1 - conj(a) zeta)^2
inline Complex mobius_derivative(const MobiusTransform& phi, Complex zeta) {
  const Complex den = 1.0 - std::conj(phi.a) * zeta;
  return std::polar(1.0, phi.beta) * (1.0 - std::norm(phi.a)) / (den * den);
}

// f after g: (mobius_compose(f, g))(z) = f(g(z)).
inline MobiusTransform mobius_compose(const MobiusTransform& f, const MobiusTransform& g) {
  return detail::from_su(detail::su_mul(detail::to_su(f), detail::to_su(g)));
}

inline MobiusTransform mobius_invert(const MobiusTransform& phi) {
  const detail::SuPair m = detail::to_su(phi);
  return detail::from_su({std::conj(m.A), -m.B});
}

}  // namespace ldbar
