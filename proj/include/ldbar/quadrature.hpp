#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace ldbar {

struct QuadratureRule {
  std::vector<double> node;
  std::vector<double> weight;
};

// Gauss-Legendre rule on [-1, 1], nodes by Newton iteration on the Legendre
// recurrence. Exact for polynomials of degree <= 2n-1.
inline QuadratureRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be positive");
  QuadratureRule rule;
  rule.node.assign(n, 0.0);
  rule.weight.assign(n, 0.0);
  const auto legendre = [n](double t, double& p0, double& dp) {
    p0 = 1.0;
    double p1 = 0.0;
    for (int k = 0; k < n; ++k) {
      const double p2 = p1;
      p1 = p0;
      p0 = ((2 * k + 1) * t * p1 - k * p2) / (k + 1);
    }
    dp = n * (t * p0 - p1) / (t * t - 1.0);
  };
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double t = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double p0 = 0.0, dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      legendre(t, p0, dp);
      const double dt = -p0 / dp;
      t += dt;
      if (std::abs(dt) < 1e-16) break;
    }
    legendre(t, p0, dp);  // refresh the derivative at the converged node
    rule.node[i] = -t;
    rule.node[n - 1 - i] = t;
    rule.weight[i] = rule.weight[n - 1 - i] = 2.0 / ((1.0 - t * t) * dp * dp);
  }
  return rule;
}

// Same rule affinely mapped to [lo, hi].
inline QuadratureRule gauss_legendre(int n, double lo, double hi) {
  QuadratureRule rule = gauss_legendre(n);
  const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
  for (int i = 0; i < n; ++i) {
    rule.node[i] = mid + half * rule.node[i];
    rule.weight[i] *= half;
  }
  return rule;
}

// Squared weighted norm of the monomial z^j against the density (1-|z|^2)^p
// over the unit disk: pi * j! p! / (j+p+1)!  (a Beta integral in t = r^2).
inline double weighted_monomial_norm_sq(int j, int p) {
  if (j < 0 || p < 0) throw std::invalid_argument("weighted_monomial_norm_sq: negative index");
  double value = std::numbers::pi;
  // p! / ((j+1)(j+2)...(j+p+1)) accumulated as a product of ratios <= 1
  for (int i = 1; i <= p; ++i) value *= static_cast<double>(i) / (j + i);
  value /= (j + p + 1);
  return value;
}

// int_0^x t^j (1-t)^p dt for integer p >= 0, by the exact binomial expansion.
inline double incomplete_beta_integral(int j, int p, double x) {
  if (j < 0 || p < 0) throw std::invalid_argument("incomplete_beta_integral: negative index");
  double sum = 0.0;
  double binom = 1.0;  // C(p, i)
  double xpow = std::pow(x, j + 1);
  for (int i = 0; i <= p; ++i) {
    sum += (i % 2 ? -1.0 : 1.0) * binom * xpow / (j + i + 1);
    binom = binom * (p - i) / (i + 1);
    xpow *= x;
  }
  return sum;
}

}  // namespace ldbar
