#pragma once

// Elementary symmetric polynomials, their derivatives, and the averaging map T.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "fnle/errors.hpp"

namespace fnle {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline std::span<const double> as_span(const Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

/// e_0..e_kmax of `x` via e_k(x_1..x_m) = e_k(x_1..x_{m-1}) + x_m e_{k-1}(x_1..x_{m-1}).
/// Entries at positions `skip_a` and `skip_b` (if >= 0) are left out.
inline std::vector<double> elementary_symmetric(std::span<const double> x, int kmax, int skip_a = -1,
                                                int skip_b = -1) {
  std::vector<double> e(static_cast<std::size_t>(std::max(kmax, 0)) + 1, 0.0);
  e[0] = 1.0;
  int m = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (static_cast<int>(i) == skip_a || static_cast<int>(i) == skip_b) continue;
    ++m;
    for (int k = std::min(m, kmax); k >= 1; --k) e[k] += x[i] * e[k - 1];
  }
  return e;
}

/// sigma_k(lambda); sigma_0 = 1.
inline double sigma(int k, std::span<const double> lambda) {
  const int n = static_cast<int>(lambda.size());
  if (k < 0 || k > n)
    throw ArgumentError("sigma: k=" + std::to_string(k) + " outside 0.." + std::to_string(n));
  return elementary_symmetric(lambda, k)[k];
}

/// sigma_k with entries i (and j) removed; zero for k < 0.
inline double sigma_skip(int k, std::span<const double> lambda, int i, int j = -1) {
  if (k < 0) return 0.0;
  return elementary_symmetric(lambda, k, i, j)[k];
}

/// Value, gradient and Hessian of sigma_k at lambda.
/// d sigma_k / d l_i = sigma_{k-1}(lambda | i), d^2 / d l_i d l_j = sigma_{k-2}(lambda | i j), i != j.
struct SigmaJet {
  double value = 0.0;
  Vector grad;
  Matrix hess;
};

inline SigmaJet sigma_jet(int k, std::span<const double> lambda, int order = 2) {
  const int n = static_cast<int>(lambda.size());
  SigmaJet jet;
  jet.value = (k < 0 || k > n) ? 0.0 : elementary_symmetric(lambda, k)[k];
  if (order >= 1) {
    jet.grad = Vector::Zero(n);
    for (int i = 0; i < n; ++i) jet.grad(i) = sigma_skip(k - 1, lambda, i);
  }
  if (order >= 2) {
    jet.hess = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) jet.hess(i, j) = jet.hess(j, i) = sigma_skip(k - 2, lambda, i, j);
  }
  return jet;
}

/// T(lambda)_k = (sum_{i != k} lambda_i) / (n - 1).
inline Vector t_map(std::span<const double> lambda) {
  const int n = static_cast<int>(lambda.size());
  if (n < 2) throw ArgumentError("t_map: requires n >= 2");
  double total = 0.0;
  for (double v : lambda) total += v;
  Vector out(n);
  for (int k = 0; k < n; ++k) out(k) = (total - lambda[k]) / (n - 1);
  return out;
}

/// Matrix of T (symmetric): (J - I) / (n - 1).
inline Matrix t_matrix(int n) {
  if (n < 2) throw ArgumentError("t_matrix: requires n >= 2");
  Matrix m = Matrix::Constant(n, n, 1.0 / (n - 1));
  m.diagonal().setZero();
  return m;
}

/// Polynomial in s, coefficients from low to high degree.
using Poly = std::vector<double>;

/// sigma_0..sigma_kmax of (base + s*dir) as polynomials in s.
inline std::vector<Poly> sigma_polynomials(std::span<const double> base, std::span<const double> dir, int kmax) {
  std::vector<Poly> e(static_cast<std::size_t>(kmax) + 1, Poly(static_cast<std::size_t>(kmax) + 1, 0.0));
  e[0][0] = 1.0;
  int m = 0;
  for (std::size_t i = 0; i < base.size(); ++i) {
    ++m;
    for (int k = std::min(m, kmax); k >= 1; --k) {
      const Poly& prev = e[k - 1];
      Poly& cur = e[k];
      for (int d = kmax; d >= 0; --d) {
        double add = base[i] * prev[d];
        if (d > 0) add += dir[i] * prev[d - 1];
        cur[d] += add;
      }
    }
  }
  return e;
}

/// Degree and coefficient of the highest coefficient that is not negligible
/// relative to the largest one. Degree -1 means the zero polynomial.
struct LeadingTerm {
  int degree = -1;
  double coefficient = 0.0;
};

inline LeadingTerm leading_term(const Poly& p, double rel_tol = 1e-13) {
  double scale = 0.0;
  for (double c : p) scale = std::max(scale, std::abs(c));
  if (scale == 0.0) return {};
  for (int d = static_cast<int>(p.size()) - 1; d >= 0; --d)
    if (std::abs(p[d]) > rel_tol * scale) return {d, p[d]};
  return {};
}

/// True when p(s) > 0 for all sufficiently large s.
inline bool eventually_positive(const Poly& p) { return leading_term(p).coefficient > 0.0; }

}  // namespace fnle
