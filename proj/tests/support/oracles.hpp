#pragma once

// Independent reference computations used by the unit and acceptance suites. Nothing
// here calls the closed forms it is meant to check.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "fnle/fnle.hpp"
#include "fnle/selftest.hpp"

namespace oracle {

using fnle::ComplexMatrix;
using fnle::Matrix;
using fnle::Vector;

/// sigma_k by enumerating all k-subsets.
inline double sigma_subsets(int k, const Vector& x) {
  const int n = static_cast<int>(x.size());
  double total = 0.0;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (__builtin_popcount(mask) != k) continue;
    double prod = 1.0;
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) prod *= x(i);
    total += prod;
  }
  return total;
}

/// Coefficients c_j of det(s I + M) = sum_j c_j s^{n-j}, by sampling the determinant at
/// n+1 nodes and solving the Vandermonde system. c_j = sigma_j(lambda(M)).
inline Vector charpoly_coefficients(const ComplexMatrix& m) {
  const int n = static_cast<int>(m.rows());
  Matrix V(n + 1, n + 1);
  Vector rhs(n + 1);
  for (int r = 0; r <= n; ++r) {
    const double s = static_cast<double>(r) - 0.5 * n;
    for (int j = 0; j <= n; ++j) V(r, j) = std::pow(s, n - j);
    rhs(r) = std::real((s * ComplexMatrix::Identity(n, n) + m).determinant());
  }
  return V.fullPivLu().solve(rhs);
}

/// Central difference of a scalar function of one variable.
inline double central(const std::function<double(double)>& f, double h) { return (f(h) - f(-h)) / (2.0 * h); }

/// Fourth-order five-point first derivative.
inline double five_point(const std::function<double(double)>& f, double h) {
  return (8.0 * (f(h) - f(-h)) - (f(2.0 * h) - f(-2.0 * h))) / (12.0 * h);
}

/// Fourth-order second derivative.
inline double five_point_second(const std::function<double(double)>& f, double h) {
  return (-f(2.0 * h) + 16.0 * f(h) - 30.0 * f(0.0) + 16.0 * f(-h) - f(-2.0 * h)) / (12.0 * h * h);
}

/// Eigenvalues (descending) of a Hermitian matrix through Eigen's solver.
inline Vector eigenvalues_descending(const ComplexMatrix& a) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(a);
  return es.eigenvalues().reverse();
}

/// f(lambda(A)) evaluated through Eigen's eigensolver; NaN outside the cone.
inline double F_direct(const fnle::SymmetricOperator& op, const ComplexMatrix& a) {
  const Vector lam = eigenvalues_descending(a);
  if (!op.cone().contains(fnle::as_span(lam))) return std::numeric_limits<double>::quiet_NaN();
  return op.value(fnle::as_span(lam));
}

/// Brute-force boundedness of (mu + Gamma_n) cap {f = sigma}: shoot `rays` rays from mu
/// (the coordinate axes plus random non-negative directions, some hugging the faces),
/// bisect each onto the level set and declare the set bounded iff every ray meets the
/// level within `radius`.
inline bool bounded_by_rays(const fnle::SymmetricOperator& op, const Vector& mu, double sigma, int rays = 200,
                            double radius = 1e6, std::uint64_t seed = 99) {
  const int n = op.dimension();
  fnle::Rng rng(seed);
  std::vector<Vector> dirs;
  for (int i = 0; i < n; ++i) dirs.push_back(Vector::Unit(n, i));
  while (static_cast<int>(dirs.size()) < rays) {
    Vector d(n);
    for (int i = 0; i < n; ++i) d(i) = rng.uniform();
    if (dirs.size() % 3 == 0) {  // nearly a face direction
      const int keep = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
      for (int i = 0; i < n; ++i)
        if (i != keep) d(i) *= 1e-6;
    }
    dirs.push_back(d / d.norm());
  }
  auto above = [&](const Vector& x) {
    return op.cone().contains(fnle::as_span(x)) && op.value(fnle::as_span(x)) >= sigma;
  };
  for (const Vector& d : dirs) {
    // The level is met along the ray iff the far point is above it (f increases along
    // non-negative directions); bisection locates the crossing.
    const double s_far = 2.0 * radius;
    if (!above(mu + s_far * d)) return false;
    double lo = 0.0, hi = s_far;
    if (above(mu)) continue;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (above(mu + mid * d) ? hi : lo) = mid;
    }
    if ((mu + hi * d).norm() > radius) return false;
  }
  return true;
}

/// Hermitian matrix with prescribed eigenvalues in a random unitary frame.
inline ComplexMatrix hermitian_with_spectrum(const Vector& lambda, fnle::Rng& rng) {
  const int n = static_cast<int>(lambda.size());
  ComplexMatrix z(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) z(i, j) = {rng.normal(), rng.normal()};
  Eigen::HouseholderQR<ComplexMatrix> qr(z);
  const ComplexMatrix u = qr.householderQ() * ComplexMatrix::Identity(n, n);
  ComplexMatrix a = u * lambda.cast<std::complex<double>>().asDiagonal() * u.adjoint();
  return 0.5 * (a + a.adjoint());
}

inline ComplexMatrix random_hermitian(int n, fnle::Rng& rng) {
  ComplexMatrix z(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) z(i, j) = {rng.normal(), rng.normal()};
  return 0.5 * (z + z.adjoint());
}

}  // namespace oracle
