#pragma once

// Restarted GMRES with right preconditioning, matrix-free.

#include <cmath>
#include <functional>
#include <vector>

#include "fnle/symmetric.hpp"

namespace fnle {

using LinearMap = std::function<Vector(const Vector&)>;

struct GmresResult {
  Vector x;
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

/// Solves A x = b with A M^{-1} y = b, x = M^{-1} y, stopping when |b - A x| <= rtol |b|.
inline GmresResult gmres(const LinearMap& apply, const LinearMap& precondition, const Vector& b, double rtol,
                         int restart = 40, int max_iterations = 400) {
  const Eigen::Index n = b.size();
  GmresResult out;
  out.x = Vector::Zero(n);
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    out.converged = true;
    return out;
  }
  Vector r = b;
  double beta = bnorm;
  while (out.iterations < max_iterations) {
    std::vector<Vector> v;
    std::vector<Vector> z;
    Matrix h = Matrix::Zero(restart + 1, restart);
    Vector cs = Vector::Zero(restart), sn = Vector::Zero(restart), g = Vector::Zero(restart + 1);
    g(0) = beta;
    v.push_back(r / beta);
    int j = 0;
    for (; j < restart && out.iterations < max_iterations; ++j) {
      ++out.iterations;
      z.push_back(precondition(v[static_cast<std::size_t>(j)]));
      Vector w = apply(z.back());
      for (int i = 0; i <= j; ++i) {  // modified Gram-Schmidt
        h(i, j) = w.dot(v[static_cast<std::size_t>(i)]);
        w -= h(i, j) * v[static_cast<std::size_t>(i)];
      }
      h(j + 1, j) = w.norm();
      for (int i = 0; i < j; ++i) {
        const double t = cs(i) * h(i, j) + sn(i) * h(i + 1, j);
        h(i + 1, j) = -sn(i) * h(i, j) + cs(i) * h(i + 1, j);
        h(i, j) = t;
      }
      const double denom = std::hypot(h(j, j), h(j + 1, j));
      cs(j) = denom == 0.0 ? 1.0 : h(j, j) / denom;
      sn(j) = denom == 0.0 ? 0.0 : h(j + 1, j) / denom;
      const double hj1 = h(j + 1, j);
      h(j, j) = cs(j) * h(j, j) + sn(j) * hj1;
      h(j + 1, j) = 0.0;
      g(j + 1) = -sn(j) * g(j);
      g(j) = cs(j) * g(j);
      const bool done = std::abs(g(j + 1)) <= rtol * bnorm;
      if (!done && hj1 > 0.0) v.push_back(w / hj1);
      if (done || hj1 == 0.0) {
        ++j;
        break;
      }
    }
    Vector y = Vector::Zero(j);
    for (int i = j - 1; i >= 0; --i) {
      double s = g(i);
      for (int m = i + 1; m < j; ++m) s -= h(i, m) * y(m);
      y(i) = s / h(i, i);
    }
    for (int i = 0; i < j; ++i) out.x += y(i) * z[static_cast<std::size_t>(i)];
    r = b - apply(out.x);
    beta = r.norm();
    out.relative_residual = beta / bnorm;
    if (out.relative_residual <= rtol) {
      out.converged = true;
      return out;
    }
  }
  return out;
}

}  // namespace fnle
