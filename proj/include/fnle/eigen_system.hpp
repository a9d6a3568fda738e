#pragma once

// Cyclic Jacobi eigensolver for small Hermitian / real symmetric matrices.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <type_traits>

#include "fnle/errors.hpp"
#include "fnle/symmetric.hpp"

namespace fnle {

template <class T>
struct is_complex : std::false_type {};
template <class T>
struct is_complex<std::complex<T>> : std::true_type {};

template <class Scalar>
using MatrixS = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using ComplexMatrix = MatrixS<std::complex<double>>;

inline double conj_of(double x) { return x; }
inline std::complex<double> conj_of(std::complex<double> x) { return std::conj(x); }

/// Sorted eigenvalues (descending) and the matching orthonormal eigenvectors as columns.
template <class Scalar>
struct EigenSystem {
  Vector values;
  MatrixS<Scalar> frame;
};

/// Throws ArgumentError unless A is square, finite and Hermitian to 1e-12 relative.
template <class Scalar>
void require_hermitian(const MatrixS<Scalar>& a, const char* where = "matrix") {
  if (a.rows() != a.cols() || a.rows() == 0) throw ArgumentError(std::string(where) + ": must be square and non-empty");
  if (!a.allFinite()) throw ArgumentError(std::string(where) + ": non-finite entries");
  const double scale = std::max(1.0, a.norm());
  if ((a - a.adjoint()).norm() > 1e-12 * scale) throw ArgumentError(std::string(where) + ": not Hermitian");
}

/// Jacobi sweeps in fixed (p, q) order until the off-diagonal Frobenius norm drops below
/// 1e-13 relative to the matrix norm; eigenvalues are returned in descending order.
template <class Scalar>
EigenSystem<Scalar> eigen_decompose(const MatrixS<Scalar>& input) {
  require_hermitian(input, "eigen_decompose");
  const int n = static_cast<int>(input.rows());
  MatrixS<Scalar> a = 0.5 * (input + input.adjoint());
  MatrixS<Scalar> v = MatrixS<Scalar>::Identity(n, n);
  const double scale = std::max(a.norm(), std::numeric_limits<double>::min());
  const double tol = 1e-13 * scale;

  auto off_norm = [&] {
    double s = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = 0; q < n; ++q)
        if (p != q) s += std::norm(a(p, q));
    return std::sqrt(s);
  };

  for (int sweep = 0; sweep < 100 && off_norm() > tol; ++sweep) {
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const Scalar g = a(p, q);
        const double abs_g = std::abs(g);
        if (abs_g <= 1e-300) continue;
        const Scalar phase = g / abs_g;  // g = |g| * phase
        const double app = std::real(a(p, p));
        const double aqq = std::real(a(q, q));
        const double theta = (aqq - app) / (2.0 * abs_g);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        const Scalar ph_bar = conj_of(phase);
        // U restricted to (p, q): [[c, s], [-conj(phase) s, conj(phase) c]].
        for (int r = 0; r < n; ++r) {  // columns: A <- A U
          const Scalar arp = a(r, p), arq = a(r, q);
          a(r, p) = c * arp - ph_bar * s * arq;
          a(r, q) = s * arp + ph_bar * c * arq;
        }
        for (int r = 0; r < n; ++r) {  // rows: A <- U^* A
          const Scalar apr = a(p, r), aqr = a(q, r);
          a(p, r) = c * apr - phase * s * aqr;
          a(q, r) = s * apr + phase * c * aqr;
        }
        a(p, q) = Scalar(0);
        a(q, p) = Scalar(0);
        a(p, p) = Scalar(std::real(a(p, p)));
        a(q, q) = Scalar(std::real(a(q, q)));
        for (int r = 0; r < n; ++r) {
          const Scalar vrp = v(r, p), vrq = v(r, q);
          v(r, p) = c * vrp - ph_bar * s * vrq;
          v(r, q) = s * vrp + ph_bar * c * vrq;
        }
      }
    }
  }

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int i, int j) { return std::real(a(i, i)) > std::real(a(j, j)); });
  EigenSystem<Scalar> out;
  out.values.resize(n);
  out.frame.resize(n, n);
  for (int i = 0; i < n; ++i) {
    out.values(i) = std::real(a(order[i], order[i]));
    out.frame.col(i) = v.col(order[i]);
  }
  return out;
}

}  // namespace fnle
