#pragma once

// Matrix fields on flat tori: the complex and real Hessians, the endomorphism field
// A = alpha^{-1}(chi + Hess u) in alpha-orthonormal coordinates, form ratios and the
// cohomological constant of the quotient equation.

#include <Eigen/Cholesky>

#include <complex>
#include <cstdint>
#include <vector>

#include "fnle/eigen_system.hpp"
#include "fnle/grid.hpp"
#include "fnle/random.hpp"

namespace fnle {

/// One Hermitian (complex mode) or real symmetric (real mode, zero imaginary part)
/// matrix per grid point.
class MatrixField {
 public:
  MatrixField(PeriodicGrid grid, int n)
      : grid_(std::move(grid)), data_(grid_.size(), ComplexMatrix::Zero(n, n)), n_(n) {}
  static MatrixField constant(const PeriodicGrid& grid, const ComplexMatrix& m) {
    MatrixField f(grid, static_cast<int>(m.rows()));
    std::fill(f.data_.begin(), f.data_.end(), m);
    return f;
  }

  const PeriodicGrid& grid() const { return grid_; }
  int dimension() const { return n_; }
  std::size_t size() const { return data_.size(); }
  const ComplexMatrix& operator[](std::size_t i) const { return data_[i]; }
  ComplexMatrix& operator[](std::size_t i) { return data_[i]; }

  MatrixField& operator+=(const MatrixField& o) {
    if (!grid_.same_shape(o.grid_) || n_ != o.n_) throw ArgumentError("MatrixField: shapes differ");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  MatrixField& operator*=(double s) {
    for (auto& m : data_) m *= s;
    return *this;
  }
  friend MatrixField operator+(MatrixField a, const MatrixField& b) { return a += b; }
  friend MatrixField operator*(double s, MatrixField a) { return a *= s; }

 private:
  PeriodicGrid grid_;
  std::vector<ComplexMatrix> data_;
  int n_;
};

/// Constant positive definite background metric alpha = C C^*.
class Metric {
 public:
  explicit Metric(const ComplexMatrix& alpha) : alpha_(alpha) {
    require_hermitian(alpha, "metric");
    Eigen::LLT<ComplexMatrix> llt(alpha);
    if (llt.info() != Eigen::Success) throw ArgumentError("metric: alpha is not positive definite");
    const ComplexMatrix c = llt.matrixL();
    inverse_factor_ = c.inverse();
    if (eigen_decompose(alpha).values.minCoeff() <= 0.0) throw ArgumentError("metric: alpha is not positive definite");
  }
  static Metric scaled_identity(int n, double s) { return Metric(s * ComplexMatrix::Identity(n, n)); }

  int dimension() const { return static_cast<int>(alpha_.rows()); }
  const ComplexMatrix& alpha() const { return alpha_; }

  /// C^{-1} g C^{-*}: Hermitian, with the eigenvalues of alpha^{-1} g.
  ComplexMatrix to_orthonormal(const ComplexMatrix& g) const {
    ComplexMatrix a = inverse_factor_ * g * inverse_factor_.adjoint();
    return 0.5 * (a + a.adjoint());
  }
  /// C^{-*} G C^{-1}, so that Re tr(G to_orthonormal(H)) = Re tr(pull_back(G) H).
  ComplexMatrix pull_back(const ComplexMatrix& g) const {
    ComplexMatrix a = inverse_factor_.adjoint() * g * inverse_factor_;
    return 0.5 * (a + a.adjoint());
  }
  /// tr(alpha^{-1} g).
  double trace(const ComplexMatrix& g) const { return std::real(to_orthonormal(g).trace()); }

 private:
  ComplexMatrix alpha_;
  ComplexMatrix inverse_factor_;
};

/// u_{i jbar} = (1/4)(u_{x_i x_j} + u_{y_i y_j} + i(u_{x_i y_j} - u_{y_i x_j})); in the tube
/// layout only the x_i x_j term survives.
inline MatrixField complex_hessian(const ScalarField& u) {
  const PeriodicGrid& grid = u.grid();
  if (grid.mode() != Mode::complex) throw ModeError("complex_hessian: grid is in real mode");
  const int n = grid.dimension();
  const SecondDerivatives d(u);
  MatrixField out(grid, n);
  const std::complex<double> I(0.0, 1.0);
  for (std::size_t p = 0; p < grid.size(); ++p) {
    ComplexMatrix& h = out[p];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        std::complex<double> v = d(grid.x_axis(i), grid.x_axis(j))[p];
        if (grid.layout() == Layout::full) {
          v += d(grid.y_axis(i), grid.y_axis(j))[p];
          v += I * (d(grid.x_axis(i), grid.y_axis(j))[p] - d(grid.y_axis(i), grid.x_axis(j))[p]);
        }
        h(i, j) = 0.25 * v;
      }
  }
  return out;
}

/// Coordinate Hessian u_{x_i x_j} on a real torus.
inline MatrixField real_hessian(const ScalarField& u) {
  const PeriodicGrid& grid = u.grid();
  if (grid.mode() != Mode::real) throw ModeError("real_hessian: grid is in complex mode");
  const int m = grid.dimension();
  const SecondDerivatives d(u);
  MatrixField out(grid, m);
  for (std::size_t p = 0; p < grid.size(); ++p)
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) out[p](i, j) = d(i, j)[p];
  return out;
}

/// complex_hessian or real_hessian according to the grid mode.
inline MatrixField hessian_field(const ScalarField& u) {
  return u.grid().mode() == Mode::complex ? complex_hessian(u) : real_hessian(u);
}

/// A = alpha^{-1}(chi + Hess u), returned in alpha-orthonormal coordinates.
inline MatrixField endomorphism_field(const Metric& alpha, const MatrixField& chi, const ScalarField& u) {
  if (!chi.grid().same_shape(u.grid())) throw ArgumentError("endomorphism_field: grids differ");
  if (chi.dimension() != alpha.dimension()) throw ArgumentError("endomorphism_field: dimension mismatch");
  const MatrixField hess = hessian_field(u);
  MatrixField out(u.grid(), alpha.dimension());
  for (std::size_t p = 0; p < out.size(); ++p) out[p] = alpha.to_orthonormal(chi[p] + hess[p]);
  return out;
}

/// Pointwise eigenvalues (descending) of alpha^{-1} g.
inline std::vector<Vector> eigenvalue_field(const Metric& alpha, const MatrixField& g) {
  std::vector<Vector> out(g.size());
  for (std::size_t p = 0; p < g.size(); ++p) out[p] = eigen_decompose(alpha.to_orthonormal(g[p])).values;
  return out;
}

/// chi^j ^ alpha^{n-j} / alpha^n = sigma_j(lambda(alpha^{-1} chi)) / C(n, j), pointwise.
inline ScalarField form_ratio(const MatrixField& chi, const Metric& alpha, int j) {
  if (chi.grid().mode() != Mode::complex) throw ModeError("form_ratio: requires a complex torus");
  const int n = alpha.dimension();
  if (j < 0 || j > n) throw ArgumentError("form_ratio: j outside 0..n");
  ScalarField out(chi.grid());
  const auto eig = eigenvalue_field(alpha, chi);
  for (std::size_t p = 0; p < out.size(); ++p) out[p] = sigma(j, as_span(eig[p])) / binomial(n, j);
  return out;
}

/// c = int chi^l ^ alpha^{n-l} / int chi^k ^ alpha^{n-k}.
inline double compute_c(const MatrixField& chi, const Metric& alpha, int l, int k) {
  const int n = alpha.dimension();
  if (!(0 <= l && l < k && k <= n)) throw ArgumentError("compute_c: require l < k (0 <= l < k <= n)");
  const double den = integral(form_ratio(chi, alpha, k));
  if (!(den > 0.0)) throw DegenerateClassError("compute_c: integral of chi^k ^ alpha^(n-k) is not positive");
  return integral(form_ratio(chi, alpha, l)) / den;
}

/// chi = (tr_alpha eta) alpha - (n-1) eta.
inline MatrixField nminus1_background(const MatrixField& eta, const Metric& alpha) {
  const int n = alpha.dimension();
  if (n < 2) throw ArgumentError("nminus1_background: requires n >= 2");
  if (eta.grid().mode() != Mode::complex) throw ModeError("nminus1_background: requires a complex torus");
  MatrixField out(eta.grid(), n);
  for (std::size_t p = 0; p < out.size(); ++p)
    out[p] = alpha.trace(eta[p]) * alpha.alpha() - static_cast<double>(n - 1) * eta[p];
  return out;
}

/// Random trigonometric polynomial with |wavenumber index| <= band on every axis,
/// normalized to sup |phi| = 1.
inline ScalarField random_smooth_field(const PeriodicGrid& grid, std::uint64_t seed, int band = 2) {
  band = std::min(band, grid.points_per_axis() / 2 - 1);
  Rng rng(seed);
  Spectrum spec(grid.size(), 0.0);
  const int N = grid.points_per_axis();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    int norm2 = 0;
    bool inside = true;
    for (int a = 0; a < grid.axes(); ++a) {
      const int j = grid.axis_index(i, a);
      const int m = j <= N / 2 ? j : j - N;
      if (std::abs(m) > band) inside = false;
      norm2 += m * m;
    }
    if (!inside || norm2 == 0) continue;
    const double scale = 1.0 / (1.0 + norm2);
    const double re = rng.normal(), im = rng.normal();
    spec[i] = scale * std::complex<double>(re, im);
  }
  ScalarField phi = inverse_transform(grid, spec);
  const double sup = phi.sup_norm();
  if (!(sup > 0.0)) throw NumericError("random_smooth_field: degenerate sample");
  return (1.0 / sup) * phi;
}

/// sup over the grid of the alpha-operator norm of Hess phi.
inline double hessian_sup_norm(const ScalarField& phi, const Metric& alpha) {
  const MatrixField h = hessian_field(phi);
  double sup = 0.0;
  for (std::size_t p = 0; p < h.size(); ++p)
    sup = std::max(sup, eigen_decompose(alpha.to_orthonormal(h[p])).values.cwiseAbs().maxCoeff());
  return sup;
}

/// Random smooth potential with sup of the alpha-norm of its Hessian equal to 1.
inline ScalarField random_potential(const PeriodicGrid& grid, const Metric& alpha, std::uint64_t seed, int band = 2) {
  ScalarField phi = random_smooth_field(grid, seed, band);
  return (1.0 / hessian_sup_norm(phi, alpha)) * phi;
}

/// s * alpha.
inline MatrixField scaled_background(const PeriodicGrid& grid, const Metric& alpha, double s) {
  return MatrixField::constant(grid, s * alpha.alpha());
}

/// s * alpha + amplitude * Hess phi with phi from random_potential(seed); positive
/// whenever amplitude < s.
inline MatrixField perturbed_background(const PeriodicGrid& grid, const Metric& alpha, double s, double amplitude,
                                        std::uint64_t seed) {
  return scaled_background(grid, alpha, s) + amplitude * hessian_field(random_potential(grid, alpha, seed));
}

}  // namespace fnle
