#pragma once

// F(A) = f(lambda(A)) on Hermitian / symmetric matrices and its first two derivatives,
// assembled in the eigenframe:
//   F^{ij}       = delta_ij f_i
//   F^{ij,rs}    = f_ir delta_ij delta_rs + (f_i - f_j)/(lambda_i - lambda_j) (1 - delta_ij) delta_is delta_jr

#include <cmath>

#include "fnle/eigen_system.hpp"
#include "fnle/operator.hpp"

namespace fnle {

/// f_ij together with the divided differences w_pq = (f_p - f_q) / (lambda_p - lambda_q).
struct SecondDerivativeForm {
  Matrix diag_block;
  Matrix offdiag_weights;
};

/// Builds the second-derivative weights at sorted eigenvalues. When
/// |lambda_p - lambda_q| < 1e-8 (1 + |lambda_p|) the quotient is replaced by its limit
/// f_pp - f_pq (the derivative of f_p - f_q along e_p - e_q).
inline SecondDerivativeForm second_derivative_form(const OperatorJet& jet, const Vector& lambda) {
  const int n = static_cast<int>(lambda.size());
  SecondDerivativeForm form;
  form.diag_block = jet.hess;
  form.offdiag_weights = Matrix::Zero(n, n);
  for (int p = 0; p < n; ++p) {
    for (int q = 0; q < n; ++q) {
      if (p == q) continue;
      const double gap = lambda(p) - lambda(q);
      if (std::abs(gap) < 1e-8 * (1.0 + std::abs(lambda(p))))
        form.offdiag_weights(p, q) = 0.5 * (jet.hess(p, p) + jet.hess(q, q)) - jet.hess(p, q);
      else
        form.offdiag_weights(p, q) = (jet.grad(p) - jet.grad(q)) / gap;
    }
  }
  return form;
}

inline void require_admissible_matrix(const SymmetricOperator& op, const Vector& lambda) {
  const int j = op.cone().first_violation(as_span(lambda));
  if (j != 0)
    throw DomainError(op.name() + ": eigenvalues outside " + op.cone().describe() +
                          " (sigma_" + std::to_string(j) + " <= 0, margin " +
                          std::to_string(op.cone().margin(as_span(lambda))) + ")",
                      j, op.cone().margin(as_span(lambda)));
}

template <class Scalar>
void require_dimension(const SymmetricOperator& op, const MatrixS<Scalar>& a) {
  if (a.rows() != op.dimension())
    throw ArgumentError(op.name() + ": matrix dimension " + std::to_string(a.rows()) + " does not match operator");
}

/// F(A) = f(lambda_1, ..., lambda_n).
template <class Scalar>
double F_value(const SymmetricOperator& op, const MatrixS<Scalar>& a) {
  require_dimension(op, a);
  const auto es = eigen_decompose(a);
  require_admissible_matrix(op, es.values);
  return op.value(as_span(es.values));
}

/// frame * diag(f_1, ..., f_n) * frame^*; dF(A)[H] = Re tr(G H).
template <class Scalar>
MatrixS<Scalar> F_first_derivative(const SymmetricOperator& op, const MatrixS<Scalar>& a) {
  require_dimension(op, a);
  const auto es = eigen_decompose(a);
  require_admissible_matrix(op, es.values);
  const Vector g = op.gradient(as_span(es.values));
  return es.frame * g.asDiagonal() * es.frame.adjoint();
}

/// Re tr(G H) = sum_ij G_ji H_ij, the pairing of a derivative matrix with a direction.
template <class Scalar>
double contract(const MatrixS<Scalar>& g, const MatrixS<Scalar>& h) {
  return std::real((g.transpose().array() * h.array()).sum());
}

/// d^2/dt^2 F(A + t H) at t = 0.
template <class Scalar>
double F_second_form(const SymmetricOperator& op, const MatrixS<Scalar>& a, const MatrixS<Scalar>& h) {
  require_dimension(op, a);
  require_hermitian(h, "F_second_form direction");
  const auto es = eigen_decompose(a);
  require_admissible_matrix(op, es.values);
  const OperatorJet jet = op.jet(as_span(es.values), 2);
  const SecondDerivativeForm form = second_derivative_form(jet, es.values);
  const MatrixS<Scalar> rotated = es.frame.adjoint() * h * es.frame;
  const int n = static_cast<int>(a.rows());
  Vector diag(n);
  for (int i = 0; i < n; ++i) diag(i) = std::real(rotated(i, i));
  double total = diag.dot(form.diag_block * diag);
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q)
      if (p != q) total += form.offdiag_weights(p, q) * std::norm(rotated(p, q));
  return total;
}

/// A - frame diag(0, b_2, ..., b_n) frame^* with b_i = (gap/2)(1 + (i-2)/n), so
/// 0 < b_2 < ... < b_n < 2 b_2 = gap. The top eigenvalue is kept and the rest become simple.
template <class Scalar>
MatrixS<Scalar> spectrum_separator(const MatrixS<Scalar>& a, double gap) {
  if (!(gap > 0.0)) throw ArgumentError("spectrum_separator: gap must be positive");
  const auto es = eigen_decompose(a);
  const int n = static_cast<int>(a.rows());
  Vector b = Vector::Zero(n);
  for (int i = 1; i < n; ++i) b(i) = 0.5 * gap * (1.0 + static_cast<double>(i - 1) / n);
  const MatrixS<Scalar> shift = es.frame * b.asDiagonal() * es.frame.adjoint();
  MatrixS<Scalar> out = a - shift;
  return 0.5 * (out + out.adjoint());
}

}  // namespace fnle
