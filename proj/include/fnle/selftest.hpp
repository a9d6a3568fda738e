#pragma once

// Property checks on operators and the spectral machinery, shared by the CLI
// `selftest` subcommand and `solve --check-only`.

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "fnle/matrix_calculus.hpp"
#include "fnle/random.hpp"
#include "fnle/torus.hpp"

namespace fnle {

struct PropertyCheck {
  std::string name;
  bool passed = true;
  double worst = 0.0;  // largest observed violation measure
  int samples = 0;
};

struct PropertySuite {
  std::string subject;
  std::vector<PropertyCheck> checks;

  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const PropertyCheck& c) { return c.passed; });
  }
};

inline nlohmann::json to_json(const PropertySuite& s) {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : s.checks)
    checks.push_back({{"name", c.name}, {"passed", c.passed}, {"worst", c.worst}, {"samples", c.samples}});
  return {{"subject", s.subject}, {"passed", s.passed()}, {"checks", checks}};
}

/// Rejection samples of lambda in the operator's cone with cone margin above `margin`.
inline std::vector<Vector> random_admissible(const SymmetricOperator& op, int count, Rng& rng, double margin = 1e-3) {
  const int n = op.dimension();
  std::vector<Vector> out;
  for (int attempt = 0; static_cast<int>(out.size()) < count; ++attempt) {
    Vector lambda(n);
    for (int i = 0; i < n; ++i) lambda(i) = std::exp(rng.uniform(-1.5, 1.5));
    if (attempt % 2 == 1) lambda(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)))) *= -rng.uniform(0.0, 1.0);
    if (attempt > 100 * count) lambda = Vector::Constant(n, 1.0) + 0.1 * lambda.cwiseAbs();
    if (op.cone().contains(as_span(lambda)) && op.cone().margin(as_span(lambda)) > margin) out.push_back(lambda);
  }
  return out;
}

/// Haar-ish random unitary from the QR factor of a Gaussian matrix.
inline ComplexMatrix random_unitary(int n, Rng& rng) {
  ComplexMatrix z(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) z(i, j) = {rng.normal(), rng.normal()};
  Eigen::HouseholderQR<ComplexMatrix> qr(z);
  return qr.householderQ() * ComplexMatrix::Identity(n, n);
}

inline ComplexMatrix random_hermitian(int n, Rng& rng) {
  ComplexMatrix z(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) z(i, j) = {rng.normal(), rng.normal()};
  return 0.5 * (z + z.adjoint());
}

/// Gradient positivity, concavity, symmetry and finite-difference agreement of the
/// first and second derivatives, on eigenvalue samples and on Hermitian matrices.
inline PropertySuite operator_property_suite(const SymmetricOperator& op, int samples, std::uint64_t seed) {
  Rng rng(seed);
  const int n = op.dimension();
  const auto lambdas = random_admissible(op, samples, rng);
  PropertyCheck positive{"gradient_positive"}, concave{"concave"}, symmetric{"symmetric"}, grad_fd{"gradient_fd"},
      hess_fd{"hessian_fd"}, matrix_fd{"matrix_derivative_fd"}, matrix_concave{"matrix_second_form_nonpositive"};

  for (const Vector& lambda : lambdas) {
    const OperatorJet jet = op.jet(as_span(lambda), 2);
    const double scale = lambda.cwiseAbs().maxCoeff();

    positive.worst = std::max(positive.worst, -jet.grad.minCoeff());
    if (!(jet.grad.minCoeff() > 0.0)) positive.passed = false;

    Eigen::SelfAdjointEigenSolver<Matrix> es(jet.hess);
    const double top = es.eigenvalues().maxCoeff() / (1.0 + jet.hess.cwiseAbs().maxCoeff());
    concave.worst = std::max(concave.worst, top);
    if (top > 1e-9) concave.passed = false;

    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = n - 1; i > 0; --i) std::swap(perm[static_cast<std::size_t>(i)], perm[rng.below(static_cast<std::uint64_t>(i + 1))]);
    Vector permuted(n);
    for (int i = 0; i < n; ++i) permuted(i) = lambda(perm[static_cast<std::size_t>(i)]);
    const double sym = std::abs(op.value(as_span(permuted)) - jet.value) / (1.0 + std::abs(jet.value));
    symmetric.worst = std::max(symmetric.worst, sym);
    if (sym > 1e-12) symmetric.passed = false;

    for (int i = 0; i < n; ++i) {
      const double h = 1e-4 * std::min(scale, op.cone().margin(as_span(lambda)));
      auto at = [&](double s) {
        Vector x = lambda;
        x(i) += s * h;
        return x;
      };
      if (!op.cone().contains(as_span(at(-2.0)))) continue;
      auto value_at = [&](double t) { return op.value(as_span(at(t))); };
      const double fd = (8.0 * (value_at(1.0) - value_at(-1.0)) - (value_at(2.0) - value_at(-2.0))) / (12.0 * h);
      const double err = std::abs(fd - jet.grad(i)) / (std::abs(jet.grad(i)) + 1e-8);
      grad_fd.worst = std::max(grad_fd.worst, err);
      if (err > 1e-5) grad_fd.passed = false;
      auto grad_at = [&](double t) { return op.gradient(as_span(at(t))); };
      const Vector gfd = (8.0 * (grad_at(1.0) - grad_at(-1.0)) - (grad_at(2.0) - grad_at(-2.0))) / (12.0 * h);
      const double herr = (gfd - jet.hess.col(i)).norm() / (jet.hess.norm() + 1e-8);
      hess_fd.worst = std::max(hess_fd.worst, herr);
      if (herr > 1e-5) hess_fd.passed = false;
    }

    const ComplexMatrix u = random_unitary(n, rng);
    const ComplexMatrix a = u * lambda.cast<std::complex<double>>().asDiagonal() * u.adjoint();
    const ComplexMatrix dir = random_hermitian(n, rng);
    const double h = 1e-3 * std::min(scale, op.cone().margin(as_span(lambda))) / (1.0 + dir.norm());
    if (op.cone().contains(as_span(eigen_decompose(ComplexMatrix(a - 2.0 * h * dir)).values))) {
      auto F = [&](double s) { return F_value(op, ComplexMatrix(a + s * h * dir)); };
      const double fd = (8.0 * (F(1.0) - F(-1.0)) - (F(2.0) - F(-2.0))) / (12.0 * h);
      const double exact = contract(F_first_derivative(op, a), dir);
      const double err = std::abs(fd - exact) / (std::abs(exact) + 1e-6);
      matrix_fd.worst = std::max(matrix_fd.worst, err);
      if (err > 1e-5) matrix_fd.passed = false;
    }
    const double second = F_second_form(op, a, dir) / (1.0 + dir.squaredNorm());
    matrix_concave.worst = std::max(matrix_concave.worst, second);
    if (second > 1e-9) matrix_concave.passed = false;
  }
  for (PropertyCheck* c : {&positive, &concave, &symmetric, &grad_fd, &hess_fd, &matrix_fd, &matrix_concave})
    c->samples = static_cast<int>(lambdas.size());
  return {op.name(), {positive, concave, symmetric, grad_fd, hess_fd, matrix_fd, matrix_concave}};
}

/// Spectral second derivatives of a single Fourier mode against the closed form.
inline PropertySuite spectral_property_suite() {
  PropertyCheck exact{"spectral_second_derivative_exact"};
  const PeriodicGrid grid = PeriodicGrid::real(2, 16);
  const double k = 2.0 * std::numbers::pi;
  const ScalarField f = ScalarField::from_function(grid, [&](std::span<const double> x) {
    return std::sin(k * x[0]) * std::cos(2.0 * k * x[1]);
  });
  const ScalarField dxy = spectral_derivative(f, 0, 1);
  const ScalarField ref = ScalarField::from_function(grid, [&](std::span<const double> x) {
    return -2.0 * k * k * std::cos(k * x[0]) * std::sin(2.0 * k * x[1]);
  });
  exact.worst = (dxy - ref).sup_norm();
  exact.passed = exact.worst < 1e-9;
  exact.samples = static_cast<int>(grid.size());
  return {"spectral", {exact}};
}

/// The operator catalogue used by the selftest subcommand.
inline std::vector<SymmetricOperator> selftest_operators() {
  std::vector<SymmetricOperator> ops;
  for (int n : {2, 3}) {
    ops.push_back(SymmetricOperator::monge_ampere(n));
    for (int k = 1; k <= n; ++k) ops.push_back(SymmetricOperator::log_sigma_k(n, k));
    for (int k = 0; k < n; ++k) ops.push_back(SymmetricOperator::inverse_sigma_k(n, k));
    for (int k = 1; k <= n; ++k)
      for (int l = 0; l < k; ++l) ops.push_back(SymmetricOperator::hessian_quotient(n, l, k));
    ops.push_back(SymmetricOperator::composed_with_t(SymmetricOperator::monge_ampere(n)));
  }
  return ops;
}

}  // namespace fnle
