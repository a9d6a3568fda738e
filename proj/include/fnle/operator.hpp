#pragma once

// Symmetric functions f on admissible cones: evaluation, exact first and second
// derivatives, the one-sided limit f_infinity, and structural bounds.

#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>

#include "fnle/cone.hpp"

namespace fnle {

enum class OperatorKind {
  log_sigma_k,
  monge_ampere,
  hessian_quotient,
  inverse_sigma_k,
  blended_quotient,
  composed_with_t,
};

inline std::string to_string(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::log_sigma_k: return "log_sigma_k";
    case OperatorKind::monge_ampere: return "monge_ampere";
    case OperatorKind::hessian_quotient: return "hessian_quotient";
    case OperatorKind::inverse_sigma_k: return "inverse_sigma_k";
    case OperatorKind::blended_quotient: return "blended_quotient";
    case OperatorKind::composed_with_t: return "composed_with_T";
  }
  return "unknown";
}

struct OperatorJet {
  double value = 0.0;
  Vector grad;  // f_i
  Matrix hess;  // f_ij
};

class SymmetricOperator {
 public:
  /// f = log sigma_k on Gamma_k.
  static SymmetricOperator log_sigma_k(int n, int k) {
    return SymmetricOperator(OperatorKind::log_sigma_k, ConeSpec::gamma_k(n, k), 0, k, 1.0);
  }

  /// f = log(lambda_1 ... lambda_n) on the positive orthant.
  static SymmetricOperator monge_ampere(int n) {
    return SymmetricOperator(OperatorKind::monge_ampere, ConeSpec::positive_orthant(n), 0, n, 1.0);
  }

  /// f = -(C(n,l)^{-1} sigma_l) / (C(n,k)^{-1} sigma_k) on Gamma_k, 0 <= l < k <= n.
  static SymmetricOperator hessian_quotient(int n, int l, int k) {
    check_quotient(n, l, k);
    return SymmetricOperator(OperatorKind::hessian_quotient, ConeSpec::gamma_k(n, k), l, k, 1.0);
  }

  /// f = (sigma_n / sigma_k)^{1/(n-k)} on the positive orthant, 0 <= k < n.
  static SymmetricOperator inverse_sigma_k(int n, int k) {
    if (k < 0 || k >= n) throw ArgumentError("inverse_sigma_k: require 0 <= k < n");
    return SymmetricOperator(OperatorKind::inverse_sigma_k, ConeSpec::positive_orthant(n), 0, k, 1.0);
  }

  /// f_t = -t (C(n,l)^{-1} sigma_l)/(C(n,k)^{-1} sigma_k) - (1-t) / (C(n,k)^{-1} sigma_k) on Gamma_k.
  static SymmetricOperator blended_quotient(int n, int l, int k, double t) {
    check_quotient(n, l, k);
    if (!(t >= 0.0 && t <= 1.0)) throw ArgumentError("blended_quotient: t must lie in [0, 1]");
    return SymmetricOperator(OperatorKind::blended_quotient, ConeSpec::gamma_k(n, k), l, k, t);
  }

  /// f(lambda) = inner(T(lambda)) on T^{-1}(inner cone).
  static SymmetricOperator composed_with_t(const SymmetricOperator& inner) {
    if (inner.kind_ == OperatorKind::composed_with_t)
      throw ArgumentError("composed_with_T: inner operator is already composed");
    SymmetricOperator op(OperatorKind::composed_with_t, ConeSpec::preimage_under_t(inner.cone_), inner.l_,
                         inner.k_, inner.t_);
    op.inner_ = std::make_shared<const SymmetricOperator>(inner);
    return op;
  }

  OperatorKind kind() const { return kind_; }
  const ConeSpec& cone() const { return cone_; }
  int dimension() const { return cone_.dimension(); }
  int k() const { return k_; }
  int l() const { return l_; }
  double t() const { return t_; }
  const SymmetricOperator* inner() const { return inner_.get(); }

  std::string name() const {
    if (inner_) return "composed_with_T(" + inner_->name() + ")";
    std::string s = to_string(kind_);
    switch (kind_) {
      case OperatorKind::log_sigma_k:
      case OperatorKind::inverse_sigma_k: return s + "(k=" + std::to_string(k_) + ")";
      case OperatorKind::hessian_quotient:
        return s + "(l=" + std::to_string(l_) + ",k=" + std::to_string(k_) + ")";
      case OperatorKind::blended_quotient:
        return s + "(l=" + std::to_string(l_) + ",k=" + std::to_string(k_) + ",t=" + std::to_string(t_) + ")";
      default: return s + "(n=" + std::to_string(dimension()) + ")";
    }
  }

  /// sup over the cone boundary of f (limsup), as an extended real.
  double sup_boundary() const {
    switch (base_kind()) {
      case OperatorKind::inverse_sigma_k: return 0.0;
      default: return -std::numeric_limits<double>::infinity();
    }
  }

  /// sup of f over the cone, as an extended real.
  double sup_interior() const {
    switch (base_kind()) {
      case OperatorKind::hessian_quotient:
      case OperatorKind::blended_quotient: return 0.0;
      default: return std::numeric_limits<double>::infinity();
    }
  }

  /// log C(n,k) for log sigma_k type operators, so that f - offset is the log of the
  /// form ratio chi^k ^ alpha^{n-k} / alpha^n. Zero for the other kinds.
  double log_form_offset() const {
    switch (base_kind()) {
      case OperatorKind::log_sigma_k:
      case OperatorKind::monge_ampere: return std::log(binomial(dimension(), k_));
      default: return 0.0;
    }
  }

  /// Domain check; throws DomainError naming the violated sigma_j.
  void require_admissible(std::span<const double> lambda) const {
    const int j = cone_.first_violation(lambda);
    if (j != 0)
      throw DomainError(name() + ": point outside " + cone_.describe() + " (sigma_" + std::to_string(j) +
                            " <= 0)",
                        j, cone_.margin(lambda));
  }

  double value(std::span<const double> lambda) const { return jet(lambda, 0).value; }
  Vector gradient(std::span<const double> lambda) const { return jet(lambda, 1).grad; }
  Matrix hessian(std::span<const double> lambda) const { return jet(lambda, 2).hess; }

  OperatorJet jet(std::span<const double> lambda, int order = 2) const {
    require_admissible(lambda);
    if (!inner_) return base_jet(lambda, order);
    const Vector x = t_map(lambda);
    OperatorJet inner_jet = inner_->base_jet(as_span(x), order);
    const Matrix m = t_matrix(dimension());
    OperatorJet out;
    out.value = inner_jet.value;
    if (order >= 1) out.grad = m * inner_jet.grad;
    if (order >= 2) out.hess = m * inner_jet.hess * m;
    return out;
  }

  /// lim_{s -> inf} f(mu', s); +-inf when the limit is infinite.
  double limit_at_infinity(std::span<const double> mu_prime) const {
    const int n = dimension();
    if (static_cast<int>(mu_prime.size()) != n - 1)
      throw ArgumentError("f_infinity: expected " + std::to_string(n - 1) + " entries");
    if (!cone_.contains_projection(mu_prime))
      throw DomainError(name() + ": (n-1)-tuple outside the projected cone", 0, 0.0);
    Vector base = Vector::Zero(n);
    Vector dir = Vector::Zero(n);
    for (int i = 0; i < n - 1; ++i) base(i) = mu_prime[i];
    dir(n - 1) = 1.0;
    if (inner_) {
      base = t_map(as_span(base));
      dir = t_map(as_span(dir));
    }
    return base_limit_along(as_span(base), as_span(dir));
  }

 private:
  SymmetricOperator(OperatorKind kind, ConeSpec cone, int l, int k, double t)
      : kind_(kind), cone_(cone), l_(l), k_(k), t_(t) {}

  static void check_quotient(int n, int l, int k) {
    if (!(0 <= l && l < k && k <= n)) throw ArgumentError("hessian quotient: require l < k (0 <= l < k <= n)");
  }

  OperatorKind base_kind() const { return inner_ ? inner_->kind_ : kind_; }

  // Coefficient pair for f = -(w_l sigma_l + w_0) / sigma_k.
  double quotient_weight_l() const {
    const int n = dimension();
    return t_ * binomial(n, k_) / binomial(n, l_);
  }
  double quotient_weight_0() const { return (1.0 - t_) * binomial(dimension(), k_); }

  OperatorJet base_jet(std::span<const double> x, int order) const {
    const int n = static_cast<int>(x.size());
    OperatorJet out;
    switch (kind_) {
      case OperatorKind::log_sigma_k:
      case OperatorKind::monge_ampere: {
        const SigmaJet d = sigma_jet(k_, x, order);
        out.value = std::log(d.value);
        if (order >= 1) out.grad = d.grad / d.value;
        if (order >= 2) out.hess = d.hess / d.value - out.grad * out.grad.transpose();
        return out;
      }
      case OperatorKind::hessian_quotient:
      case OperatorKind::blended_quotient: {
        SigmaJet num = sigma_jet(l_, x, order);
        const double wl = quotient_weight_l();
        num.value = wl * num.value + quotient_weight_0();
        if (order >= 1) num.grad *= wl;
        if (order >= 2) num.hess *= wl;
        const SigmaJet den = sigma_jet(k_, x, order);
        out = quotient_jet(num, den, order);
        out.value = -out.value;
        if (order >= 1) out.grad = -out.grad;
        if (order >= 2) out.hess = -out.hess;
        return out;
      }
      case OperatorKind::inverse_sigma_k: {
        const OperatorJet g = quotient_jet(sigma_jet(n, x, order), sigma_jet(k_, x, order), order);
        const double p = 1.0 / (n - k_);
        out.value = std::pow(g.value, p);
        if (order >= 1) out.grad = p * std::pow(g.value, p - 1.0) * g.grad;
        if (order >= 2)
          out.hess = p * std::pow(g.value, p - 1.0) * g.hess +
                     p * (p - 1.0) * std::pow(g.value, p - 2.0) * g.grad * g.grad.transpose();
        return out;
      }
      case OperatorKind::composed_with_t: break;
    }
    throw ArgumentError("base_jet: composed operator has no base jet");
  }

  static OperatorJet quotient_jet(const SigmaJet& num, const SigmaJet& den, int order) {
    OperatorJet q;
    const double d = den.value;
    q.value = num.value / d;
    if (order >= 1) q.grad = num.grad / d - num.value * den.grad / (d * d);
    if (order >= 2) {
      q.hess = num.hess / d - (num.grad * den.grad.transpose() + den.grad * num.grad.transpose()) / (d * d) -
               num.value * den.hess / (d * d) +
               2.0 * num.value * den.grad * den.grad.transpose() / (d * d * d);
    }
    return q;
  }

  // Limit of p(s)/q(s) as s -> inf for polynomials eventually positive in q.
  static double ratio_limit(const Poly& p, const Poly& q) {
    const LeadingTerm a = leading_term(p);
    const LeadingTerm b = leading_term(q);
    if (a.degree < 0 || a.degree < b.degree) return 0.0;
    if (a.degree == b.degree) return a.coefficient / b.coefficient;
    const double sign = (a.coefficient > 0) == (b.coefficient > 0) ? 1.0 : -1.0;
    return sign * std::numeric_limits<double>::infinity();
  }

  double base_limit_along(std::span<const double> base, std::span<const double> dir) const {
    const SymmetricOperator& b = inner_ ? *inner_ : *this;
    const int n = b.dimension();
    const auto polys = sigma_polynomials(base, dir, n);
    switch (b.kind_) {
      case OperatorKind::log_sigma_k:
      case OperatorKind::monge_ampere: {
        const LeadingTerm lead = leading_term(polys[b.k_]);
        if (lead.degree >= 1) return std::numeric_limits<double>::infinity();
        return std::log(lead.coefficient);
      }
      case OperatorKind::hessian_quotient:
      case OperatorKind::blended_quotient: {
        Poly num = polys[b.l_];
        for (double& c : num) c *= b.quotient_weight_l();
        num[0] += b.quotient_weight_0();
        return -ratio_limit(num, polys[b.k_]);
      }
      case OperatorKind::inverse_sigma_k: {
        const double g = ratio_limit(polys[n], polys[b.k_]);
        return std::pow(g, 1.0 / (n - b.k_));
      }
      case OperatorKind::composed_with_t: break;
    }
    throw ArgumentError("limit: unsupported operator");
  }

  OperatorKind kind_;
  ConeSpec cone_;
  int l_ = 0;
  int k_ = 0;
  double t_ = 1.0;
  std::shared_ptr<const SymmetricOperator> inner_;
};

inline double f_eval(const SymmetricOperator& op, std::span<const double> lambda) { return op.value(lambda); }
inline Vector f_grad(const SymmetricOperator& op, std::span<const double> lambda) { return op.gradient(lambda); }
inline Matrix f_hess(const SymmetricOperator& op, std::span<const double> lambda) { return op.hessian(lambda); }
inline double f_infinity(const SymmetricOperator& op, std::span<const double> mu_prime) {
  return op.limit_at_infinity(mu_prime);
}

/// Builds an operator from its configuration name: "log_sigma_k", "monge_ampere",
/// "hessian_quotient", "inverse_sigma_k", "composed_with_T" (the last wraps `inner`).
inline SymmetricOperator operator_from_name(const std::string& name, int n, int k, int l,
                                            const std::string& inner = "monge_ampere") {
  if (name == "log_sigma_k") return SymmetricOperator::log_sigma_k(n, k);
  if (name == "monge_ampere") return SymmetricOperator::monge_ampere(n);
  if (name == "hessian_quotient") return SymmetricOperator::hessian_quotient(n, l, k);
  if (name == "inverse_sigma_k") return SymmetricOperator::inverse_sigma_k(n, k);
  if (name == "composed_with_T") {
    if (inner == "composed_with_T") throw ArgumentError("composed_with_T: inner cannot be composed");
    return SymmetricOperator::composed_with_t(operator_from_name(inner, n, k, l));
  }
  throw ArgumentError("unknown operator kind '" + name + "'");
}

}  // namespace fnle
