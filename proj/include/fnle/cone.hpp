#pragma once

// Admissible cones: Gamma_k = {sigma_1, ..., sigma_k > 0} and preimages T^{-1}(Gamma_k).

#include <algorithm>
#include <limits>
#include <span>
#include <string>

#include "fnle/symmetric.hpp"

namespace fnle {

class ConeSpec {
 public:
  /// Gamma_k in R^n, 1 <= k <= n.
  static ConeSpec gamma_k(int n, int k) {
    if (n < 1) throw ArgumentError("ConeSpec: dimension must be positive");
    if (k < 1 || k > n)
      throw ArgumentError("ConeSpec: k=" + std::to_string(k) + " outside 1.." + std::to_string(n));
    return ConeSpec(n, k, false);
  }

  static ConeSpec positive_orthant(int n) { return gamma_k(n, n); }

  /// T^{-1}(inner); inner must be a Gamma_k cone.
  static ConeSpec preimage_under_t(const ConeSpec& inner) {
    if (inner.through_t_) throw ArgumentError("ConeSpec: nested T-preimages are not supported");
    if (inner.n_ < 2) throw ArgumentError("ConeSpec: T requires n >= 2");
    return ConeSpec(inner.n_, inner.k_, true);
  }

  int dimension() const { return n_; }
  int k() const { return k_; }
  bool through_t() const { return through_t_; }
  bool is_positive_orthant() const { return !through_t_ && k_ == n_; }
  ConeSpec inner() const { return ConeSpec(n_, k_, false); }

  /// Coordinates on which the sigma_j tests act: lambda itself or T(lambda).
  Vector test_coordinates(std::span<const double> lambda) const {
    check_size(lambda);
    if (through_t_) return t_map(lambda);
    return Eigen::Map<const Vector>(lambda.data(), n_);
  }

  /// First j in 1..k with sigma_j <= 0, or 0 if lambda is inside (strict, no tolerance).
  int first_violation(std::span<const double> lambda) const {
    const Vector x = test_coordinates(lambda);
    for (int i = 0; i < n_; ++i)
      if (!std::isfinite(x(i))) return 1;
    const auto e = elementary_symmetric(as_span(x), k_);
    for (int j = 1; j <= k_; ++j)
      if (!(e[j] > 0.0)) return j;
    return 0;
  }

  bool contains(std::span<const double> lambda) const { return first_violation(lambda) == 0; }

  /// min_j sigma_j over j = 1..k; positive exactly on the cone.
  double margin(std::span<const double> lambda) const {
    const Vector x = test_coordinates(lambda);
    const auto e = elementary_symmetric(as_span(x), k_);
    double m = std::numeric_limits<double>::infinity();
    for (int j = 1; j <= k_; ++j) m = std::min(m, e[j]);
    return m;
  }

  /// Whether (mu', s) lies in the cone for all large s (the projection Gamma_infinity).
  bool contains_projection(std::span<const double> mu_prime) const {
    if (static_cast<int>(mu_prime.size()) != n_ - 1)
      throw ArgumentError("cone projection: expected " + std::to_string(n_ - 1) + " entries");
    Vector base = Vector::Zero(n_);
    Vector dir = Vector::Zero(n_);
    for (int i = 0; i < n_ - 1; ++i) base(i) = mu_prime[i];
    dir(n_ - 1) = 1.0;
    if (through_t_) {
      base = t_map(as_span(base));
      dir = t_map(as_span(dir));
    }
    const auto polys = sigma_polynomials(as_span(base), as_span(dir), k_);
    for (int j = 1; j <= k_; ++j)
      if (!eventually_positive(polys[j])) return false;
    return true;
  }

  std::string describe() const {
    std::string g = "Gamma_" + std::to_string(k_) + "(n=" + std::to_string(n_) + ")";
    return through_t_ ? "T^-1(" + g + ")" : g;
  }

  bool operator==(const ConeSpec&) const = default;

 private:
  ConeSpec(int n, int k, bool through_t) : n_(n), k_(k), through_t_(through_t) {}

  void check_size(std::span<const double> lambda) const {
    if (static_cast<int>(lambda.size()) != n_)
      throw ArgumentError("cone: expected vector of length " + std::to_string(n_) + ", got " +
                          std::to_string(lambda.size()));
  }

  int n_;
  int k_;
  bool through_t_;
};

inline bool cone_contains(const ConeSpec& cone, std::span<const double> lambda) { return cone.contains(lambda); }

/// mu is in Gamma-tilde when every (n-1)-subtuple lies in the projection Gamma_infinity,
/// i.e. mu + t e_i is admissible for all i once t is large.
inline bool in_gamma_tilde(const ConeSpec& cone, std::span<const double> mu) {
  const int n = cone.dimension();
  if (static_cast<int>(mu.size()) != n) throw ArgumentError("in_gamma_tilde: size mismatch");
  std::vector<double> sub(static_cast<std::size_t>(n - 1));
  for (int drop = 0; drop < n; ++drop) {
    int w = 0;
    for (int i = 0; i < n; ++i)
      if (i != drop) sub[w++] = mu[i];
    if (!cone.contains_projection(sub)) return false;
  }
  return true;
}

/// Gamma' = {x' in R^{n-1} : (x', 0) in Gamma}.
/// For the positive orthant that set is empty; by convention Gamma_{n-1} is used and
/// `orthant_convention` is set.
class ProjectedCone {
 public:
  explicit ProjectedCone(ConeSpec parent) : parent_(parent) {
    if (parent.dimension() < 2) throw ArgumentError("project_cone: requires n >= 2");
    orthant_convention_ = parent.is_positive_orthant();
  }

  int dimension() const { return parent_.dimension() - 1; }
  bool orthant_convention() const { return orthant_convention_; }
  const ConeSpec& parent() const { return parent_; }

  bool contains(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != dimension()) throw ArgumentError("ProjectedCone: size mismatch");
    if (orthant_convention_) return ConeSpec::positive_orthant(dimension()).contains(x);
    std::vector<double> full(x.begin(), x.end());
    full.push_back(0.0);
    return parent_.contains(full);
  }

 private:
  ConeSpec parent_;
  bool orthant_convention_ = false;
};

inline ProjectedCone project_cone(const ConeSpec& cone) { return ProjectedCone(cone); }

}  // namespace fnle
