#pragma once

// C-subsolution checks: boundedness of (mu + Gamma_n) cut with the level set via f_infinity,
// field certification with (delta, R), the two-branch dichotomy and an empirical kappa.

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "fnle/eigen_system.hpp"
#include "fnle/level_set.hpp"

namespace fnle {

/// Removes entry `drop` from mu.
inline Vector drop_entry(const Vector& mu, int drop) {
  const int n = static_cast<int>(mu.size());
  Vector out(n - 1);
  for (int i = 0, w = 0; i < n; ++i)
    if (i != drop) out(w++) = mu(i);
  return out;
}

/// Index of the first (n-1)-subtuple (by dropped entry) with f_infinity <= sigma, if any.
/// Throws DomainError when mu is not in Gamma-tilde.
inline std::optional<int> subsolution_failure(const SymmetricOperator& op, const Vector& mu, double sigma) {
  const int n = op.dimension();
  if (mu.size() != n) throw ArgumentError("subsolution: mu has wrong length");
  if (n < 2) throw ArgumentError("subsolution: requires n >= 2");
  if (!in_gamma_tilde(op.cone(), as_span(mu)))
    throw DomainError("subsolution: mu is not in Gamma-tilde for " + op.name(), 0, op.cone().margin(as_span(mu)));
  for (int drop = n - 1; drop >= 0; --drop) {
    const Vector sub = drop_entry(mu, drop);
    if (!(op.limit_at_infinity(as_span(sub)) > sigma)) return drop;
  }
  return std::nullopt;
}

/// True iff f_infinity(mu') > sigma for every (n-1)-subtuple mu' of mu.
inline bool is_c_subsolution_point(const SymmetricOperator& op, const Vector& mu, double sigma) {
  return !subsolution_failure(op, mu, sigma).has_value();
}

/// Smallest s in [0, s_max] with origin + s*dir admissible and f >= sigma, found by
/// doubling then bisection; nullopt if the ray never reaches the level.
/// dir must have non-negative entries so the predicate is monotone in s.
inline std::optional<double> ray_to_level(const SymmetricOperator& op, double sigma, const Vector& origin,
                                          const Vector& dir, double s_max = 1e12, int iterations = 200) {
  if (detail::above_level(op, origin, sigma)) return 0.0;
  double lo = 0.0, hi = 1.0;
  while (!detail::above_level(op, origin + hi * dir, sigma)) {
    lo = hi;
    hi *= 2.0;
    if (hi > s_max) return std::nullopt;
  }
  for (int it = 0; it < iterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (detail::above_level(op, origin + mid * dir, sigma))
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

/// Largest |lambda| among level-set points reached from `mu` along the coordinate axes,
/// the diagonal and `extra_rays` random positive directions.
inline double level_intersection_radius(const SymmetricOperator& op, const Vector& mu, double sigma,
                                        int extra_rays = 32, std::uint64_t seed = 7) {
  const int n = op.dimension();
  std::vector<Vector> dirs;
  for (int i = 0; i < n; ++i) dirs.push_back(Vector::Unit(n, i));
  dirs.push_back(Vector::Ones(n) / std::sqrt(static_cast<double>(n)));
  Rng rng(seed);
  for (int r = 0; r < extra_rays; ++r) {
    Vector d(n);
    for (int i = 0; i < n; ++i) d(i) = -std::log(1.0 - rng.uniform());
    d /= d.norm();
    dirs.push_back(d);
  }
  double radius = 0.0;
  for (const Vector& d : dirs) {
    const auto s = ray_to_level(op, sigma, mu, d);
    if (!s) throw NumericError("subsolution: ray from mu does not reach the level set");
    radius = std::max(radius, (mu + *s * d).norm());
  }
  return radius;
}

struct SubsolutionWitness {
  int point = -1;     // grid index
  int subtuple = -1;  // dropped eigenvalue index, -1 when mu left Gamma-tilde
  double delta = 0.0;
  Vector mu;
  double sigma = 0.0;
};

struct SubsolutionCertificate {
  bool certified = false;
  double delta = 0.0;
  double R = 0.0;
  double kappa = 0.0;
  int kappa_samples = 0;
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  std::optional<SubsolutionWitness> witness;
};

inline nlohmann::json to_json(const SubsolutionCertificate& cert) {
  nlohmann::json j;
  j["verdict"] = cert.certified ? "certified" : "refuted";
  j["delta"] = cert.delta;
  j["R"] = cert.R;
  j["kappa"] = cert.kappa;
  j["kappa_samples"] = cert.kappa_samples;
  j["sigma_range"] = {cert.sigma_min, cert.sigma_max};
  if (cert.witness) {
    const auto& w = *cert.witness;
    j["witness"] = {{"point", w.point},
                    {"subtuple", w.subtuple},
                    {"delta", w.delta},
                    {"mu", std::vector<double>(w.mu.data(), w.mu.data() + w.mu.size())},
                    {"sigma", w.sigma}};
  } else {
    j["witness"] = nullptr;
  }
  return j;
}

/// Certifies the C-subsolution property over a field. `eigenvalues[x]` holds
/// lambda(B(x)) and `h[x]` the level at x. The largest delta in `delta_grid` for which
/// every point passes is returned; R is the sup of level-intersection radii.
inline SubsolutionCertificate certify_field(const SymmetricOperator& op, const std::vector<Vector>& eigenvalues,
                                            const std::vector<double>& h, std::vector<double> delta_grid) {
  if (delta_grid.empty()) throw ArgumentError("certify_field: empty delta grid");
  if (eigenvalues.size() != h.size() || h.empty()) throw ArgumentError("certify_field: field sizes differ");
  std::sort(delta_grid.begin(), delta_grid.end(), std::greater<>());
  SubsolutionCertificate cert;
  cert.sigma_min = *std::min_element(h.begin(), h.end());
  cert.sigma_max = *std::max_element(h.begin(), h.end());
  const int n = op.dimension();

  for (double delta : delta_grid) {
    if (!(delta > 0.0)) throw ArgumentError("certify_field: delta must be positive");
    std::optional<SubsolutionWitness> failure;
    bool domain_exit = false;
    for (std::size_t x = 0; x < h.size() && !failure; ++x) {
      const Vector mu = eigenvalues[x] - 2.0 * delta * Vector::Ones(n);
      try {
        if (auto bad = subsolution_failure(op, mu, h[x])) failure = SubsolutionWitness{static_cast<int>(x), *bad, delta, mu, h[x]};
      } catch (const DomainError&) {
        failure = SubsolutionWitness{static_cast<int>(x), -1, delta, mu, h[x]};
        domain_exit = true;
      }
    }
    if (!failure) {
      cert.certified = true;
      cert.delta = delta;
      cert.witness.reset();
      double radius = 0.0;
      for (std::size_t x = 0; x < h.size(); ++x)
        radius = std::max(radius, level_intersection_radius(op, eigenvalues[x] - 2.0 * delta * Vector::Ones(n), h[x]));
      cert.R = radius;
      return cert;
    }
    // A genuine f_infinity failure outranks a delta that merely left Gamma-tilde.
    if (!cert.witness || (cert.witness->subtuple < 0 && !domain_exit)) cert.witness = failure;
  }
  return cert;
}

enum class DichotomyBranch { gradient_pairing, all_large, violation };

inline std::string to_string(DichotomyBranch b) {
  switch (b) {
    case DichotomyBranch::gradient_pairing: return "gradient_pairing";
    case DichotomyBranch::all_large: return "all_large";
    case DichotomyBranch::violation: return "violation";
  }
  return "unknown";
}

/// sum_i f_i(lambda)(mu_i - lambda_i) / F(lambda) and min_i f_i(lambda) / F(lambda).
inline std::pair<double, double> dichotomy_ratios(const SymmetricOperator& op, const Vector& mu,
                                                  const Vector& lambda) {
  const Vector g = op.gradient(as_span(lambda));
  const double trace = g.sum();
  return {g.dot(mu - lambda) / trace, g.minCoeff() / trace};
}

/// Which branch of the dichotomy holds at lambda on the sigma level set (pairing first).
inline DichotomyBranch dichotomy_check(const SymmetricOperator& op, const Vector& mu, double sigma,
                                       const Vector& lambda, double kappa) {
  if (mu.size() != op.dimension() || lambda.size() != op.dimension())
    throw ArgumentError("dichotomy_check: size mismatch");
  if (!op.cone().contains(as_span(lambda))) throw ArgumentError("dichotomy_check: lambda not admissible");
  const double value = op.value(as_span(lambda));
  if (!(std::abs(value - sigma) < 1e-8))
    throw ArgumentError("dichotomy_check: lambda is not on the level set (f - sigma = " +
                        std::to_string(value - sigma) + ")");
  const auto [pairing, smallest] = dichotomy_ratios(op, mu, lambda);
  if (pairing > kappa) return DichotomyBranch::gradient_pairing;
  if (smallest > kappa) return DichotomyBranch::all_large;
  return DichotomyBranch::violation;
}

/// Level-set samples with |lambda| > R: perpendicular offsets of length log-uniform in
/// [1e-3 R, 100 R] around the diagonal, bisected onto the level, keeping |lambda| > R.
inline std::vector<Vector> sample_far_level_set(const SymmetricOperator& op, double sigma, double R, int samples,
                                                std::uint64_t seed) {
  if (samples <= 0) throw ArgumentError("sample_far_level_set: samples must be positive");
  const double r = std::max(R, 1e-12);
  const double diag = diagonal_level(op, sigma);
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(samples));
  for (std::uint64_t round = 0; round < 64 && static_cast<int>(out.size()) < samples; ++round)
    for (Vector& lambda : sample_level_set(op, sigma, samples, 1e-3 * r, 100.0 * r, seed + 0x9e3779b9u * round, diag)) {
      if (lambda.norm() > r && static_cast<int>(out.size()) < samples) out.push_back(std::move(lambda));
    }
  if (static_cast<int>(out.size()) < samples)
    throw NumericError("sample_far_level_set: too few level-set points beyond R");
  return out;
}

struct KappaEstimate {
  double kappa = 0.0;
  double observed_floor = 0.0;  // min over samples of the better branch ratio
  int samples = 0;
};

/// Largest 2^j strictly below the sampled floor of max(pairing ratio, min ratio).
inline KappaEstimate estimate_kappa_detail(const SymmetricOperator& op, const Vector& mu, double sigma, double R,
                                           int samples, std::uint64_t seed = 11) {
  if (samples <= 0) throw ArgumentError("estimate_kappa: samples must be positive");
  double floor = std::numeric_limits<double>::infinity();
  for (const Vector& lambda : sample_far_level_set(op, sigma, R, samples, seed)) {
    const auto [pairing, smallest] = dichotomy_ratios(op, mu, lambda);
    floor = std::min(floor, std::max(pairing, smallest));
  }
  if (!(floor > 0.0)) throw NumericError("estimate_kappa: no positive kappa on the sampled level set");
  KappaEstimate out;
  out.observed_floor = floor;
  out.samples = samples;
  int e = 0;
  std::frexp(floor, &e);  // floor = m * 2^e, m in [0.5, 1)
  double kappa = std::ldexp(1.0, e - 1);
  if (!(kappa < floor)) kappa *= 0.5;
  out.kappa = kappa;
  return out;
}

inline double estimate_kappa(const SymmetricOperator& op, const Vector& mu, double sigma, double R, int samples,
                             std::uint64_t seed = 11) {
  return estimate_kappa_detail(op, mu, sigma, R, samples, seed).kappa;
}

/// sum_i F_i B_ii >= sum_i F_i mu_i with F ascending and mu = lambda(B) descending.
template <class Scalar>
bool schur_horn_pairing(const Vector& f_diag, const MatrixS<Scalar>& b) {
  if (f_diag.size() != b.rows()) throw ArgumentError("schur_horn_pairing: size mismatch");
  for (int i = 1; i < f_diag.size(); ++i)
    if (f_diag(i) < f_diag(i - 1)) throw ArgumentError("schur_horn_pairing: F_diag must be ascending");
  const auto es = eigen_decompose(b);
  double lhs = 0.0, rhs = 0.0;
  for (int i = 0; i < f_diag.size(); ++i) {
    lhs += f_diag(i) * std::real(b(i, i));
    rhs += f_diag(i) * es.values(i);
  }
  const double slack = 1e-12 * (1.0 + f_diag.cwiseAbs().sum() * std::max(1.0, b.norm()));
  return lhs >= rhs - slack;
}

/// Pointwise form of  k c chi^{k-1} ^ alpha^{n-k} - l chi^{l-1} ^ alpha^{n-l} > 0  as
/// (n-1,n-1)-forms, with mu the eigenvalues of alpha^{-1} chi: for every dropped index i,
/// k c sigma_{k-1}(mu|i) / C(n-1,k-1) - l sigma_{l-1}(mu|i) / C(n-1,l-1) > 0.
inline bool quotient_cone_condition(const Vector& mu, double c, int l, int k) {
  const int n = static_cast<int>(mu.size());
  if (!(0 <= l && l < k && k <= n)) throw ArgumentError("quotient_cone_condition: require l < k (0 <= l < k <= n)");
  for (int drop = 0; drop < n; ++drop) {
    const Vector sub = drop_entry(mu, drop);
    const double high = k * c * sigma(k - 1, as_span(sub)) / binomial(n - 1, k - 1);
    const double low = l == 0 ? 0.0 : l * sigma(l - 1, as_span(sub)) / binomial(n - 1, l - 1);
    if (!(high - low > 0.0)) return false;
  }
  return true;
}

}  // namespace fnle
