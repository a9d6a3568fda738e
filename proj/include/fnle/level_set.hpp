#pragma once

// Level sets dGamma^sigma = {f = sigma}: the diagonal point N*1, the lower bound tau
// for the trace F = sum f_i on the level set, and a sampler.
//
// The sampler parametrizes dGamma^sigma as a graph over the hyperplane orthogonal to
// 1: for x with sum x_i = 0 the line x + s*1 meets the level set exactly once, since
// f increases along 1 and every cone member has positive coordinate sum.

#include <boost/math/tools/toms748_solve.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>

#include "fnle/operator.hpp"
#include "fnle/random.hpp"

namespace fnle {

struct LevelSetConstants {
  double sigma = 0.0;
  double N = 0.0;    // f(N * 1) = sigma
  double tau = 0.0;  // sampled min of sum f_i on the level set
  int samples = 0;
};

namespace detail {

inline bool above_level(const SymmetricOperator& op, const Vector& lambda, double sigma) {
  if (!op.cone().contains(as_span(lambda))) return false;
  return op.value(as_span(lambda)) >= sigma;
}

inline void check_level(const SymmetricOperator& op, double sigma) {
  if (!(sigma > op.sup_boundary() && sigma < op.sup_interior()))
    throw ArgumentError("level set: sigma=" + std::to_string(sigma) + " outside (sup_dGamma f, sup_Gamma f) for " +
                        op.name());
}

}  // namespace detail

/// Solves f(N*1) = sigma.
inline double diagonal_level(const SymmetricOperator& op, double sigma) {
  detail::check_level(op, sigma);
  const int n = op.dimension();
  auto g = [&](double s) { return op.value(as_span(Vector::Constant(n, s))) - sigma; };
  double lo = 1.0, hi = 1.0;
  int guard = 0;
  while (g(lo) > 0.0) {
    lo *= 0.5;
    if (++guard > 2000) throw NumericError("diagonal_level: cannot bracket from below");
  }
  guard = 0;
  while (g(hi) < 0.0) {
    hi *= 2.0;
    if (++guard > 2000) throw NumericError("diagonal_level: cannot bracket from above");
  }
  if (g(lo) == 0.0) return lo;
  if (g(hi) == 0.0) return hi;
  std::uintmax_t iterations = 200;
  const auto bracket =
      boost::math::tools::toms748_solve(g, lo, hi, boost::math::tools::eps_tolerance<double>(52), iterations);
  return 0.5 * (bracket.first + bracket.second);
}

/// The level-set point on the line x + s*1, where `x_perp` has zero coordinate sum.
/// Bisection with `iterations` halvings on the monotone predicate "admissible and f >= sigma".
inline Vector level_set_point(const SymmetricOperator& op, double sigma, const Vector& x_perp, double N,
                              int iterations = 60) {
  const int n = op.dimension();
  if (x_perp.size() != n) throw ArgumentError("level_set_point: size mismatch");
  const double spread = x_perp.cwiseAbs().maxCoeff();
  double lo = -spread - 1.0;
  double hi = N + spread;
  const Vector one = Vector::Ones(n);
  if (!detail::above_level(op, x_perp + hi * one, sigma)) {
    // f is strictly increasing in each coordinate, so hi lands on or above the level;
    // nudge to absorb rounding.
    hi += 1e-12 * (1.0 + std::abs(hi));
    int guard = 0;
    while (!detail::above_level(op, x_perp + hi * one, sigma)) {
      hi = 2.0 * hi + 1.0;
      if (++guard > 200) throw NumericError("level_set_point: cannot bracket the level set");
    }
  }
  if (detail::above_level(op, x_perp + lo * one, sigma))
    throw NumericError("level_set_point: lower bracket unexpectedly above level");
  for (int it = 0; it < iterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (detail::above_level(op, x_perp + mid * one, sigma))
      hi = mid;
    else
      lo = mid;
  }
  return x_perp + hi * one;
}

/// Random direction orthogonal to 1 with unit length.
inline Vector random_perp_direction(Rng& rng, int n) {
  Vector x(n);
  double norm = 0.0;
  do {
    for (int i = 0; i < n; ++i) x(i) = rng.normal();
    x.array() -= x.mean();
    norm = x.norm();
  } while (norm < 1e-8);
  return x / norm;
}

/// Samples of dGamma^sigma whose perpendicular component has length log-uniform in
/// [r_min, r_max]; hence |lambda| >= r_min for every sample.
inline std::vector<Vector> sample_level_set(const SymmetricOperator& op, double sigma, int count, double r_min,
                                            double r_max, std::uint64_t seed, std::optional<double> N = {}) {
  if (count <= 0) throw ArgumentError("sample_level_set: count must be positive");
  if (!(r_min > 0.0 && r_max >= r_min)) throw ArgumentError("sample_level_set: need 0 < r_min <= r_max");
  const double diag = N ? *N : diagonal_level(op, sigma);
  Rng rng(seed);
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(count));
  const double log_lo = std::log(r_min), log_hi = std::log(r_max);
  for (int i = 0; i < count; ++i) {
    const Vector dir = random_perp_direction(rng, op.dimension());
    const double r = std::exp(rng.uniform(log_lo, log_hi));
    out.push_back(level_set_point(op, sigma, r * dir, diag));
  }
  return out;
}

/// N with f(N*1) = sigma, and tau = min of F = sum f_i over `samples` level-set points
/// (an empirical lower bound, reported with the sample count).
inline LevelSetConstants level_set_constants(const SymmetricOperator& op, double sigma, int samples,
                                             std::uint64_t seed = 1) {
  if (samples <= 0) throw ArgumentError("level_set_constants: samples must be positive");
  LevelSetConstants out;
  out.sigma = sigma;
  out.N = diagonal_level(op, sigma);
  out.samples = samples;
  double tau = std::numeric_limits<double>::infinity();
  for (const Vector& lambda : sample_level_set(op, sigma, samples, 1e-3 * out.N, 1e3 * out.N, seed, out.N))
    tau = std::min(tau, op.gradient(as_span(lambda)).sum());
  out.tau = tau;
  return out;
}

}  // namespace fnle
