#pragma once

// Monitors for the a priori inequalities: the ABP contact-set bound on a ball, the
// second-order / gradient ratio, the exponential trace bound and the strong-concavity
// conditions  f_11 + f_1/lambda_1 <= 0,  lambda_1 f_1 <= lambda_i f_i.

#include <json.hpp>

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "fnle/operator.hpp"
#include "fnle/random.hpp"
#include "fnle/torus.hpp"

namespace fnle {

// ---------------------------------------------------------------------------------
// ABP on the unit disc

/// Samples of v on the square grid x_i = -1 + 2i/N (i = 0..N) restricted to the closed
/// unit disc, plus samples on the unit circle for the boundary precondition.
class BallSamples {
 public:
  using Function = std::function<double(double, double)>;

  static BallSamples sample(const Function& v, int N, int boundary_count = 0) {
    if (N < 4 || N % 2 != 0) throw ArgumentError("ball grid: N must be even and >= 4");
    BallSamples s;
    s.N_ = N;
    s.values_.assign(static_cast<std::size_t>((N + 1) * (N + 1)), std::numeric_limits<double>::quiet_NaN());
    for (int i = 0; i <= N; ++i)
      for (int j = 0; j <= N; ++j) {
        const double x = s.node(i), y = s.node(j);
        if (x * x + y * y <= 1.0) s.values_[s.index(i, j)] = v(x, y);
      }
    if (boundary_count <= 0) boundary_count = 8 * N;
    for (int k = 0; k < boundary_count; ++k) {
      const double th = 2.0 * std::numbers::pi * k / boundary_count;
      s.boundary_.push_back(v(std::cos(th), std::sin(th)));
    }
    return s;
  }

  int N() const { return N_; }
  double spacing() const { return 2.0 / N_; }
  double node(int i) const { return -1.0 + 2.0 * i / N_; }
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(i * (N_ + 1) + j); }
  bool inside(int i, int j) const {
    return i >= 0 && j >= 0 && i <= N_ && j <= N_ && !std::isnan(values_[index(i, j)]);
  }
  double operator()(int i, int j) const { return values_[index(i, j)]; }
  double center() const { return (*this)(N_ / 2, N_ / 2); }
  const std::vector<double>& boundary() const { return boundary_; }

 private:
  int N_ = 0;
  std::vector<double> values_;
  std::vector<double> boundary_;
};

struct ContactPoint {
  int i = 0, j = 0;
  double dx = 0.0, dy = 0.0;  // centered-difference gradient
  double det = 0.0;           // det of the centered-difference Hessian
};

namespace detail {

inline void require_abp_precondition(const BallSamples& v, double epsilon) {
  if (!(epsilon > 0.0)) throw ArgumentError("abp: epsilon must be positive");
  const double lowest = *std::min_element(v.boundary().begin(), v.boundary().end());
  if (!(v.center() + epsilon <= lowest + 1e-12 * (1.0 + std::abs(lowest))))
    throw ArgumentError("abp: precondition v(0) + epsilon <= min over the boundary fails");
}

// Gradient and Hessian determinant at nodes whose 3x3 stencil lies in the disc.
struct Derivatives {
  std::vector<char> valid;
  std::vector<double> dx, dy, det;
};

inline Derivatives finite_differences(const BallSamples& v) {
  const int N = v.N();
  const double h = v.spacing();
  Derivatives d;
  const std::size_t total = static_cast<std::size_t>((N + 1) * (N + 1));
  d.valid.assign(total, 0);
  d.dx.assign(total, 0.0);
  d.dy.assign(total, 0.0);
  d.det.assign(total, 0.0);
  for (int i = 1; i < N; ++i)
    for (int j = 1; j < N; ++j) {
      bool ok = true;
      for (int a = -1; a <= 1 && ok; ++a)
        for (int b = -1; b <= 1 && ok; ++b) ok = v.inside(i + a, j + b);
      if (!ok) continue;
      const std::size_t k = v.index(i, j);
      d.valid[k] = 1;
      d.dx[k] = (v(i + 1, j) - v(i - 1, j)) / (2 * h);
      d.dy[k] = (v(i, j + 1) - v(i, j - 1)) / (2 * h);
      const double vxx = (v(i + 1, j) - 2 * v(i, j) + v(i - 1, j)) / (h * h);
      const double vyy = (v(i, j + 1) - 2 * v(i, j) + v(i, j - 1)) / (h * h);
      const double vxy = (v(i + 1, j + 1) - v(i + 1, j - 1) - v(i - 1, j + 1) + v(i - 1, j - 1)) / (4 * h * h);
      d.det[k] = vxx * vyy - vxy * vxy;
    }
  return d;
}

// v(y) >= v(x) + g.(y - x) at every sampled y in the disc.
inline bool supporting_plane(const BallSamples& v, int i, int j, double gx, double gy) {
  const int N = v.N();
  const double vx = v(i, j), x = v.node(i), y = v.node(j);
  const double tol = 1e-12 * (1.0 + std::abs(vx));
  for (int a = 0; a <= N; ++a)
    for (int b = 0; b <= N; ++b) {
      if (!v.inside(a, b)) continue;
      if (v(a, b) < vx + gx * (v.node(a) - x) + gy * (v.node(b) - y) - tol) return false;
    }
  return true;
}

}  // namespace detail

/// Nodes with |Dv| < epsilon/2 that admit a global lower supporting plane with slope Dv.
inline std::vector<ContactPoint> contact_set(const BallSamples& v, double epsilon) {
  detail::require_abp_precondition(v, epsilon);
  const auto d = detail::finite_differences(v);
  std::vector<ContactPoint> out;
  for (int i = 0; i <= v.N(); ++i)
    for (int j = 0; j <= v.N(); ++j) {
      const std::size_t k = v.index(i, j);
      if (!d.valid[k]) continue;
      if (!(std::hypot(d.dx[k], d.dy[k]) < 0.5 * epsilon)) continue;
      if (!detail::supporting_plane(v, i, j, d.dx[k], d.dy[k])) continue;
      out.push_back({i, j, d.dx[k], d.dy[k], d.det[k]});
    }
  return out;
}

struct AbpReport {
  double epsilon = 0.0;
  double contact_volume_fraction = 0.0;
  double integral_det = 0.0;
  double lower_bound = 0.0;  // c0 eps^2, c0 = omega_2 / 2^2
  double grid_tolerance = 0.0;
  bool passed = false;         // integral_det >= lower_bound (1 - grid_tolerance)
  bool strict_passed = false;  // integral_det >= lower_bound
};

inline nlohmann::json to_json(const AbpReport& r) {
  return {{"epsilon", r.epsilon},
          {"contact_volume_fraction", r.contact_volume_fraction},
          {"integral_det", r.integral_det},
          {"lower_bound", r.lower_bound},
          {"grid_tolerance", r.grid_tolerance},
          {"passed", r.passed},
          {"strict_passed", r.strict_passed}};
}

/// Integrates det D^2 v over the contact set. Each grid cell is split into
/// `subsamples`^2 pieces on which gradient, determinant and the contact indicator are
/// interpolated bilinearly from the four corners.
inline AbpReport abp_check(const BallSamples& v, double epsilon, double grid_tolerance = 0.05, int subsamples = 8) {
  detail::require_abp_precondition(v, epsilon);
  if (subsamples < 1) throw ArgumentError("abp: subsamples must be positive");
  const auto d = detail::finite_differences(v);
  const int N = v.N();
  std::vector<double> indicator(d.valid.size(), 0.0);
  for (int i = 0; i <= N; ++i)
    for (int j = 0; j <= N; ++j) {
      const std::size_t k = v.index(i, j);
      if (d.valid[k] && std::hypot(d.dx[k], d.dy[k]) < epsilon && detail::supporting_plane(v, i, j, d.dx[k], d.dy[k]))
        indicator[k] = 1.0;
    }

  const double h = v.spacing();
  const double piece = h * h / (subsamples * subsamples);
  double integral = 0.0, area = 0.0;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      const std::size_t c[4] = {v.index(i, j), v.index(i + 1, j), v.index(i, j + 1), v.index(i + 1, j + 1)};
      if (!(d.valid[c[0]] && d.valid[c[1]] && d.valid[c[2]] && d.valid[c[3]])) continue;
      for (int a = 0; a < subsamples; ++a)
        for (int b = 0; b < subsamples; ++b) {
          const double s = (a + 0.5) / subsamples, t = (b + 0.5) / subsamples;
          const double w[4] = {(1 - s) * (1 - t), s * (1 - t), (1 - s) * t, s * t};
          double gx = 0, gy = 0, det = 0, ind = 0;
          for (int q = 0; q < 4; ++q) {
            gx += w[q] * d.dx[c[q]];
            gy += w[q] * d.dy[c[q]];
            det += w[q] * d.det[c[q]];
            ind += w[q] * indicator[c[q]];
          }
          if (ind < 0.5 || !(std::hypot(gx, gy) < 0.5 * epsilon)) continue;
          integral += det * piece;
          area += piece;
        }
    }

  AbpReport r;
  r.epsilon = epsilon;
  r.integral_det = integral;
  r.contact_volume_fraction = area / std::numbers::pi;
  r.lower_bound = std::numbers::pi / 4.0 * epsilon * epsilon;
  r.grid_tolerance = grid_tolerance;
  r.passed = integral >= r.lower_bound * (1.0 - grid_tolerance);
  r.strict_passed = integral >= r.lower_bound;
  return r;
}

/// A random anisotropic well around a point near the origin plus a small oscillation,
/// scaled so that v(0) + epsilon <= min over the unit circle.
inline BallSamples::Function random_abp_function(std::uint64_t seed, double epsilon) {
  if (!(epsilon > 0.0)) throw ArgumentError("abp: epsilon must be positive");
  Rng rng(seed);
  const double r0 = 0.25 * std::sqrt(rng.uniform()), th0 = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double cx = r0 * std::cos(th0), cy = r0 * std::sin(th0);
  const double a1 = epsilon * rng.uniform(2.5, 4.0), a2 = epsilon * rng.uniform(2.5, 4.0);
  const double rot = rng.uniform(0.0, std::numbers::pi);
  const double b = epsilon * rng.uniform(0.0, 0.05);
  const double kx = rng.uniform(1.0, 3.0), ky = rng.uniform(1.0, 3.0), phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double base = rng.uniform(-1.0, 1.0);
  return [=](double x, double y) {
    const double dx = x - cx, dy = y - cy;
    const double p = std::cos(rot) * dx + std::sin(rot) * dy, q = -std::sin(rot) * dx + std::cos(rot) * dy;
    return base + a1 * p * p + a2 * q * q + b * std::sin(kx * x + ky * y + phase);
  };
}

// ---------------------------------------------------------------------------------
// Second-order / gradient monitor

struct HmwReport {
  double sup_dd_u = 0.0;     // sup of the alpha-operator norm of u_{i jbar}
  double sup_grad_sq = 0.0;  // sup of alpha^{p qbar} u_p u_qbar
  double ratio = 0.0;        // sup_dd_u / (1 + sup_grad_sq)
  double K = 1.0;            // sup_grad_sq + 1
  double phi_prime_low = 0.0, phi_prime_high = 0.0;  // (4K)^{-1}, (2K)^{-1}
  double A = 1.0;
  double tau = 1.0;  // psi(t) = -2 A t + (A tau / 2) t^2 keeps A <= -psi' <= 2A on [0, osc u]
};

inline nlohmann::json to_json(const HmwReport& r) {
  return {{"sup_dd_u", r.sup_dd_u},
          {"sup_grad_sq", r.sup_grad_sq},
          {"ratio", r.ratio},
          {"phi", {{"K", r.K}, {"phi_prime_low", r.phi_prime_low}, {"phi_prime_high", r.phi_prime_high}}},
          {"psi", {{"A", r.A}, {"tau", r.tau}}}};
}

/// |grad u|^2_alpha at every point, with u_p = (u_{x_p} - i u_{y_p}) / 2.
inline ScalarField gradient_norm_sq(const ScalarField& u, const Metric& alpha) {
  const PeriodicGrid& g = u.grid();
  if (g.mode() != Mode::complex) throw ModeError("gradient_norm_sq: requires a complex torus");
  const int n = g.dimension();
  std::vector<ScalarField> dx, dy;
  for (int j = 0; j < n; ++j) {
    dx.push_back(spectral_derivative(u, g.x_axis(j)));
    if (g.layout() == Layout::full) dy.push_back(spectral_derivative(u, g.y_axis(j)));
  }
  const ComplexMatrix inv = alpha.alpha().inverse();
  ScalarField out(g);
  Eigen::VectorXcd up(n);
  for (std::size_t p = 0; p < g.size(); ++p) {
    for (int j = 0; j < n; ++j)
      up(j) = 0.5 * std::complex<double>(dx[static_cast<std::size_t>(j)][p],
                                         g.layout() == Layout::full ? -dy[static_cast<std::size_t>(j)][p] : 0.0);
    out[p] = std::real(up.dot(inv * up));
  }
  return out;
}

inline HmwReport hmw_ratio(const ScalarField& u, const Metric& alpha, double A = 1.0) {
  if (u.grid().mode() != Mode::complex) throw ModeError("hmw_ratio: requires a complex torus");
  HmwReport r;
  r.sup_dd_u = hessian_sup_norm(u, alpha);
  r.sup_grad_sq = gradient_norm_sq(u, alpha).max();
  r.ratio = r.sup_dd_u / (1.0 + r.sup_grad_sq);
  r.K = r.sup_grad_sq + 1.0;
  r.phi_prime_low = 1.0 / (4.0 * r.K);
  r.phi_prime_high = 1.0 / (2.0 * r.K);
  r.A = A;
  const double osc = u.max() - u.min();
  r.tau = osc > 0.0 ? 1.0 / osc : 1.0;
  return r;
}

// ---------------------------------------------------------------------------------
// Trace estimate

struct TraceEstimate {
  double C = 0.0;  // smallest C with tr_alpha g <= C exp(A (u - inf u)) on the grid
  double A = 0.0;
  bool below_threshold = false;
};

inline nlohmann::json to_json(const TraceEstimate& r) {
  return {{"C", r.C}, {"A", r.A}, {"below_threshold", r.below_threshold}};
}

inline TraceEstimate trace_estimate_check(const ScalarField& u, const MatrixField& g, const Metric& alpha,
                                          double A_const, double threshold) {
  if (!u.grid().same_shape(g.grid())) throw ArgumentError("trace_estimate_check: grids differ");
  const double inf = u.min();
  TraceEstimate r;
  r.A = A_const;
  for (std::size_t p = 0; p < u.size(); ++p)
    r.C = std::max(r.C, alpha.trace(g[p]) / std::exp(A_const * (u[p] - inf)));
  r.below_threshold = r.C <= threshold;
  return r;
}

// ---------------------------------------------------------------------------------
// Strong concavity

struct ConcavityFlags {
  bool first = true;   // f_11 + f_1/lambda_1 <= 0
  bool second = true;  // lambda_1 f_1 <= lambda_i f_i for all i
  double max_first = -std::numeric_limits<double>::infinity();
  int samples = 0;
};

inline nlohmann::json to_json(const ConcavityFlags& r) {
  return {{"first", r.first}, {"second", r.second}, {"max_first", r.max_first}, {"samples", r.samples}};
}

/// Both conditions at each sample (sorted descending, admissible), with relative
/// tolerance 1e-12.
inline ConcavityFlags strong_concavity_flags(const SymmetricOperator& op, const std::vector<Vector>& samples) {
  if (samples.empty()) throw ArgumentError("strong_concavity_flags: no samples");
  ConcavityFlags flags;
  for (const Vector& lambda : samples) {
    if (lambda.size() != op.dimension()) throw ArgumentError("strong_concavity_flags: size mismatch");
    for (int i = 1; i < lambda.size(); ++i)
      if (lambda(i) > lambda(i - 1)) throw ArgumentError("strong_concavity_flags: samples must be sorted descending");
    const OperatorJet jet = op.jet(as_span(lambda), 2);
    const double a = jet.hess(0, 0), b = jet.grad(0) / lambda(0);
    const double first = a + b;
    flags.max_first = std::max(flags.max_first, first);
    if (first > 1e-12 * (std::abs(a) + std::abs(b))) flags.first = false;
    const double top = lambda(0) * jet.grad(0);
    for (int i = 1; i < lambda.size(); ++i) {
      const double other = lambda(i) * jet.grad(i);
      if (top > other + 1e-12 * (std::abs(top) + std::abs(other))) flags.second = false;
    }
    ++flags.samples;
  }
  return flags;
}

}  // namespace fnle
