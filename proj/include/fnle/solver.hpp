#pragma once

// Damped Newton-Krylov solves of F(A[u]) = rhs + c for the pair (u, c), and the
// continuity paths marching t from 0 to 1.
//
// Residuals per path (s = dc_sign):
//   none:        F(A) - h - c
//   hessian:     F(A) - offset - (t H + (1-t) H0) - c,   H0 = F(A[0]) - offset
//   quotient:    f_t(A) + c                              (f_t the blended quotient)
//   riemannian:  F(A) - (1-t) h0 - c,                    h0 = F(A[0])

#include <json.hpp>

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fnle/gmres.hpp"
#include "fnle/matrix_calculus.hpp"
#include "fnle/parallel.hpp"
#include "fnle/torus.hpp"

namespace fnle {

enum class PathKind { none, hessian, quotient, riemannian };

inline std::string to_string(PathKind p) {
  switch (p) {
    case PathKind::none: return "none";
    case PathKind::hessian: return "hessian";
    case PathKind::quotient: return "quotient";
    case PathKind::riemannian: return "riemannian";
  }
  return "unknown";
}

struct ProblemSpec {
  SymmetricOperator op;
  Metric alpha;
  MatrixField chi;
  ScalarField h;  // target right-hand side (H for the hessian path); unused by quotient/riemannian
  PathKind path = PathKind::none;
  Normalization normalization = Normalization::mean_zero;

  Mode mode() const { return h.grid().mode(); }
};

struct SolverOptions {
  double tolerance = 1e-10;
  int max_iterations = 50;
  int max_halvings = 30;
  int gmres_restart = 40;
  int gmres_max_iterations = 800;
  double min_dt = 1e-4;
  int threads = 1;
};

struct SolveState {
  explicit SolveState(ScalarField u0) : u(std::move(u0)) {}

  ScalarField u;
  double c = 0.0;
  double t = 0.0;
  double residual_norm = std::numeric_limits<double>::infinity();
  double margin = 0.0;
  int iterations = 0;
  std::vector<double> residual_history;
  std::vector<int> krylov_iterations;
};

/// Residual, admissibility and (optionally) second-order coefficients at one (u, c, t).
struct Evaluation {
  explicit Evaluation(ScalarField r) : residual(std::move(r)) {}

  ScalarField residual;
  double margin = 0.0;
  std::ptrdiff_t worst_point = -1;
  int violated_index = 0;
  bool admissible = false;
  std::vector<Vector> coefficients;  // coefficients[a * axes + b](x) multiplies d_a d_b v
};

class PathProblem {
 public:
  explicit PathProblem(ProblemSpec spec) : spec_(std::move(spec)) {
    const PeriodicGrid& g = spec_.h.grid();
    if (!g.same_shape(spec_.chi.grid())) throw ArgumentError("problem: chi and h live on different grids");
    if (spec_.op.dimension() != g.dimension() || spec_.alpha.dimension() != g.dimension() ||
        spec_.chi.dimension() != g.dimension())
      throw ArgumentError("problem: operator, metric and grid dimensions differ");
    if (spec_.path == PathKind::quotient) {
      if (spec_.op.kind() != OperatorKind::hessian_quotient)
        throw ArgumentError("quotient path requires a hessian_quotient operator");
      if (g.mode() != Mode::complex) throw ModeError("quotient path requires a complex torus");
    }
    if (spec_.path == PathKind::riemannian && g.mode() != Mode::real)
      throw ModeError("riemannian path requires a real torus");
    if (spec_.path == PathKind::hessian || spec_.path == PathKind::riemannian) {
      const Evaluation e0 = evaluate_raw(ScalarField(g), spec_.op, false, 1);
      if (!e0.admissible)
        throw DomainError("problem: background chi is not admissible", e0.violated_index, e0.margin, e0.worst_point);
      h0_ = e0.residual;
    }
  }

  const ProblemSpec& spec() const { return spec_; }
  const PeriodicGrid& grid() const { return spec_.h.grid(); }
  /// F(A[0]) for the hessian and riemannian paths.
  const std::optional<ScalarField>& background_value() const { return h0_; }
  double dc_sign() const { return spec_.path == PathKind::quotient ? 1.0 : -1.0; }

  SymmetricOperator operator_at(double t) const {
    if (spec_.path != PathKind::quotient) return spec_.op;
    return SymmetricOperator::blended_quotient(spec_.op.dimension(), spec_.op.l(), spec_.op.k(), t);
  }

  /// The c-independent right-hand side subtracted from F_t(A).
  ScalarField rhs(double t) const {
    switch (spec_.path) {
      case PathKind::none: return spec_.h;
      case PathKind::hessian: return t * (spec_.h + spec_.op.log_form_offset()) + (1.0 - t) * *h0_;
      case PathKind::riemannian: return (1.0 - t) * *h0_;
      case PathKind::quotient: return ScalarField(grid());
    }
    return spec_.h;
  }

  Evaluation evaluate(const ScalarField& u, double c, double t, bool coefficients, int threads) const {
    Evaluation e = evaluate_raw(u, operator_at(t), coefficients, threads);
    if (!e.admissible) return e;
    e.residual -= rhs(t);
    e.residual += dc_sign() * c;
    return e;
  }

  /// Sum_ab c_ab d_a d_b v + s * dc.
  ScalarField apply_linearization(const Evaluation& e, const ScalarField& v, double dc) const {
    const int axes = grid().axes();
    const SecondDerivatives d(v);
    ScalarField out = ScalarField::constant(grid(), dc_sign() * dc);
    for (int a = 0; a < axes; ++a)
      for (int b = 0; b < axes; ++b) {
        const Vector& coef = e.coefficients[static_cast<std::size_t>(a * axes + b)];
        if (coef.cwiseAbs().maxCoeff() == 0.0) continue;
        out.values() += coef.cwiseProduct(d(a, b).values());
      }
    return out;
  }

 private:
  Evaluation evaluate_raw(const ScalarField& u, const SymmetricOperator& op, bool coefficients, int threads) const {
    const PeriodicGrid& g = grid();
    if (!g.same_shape(u.grid())) throw ArgumentError("evaluate: u lives on a different grid");
    const MatrixField a = endomorphism_field(spec_.alpha, spec_.chi, u);
    const int n = g.dimension();
    const int axes = g.axes();
    Evaluation e(ScalarField{g});
    std::vector<double> margins(g.size());
    std::vector<int> violations(g.size());
    if (coefficients) e.coefficients.assign(static_cast<std::size_t>(axes * axes), Vector::Zero(static_cast<Eigen::Index>(g.size())));

    parallel_for(g.size(), threads, [&](std::size_t p) {
      const auto es = eigen_decompose(a[p]);
      const auto lam = as_span(es.values);
      violations[p] = op.cone().first_violation(lam);
      margins[p] = op.cone().margin(lam);
      if (violations[p] != 0) return;
      const OperatorJet jet = op.jet(lam, coefficients ? 1 : 0);
      e.residual[p] = jet.value;
      if (!coefficients) return;
      const ComplexMatrix G = es.frame * jet.grad.asDiagonal() * es.frame.adjoint();
      const ComplexMatrix Gh = spec_.alpha.pull_back(G);
      const auto idx = static_cast<Eigen::Index>(p);
      auto set = [&](int r, int s, double v) {
        e.coefficients[static_cast<std::size_t>(r * axes + s)](idx) = v;
      };
      if (g.mode() == Mode::real) {
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) set(i, j, std::real(Gh(i, j)));
      } else if (g.layout() == Layout::tube) {
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) set(i, j, 0.25 * std::real(Gh(i, j)));
      } else {
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            const double P = 0.25 * std::real(Gh(i, j));
            const double Q = 0.25 * std::imag(Gh(i, j));
            set(g.x_axis(i), g.x_axis(j), P);
            set(g.y_axis(i), g.y_axis(j), P);
            set(g.x_axis(i), g.y_axis(j), Q);
            set(g.y_axis(j), g.x_axis(i), Q);
          }
      }
    });

    e.margin = std::numeric_limits<double>::infinity();
    e.admissible = true;
    for (std::size_t p = 0; p < g.size(); ++p) {
      if (violations[p] != 0 && e.admissible) {
        e.admissible = false;
        e.violated_index = violations[p];
      }
      if (margins[p] < e.margin) {
        e.margin = margins[p];
        e.worst_point = static_cast<std::ptrdiff_t>(p);
      }
    }
    return e;
  }

  ProblemSpec spec_;
  std::optional<ScalarField> h0_;
};

namespace detail {

// Inverse of the constant-coefficient model  w -> sum_ab cbar_ab d_a d_b w + s mean(w).
class MeanCoefficientPreconditioner {
 public:
  MeanCoefficientPreconditioner(const PathProblem& problem, const Evaluation& e) : grid_(problem.grid()), s_(problem.dc_sign()) {
    const int axes = grid_.axes();
    Matrix cbar(axes, axes);
    for (int a = 0; a < axes; ++a)
      for (int b = 0; b < axes; ++b) cbar(a, b) = e.coefficients[static_cast<std::size_t>(a * axes + b)].mean();
    symbol_.resize(grid_.size());
    for (std::size_t i = 0; i < grid_.size(); ++i) {
      double sym = 0.0;
      for (int a = 0; a < axes; ++a)
        for (int b = 0; b < axes; ++b) {
          if (cbar(a, b) == 0.0) continue;
          std::vector<int> orders(static_cast<std::size_t>(axes), 0);
          orders[static_cast<std::size_t>(a)] += 1;
          orders[static_cast<std::size_t>(b)] += 1;
          sym += cbar(a, b) * std::real(derivative_symbol(grid_, i, orders));
        }
      symbol_[i] = sym;
    }
  }

  Vector operator()(const Vector& z) const {
    Spectrum spec = forward_transform(ScalarField(grid_, z));
    for (std::size_t i = 0; i < spec.size(); ++i) {
      if (i == 0)
        spec[i] /= s_;
      else if (std::abs(symbol_[i]) > 1e-300)
        spec[i] /= symbol_[i];
      else
        spec[i] = 0.0;
    }
    return inverse_transform(grid_, spec).values();
  }

 private:
  PeriodicGrid grid_;
  double s_;
  std::vector<double> symbol_;
};

}  // namespace detail

/// Pointwise residual F_t(A[u]) - rhs_t + s c; throws DomainError if u is inadmissible.
inline ScalarField residual(const PathProblem& problem, const ScalarField& u, double c, double t, int threads = 1) {
  Evaluation e = problem.evaluate(u, c, t, false, threads);
  if (!e.admissible)
    throw DomainError("residual: A[u] leaves the cone (worst grid point " + std::to_string(e.worst_point) + ")",
                      e.violated_index, e.margin, e.worst_point);
  return e.residual;
}
inline ScalarField residual(const ProblemSpec& spec, const ScalarField& u, double c, double t) {
  return residual(PathProblem(spec), u, c, t);
}

/// Linearization of the residual at `state` applied to (v, dc).
inline ScalarField linearized_apply(const PathProblem& problem, const SolveState& state, const ScalarField& v, double dc,
                                    int threads = 1) {
  const Evaluation e = problem.evaluate(state.u, state.c, state.t, true, threads);
  if (!e.admissible)
    throw DomainError("linearized_apply: state is not admissible", e.violated_index, e.margin, e.worst_point);
  return problem.apply_linearization(e, v, dc);
}
inline ScalarField linearized_apply(const ProblemSpec& spec, const SolveState& state, const ScalarField& v, double dc) {
  return linearized_apply(PathProblem(spec), state, v, dc);
}

/// Damped inexact Newton on (u, c) at fixed t, starting from `warm`.
inline SolveState newton_solve(const PathProblem& problem, double t, const SolveState& warm,
                               const SolverOptions& opt = {}) {
  SolveState state = warm;
  state.t = t;
  state.iterations = 0;
  state.residual_history.clear();
  state.krylov_iterations.clear();
  Evaluation e = problem.evaluate(state.u, state.c, t, true, opt.threads);
  if (!e.admissible)
    throw DomainError("newton_solve: warm start is not admissible (worst grid point " + std::to_string(e.worst_point) +
                          ")",
                      e.violated_index, e.margin, e.worst_point);
  state.residual_norm = e.residual.sup_norm();
  state.margin = e.margin;
  state.residual_history.push_back(state.residual_norm);
  const PeriodicGrid& g = problem.grid();
  const double s = problem.dc_sign();

  while (state.residual_norm >= opt.tolerance) {
    if (state.iterations >= opt.max_iterations)
      throw StagnationError("newton_solve: no convergence in " + std::to_string(opt.max_iterations) + " iterations",
                            state.residual_history, state.residual_norm);
    const detail::MeanCoefficientPreconditioner pre(problem, e);
    auto apply = [&](const Vector& w) -> Vector {
      ScalarField v(g, w);
      const double mean = w.mean();
      return problem.apply_linearization(e, v, 0.0).values() + Vector::Constant(w.size(), s * mean);
    };
    const double rtol = std::min(1e-4, 0.1 * state.residual_norm);
    const GmresResult lin = gmres(apply, std::cref(pre), -e.residual.values(), rtol, opt.gmres_restart,
                                  opt.gmres_max_iterations);
    state.krylov_iterations.push_back(lin.iterations);
    const double dc = lin.x.mean();
    const ScalarField du(g, (lin.x.array() - dc).matrix());

    bool accepted = false;
    double step = 1.0;
    for (int halving = 0; halving <= opt.max_halvings; ++halving, step *= 0.5) {
      const ScalarField u_try = state.u + step * du;
      const double c_try = state.c + step * dc;
      Evaluation trial = problem.evaluate(u_try, c_try, t, true, opt.threads);
      if (!trial.admissible || !(trial.margin > 0.0)) continue;
      const double r = trial.residual.sup_norm();
      if (!(r < state.residual_norm)) continue;
      state.u = u_try;
      state.c = c_try;
      state.residual_norm = r;
      state.margin = trial.margin;
      e = std::move(trial);
      accepted = true;
      break;
    }
    ++state.iterations;
    if (!accepted)
      throw StagnationError("newton_solve: line search exhausted " + std::to_string(opt.max_halvings) +
                                " halvings at t=" + std::to_string(t),
                            state.residual_history, state.residual_norm);
    state.residual_history.push_back(state.residual_norm);
  }
  return state;
}
inline SolveState newton_solve(const ProblemSpec& spec, double t, const SolveState& warm, const SolverOptions& opt = {}) {
  return newton_solve(PathProblem(spec), t, warm, opt);
}

/// u = 0 with c chosen so the residual has zero mean at t.
inline SolveState initial_state(const PathProblem& problem, double t, int threads = 1) {
  SolveState st(ScalarField{problem.grid()});
  st.t = t;
  const Evaluation e = problem.evaluate(st.u, 0.0, t, false, threads);
  if (!e.admissible)
    throw DomainError("initial state u=0 is not admissible (worst grid point " + std::to_string(e.worst_point) + ")",
                      e.violated_index, e.margin, e.worst_point);
  st.c = -e.residual.mean() / problem.dc_sign();
  return st;
}

struct StepRecord {
  double t = 0.0;
  double c = 0.0;
  double residual = 0.0;
  double margin = 0.0;
  int iterations = 0;
  std::vector<double> residual_history;
  std::optional<double> bound_low;  // recorded path-constant bounds, if the path has them
  std::optional<double> bound_high;
  bool bound_ok = true;
};

struct SolveReport {
  PathKind path = PathKind::none;
  std::vector<StepRecord> steps;
  bool completed = false;
  double last_good_t = 0.0;
  std::string abort_reason;
  std::optional<SolveState> final_state;
  std::optional<ScalarField> u;  // final solution under the requested normalization
  double c = 0.0;
  std::optional<double> quotient_c;  // compute_c(chi, alpha, l, k) for the quotient path
  bool bounds_ok = true;
  nlohmann::json diagnostics = nlohmann::json::object();
};

/// Uniform schedule {0, 1/(steps-1), ..., 1}.
inline std::vector<double> uniform_schedule(int steps = 21) {
  if (steps < 2) throw ArgumentError("schedule: need at least two points");
  std::vector<double> s(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i) s[static_cast<std::size_t>(i)] = static_cast<double>(i) / (steps - 1);
  return s;
}

/// Marches t along `schedule`, warm-starting every Newton solve from the last accepted
/// state and bisecting the step on failure down to min_dt.
inline SolveReport run_continuity(const PathProblem& problem, const std::vector<double>& schedule,
                                  const SolverOptions& opt = {}) {
  if (schedule.size() < 1) throw ArgumentError("schedule: empty");
  for (std::size_t i = 1; i < schedule.size(); ++i)
    if (!(schedule[i] > schedule[i - 1])) throw ArgumentError("schedule: must be strictly increasing");
  if (schedule.front() != 0.0 && problem.spec().path != PathKind::none)
    throw ArgumentError("schedule: must start at 0");
  if (schedule.back() != 1.0) throw ArgumentError("schedule: must end at 1");

  const ProblemSpec& spec = problem.spec();
  SolveReport report;
  report.path = spec.path;
  double h0_min = 0.0, h0_max = 0.0;
  if (spec.path == PathKind::riemannian) {
    h0_min = problem.background_value()->min();
    h0_max = problem.background_value()->max();
  }
  if (spec.path == PathKind::quotient) report.quotient_c = compute_c(spec.chi, spec.alpha, spec.op.l(), spec.op.k());

  auto record = [&](const SolveState& st) {
    StepRecord r;
    r.t = st.t;
    r.c = st.c;
    r.residual = st.residual_norm;
    r.margin = st.margin;
    r.iterations = st.iterations;
    r.residual_history = st.residual_history;
    constexpr double slack = 1e-8;
    if (spec.path == PathKind::riemannian) {
      r.bound_low = st.t * h0_min;
      r.bound_high = st.t * h0_max;
      r.bound_ok = st.c >= *r.bound_low - slack && st.c <= *r.bound_high + slack;
    } else if (spec.path == PathKind::quotient) {
      r.bound_low = st.t * *report.quotient_c;
      r.bound_ok = st.c >= *r.bound_low - slack;
    }
    report.bounds_ok = report.bounds_ok && r.bound_ok;
    report.steps.push_back(std::move(r));
  };

  const bool single = spec.path == PathKind::none;
  const double t0 = single ? 1.0 : 0.0;
  std::optional<SolveState> first;
  try {
    first = newton_solve(problem, t0, initial_state(problem, t0, opt.threads), opt);
  } catch (const StagnationError& err) {
    report.abort_reason = err.what();
    return report;
  }
  SolveState state = std::move(*first);
  record(state);
  report.last_good_t = t0;

  if (!single) {
    for (std::size_t i = 1; i < schedule.size(); ++i) {
      const double target = schedule[i];
      while (state.t < target) {
        double t_try = target;
        std::optional<SolveState> next;
        while (!next) {
          try {
            next = newton_solve(problem, t_try, state, opt);
          } catch (const StagnationError& err) {
            const double dt = 0.5 * (t_try - state.t);
            if (dt < opt.min_dt) {
              report.abort_reason = std::string("step underflow below dt=") + std::to_string(opt.min_dt) + ": " + err.what();
              report.final_state = state;
              report.c = state.c;
              report.u = normalize(state.u, spec.normalization);
              return report;
            }
            t_try = state.t + dt;
          }
        }
        state = std::move(*next);
        record(state);
        report.last_good_t = state.t;
      }
    }
  }
  report.completed = true;
  report.final_state = state;
  report.c = state.c;
  report.u = normalize(state.u, spec.normalization);
  return report;
}
inline SolveReport run_continuity(const ProblemSpec& spec, const std::vector<double>& schedule,
                                  const SolverOptions& opt = {}) {
  return run_continuity(PathProblem(spec), schedule, opt);
}

/// log( int chi^k ^ alpha^{n-k}/alpha^n / int e^H ): the constant forced on
/// log(omega^k ^ alpha^{n-k}/alpha^n) = H + c by integrating both sides.
inline double hessian_constant(const MatrixField& chi, const Metric& alpha, int k, const ScalarField& H) {
  ScalarField eh = H;
  eh.values() = H.values().array().exp().matrix();
  return std::log(integral(form_ratio(chi, alpha, k)) / integral(eh));
}

inline nlohmann::json to_json(const StepRecord& r) {
  nlohmann::json j{{"t", r.t},
                   {"c", r.c},
                   {"residual", r.residual},
                   {"margin", r.margin},
                   {"iterations", r.iterations},
                   {"residual_history", r.residual_history},
                   {"bound_ok", r.bound_ok}};
  if (r.bound_low) j["bound_low"] = *r.bound_low;
  if (r.bound_high) j["bound_high"] = *r.bound_high;
  return j;
}

inline nlohmann::json to_json(const SolveReport& r) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : r.steps) steps.push_back(to_json(s));
  nlohmann::json j{{"path", to_string(r.path)},
                   {"completed", r.completed},
                   {"last_good_t", r.last_good_t},
                   {"c", r.c},
                   {"bounds_ok", r.bounds_ok},
                   {"steps", steps},
                   {"diagnostics", r.diagnostics}};
  if (!r.abort_reason.empty()) j["abort_reason"] = r.abort_reason;
  if (r.quotient_c) j["quotient_c"] = *r.quotient_c;
  if (r.final_state) {
    j["final"] = {{"residual", r.final_state->residual_norm},
                  {"margin", r.final_state->margin},
                  {"t", r.final_state->t}};
    if (r.u) {
      j["final"]["u_min"] = r.u->min();
      j["final"]["u_max"] = r.u->max();
    }
  }
  return j;
}

}  // namespace fnle
