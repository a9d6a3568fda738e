#pragma once

// Configuration-driven runs: build the problem, certify the trivial subsolution, run
// the solve or path, attach diagnostics and write report, fields and summary.

#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "fnle/config.hpp"
#include "fnle/diagnostics.hpp"
#include "fnle/field_io.hpp"
#include "fnle/selftest.hpp"
#include "fnle/solver.hpp"
#include "fnle/subsolution.hpp"

#ifndef FNLE_VERSION
#define FNLE_VERSION "0.0.0"
#endif

namespace fnle {

enum ExitCode : int {
  exit_ok = 0,
  exit_failure = 1,
  exit_stagnation = 2,
  exit_domain = 3,
  exit_io = 4,
  exit_refuted = 5,
};

inline const char* library_version() { return FNLE_VERSION; }

struct RunOptions {
  std::filesystem::path output;
  std::filesystem::path config_dir = ".";
  std::optional<std::uint64_t> seed;
  int threads = 1;
  bool check_only = false;
  std::ostream* log = &std::cout;
};

struct BuiltProblem {
  PeriodicGrid grid;
  Metric alpha;
  MatrixField chi;
  ScalarField h;
  SymmetricOperator op;
  std::optional<ScalarField> exact;  // manufactured potential, when the rhs was manufactured
};

namespace detail {

inline std::uint64_t generator_seed(const GeneratorExpr& g, std::size_t i, std::uint64_t fallback) {
  return g.args.size() > i ? static_cast<std::uint64_t>(g.number(i)) : fallback;
}

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace detail

/// Materializes the grid, metric, background, right-hand side and operator of a config.
inline BuiltProblem build_problem(const RunConfig& c, const std::filesystem::path& config_dir = ".") {
  PeriodicGrid grid = c.mode == Mode::real ? PeriodicGrid::real(c.dimension, c.points_per_axis, c.period)
                      : c.layout == Layout::tube
                          ? PeriodicGrid::complex_tube(c.dimension, c.points_per_axis, c.period)
                          : PeriodicGrid::complex_full(c.dimension, c.points_per_axis, c.period);
  const double s_alpha = c.alpha.number(0);
  if (!(s_alpha > 0.0)) throw ArgumentError("background.alpha: scale must be positive");
  Metric alpha(s_alpha * ComplexMatrix::Identity(c.dimension, c.dimension));

  const GeneratorExpr& g = c.chi;
  MatrixField chi = [&] {
    if (g.name == "chi_scaled") return scaled_background(grid, alpha, g.number(0));
    if (g.name == "chi_perturbed")
      return perturbed_background(grid, alpha, g.number(0), g.number(1), detail::generator_seed(g, 2, c.seed));
    if (g.name == "eta_scaled") return nminus1_background(scaled_background(grid, alpha, g.number(0)), alpha);
    if (g.name == "eta_perturbed")
      return nminus1_background(
          perturbed_background(grid, alpha, g.number(0), g.number(1), detail::generator_seed(g, 2, c.seed)), alpha);
    if (g.name == "potential_file") {
      const ScalarField phi = read_field(detail::resolve(config_dir, g.args[1]));
      if (!phi.grid().same_shape(grid)) throw ArgumentError("background.chi: potential file grid does not match");
      return scaled_background(grid, alpha, g.number(0)) + hessian_field(ScalarField(grid, phi.values()));
    }
    throw ArgumentError("background.chi: unknown generator " + g.name);
  }();

  SymmetricOperator op = c.make_operator();
  std::optional<ScalarField> exact;
  const GeneratorExpr& r = c.rhs;
  ScalarField h(grid);
  if (r.name == "constant") {
    h = ScalarField::constant(grid, r.number(0));
  } else if (r.name == "smooth") {
    h = r.number(0) * random_smooth_field(grid, detail::generator_seed(r, 1, c.seed));
  } else if (r.name == "file") {
    const ScalarField f = read_field(detail::resolve(config_dir, r.args[0]));
    if (!f.grid().same_shape(grid)) throw ArgumentError("rhs.h: field file grid does not match");
    h = ScalarField(grid, f.values());
  } else if (r.name == "manufactured") {
    exact = r.number(0) * random_potential(grid, alpha, detail::generator_seed(r, 1, c.seed + 1000));
    const PathProblem probe(ProblemSpec{op, alpha, chi, ScalarField(grid), PathKind::none, c.normalization});
    const Evaluation e = probe.evaluate(*exact, 0.0, 1.0, false, 1);
    if (!e.admissible)
      throw DomainError("rhs.h: manufactured potential is not admissible", e.violated_index, e.margin, e.worst_point);
    h = e.residual;
    if (c.path == PathKind::hessian) h += -op.log_form_offset();
  }
  return {std::move(grid), std::move(alpha), std::move(chi), std::move(h), std::move(op), std::move(exact)};
}

inline ProblemSpec make_spec(const RunConfig& c, const BuiltProblem& p) {
  return ProblemSpec{p.op, p.alpha, p.chi, p.h, c.path, c.normalization};
}

/// k such that the solved equation reads log(omega^k ^ alpha^{n-k} / alpha^n) = H + c,
/// so that c can be recovered by integration.
inline std::optional<int> integrable_degree(const SymmetricOperator& op, Mode mode) {
  if (mode != Mode::complex) return std::nullopt;
  switch (op.kind()) {
    case OperatorKind::log_sigma_k:
    case OperatorKind::monge_ampere: return op.k();
    case OperatorKind::composed_with_t:
      if (op.dimension() == 2 && op.inner() &&
          (op.inner()->kind() == OperatorKind::monge_ampere ||
           (op.inner()->kind() == OperatorKind::log_sigma_k && op.inner()->k() == 2)))
        return 2;
      return std::nullopt;
    default: return std::nullopt;
  }
}

/// Whether the background is alpha-scaled plus a Hessian, so that integrals of its
/// wedge powers are unchanged by adding Hess u.
inline bool background_is_closed(const RunConfig& c) { return c.chi.name.rfind("eta_", 0) != 0; }

struct Certification {
  SubsolutionCertificate certificate;
  std::optional<bool> cone_condition;  // quotient path only
  std::string level_source;
  std::vector<double> levels;
};

/// The level sigma(x) the background eigenvalues are tested against, per path.
inline std::vector<double> certification_levels(const RunConfig& c, const BuiltProblem& p, std::string& source) {
  const std::size_t N = p.grid.size();
  std::vector<double> out(N);
  const PathProblem probe(ProblemSpec{p.op, p.alpha, p.chi, ScalarField(p.grid), PathKind::none, c.normalization});
  const Evaluation e0 = probe.evaluate(ScalarField(p.grid), 0.0, 1.0, false, 1);
  switch (c.path) {
    case PathKind::quotient: {
      const double cq = compute_c(p.chi, p.alpha, p.op.l(), p.op.k());
      std::fill(out.begin(), out.end(), -cq);
      source = "-compute_c";
      return out;
    }
    case PathKind::riemannian: {
      if (!e0.admissible) throw DomainError("certify: background is not admissible", e0.violated_index, e0.margin, e0.worst_point);
      std::fill(out.begin(), out.end(), e0.residual.max());
      source = "sup F(A[0])";
      return out;
    }
    case PathKind::hessian: {
      if (const auto k = integrable_degree(p.op, c.mode); k && background_is_closed(c)) {
        const double cH = hessian_constant(p.chi, p.alpha, *k, p.h);
        for (std::size_t x = 0; x < N; ++x) out[x] = p.h[x] + p.op.log_form_offset() + cH;
        source = "H + offset + integrated constant";
        return out;
      }
      [[fallthrough]];
    }
    case PathKind::none: {
      const double offset = c.path == PathKind::hessian ? p.op.log_form_offset() : 0.0;
      const double shift = e0.admissible ? (e0.residual - p.h).mean() - offset : 0.0;
      for (std::size_t x = 0; x < N; ++x) out[x] = p.h[x] + offset + shift;
      source = e0.admissible ? "h + mean(F(A[0]) - h)" : "h";
      return out;
    }
  }
  return out;
}

/// Certifies u = 0 as a C-subsolution and estimates kappa at the extreme levels.
inline Certification certify_problem(const RunConfig& c, const BuiltProblem& p, std::uint64_t seed) {
  Certification out;
  out.levels = certification_levels(c, p, out.level_source);
  const auto eig = eigenvalue_field(p.alpha, p.chi);
  out.certificate = certify_field(p.op, eig, out.levels, c.delta_grid);
  if (c.path == PathKind::quotient) {
    const double cq = -out.levels.front();
    bool ok = true;
    for (const Vector& mu : eig) ok = ok && quotient_cone_condition(mu, cq, p.op.l(), p.op.k());
    out.cone_condition = ok;
    if (!ok && out.certificate.certified) {
      out.certificate.certified = false;
      out.certificate.witness.reset();
    }
  }
  if (out.certificate.certified) {
    const auto lo = std::min_element(out.levels.begin(), out.levels.end()) - out.levels.begin();
    const auto hi = std::max_element(out.levels.begin(), out.levels.end()) - out.levels.begin();
    double kappa = std::numeric_limits<double>::infinity();
    try {
      for (auto x : {lo, hi}) {
        const Vector mu = eig[static_cast<std::size_t>(x)] - 2.0 * out.certificate.delta * Vector::Ones(p.op.dimension());
        kappa = std::min(kappa, estimate_kappa(p.op, mu, out.levels[static_cast<std::size_t>(x)],
                                               std::max(out.certificate.R, 1.0), c.kappa_samples, seed));
      }
      out.certificate.kappa = kappa;
      out.certificate.kappa_samples = c.kappa_samples;
    } catch (const NumericError&) {
      out.certificate.kappa = 0.0;
      out.certificate.kappa_samples = 0;
    }
  }
  return out;
}

inline nlohmann::json to_json(const Certification& c) {
  nlohmann::json j = to_json(c.certificate);
  j["subsolution"] = "u = 0";
  j["level_source"] = c.level_source;
  if (c.cone_condition) j["cone_condition"] = *c.cone_condition;
  return j;
}

/// Diagnostics of a finished solve, attached to the report.
inline nlohmann::json solve_diagnostics(const RunConfig& c, const BuiltProblem& p, const PathProblem& problem,
                                        const SolveReport& report) {
  nlohmann::json d = nlohmann::json::object();
  if (!report.final_state) return d;
  const SolveState& st = *report.final_state;
  const MatrixField g = p.chi + hessian_field(st.u);
  if (c.mode == Mode::complex) d["hmw"] = to_json(hmw_ratio(st.u, p.alpha, c.hmw_A));
  d["trace_estimate"] = to_json(trace_estimate_check(st.u, g, p.alpha, c.trace_A, c.trace_threshold));
  const SymmetricOperator op = problem.operator_at(st.t);
  try {
    d["strong_concavity"] = to_json(strong_concavity_flags(op, eigenvalue_field(p.alpha, g)));
  } catch (const ArgumentError& e) {
    d["strong_concavity"] = {{"error", e.what()}};
  }
  if (p.exact && report.u) d["manufactured_sup_error"] = (*report.u - normalize(*p.exact, c.normalization)).sup_norm();
  if (c.path == PathKind::hessian && report.completed)
    if (const auto k = integrable_degree(p.op, c.mode)) {
      d["c_integrated"] = hessian_constant(g, p.alpha, *k, p.h);
      if (background_is_closed(c)) d["c_cohomological"] = hessian_constant(p.chi, p.alpha, *k, p.h);
    }
  return d;
}

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

inline void prepare_output(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
}

}  // namespace detail

/// Certification, optional solve and diagnostics for one config. Writes
/// solve_report.json, certificate.json, summary.txt and, after a solve, u.bin / h.bin
/// with sidecars and a CSV slice. Returns the process exit code.
inline int run(RunConfig config, const RunOptions& opt, bool solve = true) {
  const auto started = std::chrono::steady_clock::now();
  if (opt.seed) config.seed = *opt.seed;
  std::ostream& log = *opt.log;
  const std::filesystem::path out_dir = opt.output.empty() ? std::filesystem::path(config.output_dir) : opt.output;

  nlohmann::json report{{"schema", "v1"}, {"version", library_version()}, {"config", config.resolved()}};
  std::ostringstream summary;
  summary << "fnle " << library_version() << "\n";
  int code = exit_ok;

  auto finish = [&](int exit_code) {
    report["exit_code"] = exit_code;
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    summary << "exit code: " << exit_code << "\n" << "wall time: " << seconds << " s\n";
    try {
      detail::prepare_output(out_dir);
      detail::write_text(out_dir / "solve_report.json", report.dump(2) + "\n");
      detail::write_text(out_dir / "summary.txt", summary.str());
    } catch (const IoError& e) {
      log << "error: " << e.what() << "\n";
      return static_cast<int>(exit_io);
    }
    log << summary.str();
    return exit_code;
  };

  try {
    detail::prepare_output(out_dir);
    const BuiltProblem p = build_problem(config, opt.config_dir);
    report["grid"] = p.grid.describe();
    report["operator"] = p.op.name();
    summary << "operator: " << p.op.name() << "  grid: " << p.grid.describe().dump() << "\n";

    if (p.op.dimension() < 2 && (config.certify || opt.check_only || !solve)) {
      const nlohmann::json cj{{"subsolution", "u = 0"}, {"verdict", "not_applicable"},
                              {"reason", "level sets of a one-variable operator are single points"}};
      report["certificate"] = cj;
      detail::write_text(out_dir / "certificate.json", cj.dump(2) + "\n");
      summary << "subsolution u=0: not applicable for n = 1\n";
    } else if (config.certify || opt.check_only || !solve) {
      const Certification cert = certify_problem(config, p, config.seed);
      const nlohmann::json cj = to_json(cert);
      report["certificate"] = cj;
      detail::write_text(out_dir / "certificate.json", cj.dump(2) + "\n");
      summary << "subsolution u=0: " << cj["verdict"].get<std::string>();
      if (cert.certificate.certified)
        summary << " (delta " << cert.certificate.delta << ", R " << cert.certificate.R << ", kappa "
                << cert.certificate.kappa << ")";
      summary << "\n";
      if (!cert.certificate.certified) {
        if (cert.certificate.witness)
          summary << "witness: grid point " << cert.certificate.witness->point << ", subtuple "
                  << cert.certificate.witness->subtuple << "\n";
        return finish(exit_refuted);
      }
    }
    if (opt.check_only) {
      const PropertySuite suite = operator_property_suite(p.op, 200, config.seed);
      report["property_suite"] = to_json(suite);
      summary << "operator property suite: " << (suite.passed() ? "PASS" : "FAIL") << "\n";
      return finish(suite.passed() ? exit_ok : exit_failure);
    }
    if (!solve) return finish(exit_ok);

    SolverOptions so = config.solver;
    so.threads = opt.threads;
    const PathProblem problem(make_spec(config, p));
    SolveReport sr = run_continuity(problem, uniform_schedule(config.schedule_steps), so);
    sr.diagnostics = solve_diagnostics(config, p, problem, sr);
    report["solve"] = to_json(sr);
    summary << "path: " << to_string(sr.path) << "  steps: " << sr.steps.size()
            << "  completed: " << (sr.completed ? "yes" : "no") << "\n";
    summary << "c = " << std::setprecision(12) << sr.c << "\n";
    if (sr.quotient_c) summary << "compute_c = " << *sr.quotient_c << "\n";
    if (sr.final_state) summary << "final residual: " << sr.final_state->residual_norm << "\n";
    if (sr.diagnostics.contains("manufactured_sup_error"))
      summary << "manufactured sup error: " << sr.diagnostics["manufactured_sup_error"].get<double>() << "\n";
    if (!sr.abort_reason.empty()) summary << "aborted: " << sr.abort_reason << "\n";
    if (sr.u) {
      write_field(*sr.u, out_dir / "u.bin", "u");
      write_csv_slice(*sr.u, out_dir / "u_slice.csv");
    }
    write_field(p.h, out_dir / "h.bin", "h");
    code = sr.completed ? exit_ok : exit_stagnation;
  } catch (const IoError& e) {
    report["error"] = {{"kind", "io"}, {"message", e.what()}};
    summary << "I/O error: " << e.what() << "\n";
    return finish(exit_io);
  } catch (const DomainError& e) {
    report["error"] = {{"kind", "domain"}, {"message", e.what()}, {"violated_index", e.violated_index()},
                       {"margin", e.margin()}, {"grid_index", e.grid_index()}};
    summary << "domain error: " << e.what() << "\n";
    return finish(exit_domain);
  } catch (const StagnationError& e) {
    report["error"] = {{"kind", "stagnation"}, {"message", e.what()}};
    summary << "stagnation: " << e.what() << "\n";
    return finish(exit_stagnation);
  }
  return finish(code);
}

/// Reads and parses a config file; throws IoError or ConfigError.
inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace fnle
