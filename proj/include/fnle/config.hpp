#pragma once

// Run configuration: an INI file with sections, parsed with Boost.PropertyTree and
// validated in one pass so that every problem is reported together.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fnle/solver.hpp"

namespace fnle {

/// All validation failures of a configuration.
class ConfigError : public ArgumentError {
 public:
  explicit ConfigError(std::vector<std::string> errors) : ArgumentError(join(errors)), errors_(std::move(errors)) {}
  const std::vector<std::string>& errors() const noexcept { return errors_; }

 private:
  static std::string join(const std::vector<std::string>& errors) {
    std::string s = "invalid configuration:";
    for (const auto& e : errors) s += "\n  " + e;
    return s;
  }
  std::vector<std::string> errors_;
};

/// `name(arg, arg, ...)` or a bare `name`; `file:PATH` is kept as name "file".
struct GeneratorExpr {
  std::string name;
  std::vector<std::string> args;

  std::string str() const {
    if (name == "file") return "file:" + (args.empty() ? std::string() : args[0]);
    if (args.empty()) return name;
    std::string s = name + "(";
    for (std::size_t i = 0; i < args.size(); ++i) s += (i ? ", " : "") + args[i];
    return s + ")";
  }
  double number(std::size_t i) const {
    if (i >= args.size()) throw ArgumentError(name + ": missing argument " + std::to_string(i + 1));
    try {
      std::size_t used = 0;
      const double v = std::stod(args[i], &used);
      if (used != args[i].size()) throw std::invalid_argument(args[i]);
      return v;
    } catch (const std::exception&) {
      throw ArgumentError(name + ": argument '" + args[i] + "' is not a number");
    }
  }
};

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline GeneratorExpr parse_generator(const std::string& text) {
  const std::string s = trim(text);
  if (s.rfind("file:", 0) == 0) return {"file", {trim(s.substr(5))}};
  const auto open = s.find('(');
  if (open == std::string::npos) {
    if (s.empty()) throw ArgumentError("empty generator expression");
    return {s, {}};
  }
  if (s.back() != ')') throw ArgumentError("generator '" + s + "': missing ')'");
  GeneratorExpr g{trim(s.substr(0, open)), {}};
  std::stringstream inner(s.substr(open + 1, s.size() - open - 2));
  std::string part;
  while (std::getline(inner, part, ',')) g.args.push_back(trim(part));
  if (g.args.size() == 1 && g.args[0].empty()) g.args.clear();
  return g;
}

struct RunConfig {
  Mode mode = Mode::complex;
  Layout layout = Layout::full;
  int dimension = 1;
  int points_per_axis = 0;
  double period = 1.0;
  std::uint64_t seed = 1;

  std::string op_kind;
  int k = 0;
  int l = 0;
  std::string inner = "monge_ampere";

  GeneratorExpr alpha{"alpha_scaled", {"1"}};
  GeneratorExpr chi{"chi_scaled", {"1"}};
  GeneratorExpr rhs{"zero", {}};

  PathKind path = PathKind::none;
  int schedule_steps = 21;
  Normalization normalization = Normalization::mean_zero;
  SolverOptions solver;

  bool certify = true;
  std::vector<double> delta_grid{0.25, 0.1, 0.05, 0.02, 0.01};
  int kappa_samples = 1000;

  double hmw_A = 1.0;
  double trace_A = 1.0;
  double trace_threshold = 1e6;

  double abp_epsilon = 0.4;
  int abp_grid = 64;
  GeneratorExpr abp_function{"quadratic", {"0.4"}};

  std::string output_dir = "fnle_out";

  SymmetricOperator make_operator() const { return operator_from_name(op_kind, dimension, k, l, inner); }

  nlohmann::json resolved() const {
    return {{"problem", {{"mode", to_string(mode)}, {"layout", to_string(layout)}, {"dimension", dimension}, {"seed", seed}}},
            {"grid", {{"points_per_axis", points_per_axis}, {"period", period}}},
            {"operator", {{"kind", op_kind}, {"k", k}, {"l", l}, {"inner", inner}}},
            {"background", {{"alpha", alpha.str()}, {"chi", chi.str()}}},
            {"rhs", {{"h", rhs.str()}}},
            {"path", {{"kind", to_string(path)}, {"schedule_steps", schedule_steps}, {"normalization", to_string(normalization)}}},
            {"solver",
             {{"tolerance", solver.tolerance},
              {"max_iterations", solver.max_iterations},
              {"max_halvings", solver.max_halvings},
              {"min_dt", solver.min_dt},
              {"gmres_restart", solver.gmres_restart}}},
            {"certify", {{"enabled", certify}, {"delta_grid", delta_grid}, {"kappa_samples", kappa_samples}}},
            {"diagnostics", {{"hmw_A", hmw_A}, {"trace_A", trace_A}, {"trace_threshold", trace_threshold}}},
            {"abp", {{"epsilon", abp_epsilon}, {"grid", abp_grid}, {"function", abp_function.str()}}},
            {"output", {{"directory", output_dir}}}};
  }
};

namespace detail {

inline const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"problem", {"mode", "dimension", "layout", "seed"}},
      {"grid", {"points_per_axis", "period"}},
      {"operator", {"kind", "k", "l", "inner"}},
      {"background", {"alpha", "chi"}},
      {"rhs", {"h"}},
      {"path", {"kind", "schedule_steps", "normalization"}},
      {"solver", {"tolerance", "max_iterations", "max_halvings", "min_dt", "gmres_restart"}},
      {"certify", {"enabled", "delta_grid", "kappa_samples"}},
      {"diagnostics", {"hmw_A", "trace_A", "trace_threshold"}},
      {"abp", {"epsilon", "grid", "function"}},
      {"output", {"directory"}},
  };
  return keys;
}

class Reader {
 public:
  Reader(const boost::property_tree::ptree& tree, std::vector<std::string>& errors) : tree_(tree), errors_(errors) {}

  bool has(const std::string& key) const { return tree_.get_optional<std::string>(key).has_value(); }

  std::string text(const std::string& key, const std::string& fallback, bool required = false) const {
    auto v = tree_.get_optional<std::string>(key);
    if (!v) {
      if (required) errors_.push_back("missing required key " + key);
      return fallback;
    }
    return trim(*v);
  }

  template <class T>
  T number(const std::string& key, T fallback, bool required = false) const {
    auto v = tree_.get_optional<std::string>(key);
    if (!v) {
      if (required) errors_.push_back("missing required key " + key);
      return fallback;
    }
    try {
      std::size_t used = 0;
      const std::string s = trim(*v);
      T out{};
      if constexpr (std::is_floating_point_v<T>)
        out = static_cast<T>(std::stod(s, &used));
      else
        out = static_cast<T>(std::stoll(s, &used));
      if (used != s.size()) throw std::invalid_argument(s);
      return out;
    } catch (const std::exception&) {
      errors_.push_back(key + ": '" + *v + "' is not a valid number");
      return fallback;
    }
  }

  bool flag(const std::string& key, bool fallback) const {
    auto v = tree_.get_optional<std::string>(key);
    if (!v) return fallback;
    const std::string s = trim(*v);
    if (s == "true" || s == "yes" || s == "1" || s == "on") return true;
    if (s == "false" || s == "no" || s == "0" || s == "off") return false;
    errors_.push_back(key + ": '" + s + "' is not a boolean");
    return fallback;
  }

  GeneratorExpr generator(const std::string& key, const GeneratorExpr& fallback) const {
    auto v = tree_.get_optional<std::string>(key);
    if (!v) return fallback;
    try {
      return parse_generator(*v);
    } catch (const ArgumentError& e) {
      errors_.push_back(key + ": " + e.what());
      return fallback;
    }
  }

 private:
  const boost::property_tree::ptree& tree_;
  std::vector<std::string>& errors_;
};

inline void check_generator(const GeneratorExpr& g, const std::string& key,
                            const std::map<std::string, std::pair<std::size_t, std::size_t>>& allowed,
                            std::vector<std::string>& errors) {
  const auto it = allowed.find(g.name);
  if (it == allowed.end()) {
    std::string names;
    for (const auto& [n, _] : allowed) names += (names.empty() ? "" : ", ") + n;
    errors.push_back(key + ": unknown generator '" + g.name + "' (expected one of " + names + ")");
    return;
  }
  const auto [lo, hi] = it->second;
  if (g.args.size() < lo || g.args.size() > hi) {
    errors.push_back(key + ": " + g.name + " takes " + std::to_string(lo) + (lo == hi ? "" : "-" + std::to_string(hi)) +
                     " arguments");
    return;
  }
  if (g.name == "file" || g.name == "potential_file") return;
  for (std::size_t i = 0; i < g.args.size(); ++i) {
    try {
      g.number(i);
    } catch (const ArgumentError& e) {
      errors.push_back(key + ": " + e.what());
    }
  }
}

}  // namespace detail

/// Parses and validates an INI configuration; throws ConfigError listing every problem.
inline RunConfig parse_config(const std::string& text) {
  boost::property_tree::ptree tree;
  try {
    std::istringstream in(text);
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError({std::string("syntax: ") + e.message() + " (line " + std::to_string(e.line()) + ")"});
  }

  std::vector<std::string> errors;
  for (const auto& [section, body] : tree) {
    const auto it = detail::known_keys().find(section);
    if (it == detail::known_keys().end()) {
      if (body.empty())
        errors.push_back("key '" + section + "' outside any section");
      else
        errors.push_back("unknown section [" + section + "]");
      continue;
    }
    for (const auto& [key, _] : body)
      if (!it->second.count(key)) errors.push_back("unknown key " + section + "." + key);
  }

  const detail::Reader r(tree, errors);
  RunConfig c;
  const std::string mode = r.text("problem.mode", "complex", true);
  if (mode == "complex")
    c.mode = Mode::complex;
  else if (mode == "real")
    c.mode = Mode::real;
  else
    errors.push_back("problem.mode: expected complex or real, got '" + mode + "'");
  c.dimension = r.number<int>("problem.dimension", 1, true);
  if (c.dimension < 1 || c.dimension > 3) errors.push_back("problem.dimension: must be 1, 2 or 3");
  const std::string layout = r.text("problem.layout", c.dimension == 1 ? "full" : "tube");
  if (layout == "full")
    c.layout = Layout::full;
  else if (layout == "tube")
    c.layout = Layout::tube;
  else
    errors.push_back("problem.layout: expected full or tube, got '" + layout + "'");
  if (c.mode == Mode::real) c.layout = Layout::full;
  c.seed = r.number<std::uint64_t>("problem.seed", 1);

  c.points_per_axis = r.number<int>("grid.points_per_axis", 0, true);
  if (r.has("grid.points_per_axis") && (c.points_per_axis < 4 || c.points_per_axis % 2 != 0))
    errors.push_back("grid.points_per_axis: must be even and >= 4");
  c.period = r.number<double>("grid.period", 1.0);
  if (!(c.period > 0.0)) errors.push_back("grid.period: must be positive");

  c.op_kind = r.text("operator.kind", "", true);
  c.k = r.number<int>("operator.k", c.dimension);
  c.l = r.number<int>("operator.l", 0);
  c.inner = r.text("operator.inner", "monge_ampere");
  if (!c.op_kind.empty()) {
    try {
      (void)c.make_operator();
    } catch (const std::exception& e) {
      errors.push_back(std::string("operator: ") + e.what());
    }
  }

  c.alpha = r.generator("background.alpha", c.alpha);
  c.chi = r.generator("background.chi", c.chi);
  c.rhs = r.generator("rhs.h", c.rhs);
  detail::check_generator(c.alpha, "background.alpha", {{"alpha_scaled", {1, 1}}}, errors);
  detail::check_generator(c.chi, "background.chi",
                          {{"chi_scaled", {1, 1}},
                           {"chi_perturbed", {2, 3}},
                           {"eta_scaled", {1, 1}},
                           {"eta_perturbed", {2, 3}},
                           {"potential_file", {2, 2}}},
                          errors);
  detail::check_generator(c.rhs, "rhs.h",
                          {{"zero", {0, 0}},
                           {"constant", {1, 1}},
                           {"smooth", {1, 2}},
                           {"manufactured", {1, 2}},
                           {"file", {1, 1}}},
                          errors);
  if ((c.chi.name == "eta_scaled" || c.chi.name == "eta_perturbed") && (c.mode != Mode::complex || c.dimension < 2))
    errors.push_back("background.chi: eta backgrounds need a complex torus with dimension >= 2");

  const std::string path = r.text("path.kind", "none");
  if (path == "none")
    c.path = PathKind::none;
  else if (path == "hessian")
    c.path = PathKind::hessian;
  else if (path == "quotient")
    c.path = PathKind::quotient;
  else if (path == "riemannian")
    c.path = PathKind::riemannian;
  else
    errors.push_back("path.kind: expected none, hessian, quotient or riemannian, got '" + path + "'");
  if (c.path == PathKind::quotient && c.op_kind != "hessian_quotient")
    errors.push_back("path.kind: quotient path needs operator.kind = hessian_quotient");
  if (c.path == PathKind::quotient && c.mode != Mode::complex) errors.push_back("path.kind: quotient path needs mode = complex");
  if (c.path == PathKind::riemannian && c.mode != Mode::real) errors.push_back("path.kind: riemannian path needs mode = real");
  if ((c.path == PathKind::quotient || c.path == PathKind::riemannian) && c.rhs.name != "zero")
    errors.push_back("rhs.h: the " + path + " path fixes its own right-hand side; use h = zero");
  c.schedule_steps = r.number<int>("path.schedule_steps", 21);
  if (c.schedule_steps < 2) errors.push_back("path.schedule_steps: must be >= 2");
  const std::string norm = r.text("path.normalization", "mean_zero");
  if (norm == "mean_zero")
    c.normalization = Normalization::mean_zero;
  else if (norm == "sup_zero")
    c.normalization = Normalization::sup_zero;
  else
    errors.push_back("path.normalization: expected mean_zero or sup_zero, got '" + norm + "'");

  c.solver.tolerance = r.number<double>("solver.tolerance", c.solver.tolerance);
  c.solver.max_iterations = r.number<int>("solver.max_iterations", c.solver.max_iterations);
  c.solver.max_halvings = r.number<int>("solver.max_halvings", c.solver.max_halvings);
  c.solver.min_dt = r.number<double>("solver.min_dt", c.solver.min_dt);
  c.solver.gmres_restart = r.number<int>("solver.gmres_restart", c.solver.gmres_restart);
  if (!(c.solver.tolerance > 0.0)) errors.push_back("solver.tolerance: must be positive");

  c.certify = r.flag("certify.enabled", c.certify);
  if (r.has("certify.delta_grid")) {
    c.delta_grid.clear();
    std::stringstream ss(r.text("certify.delta_grid", ""));
    std::string part;
    while (std::getline(ss, part, ',')) {
      try {
        c.delta_grid.push_back(std::stod(trim(part)));
      } catch (const std::exception&) {
        errors.push_back("certify.delta_grid: '" + trim(part) + "' is not a number");
      }
    }
    if (c.delta_grid.empty()) errors.push_back("certify.delta_grid: empty");
  }
  c.kappa_samples = r.number<int>("certify.kappa_samples", c.kappa_samples);
  if (c.kappa_samples < 1) errors.push_back("certify.kappa_samples: must be positive");

  c.hmw_A = r.number<double>("diagnostics.hmw_A", c.hmw_A);
  c.trace_A = r.number<double>("diagnostics.trace_A", c.trace_A);
  c.trace_threshold = r.number<double>("diagnostics.trace_threshold", c.trace_threshold);

  c.abp_epsilon = r.number<double>("abp.epsilon", c.abp_epsilon);
  c.abp_grid = r.number<int>("abp.grid", c.abp_grid);
  c.abp_function = r.generator("abp.function", c.abp_function);
  detail::check_generator(c.abp_function, "abp.function", {{"quadratic", {1, 1}}, {"well", {1, 1}}}, errors);

  c.output_dir = r.text("output.directory", c.output_dir);

  if (!c.op_kind.empty() && errors.empty()) {
    try {
      if (c.make_operator().dimension() != c.dimension) errors.push_back("operator: dimension mismatch");
    } catch (const std::exception&) {
    }
  }
  if (!errors.empty()) throw ConfigError(std::move(errors));
  return c;
}

}  // namespace fnle
