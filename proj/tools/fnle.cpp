// fnle: command-line driver (solve, certify, selftest, abp).

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "fnle/app.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::string output;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  bool check_only = false;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool config_required) {
  auto* opt = cmd->add_option("--config", f.config, "INI configuration file");
  if (config_required) opt->required()->check(CLI::ExistingFile);
  cmd->add_option("--output", f.output, "output directory (overrides output.directory)");
  cmd->add_option("--seed", f.seed, "random seed (overrides problem.seed)");
  cmd->add_option("--threads", f.threads, "worker threads for pointwise evaluation")->check(CLI::PositiveNumber);
}

fnle::RunOptions run_options(const CommonFlags& f) {
  fnle::RunOptions o;
  o.output = f.output;
  o.seed = f.seed;
  o.threads = f.threads;
  o.check_only = f.check_only;
  if (!f.config.empty()) o.config_dir = std::filesystem::path(f.config).parent_path();
  if (o.config_dir.empty()) o.config_dir = ".";
  return o;
}

int with_config(const CommonFlags& f, bool solve) {
  try {
    return fnle::run(fnle::load_config(f.config), run_options(f), solve);
  } catch (const fnle::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return fnle::exit_io;
  } catch (const fnle::ArgumentError& e) {
    std::cerr << e.what() << "\n";
    return fnle::exit_failure;
  }
}

int selftest(const CommonFlags& f) {
  const std::uint64_t seed = f.seed.value_or(1);
  nlohmann::json all = nlohmann::json::array();
  bool ok = true;
  auto report = [&](const fnle::PropertySuite& s) {
    for (const auto& c : s.checks)
      std::cout << (c.passed ? "PASS " : "FAIL ") << s.subject << " " << c.name << " (worst " << c.worst << ")\n";
    ok = ok && s.passed();
    all.push_back(fnle::to_json(s));
  };
  for (const auto& op : fnle::selftest_operators()) report(fnle::operator_property_suite(op, 50, seed));
  report(fnle::spectral_property_suite());
  if (!f.output.empty()) {
    std::filesystem::create_directories(f.output);
    std::ofstream out(std::filesystem::path(f.output) / "selftest.json");
    if (!out) return fnle::exit_io;
    out << nlohmann::json{{"schema", "v1"}, {"version", fnle::library_version()}, {"seed", seed}, {"suites", all}}.dump(2)
        << "\n";
  }
  std::cout << (ok ? "selftest passed\n" : "selftest FAILED\n");
  return ok ? fnle::exit_ok : fnle::exit_failure;
}

int abp(const CommonFlags& f, std::optional<double> epsilon, std::optional<int> grid) {
  fnle::RunConfig c;
  try {
    if (!f.config.empty()) c = fnle::load_config(f.config);
  } catch (const fnle::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return fnle::exit_io;
  } catch (const fnle::ArgumentError& e) {
    std::cerr << e.what() << "\n";
    return fnle::exit_failure;
  }
  if (epsilon) c.abp_epsilon = *epsilon;
  if (grid) c.abp_grid = *grid;
  if (f.seed) c.seed = *f.seed;
  try {
    fnle::BallSamples::Function v;
    if (c.abp_function.name == "quadratic") {
      const double a = c.abp_function.number(0);
      v = [a](double x, double y) { return a * (x * x + y * y); };
    } else {
      v = fnle::random_abp_function(static_cast<std::uint64_t>(c.abp_function.number(0)), c.abp_epsilon);
    }
    const fnle::AbpReport r = fnle::abp_check(fnle::BallSamples::sample(v, c.abp_grid), c.abp_epsilon);
    const nlohmann::json j{{"schema", "v1"},
                           {"version", fnle::library_version()},
                           {"function", c.abp_function.str()},
                           {"grid", c.abp_grid},
                           {"report", fnle::to_json(r)}};
    std::cout << "integral det D^2v over P = " << r.integral_det << ", lower bound c0 eps^2 = " << r.lower_bound
              << (r.passed ? "  PASS\n" : "  FAIL\n");
    if (!f.output.empty()) {
      std::filesystem::create_directories(f.output);
      std::ofstream out(std::filesystem::path(f.output) / "abp_report.json");
      if (!out) return fnle::exit_io;
      out << j.dump(2) << "\n";
    }
    return r.passed ? fnle::exit_ok : fnle::exit_failure;
  } catch (const fnle::ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return fnle::exit_failure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fully nonlinear elliptic equations on flat tori"};
  app.set_version_flag("--version", std::string(fnle::library_version()));
  app.require_subcommand(1);

  CommonFlags solve_flags, certify_flags, selftest_flags, abp_flags;
  auto* solve = app.add_subcommand("solve", "certify, solve and write reports");
  add_common(solve, solve_flags, true);
  solve->add_flag("--check-only", solve_flags.check_only, "certification and operator property suite only");
  auto* certify = app.add_subcommand("certify", "certify u = 0 as a subsolution");
  add_common(certify, certify_flags, true);
  auto* self = app.add_subcommand("selftest", "operator and spectral property checks");
  add_common(self, selftest_flags, false);
  auto* abp_cmd = app.add_subcommand("abp", "contact-set integral check on the unit disc");
  add_common(abp_cmd, abp_flags, false);
  std::optional<double> epsilon;
  std::optional<int> grid;
  abp_cmd->add_option("--epsilon", epsilon, "epsilon (overrides abp.epsilon)");
  abp_cmd->add_option("--grid", grid, "grid intervals per axis (overrides abp.grid)");

  CLI11_PARSE(app, argc, argv);

  if (*solve) return with_config(solve_flags, true);
  if (*certify) return with_config(certify_flags, false);
  if (*self) return selftest(selftest_flags);
  return abp(abp_flags, epsilon, grid);
}
