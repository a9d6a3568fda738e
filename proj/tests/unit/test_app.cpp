#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fnle/app.hpp"
#include "oracles.hpp"

using namespace fnle;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path fresh(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("fnle_app_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

const char* kQuotient = R"(
[problem]
mode = complex
dimension = 2
layout = tube
[grid]
points_per_axis = 16
[operator]
kind = hessian_quotient
k = 2
l = 1
[background]
chi = chi_scaled(2)
[path]
kind = quotient
schedule_steps = 5
[certify]
kappa_samples = 100
)";

int run_quiet(const RunConfig& c, RunOptions o, bool solve = true) {
  std::ostringstream sink;
  o.log = &sink;
  return run(c, o, solve);
}

}  // namespace

TEST(Config, ParsesMinimalFile) {
  const RunConfig c = parse_config(kQuotient);
  EXPECT_EQ(c.mode, Mode::complex);
  EXPECT_EQ(c.layout, Layout::tube);
  EXPECT_EQ(c.dimension, 2);
  EXPECT_EQ(c.path, PathKind::quotient);
  EXPECT_EQ(c.chi.name, "chi_scaled");
  EXPECT_DOUBLE_EQ(c.chi.number(0), 2.0);
  EXPECT_EQ(c.make_operator().kind(), OperatorKind::hessian_quotient);
  EXPECT_EQ(c.resolved()["operator"]["k"], 2);
}

TEST(Config, CollectsEveryError) {
  try {
    parse_config("[problem]\nmode = complex\nbogus = 1\n[operator]\nkind = hessian_quotient\nk = 2\nl = 2\n");
    FAIL();
  } catch (const ConfigError& e) {
    const auto& errs = e.errors();
    auto has = [&](const std::string& needle) {
      return std::any_of(errs.begin(), errs.end(), [&](const std::string& s) { return s.find(needle) != std::string::npos; });
    };
    EXPECT_TRUE(has("unknown key problem.bogus"));
    EXPECT_TRUE(has("missing required key problem.dimension"));
    EXPECT_TRUE(has("missing required key grid.points_per_axis"));
    EXPECT_TRUE(has("require l < k"));
  }
}

TEST(Config, RejectsInconsistentPaths) {
  std::string text = kQuotient;
  text.replace(text.find("mode = complex"), 14, "mode = real");
  EXPECT_THROW(parse_config(text), ConfigError);
  EXPECT_THROW(parse_config("[problem]\nmode = complex\ndimension = 1\n[grid]\npoints_per_axis = 8\n[operator]\nkind = "
                            "monge_ampere\n[background]\nchi = eta_scaled(1)\n"),
               ConfigError);
}

TEST(Config, GeneratorSyntax) {
  const GeneratorExpr g = parse_generator("chi_perturbed(1, 0.2, 7)");
  EXPECT_EQ(g.name, "chi_perturbed");
  ASSERT_EQ(g.args.size(), 3u);
  EXPECT_DOUBLE_EQ(g.number(2), 7.0);
  EXPECT_EQ(parse_generator("zero").args.size(), 0u);
}

TEST(Config, MissingFileIsIoError) { EXPECT_THROW(load_config("/nonexistent/fnle.ini"), IoError); }

TEST(Run, QuotientDemoWritesReports) {
  const auto dir = fresh("quotient");
  RunOptions o;
  o.output = dir;
  EXPECT_EQ(run_quiet(parse_config(kQuotient), o), exit_ok);
  for (const char* f : {"solve_report.json", "summary.txt", "certificate.json", "u.bin", "u.bin.json", "h.bin", "u_slice.csv"})
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  const auto report = nlohmann::json::parse(slurp(dir / "solve_report.json"));
  EXPECT_EQ(report["schema"], "v1");
  EXPECT_EQ(report["certificate"]["verdict"], "certified");
  EXPECT_NEAR(report["solve"]["c"].get<double>(), 0.5, 1e-8);
}

TEST(Run, DeterministicAcrossThreadCounts) {
  const auto a = fresh("det1"), b = fresh("det4");
  RunOptions o;
  o.output = a;
  ASSERT_EQ(run_quiet(parse_config(kQuotient), o), exit_ok);
  o.output = b;
  o.threads = 4;
  ASSERT_EQ(run_quiet(parse_config(kQuotient), o), exit_ok);
  EXPECT_EQ(slurp(a / "solve_report.json"), slurp(b / "solve_report.json"));
  EXPECT_EQ(slurp(a / "u.bin"), slurp(b / "u.bin"));
}

TEST(Run, RefutedBackgroundExitsWithWitness) {
  std::string text = kQuotient;
  text.replace(text.find("chi_scaled(2)"), 13, "chi_perturbed(1, 0.9, 5)");
  const auto dir = fresh("refuted");
  RunOptions o;
  o.output = dir;
  EXPECT_EQ(run_quiet(parse_config(text), o), exit_refuted);
  const auto cert = nlohmann::json::parse(slurp(dir / "certificate.json"));
  EXPECT_EQ(cert["verdict"], "refuted");
  EXPECT_FALSE(cert["witness"].is_null());
}

TEST(Run, CheckOnlyRunsPropertySuite) {
  const auto dir = fresh("check");
  RunOptions o;
  o.output = dir;
  o.check_only = true;
  EXPECT_EQ(run_quiet(parse_config(kQuotient), o), exit_ok);
  const auto report = nlohmann::json::parse(slurp(dir / "solve_report.json"));
  EXPECT_TRUE(report.contains("property_suite"));
  EXPECT_FALSE(std::filesystem::exists(dir / "u.bin"));
}

TEST(Run, InadmissibleBackgroundIsDomainError) {
  const char* text = R"(
[problem]
mode = real
dimension = 2
[grid]
points_per_axis = 8
[operator]
kind = log_sigma_k
k = 2
[background]
chi = chi_scaled(-1)
[path]
kind = none
[certify]
enabled = false
)";
  const auto dir = fresh("domain");
  RunOptions o;
  o.output = dir;
  EXPECT_EQ(run_quiet(parse_config(text), o), exit_domain);
  const auto report = nlohmann::json::parse(slurp(dir / "solve_report.json"));
  EXPECT_EQ(report["error"]["kind"], "domain");
}

TEST(Selftest, PropertySuitesPass) {
  for (const auto& op : selftest_operators()) EXPECT_TRUE(operator_property_suite(op, 20, 3).passed()) << op.name();
  EXPECT_TRUE(spectral_property_suite().passed());
}
