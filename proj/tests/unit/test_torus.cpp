#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "oracles.hpp"

using namespace fnle;
using std::numbers::pi;

namespace {

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("fnle_unit_" + name);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST(Grid, RejectsBadShapes) {
  EXPECT_THROW(PeriodicGrid::real(2, 7), ArgumentError);
  EXPECT_THROW(PeriodicGrid::real(4, 8), ArgumentError);
  EXPECT_THROW(PeriodicGrid::complex_full(1, 2), ArgumentError);
  EXPECT_EQ(PeriodicGrid::complex_full(2, 8).axes(), 4);
  EXPECT_EQ(PeriodicGrid::complex_tube(2, 8).axes(), 2);
}

TEST(Spectral, FirstDerivativeOfSine) {
  const auto g = PeriodicGrid::real(1, 32, 2.0);
  const auto f = ScalarField::from_function(g, [](std::span<const double> x) { return std::sin(pi * x[0]); });
  const auto ref = ScalarField::from_function(g, [](std::span<const double> x) { return pi * std::cos(pi * x[0]); });
  EXPECT_LT((spectral_derivative(f, 0) - ref).sup_norm(), 1e-12);
  EXPECT_LT(spectral_derivative(ScalarField::constant(g, 3.0), 0).sup_norm(), 1e-14);
}

TEST(Spectral, MixedDerivative) {
  const auto g = PeriodicGrid::real(2, 16);
  const auto f = ScalarField::from_function(
      g, [](std::span<const double> x) { return std::sin(2 * pi * x[0]) * std::sin(2 * pi * x[1]); });
  const auto ref = ScalarField::from_function(
      g, [](std::span<const double> x) { return 4 * pi * pi * std::cos(2 * pi * x[0]) * std::cos(2 * pi * x[1]); });
  EXPECT_LT((spectral_derivative(f, 0, 1) - ref).sup_norm(), 1e-11);
}

TEST(Spectral, NonFiniteInputThrows) {
  const auto g = PeriodicGrid::real(1, 8);
  ScalarField f(g);
  f[3] = std::nan("");
  EXPECT_THROW(spectral_derivative(f, 0), NumericError);
}

TEST(Spectral, AgreesWithFiniteDifferencesOnSmoothField) {
  const auto g = PeriodicGrid::real(2, 64);
  const ScalarField phi = random_smooth_field(g, 3);
  const ScalarField d = spectral_derivative(phi, 0, 0);
  const double h = g.spacing(0);
  const int N = g.points_per_axis();
  double worst = 0.0;
  for (std::size_t p = 0; p < g.size(); ++p) {
    const int i = g.axis_index(p, 0);
    auto at = [&](int di) {
      const std::size_t row = static_cast<std::size_t>((i + di + N) % N);
      return phi[row * static_cast<std::size_t>(N) + static_cast<std::size_t>(g.axis_index(p, 1))];
    };
    const double fd = (-at(2) + 16 * at(1) - 30 * at(0) + 16 * at(-1) - at(-2)) / (12 * h * h);
    worst = std::max(worst, std::abs(fd - d[p]));
  }
  EXPECT_LT(worst, 1e-3 * (1 + d.sup_norm()));
}

TEST(ComplexHessian, Examples) {
  const auto g = PeriodicGrid::complex_full(1, 16);
  const auto u = ScalarField::from_function(g, [](std::span<const double> x) { return std::cos(2 * pi * x[0]); });
  const MatrixField h = complex_hessian(u);
  for (std::size_t p = 0; p < g.size(); ++p)
    EXPECT_NEAR(std::real(h[p](0, 0)), -pi * pi * std::cos(2 * pi * g.coordinate(p, 0)), 1e-11);
  const MatrixField z = complex_hessian(ScalarField::constant(g, 2.0));
  for (std::size_t p = 0; p < g.size(); ++p) EXPECT_LT(z[p].norm(), 1e-13);
  EXPECT_THROW(complex_hessian(ScalarField(PeriodicGrid::real(1, 8))), ModeError);
}

TEST(ComplexHessian, HermitianAndMatchesPolarizedLaplacians) {
  const auto g = PeriodicGrid::complex_full(2, 8);
  const ScalarField u = random_smooth_field(g, 9);
  const MatrixField h = complex_hessian(u);
  const SecondDerivatives d(u);
  for (std::size_t p = 0; p < g.size(); ++p) {
    EXPECT_LT((h[p] - h[p].adjoint()).norm(), 1e-12);
    // u_{1 1bar} = (u_xx + u_yy)/4 independently of the off-diagonal assembly.
    EXPECT_NEAR(std::real(h[p](0, 0)), 0.25 * (d(0, 0)[p] + d(1, 1)[p]), 1e-10);
  }
}

TEST(ComplexHessian, TubeLayoutMatchesFullLayoutOnYInvariantField) {
  const auto full = PeriodicGrid::complex_full(2, 8);
  const auto tube = PeriodicGrid::complex_tube(2, 8);
  auto fn = [](double x0, double x1) { return std::sin(2 * pi * x0) * std::cos(2 * pi * x1) + 0.3 * std::cos(4 * pi * x0); };
  const auto uf = ScalarField::from_function(full, [&](std::span<const double> x) { return fn(x[0], x[2]); });
  const auto ut = ScalarField::from_function(tube, [&](std::span<const double> x) { return fn(x[0], x[1]); });
  const MatrixField hf = complex_hessian(uf), ht = complex_hessian(ut);
  for (std::size_t p = 0; p < full.size(); ++p) {
    if (full.axis_index(p, 1) != 0 || full.axis_index(p, 3) != 0) continue;
    const std::size_t q = static_cast<std::size_t>(full.axis_index(p, 0) * 8 + full.axis_index(p, 2));
    EXPECT_LT((hf[p] - ht[q]).norm(), 1e-10);
  }
}

TEST(Endomorphism, Examples) {
  const auto g = PeriodicGrid::complex_full(2, 8);
  const Metric alpha(ComplexMatrix::Identity(2, 2));
  const MatrixField a = endomorphism_field(alpha, scaled_background(g, alpha, 1.0), ScalarField(g));
  for (std::size_t p = 0; p < g.size(); ++p) EXPECT_LT((a[p] - ComplexMatrix::Identity(2, 2)).norm(), 1e-14);

  const auto g1 = PeriodicGrid::complex_full(1, 16);
  const Metric a1(ComplexMatrix::Identity(1, 1));
  const auto u = ScalarField::from_function(g1, [](std::span<const double> x) { return std::cos(2 * pi * x[0]); });
  const MatrixField e = endomorphism_field(a1, MatrixField(g1, 1), u);
  for (std::size_t p = 0; p < g1.size(); ++p)
    EXPECT_NEAR(std::real(e[p](0, 0)), -pi * pi * std::cos(2 * pi * g1.coordinate(p, 0)), 1e-11);

  const auto gr = PeriodicGrid::real(3, 4);
  const Metric a3(ComplexMatrix::Identity(3, 3));
  const MatrixField r = endomorphism_field(a3, scaled_background(gr, a3, 2.0), ScalarField(gr));
  for (std::size_t p = 0; p < gr.size(); ++p) EXPECT_LT((r[p] - 2.0 * ComplexMatrix::Identity(3, 3)).norm(), 1e-14);
}

TEST(Metric, RejectsIndefinite) {
  ComplexMatrix m = ComplexMatrix::Identity(2, 2);
  m(1, 1) = -1.0;
  EXPECT_THROW(Metric{m}, ArgumentError);
}

TEST(Metric, OrthonormalFrameHasEigenvaluesOfAlphaInverseG) {
  Rng rng(21);
  ComplexMatrix c = oracle::random_hermitian(3, rng);
  const ComplexMatrix alpha = c * c.adjoint() + ComplexMatrix::Identity(3, 3);
  const Metric m(alpha);
  const ComplexMatrix g = oracle::random_hermitian(3, rng);
  const Eigen::ComplexEigenSolver<ComplexMatrix> ref(alpha.inverse() * g);
  std::vector<double> want;
  for (int i = 0; i < 3; ++i) want.push_back(std::real(ref.eigenvalues()(i)));
  std::sort(want.rbegin(), want.rend());
  const Vector got = eigen_decompose(m.to_orthonormal(g)).values;
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(got(i), want[static_cast<std::size_t>(i)], 1e-10);
  EXPECT_NEAR(m.trace(g), std::real((alpha.inverse() * g).trace()), 1e-10);
}

TEST(Integral, Examples) {
  const auto g = PeriodicGrid::real(1, 16);
  EXPECT_NEAR(integral(ScalarField::from_function(g, [](std::span<const double> x) { return std::pow(std::sin(2 * pi * x[0]), 2); })),
              0.5, 1e-14);
  const auto g2 = PeriodicGrid::complex_full(1, 8, 2.0);
  EXPECT_NEAR(integral(ScalarField::constant(g2, 1.0)), 4.0, 1e-14);
  EXPECT_NEAR(integral(ScalarField::from_function(g, [](std::span<const double> x) { return std::sin(2 * pi * x[0]); })),
              0.0, 1e-15);
}

TEST(FormRatio, Examples) {
  const auto g = PeriodicGrid::complex_tube(2, 8);
  const Metric alpha(ComplexMatrix::Identity(2, 2));
  for (int j = 0; j <= 2; ++j) EXPECT_NEAR(form_ratio(scaled_background(g, alpha, 1.0), alpha, j).max(), 1.0, 1e-14);
  EXPECT_NEAR(form_ratio(scaled_background(g, alpha, 2.0), alpha, 2).min(), 4.0, 1e-14);
  EXPECT_NEAR(form_ratio(scaled_background(g, alpha, 2.0), alpha, 1).min(), 2.0, 1e-14);
  EXPECT_THROW(form_ratio(scaled_background(g, alpha, 1.0), alpha, 3), ArgumentError);
}

TEST(FormRatio, MatchesCharacteristicPolynomial) {
  Rng rng(22);
  const auto g = PeriodicGrid::complex_full(3, 4);
  ComplexMatrix c = oracle::random_hermitian(3, rng);
  const Metric alpha(ComplexMatrix(c * c.adjoint() + ComplexMatrix::Identity(3, 3)));
  const MatrixField chi = perturbed_background(g, alpha, 1.0, 0.5, 4);
  for (int j = 0; j <= 3; ++j) {
    const ScalarField r = form_ratio(chi, alpha, j);
    for (std::size_t p = 0; p < g.size(); p += 7) {
      const Vector coeffs = oracle::charpoly_coefficients(ComplexMatrix(alpha.alpha().inverse() * chi[p]));
      EXPECT_NEAR(r[p], coeffs(j) / binomial(3, j), 1e-9);
    }
  }
}

TEST(ComputeC, Examples) {
  const auto g = PeriodicGrid::complex_tube(2, 8);
  const Metric alpha(ComplexMatrix::Identity(2, 2));
  EXPECT_NEAR(compute_c(scaled_background(g, alpha, 2.0), alpha, 1, 2), 0.5, 1e-14);
  EXPECT_NEAR(compute_c(scaled_background(g, alpha, 1.0), alpha, 0, 2), 1.0, 1e-14);
  EXPECT_NEAR(compute_c(scaled_background(g, alpha, 1.0), alpha, 1, 2), 1.0, 1e-14);
  EXPECT_THROW(compute_c(MatrixField(g, 2), alpha, 1, 2), DegenerateClassError);
  EXPECT_THROW(compute_c(scaled_background(g, alpha, 1.0), alpha, 2, 2), ArgumentError);
}

TEST(ComputeC, InvariantUnderExactPerturbations) {
  for (auto grid : {PeriodicGrid::complex_full(2, 8), PeriodicGrid::complex_tube(3, 8)}) {
    const int n = grid.dimension();
    const Metric alpha = Metric::scaled_identity(n, 1.5);
    const MatrixField chi = scaled_background(grid, alpha, 2.0);
    for (int l = 0; l < n; ++l)
      for (int k = l + 1; k <= n; ++k) {
        const double base = compute_c(chi, alpha, l, k);
        for (std::uint64_t seed = 1; seed <= 4; ++seed) {
          const MatrixField moved = chi + 0.8 * hessian_field(random_potential(grid, alpha, seed));
          EXPECT_NEAR(compute_c(moved, alpha, l, k), base, 1e-8 * base);
        }
      }
  }
}

TEST(NMinusOne, Examples) {
  const auto g = PeriodicGrid::complex_tube(2, 4);
  const Metric a2(ComplexMatrix::Identity(2, 2));
  EXPECT_LT((nminus1_background(scaled_background(g, a2, 1.0), a2)[0] - ComplexMatrix::Identity(2, 2)).norm(), 1e-14);
  ComplexMatrix eta = ComplexMatrix::Zero(2, 2);
  eta(0, 0) = 1;
  eta(1, 1) = 2;
  ComplexMatrix want = ComplexMatrix::Zero(2, 2);
  want(0, 0) = 2;
  want(1, 1) = 1;
  EXPECT_LT((nminus1_background(MatrixField::constant(g, eta), a2)[0] - want).norm(), 1e-14);
  const auto g3 = PeriodicGrid::complex_tube(3, 4);
  const Metric a3(ComplexMatrix::Identity(3, 3));
  EXPECT_LT((nminus1_background(scaled_background(g3, a3, 1.0), a3)[5] - ComplexMatrix::Identity(3, 3)).norm(), 1e-14);
  EXPECT_THROW(nminus1_background(MatrixField(PeriodicGrid::complex_tube(1, 4), 1), Metric::scaled_identity(1, 1)),
               ArgumentError);
}

TEST(NMinusOne, TOfChiIsEta) {
  Rng rng(24);
  const auto g = PeriodicGrid::complex_tube(3, 4);
  const Metric alpha = Metric::scaled_identity(3, 1.0);
  const ComplexMatrix eta = oracle::random_hermitian(3, rng);
  const ComplexMatrix chi = nminus1_background(MatrixField::constant(g, eta), alpha)[0];
  Vector got = t_map(as_span(oracle::eigenvalues_descending(chi)));
  std::sort(got.data(), got.data() + 3, std::greater<>());
  const Vector want = oracle::eigenvalues_descending(eta);
  EXPECT_TRUE(got.isApprox(want, 1e-12));
}

TEST(FieldIo, RoundTripAndSidecar) {
  const auto dir = scratch("io");
  const auto g = PeriodicGrid::complex_tube(2, 8, 2.0);
  const ScalarField f = random_smooth_field(g, 5);
  write_field(f, dir / "u.bin");
  const ScalarField back = read_field(dir / "u.bin");
  EXPECT_TRUE(back.grid().same_shape(g));
  EXPECT_EQ((back - f).sup_norm(), 0.0);
  EXPECT_EQ(std::filesystem::file_size(dir / "u.bin"), g.size() * 8);
  std::ifstream js(dir / "u.bin.json");
  const auto side = nlohmann::json::parse(js);
  EXPECT_EQ(side.at("dtype"), "float64-le");
  EXPECT_EQ(side.at("layout"), "tube");
}

TEST(FieldIo, Failures) {
  const auto dir = scratch("io_fail");
  EXPECT_THROW(read_field(dir / "missing.bin"), IoError);
  const auto g = PeriodicGrid::real(1, 8);
  write_field(ScalarField(g), dir / "short.bin");
  std::filesystem::resize_file(dir / "short.bin", 16);
  EXPECT_THROW(read_field(dir / "short.bin"), IoError);
  EXPECT_THROW(write_field(ScalarField(g), dir / "no_such_dir" / "x.bin"), IoError);
}

TEST(FieldIo, CsvSlice) {
  const auto dir = scratch("csv");
  const auto g = PeriodicGrid::real(2, 4);
  write_csv_slice(ScalarField::constant(g, 1.5), dir / "s.csv");
  std::ifstream in(dir / "s.csv");
  std::string line;
  int rows = 0;
  std::getline(in, line);
  EXPECT_EQ(line, "x0,x1,value");
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 16);
}
