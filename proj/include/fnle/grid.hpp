#pragma once

// Uniform periodic grids over flat tori and trigonometric-spectral differentiation.
//
// Storage is row-major with axis 0 slowest. Complex tori use one of two layouts:
//   full: 2n axes, x_j on axis 2j and y_j on axis 2j+1;
//   tube: n axes (x_j only), for fields invariant in every y_j.

#include <fftw3.h>
#include <json.hpp>

#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>
#include <vector>

#include "fnle/errors.hpp"
#include "fnle/symmetric.hpp"

namespace fnle {

enum class Mode { complex, real };
enum class Layout { full, tube };

inline std::string to_string(Mode m) { return m == Mode::complex ? "complex" : "real"; }
inline std::string to_string(Layout l) { return l == Layout::full ? "full" : "tube"; }

using Spectrum = std::vector<std::complex<double>>;

namespace detail {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

// Forward and backward c2c plans for one grid shape. Plans are created with
// FFTW_UNALIGNED and executed on caller buffers through the new-array interface.
class FftPlans {
 public:
  explicit FftPlans(const std::vector<int>& dims) {
    std::size_t total = 1;
    for (int d : dims) total *= static_cast<std::size_t>(d);
    size_ = total;
    std::lock_guard lock(fftw_planner_mutex());
    auto* in = fftw_alloc_complex(total);
    auto* out = fftw_alloc_complex(total);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    forward_ = fftw_plan_dft(static_cast<int>(dims.size()), dims.data(), in, out, FFTW_FORWARD, flags);
    backward_ = fftw_plan_dft(static_cast<int>(dims.size()), dims.data(), in, out, FFTW_BACKWARD, flags);
    fftw_free(in);
    fftw_free(out);
    if (!forward_ || !backward_) throw NumericError("FFTW planning failed");
  }
  FftPlans(const FftPlans&) = delete;
  FftPlans& operator=(const FftPlans&) = delete;
  ~FftPlans() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }

  void forward(const Spectrum& in, Spectrum& out) const { run(forward_, in, out); }
  void backward(const Spectrum& in, Spectrum& out) const { run(backward_, in, out); }
  std::size_t size() const { return size_; }

 private:
  void run(fftw_plan plan, const Spectrum& in, Spectrum& out) const {
    out.resize(size_);
    // FFTW does not modify the input of an out-of-place c2c transform.
    auto* src = const_cast<fftw_complex*>(reinterpret_cast<const fftw_complex*>(in.data()));
    fftw_execute_dft(plan, src, reinterpret_cast<fftw_complex*>(out.data()));
  }

  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
  std::size_t size_ = 0;
};

}  // namespace detail

class PeriodicGrid {
 public:
  /// Complex n-torus with both x and y axes.
  static PeriodicGrid complex_full(int n, int points, double period = 1.0) {
    return PeriodicGrid(Mode::complex, Layout::full, n, points, std::vector<double>(2 * n, period));
  }
  /// Complex n-torus restricted to y-invariant fields.
  static PeriodicGrid complex_tube(int n, int points, double period = 1.0) {
    return PeriodicGrid(Mode::complex, Layout::tube, n, points, std::vector<double>(n, period));
  }
  /// Real m-torus.
  static PeriodicGrid real(int m, int points, double period = 1.0) {
    return PeriodicGrid(Mode::real, Layout::full, m, points, std::vector<double>(m, period));
  }
  static PeriodicGrid make(Mode mode, Layout layout, int dimension, int points, std::vector<double> periods) {
    return PeriodicGrid(mode, layout, dimension, points, std::move(periods));
  }

  Mode mode() const { return mode_; }
  Layout layout() const { return layout_; }
  /// Matrix size of the endomorphism field: complex dimension n or real dimension m.
  int dimension() const { return dim_; }
  int axes() const { return static_cast<int>(periods_.size()); }
  int points_per_axis() const { return points_; }
  std::size_t size() const { return size_; }
  double period(int axis) const { return periods_.at(static_cast<std::size_t>(axis)); }
  const std::vector<double>& periods() const { return periods_; }
  double spacing(int axis) const { return period(axis) / points_; }
  double volume() const {
    double v = 1.0;
    for (double p : periods_) v *= p;
    return v;
  }

  /// Axis carrying x_j (and y_j in the full complex layout).
  int x_axis(int j) const { return mode_ == Mode::complex && layout_ == Layout::full ? 2 * j : j; }
  int y_axis(int j) const {
    if (mode_ != Mode::complex || layout_ != Layout::full) throw ModeError("grid has no y axes");
    return 2 * j + 1;
  }

  /// Index along `axis` of flat point `idx`.
  int axis_index(std::size_t idx, int axis) const {
    return static_cast<int>((idx / strides_[static_cast<std::size_t>(axis)]) % static_cast<std::size_t>(points_));
  }
  double coordinate(std::size_t idx, int axis) const { return axis_index(idx, axis) * spacing(axis); }

  /// Angular wavenumber of FFT bin j; `keep_nyquist` selects -N/2 (true) or 0 (false) at j = N/2.
  double wavenumber(int axis, int j, bool keep_nyquist) const {
    if (2 * j == points_) return keep_nyquist ? -2.0 * std::numbers::pi / period(axis) * (points_ / 2) : 0.0;
    const int m = j < points_ / 2 ? j : j - points_;
    return 2.0 * std::numbers::pi / period(axis) * m;
  }

  const detail::FftPlans& fft() const { return *plans_; }

  bool same_shape(const PeriodicGrid& other) const {
    return mode_ == other.mode_ && layout_ == other.layout_ && dim_ == other.dim_ && points_ == other.points_ &&
           periods_ == other.periods_;
  }

  nlohmann::json describe() const {
    return {{"mode", to_string(mode_)},
            {"layout", to_string(layout_)},
            {"dimension", dim_},
            {"points_per_axis", points_},
            {"periods", periods_}};
  }

 private:
  PeriodicGrid(Mode mode, Layout layout, int dim, int points, std::vector<double> periods)
      : mode_(mode), layout_(mode == Mode::real ? Layout::full : layout), dim_(dim), points_(points),
        periods_(std::move(periods)) {
    if (dim < 1 || dim > 3) throw ArgumentError("grid: dimension must be 1, 2 or 3");
    if (points < 4 || points % 2 != 0) throw ArgumentError("grid: points_per_axis must be even and >= 4");
    const int expected = mode_ == Mode::complex && layout_ == Layout::full ? 2 * dim : dim;
    if (static_cast<int>(periods_.size()) != expected)
      throw ArgumentError("grid: expected " + std::to_string(expected) + " periods");
    for (double p : periods_)
      if (!(p > 0.0) || !std::isfinite(p)) throw ArgumentError("grid: periods must be positive");
    const int ax = axes();
    strides_.assign(static_cast<std::size_t>(ax), 1);
    for (int a = ax - 2; a >= 0; --a)
      strides_[static_cast<std::size_t>(a)] = strides_[static_cast<std::size_t>(a + 1)] * static_cast<std::size_t>(points_);
    size_ = strides_[0] * static_cast<std::size_t>(points_);
    plans_ = std::make_shared<const detail::FftPlans>(std::vector<int>(static_cast<std::size_t>(ax), points_));
  }

  Mode mode_;
  Layout layout_;
  int dim_;
  int points_;
  std::vector<double> periods_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 0;
  std::shared_ptr<const detail::FftPlans> plans_;
};

/// Real values on a periodic grid.
class ScalarField {
 public:
  explicit ScalarField(PeriodicGrid grid) : grid_(std::move(grid)), values_(Vector::Zero(static_cast<Eigen::Index>(grid_.size()))) {}
  ScalarField(PeriodicGrid grid, Vector values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (static_cast<std::size_t>(values_.size()) != grid_.size()) throw ArgumentError("ScalarField: size mismatch");
  }
  static ScalarField constant(const PeriodicGrid& grid, double value) {
    return ScalarField(grid, Vector::Constant(static_cast<Eigen::Index>(grid.size()), value));
  }
  template <class Fn>
  static ScalarField from_function(const PeriodicGrid& grid, Fn&& fn) {
    ScalarField f(grid);
    std::vector<double> x(static_cast<std::size_t>(grid.axes()));
    for (std::size_t i = 0; i < grid.size(); ++i) {
      for (int a = 0; a < grid.axes(); ++a) x[static_cast<std::size_t>(a)] = grid.coordinate(i, a);
      f.values_(static_cast<Eigen::Index>(i)) = fn(std::span<const double>(x));
    }
    return f;
  }

  const PeriodicGrid& grid() const { return grid_; }
  const Vector& values() const { return values_; }
  Vector& values() { return values_; }
  std::size_t size() const { return grid_.size(); }
  double operator[](std::size_t i) const { return values_(static_cast<Eigen::Index>(i)); }
  double& operator[](std::size_t i) { return values_(static_cast<Eigen::Index>(i)); }

  double mean() const { return values_.mean(); }
  double min() const { return values_.minCoeff(); }
  double max() const { return values_.maxCoeff(); }
  double sup_norm() const { return values_.cwiseAbs().maxCoeff(); }
  bool all_finite() const { return values_.allFinite(); }

  ScalarField& operator+=(const ScalarField& o) { check(o); values_ += o.values_; return *this; }
  ScalarField& operator-=(const ScalarField& o) { check(o); values_ -= o.values_; return *this; }
  ScalarField& operator*=(double s) { values_ *= s; return *this; }
  ScalarField& operator+=(double s) { values_.array() += s; return *this; }
  friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
  friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
  friend ScalarField operator*(double s, ScalarField a) { return a *= s; }
  friend ScalarField operator+(ScalarField a, double s) { return a += s; }
  friend ScalarField operator-(ScalarField a, double s) { return a += -s; }

 private:
  void check(const ScalarField& o) const {
    if (!grid_.same_shape(o.grid_)) throw ArgumentError("ScalarField: grids differ");
  }

  PeriodicGrid grid_;
  Vector values_;
};

/// Unnormalized forward DFT of a real field.
inline Spectrum forward_transform(const ScalarField& f) {
  if (!f.all_finite()) throw NumericError("spectral transform: non-finite input");
  Spectrum in(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) in[i] = f[i];
  Spectrum out;
  f.grid().fft().forward(in, out);
  return out;
}

/// Real part of the inverse DFT, divided by the point count.
inline ScalarField inverse_transform(const PeriodicGrid& grid, const Spectrum& spec) {
  Spectrum out;
  grid.fft().backward(spec, out);
  ScalarField f(grid);
  const double scale = 1.0 / static_cast<double>(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) f[i] = out[i].real() * scale;
  return f;
}

/// Fourier multiplier of the derivative with multi-index `orders` (one entry per axis).
/// The Nyquist bin is zeroed on axes with odd order and kept on axes with even order.
inline std::complex<double> derivative_symbol(const PeriodicGrid& grid, std::size_t idx, const std::vector<int>& orders) {
  std::complex<double> m = 1.0;
  for (int a = 0; a < grid.axes(); ++a) {
    const int p = orders[static_cast<std::size_t>(a)];
    if (p == 0) continue;
    const double k = grid.wavenumber(a, grid.axis_index(idx, a), p % 2 == 0);
    m *= std::pow(std::complex<double>(0.0, k), p);
  }
  return m;
}

inline ScalarField apply_symbol(const PeriodicGrid& grid, const Spectrum& spec, const std::vector<int>& orders) {
  Spectrum d(spec.size());
  for (std::size_t i = 0; i < spec.size(); ++i) d[i] = spec[i] * derivative_symbol(grid, i, orders);
  return inverse_transform(grid, d);
}

/// d/d(axis) of the trigonometric interpolant.
inline ScalarField spectral_derivative(const ScalarField& f, int axis) {
  std::vector<int> orders(static_cast<std::size_t>(f.grid().axes()), 0);
  orders.at(static_cast<std::size_t>(axis)) = 1;
  return apply_symbol(f.grid(), forward_transform(f), orders);
}

/// d^2/(d a d b) of the trigonometric interpolant.
inline ScalarField spectral_derivative(const ScalarField& f, int a, int b) {
  std::vector<int> orders(static_cast<std::size_t>(f.grid().axes()), 0);
  orders.at(static_cast<std::size_t>(a)) += 1;
  orders.at(static_cast<std::size_t>(b)) += 1;
  return apply_symbol(f.grid(), forward_transform(f), orders);
}

/// All second derivatives d_a d_b, a <= b, from one forward transform; entry (a, b) is
/// stored at index pair_index(a, b).
class SecondDerivatives {
 public:
  explicit SecondDerivatives(const ScalarField& f) : axes_(f.grid().axes()) {
    const Spectrum spec = forward_transform(f);
    for (int a = 0; a < axes_; ++a)
      for (int b = a; b < axes_; ++b) {
        std::vector<int> orders(static_cast<std::size_t>(axes_), 0);
        orders[static_cast<std::size_t>(a)] += 1;
        orders[static_cast<std::size_t>(b)] += 1;
        fields_.push_back(apply_symbol(f.grid(), spec, orders));
      }
  }
  const ScalarField& operator()(int a, int b) const { return fields_[pair_index(a, b)]; }

 private:
  std::size_t pair_index(int a, int b) const {
    if (a > b) std::swap(a, b);
    return static_cast<std::size_t>(a * axes_ - a * (a - 1) / 2 + (b - a));
  }
  int axes_;
  std::vector<ScalarField> fields_;
};

/// Mean of f (times weight) times the torus volume.
inline double integral(const ScalarField& f) { return f.mean() * f.grid().volume(); }
inline double integral(const ScalarField& f, const ScalarField& weight) {
  if (!f.grid().same_shape(weight.grid())) throw ArgumentError("integral: grids differ");
  return f.values().cwiseProduct(weight.values()).mean() * f.grid().volume();
}

enum class Normalization { mean_zero, sup_zero };

inline std::string to_string(Normalization n) { return n == Normalization::mean_zero ? "mean_zero" : "sup_zero"; }

/// Subtracts the mean or the maximum.
inline ScalarField normalize(const ScalarField& u, Normalization mode) {
  return u - (mode == Normalization::mean_zero ? u.mean() : u.max());
}

}  // namespace fnle
