#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace fnle {

/// Bad argument: wrong sizes, out-of-range indices, malformed parameters.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A point lies outside the admissible cone of an operator.
///
/// `violated_index` is the first j for which sigma_j (of lambda, or of T(lambda)
/// for preimage cones) fails to be positive; `margin` is min_j sigma_j.
/// For field-level failures `grid_index` names the worst grid point.
class DomainError : public std::domain_error {
 public:
  DomainError(const std::string& what, int violated_index, double margin,
              std::ptrdiff_t grid_index = -1)
      : std::domain_error(what),
        violated_index_(violated_index),
        margin_(margin),
        grid_index_(grid_index) {}

  int violated_index() const noexcept { return violated_index_; }
  double margin() const noexcept { return margin_; }
  std::ptrdiff_t grid_index() const noexcept { return grid_index_; }

 private:
  int violated_index_;
  double margin_;
  std::ptrdiff_t grid_index_;
};

/// Root bracketing, sampling or level-set projection failed.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operation requested on a grid of the wrong mode (complex vs real).
class ModeError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A cohomological ratio with a non-positive denominator.
class DegenerateClassError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Newton line search exhausted its halvings, or the iteration cap was hit.
class StagnationError : public std::runtime_error {
 public:
  StagnationError(const std::string& what, std::vector<double> residual_history,
                  double last_residual)
      : std::runtime_error(what),
        residual_history_(std::move(residual_history)),
        last_residual_(last_residual) {}

  const std::vector<double>& residual_history() const noexcept { return residual_history_; }
  double last_residual() const noexcept { return last_residual_; }

 private:
  std::vector<double> residual_history_;
  double last_residual_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fnle
