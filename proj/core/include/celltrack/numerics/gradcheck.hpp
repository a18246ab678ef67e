#pragma once

#include <cstddef>
#include <functional>
#include <string>

#include "celltrack/numerics/layers.hpp"
#include "celltrack/numerics/tensor.hpp"

namespace celltrack::numerics {

struct GradCheckOptions {
  double epsilon = 1e-3;
  /// Elements checked per parameter tensor; 0 checks all, otherwise an evenly
  /// strided subset that always includes the first and last element.
  std::size_t max_elements_per_parameter = 0;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t elements_checked = 0;
  bool finite = true;

  bool passed(double tolerance) const { return finite && max_relative_error < tolerance; }
};

/// |a - n| / max(|a|, |n|), or |a - n| when both magnitudes are below 1e-6.
double gradient_relative_error(double analytic, double numeric);

template <typename T>
using LossFn = std::function<Tensor<T>()>;

/// Compares backpropagated gradients of `loss` against central differences
/// computed in the same precision. `loss` must be deterministic and read the
/// current values of `params`.
template <typename T>
GradCheckReport finite_diff_check(const LossFn<T>& loss, const NamedParameters<T>& params,
                                  const GradCheckOptions& options = {});

/// Backpropagated gradients of `loss` (precision T) against central differences
/// of `reference_loss`, a double-precision copy of the same computation over
/// `reference_params` (same order and shapes as `params`). This isolates errors
/// of the backward pass from the rounding noise of single-precision differencing.
template <typename T>
GradCheckReport finite_diff_check_reference(const LossFn<T>& loss, const NamedParameters<T>& params,
                                            const LossFn<double>& reference_loss,
                                            const NamedParameters<double>& reference_params,
                                            const GradCheckOptions& options = {});

}  // namespace celltrack::numerics
