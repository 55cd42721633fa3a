#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "graphstar/tensor.hpp"

namespace graphstar {

struct GradCheckEntry {
  std::string param;
  std::size_t row = 0;
  std::size_t col = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  GradCheckEntry worst;
  std::size_t coords_checked = 0;
  bool passed(double tolerance) const { return max_rel_error < tolerance; }
  std::string to_string() const;
};

struct GradCheckOptions {
  double epsilon = 1e-5;
  /// Coordinates sampled per parameter; 0 checks every coordinate.
  std::size_t max_coords_per_param = 0;
  std::uint64_t seed = 0;
};

/// eval(nullptr) returns the loss at the current parameter values.
/// eval(&grads) additionally fills analytic gradients, one tensor per
/// parameter, in the order of `params`. The loss must be deterministic
/// (dropout disabled or identically seeded per call).
using LossEval = std::function<double(std::vector<Tensor>*)>;

/// Central-difference check: (f(x+eps) - f(x-eps)) / (2 eps) against the
/// analytic gradient, per sampled coordinate. Parameter values are restored
/// after probing.
GradCheckReport finite_difference_check(const LossEval& eval,
                                        std::vector<std::pair<std::string, Tensor*>> params,
                                        const GradCheckOptions& options = {});

}  // namespace graphstar
