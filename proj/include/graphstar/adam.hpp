#pragma once

#include "graphstar/tensor.hpp"

namespace graphstar {

/// Per-parameter Adam accumulators plus the update hyperparameters.
/// L2 regularization with coefficient `l2` is applied by adding l2 * theta to
/// the gradient before the moment updates.
struct AdamState {
  Tensor first_moment;
  Tensor second_moment;
  long step = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double l2 = 0.0;
};

AdamState make_adam_state(const Tensor& param, double learning_rate, double l2 = 0.0);

/// Bias-corrected Adam update, in place. Throws on non-finite gradients
/// (the step is not applied) or shape mismatches.
void adam_step(Tensor& param, const Tensor& grad, AdamState& state);

}  // namespace graphstar
