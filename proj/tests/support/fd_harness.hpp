#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "graphstar/grad_check.hpp"
#include "graphstar/tape.hpp"
#include "graphstar/tensor.hpp"

namespace graphstar::testing {

/// Deterministic pseudo-random fill, independent of the library RNG.
inline Tensor filled(std::size_t rows, std::size_t cols, double seed, double scale = 1.0) {
  Tensor t(rows, cols);
  for (std::size_t i = 0; i < t.size(); ++i) {
    t.data()[i] = scale * std::sin(seed + 1.7 * static_cast<double>(i) + 0.3);
  }
  return t;
}

/// Checks the gradient of an op composition. `build` receives leaves bound to
/// the current parameter values and returns the op output; the harness reduces
/// it to a scalar with fixed weights so every output entry influences the loss.
inline GradCheckReport check_op_gradients(
    std::vector<Tensor> params,
    const std::function<Var(Tape&, const std::vector<Var>&)>& build,
    double epsilon = 1e-6) {
  std::vector<Tensor> storage = std::move(params);
  LossEval eval = [&](std::vector<Tensor>* grads) {
    Tape tape;
    std::vector<Var> leaves;
    leaves.reserve(storage.size());
    for (Tensor& p : storage) leaves.push_back(tape.leaf_ref(&p, true));
    Var out = build(tape, leaves);
    const Tensor& ov = tape.value(out);
    Tensor weights(ov.rows(), ov.cols());
    for (std::size_t i = 0; i < weights.size(); ++i) {
      weights.data()[i] = std::cos(0.9 * static_cast<double>(i) + 0.2);
    }
    Var loss = tape.sum_all(tape.mul(out, tape.constant(weights)));
    const double value = tape.value(loss).scalar();
    if (grads) {
      tape.backward(loss);
      grads->clear();
      for (Var v : leaves) grads->push_back(tape.grad(v));
    }
    return value;
  };
  std::vector<std::pair<std::string, Tensor*>> param_refs;
  for (std::size_t i = 0; i < storage.size(); ++i) {
    param_refs.emplace_back("p" + std::to_string(i), &storage[i]);
  }
  GradCheckOptions opts;
  opts.epsilon = epsilon;
  return finite_difference_check(eval, param_refs, opts);
}

}  // namespace graphstar::testing
