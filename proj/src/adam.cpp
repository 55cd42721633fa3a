#include "graphstar/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace graphstar {

AdamState make_adam_state(const Tensor& param, double learning_rate, double l2) {
  AdamState s;
  s.first_moment = Tensor::zeros(param.rows(), param.cols());
  s.second_moment = Tensor::zeros(param.rows(), param.cols());
  s.learning_rate = learning_rate;
  s.l2 = l2;
  return s;
}

void adam_step(Tensor& param, const Tensor& grad, AdamState& state) {
  if (!param.same_shape(grad)) {
    throw std::invalid_argument("adam_step: param " + shape_string(param) + " vs grad " +
                                shape_string(grad));
  }
  if (!state.first_moment.same_shape(param) || !state.second_moment.same_shape(param)) {
    throw std::invalid_argument("adam_step: moment accumulators do not match parameter shape");
  }
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!std::isfinite(grad.data()[i])) {
      throw std::runtime_error("adam_step: non-finite gradient at flat index " +
                               std::to_string(i) + "; step aborted");
    }
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad.data()[i] + state.l2 * param.data()[i];
    double& m = state.first_moment.data()[i];
    double& v = state.second_moment.data()[i];
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g * g;
    const double m_hat = m / bc1;
    const double v_hat = v / bc2;
    param.data()[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
}

}  // namespace graphstar
