#include "apl/adam.hpp"

#include <cmath>
#include <stdexcept>

#include "apl/errors.hpp"

namespace apl {

AdamState AdamState::create(std::size_t n_params, double learning_rate) {
  AdamState state;
  state.first_moment.assign(n_params, 0.0);
  state.second_moment.assign(n_params, 0.0);
  state.learning_rate = learning_rate;
  return state;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state) {
  const std::size_t n = params.size();
  if (grads.size() != n || state.first_moment.size() != n || state.second_moment.size() != n) {
    throw std::invalid_argument("adam_step: length mismatch");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(grads[i])) {
      throw NumericalFault("adam_step: non-finite gradient at index " + std::to_string(i));
    }
  }

  state.step_count += 1;
  const double bias1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
  const double bias2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
  for (std::size_t i = 0; i < n; ++i) {
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = state.beta1 * m + (1.0 - state.beta1) * grads[i];
    v = state.beta2 * v + (1.0 - state.beta2) * grads[i] * grads[i];
    const double m_hat = m / bias1;
    const double v_hat = v / bias2;
    params[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
}

}  // namespace apl
