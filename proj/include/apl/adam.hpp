#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace apl {

/// Adam optimizer state for one parameter vector.
struct AdamState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::int64_t step_count = 0;
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState create(std::size_t n_params, double learning_rate);
};

/// One bias-corrected Adam step in the descent direction of `grads`.
/// Throws NumericalFault without touching params or state if any gradient
/// entry is non-finite.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state);

}  // namespace apl
