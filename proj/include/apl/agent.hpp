#pragma once

#include "apl/mlp.hpp"
#include "apl/oorb.hpp"
#include "apl/rng.hpp"

namespace apl {

/// Per-update scalars surfaced into the metrics file.
struct UpdateDiagnostics {
  double critic_loss = 0.0;        // optimistic term (Bellman MSE), mean over critics
  double penalty_value = 0.0;      // weighted pessimistic term as added to the loss
  double policy_objective = 0.0;   // actor objective (ascent value), when updated
  bool policy_updated = false;
};

/// What the training loop needs from an agent; both algorithms implement it.
class Agent {
 public:
  virtual ~Agent() = default;

  /// One full update step on a source-homogeneous batch. `weight` is the
  /// pessimism gate W for this batch (0 online, 1 offline, or the variant
  /// override).
  virtual UpdateDiagnostics update_step(const SourcedBatch& batch, double weight, Rng& rng) = 0;

  /// Exploratory action used while collecting online experience.
  virtual Vec explore_action(const Vec& observation, Rng& rng) = 0;

  /// Deterministic action used for evaluation.
  virtual Vec eval_action(const Vec& observation) const = 0;
};

}  // namespace apl
