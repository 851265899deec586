#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "apl/rng.hpp"

namespace apl {

using Vec = std::vector<double>;
using ParamVector = std::vector<double>;

enum class Activation { kIdentity, kRelu, kTanh };

/// Architecture of a dense network: layer widths (input first, output last),
/// one activation for hidden layers and one for the output layer.
struct MLPSpec {
  std::vector<int> widths;
  Activation hidden = Activation::kRelu;
  Activation output = Activation::kIdentity;

  int input_dim() const { return widths.front(); }
  int output_dim() const { return widths.back(); }
  int n_layers() const { return static_cast<int>(widths.size()) - 1; }
};

/// Throws std::invalid_argument unless the spec has >= 2 widths, all >= 1.
void validate(const MLPSpec& spec);

/// Total parameter count: sum over layers of w_i*w_{i+1} + w_{i+1}.
/// Layout in the flat vector: per layer, weights row-major (out x in), then biases.
std::size_t param_count(const MLPSpec& spec);

/// Fan-in scaled uniform init, U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights
/// and biases alike.
ParamVector init_params(const MLPSpec& spec, Rng& rng);

/// Per-layer intermediates kept by the cached forward pass for backprop.
/// act[0] is the input batch; act[l+1] and pre[l] belong to layer l.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> pre;
  std::vector<Eigen::MatrixXd> act;
};

/// Batched forward pass, one row per sample. Throws NumericalFault naming the
/// layer if an intermediate goes non-finite.
Eigen::MatrixXd mlp_forward(const MLPSpec& spec, const ParamVector& params,
                            const Eigen::MatrixXd& input);

/// Forward pass that retains intermediates; returns the output batch.
const Eigen::MatrixXd& mlp_forward(const MLPSpec& spec, const ParamVector& params,
                                   const Eigen::MatrixXd& input, ForwardCache& cache);

/// Single-sample convenience wrapper.
Vec mlp_forward(const MLPSpec& spec, const ParamVector& params, const Vec& input);

/// Reverse pass. `output_grad` is dLoss/dOutput for the batch that produced
/// `cache`. Parameter gradients are ACCUMULATED into `grad_accum` (callers
/// zero it when starting a new loss). If `input_grad` is non-null it receives
/// dLoss/dInput.
void mlp_backward(const MLPSpec& spec, const ParamVector& params,
                  const ForwardCache& cache, const Eigen::MatrixXd& output_grad,
                  std::span<double> grad_accum, Eigen::MatrixXd* input_grad = nullptr);

/// Reverse pass that only propagates to the input (parameters stay frozen);
/// cheaper than mlp_backward when parameter gradients are not wanted.
Eigen::MatrixXd mlp_input_gradient(const MLPSpec& spec, const ParamVector& params,
                                   const ForwardCache& cache,
                                   const Eigen::MatrixXd& output_grad);

/// A loss head maps the batch of network outputs to a scalar loss and writes
/// dLoss/dOutputs into `output_grad` (preallocated to the output shape).
using LossHead =
    std::function<double(const Eigen::MatrixXd& outputs, Eigen::MatrixXd& output_grad)>;

/// Exact gradient of head(mlp(inputs)) with respect to the parameters.
/// Returns the loss value; writes the gradient (same length as params).
double loss_gradients(const MLPSpec& spec, const ParamVector& params,
                      const Eigen::MatrixXd& inputs, const LossHead& head,
                      std::span<double> grad_out);

/// target <- tau * online + (1 - tau) * target, elementwise.
/// Throws std::invalid_argument if tau is outside [0, 1] or lengths differ.
void polyak_update(std::span<double> target, std::span<const double> online, double tau);

}  // namespace apl
