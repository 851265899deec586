#include "apl/mlp.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "apl/errors.hpp"

namespace apl {

namespace {

using RowMajorMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using RowMajorMutMap =
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

void apply_activation(Activation act, const Eigen::MatrixXd& z, Eigen::MatrixXd& out) {
  switch (act) {
    case Activation::kIdentity:
      out = z;
      break;
    case Activation::kRelu:
      out = z.cwiseMax(0.0);
      break;
    case Activation::kTanh:
      out = z.array().tanh().matrix();
      break;
  }
}

// delta *= d(activation)/dz, elementwise in place, via z and the cached
// activation a. No temporaries: this runs on every layer of the hot path.
void scale_by_activation_grad(Activation act, const Eigen::MatrixXd& z,
                              const Eigen::MatrixXd& a, Eigen::MatrixXd& delta) {
  switch (act) {
    case Activation::kIdentity:
      break;
    case Activation::kRelu:
      delta.array() *= (z.array() > 0.0).cast<double>();
      break;
    case Activation::kTanh:
      delta.array() *= 1.0 - a.array().square();
      break;
  }
}

}  // namespace

void validate(const MLPSpec& spec) {
  if (spec.widths.size() < 2) {
    throw std::invalid_argument("MLPSpec: need at least input and output widths");
  }
  for (int w : spec.widths) {
    if (w < 1) throw std::invalid_argument("MLPSpec: layer widths must be >= 1");
  }
}

std::size_t param_count(const MLPSpec& spec) {
  validate(spec);
  std::size_t n = 0;
  for (int l = 0; l < spec.n_layers(); ++l) {
    n += static_cast<std::size_t>(spec.widths[l]) * spec.widths[l + 1] + spec.widths[l + 1];
  }
  return n;
}

ParamVector init_params(const MLPSpec& spec, Rng& rng) {
  ParamVector params(param_count(spec));
  std::size_t off = 0;
  for (int l = 0; l < spec.n_layers(); ++l) {
    const int in = spec.widths[l];
    const int out = spec.widths[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    for (int i = 0; i < out * in + out; ++i) {
      params[off + i] = rng.uniform(-bound, bound);
    }
    off += static_cast<std::size_t>(out) * in + out;
  }
  return params;
}

const Eigen::MatrixXd& mlp_forward(const MLPSpec& spec, const ParamVector& params,
                                   const Eigen::MatrixXd& input, ForwardCache& cache) {
  validate(spec);
  if (params.size() != param_count(spec)) {
    throw std::invalid_argument("mlp_forward: parameter vector length " +
                                std::to_string(params.size()) + " != expected " +
                                std::to_string(param_count(spec)));
  }
  if (input.cols() != spec.input_dim()) {
    throw std::invalid_argument("mlp_forward: input width " + std::to_string(input.cols()) +
                                " != spec input dim " + std::to_string(spec.input_dim()));
  }

  const int n_layers = spec.n_layers();
  cache.pre.resize(n_layers);
  cache.act.resize(n_layers + 1);
  cache.act[0] = input;

  std::size_t off = 0;
  for (int l = 0; l < n_layers; ++l) {
    const int in = spec.widths[l];
    const int out = spec.widths[l + 1];
    RowMajorMap weights(params.data() + off, out, in);
    Eigen::Map<const Eigen::VectorXd> bias(params.data() + off + out * in, out);
    off += static_cast<std::size_t>(out) * in + out;

    cache.pre[l].noalias() = cache.act[l] * weights.transpose();
    cache.pre[l].rowwise() += bias.transpose();
    if (!cache.pre[l].allFinite()) {
      throw NumericalFault("mlp_forward: non-finite value at layer " + std::to_string(l));
    }
    const Activation act = (l == n_layers - 1) ? spec.output : spec.hidden;
    apply_activation(act, cache.pre[l], cache.act[l + 1]);
  }
  return cache.act[n_layers];
}

Eigen::MatrixXd mlp_forward(const MLPSpec& spec, const ParamVector& params,
                            const Eigen::MatrixXd& input) {
  ForwardCache cache;
  return mlp_forward(spec, params, input, cache);
}

Vec mlp_forward(const MLPSpec& spec, const ParamVector& params, const Vec& input) {
  if (static_cast<int>(input.size()) != spec.input_dim()) {
    throw std::invalid_argument("mlp_forward: input length " + std::to_string(input.size()) +
                                " != spec input dim " + std::to_string(spec.input_dim()));
  }
  Eigen::MatrixXd row(1, input.size());
  for (std::size_t i = 0; i < input.size(); ++i) row(0, i) = input[i];
  const Eigen::MatrixXd out = mlp_forward(spec, params, row);
  return Vec(out.data(), out.data() + out.cols());
}

void mlp_backward(const MLPSpec& spec, const ParamVector& params, const ForwardCache& cache,
                  const Eigen::MatrixXd& output_grad, std::span<double> grad_accum,
                  Eigen::MatrixXd* input_grad) {
  const int n_layers = spec.n_layers();
  if (grad_accum.size() != param_count(spec)) {
    throw std::invalid_argument("mlp_backward: gradient buffer length mismatch");
  }

  // Offsets of each layer's block in the flat parameter vector.
  std::vector<std::size_t> offsets(n_layers);
  std::size_t off = 0;
  for (int l = 0; l < n_layers; ++l) {
    offsets[l] = off;
    off += static_cast<std::size_t>(spec.widths[l]) * spec.widths[l + 1] + spec.widths[l + 1];
  }

  // delta holds dLoss/dPre of the layer being processed; `next` is reused as
  // the chain buffer so each layer does one gemm and one in-place scale.
  Eigen::MatrixXd delta = output_grad;
  scale_by_activation_grad(spec.output, cache.pre[n_layers - 1], cache.act[n_layers], delta);
  Eigen::MatrixXd next;
  for (int l = n_layers - 1; l >= 0; --l) {
    const int in = spec.widths[l];
    const int out = spec.widths[l + 1];

    RowMajorMutMap weight_grad(grad_accum.data() + offsets[l], out, in);
    Eigen::Map<Eigen::VectorXd> bias_grad(grad_accum.data() + offsets[l] + out * in, out);
    weight_grad.noalias() += delta.transpose() * cache.act[l];
    bias_grad.noalias() += delta.colwise().sum().transpose();

    RowMajorMap weights(params.data() + offsets[l], out, in);
    if (l > 0) {
      next.noalias() = delta * weights;
      scale_by_activation_grad(spec.hidden, cache.pre[l - 1], cache.act[l], next);
      std::swap(delta, next);
    } else if (input_grad != nullptr) {
      input_grad->noalias() = delta * weights;
    }
  }
}

Eigen::MatrixXd mlp_input_gradient(const MLPSpec& spec, const ParamVector& params,
                                   const ForwardCache& cache,
                                   const Eigen::MatrixXd& output_grad) {
  const int n_layers = spec.n_layers();
  std::vector<std::size_t> offsets(n_layers);
  std::size_t off = 0;
  for (int l = 0; l < n_layers; ++l) {
    offsets[l] = off;
    off += static_cast<std::size_t>(spec.widths[l]) * spec.widths[l + 1] + spec.widths[l + 1];
  }

  Eigen::MatrixXd delta = output_grad;
  scale_by_activation_grad(spec.output, cache.pre[n_layers - 1], cache.act[n_layers], delta);
  Eigen::MatrixXd next;
  for (int l = n_layers - 1; l >= 0; --l) {
    RowMajorMap weights(params.data() + offsets[l], spec.widths[l + 1], spec.widths[l]);
    next.noalias() = delta * weights;
    if (l > 0) {
      scale_by_activation_grad(spec.hidden, cache.pre[l - 1], cache.act[l], next);
    }
    std::swap(delta, next);
  }
  return delta;
}

double loss_gradients(const MLPSpec& spec, const ParamVector& params,
                      const Eigen::MatrixXd& inputs, const LossHead& head,
                      std::span<double> grad_out) {
  ForwardCache cache;
  const Eigen::MatrixXd& outputs = mlp_forward(spec, params, inputs, cache);
  Eigen::MatrixXd output_grad = Eigen::MatrixXd::Zero(outputs.rows(), outputs.cols());
  const double loss = head(outputs, output_grad);
  if (!std::isfinite(loss) || !output_grad.allFinite()) {
    throw NumericalFault("loss_gradients: non-finite value at loss head");
  }
  std::fill(grad_out.begin(), grad_out.end(), 0.0);
  mlp_backward(spec, params, cache, output_grad, grad_out);
  return loss;
}

void polyak_update(std::span<double> target, std::span<const double> online, double tau) {
  if (tau < 0.0 || tau > 1.0) {
    throw std::invalid_argument("polyak_update: tau must lie in [0, 1]");
  }
  if (target.size() != online.size()) {
    throw std::invalid_argument("polyak_update: parameter length mismatch");
  }
  for (std::size_t i = 0; i < target.size(); ++i) {
    target[i] = tau * online[i] + (1.0 - tau) * target[i];
  }
}

}  // namespace apl
