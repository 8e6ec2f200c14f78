#include "opil/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "opil/error.hpp"

namespace opil {

std::string_view to_string(Activation activation) {
  switch (activation) {
    case Activation::kTanh:
      return "tanh";
    case Activation::kRelu:
      return "relu";
    case Activation::kIdentity:
      return "identity";
    case Activation::kSigmoid:
      return "sigmoid";
  }
  return "identity";
}

Activation activation_from_string(std::string_view name) {
  if (name == "tanh") return Activation::kTanh;
  if (name == "relu") return Activation::kRelu;
  if (name == "identity") return Activation::kIdentity;
  if (name == "sigmoid") return Activation::kSigmoid;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

NetworkParams::NetworkParams(std::vector<LayerSpec> layers)
    : layers_(std::move(layers)) {
  Index total = 0;
  offsets_.reserve(layers_.size());
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const LayerSpec& layer = layers_[k];
    if (layer.in <= 0 || layer.out <= 0) {
      throw DimensionError("layer " + std::to_string(k) +
                           " has a non-positive dimension");
    }
    if (k > 0 && layers_[k - 1].out != layer.in) {
      throw DimensionError("layer " + std::to_string(k) + " expects " +
                           std::to_string(layer.in) + " inputs but layer " +
                           std::to_string(k - 1) + " produces " +
                           std::to_string(layers_[k - 1].out));
    }
    offsets_.push_back(total);
    total += layer.out * layer.in + layer.out;
  }
  values_ = Vector::Zero(total);
}

NetworkParams NetworkParams::mlp(Index in, std::span<const Index> hidden,
                                 Index out, Activation hidden_activation,
                                 Activation output_activation) {
  std::vector<LayerSpec> layers;
  Index prev = in;
  for (Index width : hidden) {
    layers.push_back({prev, width, hidden_activation});
    prev = width;
  }
  layers.push_back({prev, out, output_activation});
  return NetworkParams(std::move(layers));
}

Index NetworkParams::input_dim() const {
  return layers_.empty() ? 0 : layers_.front().in;
}

Index NetworkParams::output_dim() const {
  return layers_.empty() ? 0 : layers_.back().out;
}

Eigen::Map<const RowMatrix> NetworkParams::weights(Index k) const {
  const LayerSpec& l = layers_[k];
  return {values_.data() + offsets_[k], l.out, l.in};
}

Eigen::Map<RowMatrix> NetworkParams::weights(Index k) {
  const LayerSpec& l = layers_[k];
  return {values_.data() + offsets_[k], l.out, l.in};
}

Eigen::Map<const Vector> NetworkParams::bias(Index k) const {
  const LayerSpec& l = layers_[k];
  return {values_.data() + offsets_[k] + l.out * l.in, l.out};
}

Eigen::Map<Vector> NetworkParams::bias(Index k) {
  const LayerSpec& l = layers_[k];
  return {values_.data() + offsets_[k] + l.out * l.in, l.out};
}

void NetworkParams::set_flat(const Eigen::Ref<const Vector>& values) {
  if (values.size() != values_.size()) {
    throw DimensionError("flat parameter vector has " +
                         std::to_string(values.size()) + " entries, expected " +
                         std::to_string(values_.size()));
  }
  values_ = values;
}

void init_uniform(NetworkParams& params, Rng& rng) {
  for (Index k = 0; k < params.num_layers(); ++k) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(params.layer(k).in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    auto w = params.weights(k);
    for (Index r = 0; r < w.rows(); ++r) {
      for (Index c = 0; c < w.cols(); ++c) w(r, c) = dist(rng);
    }
    params.bias(k).setZero();
  }
}

namespace {

void apply_activation(Activation activation, Matrix& z) {
  switch (activation) {
    case Activation::kTanh:
      z = z.array().tanh();
      break;
    case Activation::kRelu:
      z = z.array().max(0.0);
      break;
    case Activation::kIdentity:
      break;
    case Activation::kSigmoid:
      z = z.unaryExpr([](double x) {
        // Split on sign so exp never overflows.
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      });
      break;
  }
}

// Multiplies `delta` in place by the activation derivative, expressed through
// the post-activation value `y`.
void scale_by_derivative(Activation activation, const Matrix& y,
                         Matrix& delta) {
  switch (activation) {
    case Activation::kTanh:
      delta.array() *= 1.0 - y.array().square();
      break;
    case Activation::kRelu:
      delta = (y.array() > 0.0).select(delta, 0.0);
      break;
    case Activation::kIdentity:
      break;
    case Activation::kSigmoid:
      delta.array() *= y.array() * (1.0 - y.array());
      break;
  }
}

void check_input(const NetworkParams& params, Index rows) {
  if (params.num_layers() == 0) throw DimensionError("network has no layers");
  if (rows != params.input_dim()) {
    throw DimensionError("network expects input dimension " +
                         std::to_string(params.input_dim()) + ", got " +
                         std::to_string(rows));
  }
}

}  // namespace

Matrix forward_batch(const NetworkParams& params, const Matrix& input) {
  check_input(params, input.rows());
  Matrix x = input;
  for (Index k = 0; k < params.num_layers(); ++k) {
    Matrix z = params.weights(k) * x;
    z.colwise() += params.bias(k);
    apply_activation(params.layer(k).activation, z);
    x = std::move(z);
  }
  return x;
}

ForwardTrace forward_trace(const NetworkParams& params, const Matrix& input) {
  check_input(params, input.rows());
  ForwardTrace trace;
  trace.activations.reserve(params.num_layers() + 1);
  trace.activations.push_back(input);
  for (Index k = 0; k < params.num_layers(); ++k) {
    Matrix z = params.weights(k) * trace.activations.back();
    z.colwise() += params.bias(k);
    apply_activation(params.layer(k).activation, z);
    trace.activations.push_back(std::move(z));
  }
  return trace;
}

Gradients backward_batch(const NetworkParams& params, const ForwardTrace& trace,
                         const Matrix& upstream) {
  const Index n_layers = params.num_layers();
  if (static_cast<Index>(trace.activations.size()) != n_layers + 1) {
    throw DimensionError("forward trace does not match network depth");
  }
  const Matrix& out = trace.output();
  if (upstream.rows() != out.rows() || upstream.cols() != out.cols()) {
    throw DimensionError("upstream gradient shape does not match output");
  }

  Gradients grads;
  NetworkParams view(params.layers());  // layout helper for the gradient

  Matrix delta = upstream;
  for (Index k = n_layers - 1; k >= 0; --k) {
    scale_by_derivative(params.layer(k).activation, trace.activations[k + 1],
                        delta);
    const Matrix& x = trace.activations[k];
    view.weights(k).noalias() = delta * x.transpose();
    view.bias(k) = delta.rowwise().sum();
    delta = params.weights(k).transpose() * delta;
  }
  grads.params = view.flat();
  grads.input = std::move(delta);
  return grads;
}

Vector forward(const NetworkParams& params, const Vector& input) {
  return forward_batch(params, input);
}

SampleGradients backward(const NetworkParams& params, const Vector& input,
                         const Vector& upstream) {
  ForwardTrace trace = forward_trace(params, input);
  Gradients g = backward_batch(params, trace, upstream);
  return {std::move(g.params), g.input.col(0)};
}

void adam_step(AdamState& state, Eigen::Ref<Vector> values,
               const Eigen::Ref<const Vector>& grads) {
  if (grads.size() != values.size()) {
    throw DimensionError("gradient has " + std::to_string(grads.size()) +
                         " entries, parameters have " +
                         std::to_string(values.size()));
  }
  if (state.first_moment.size() != values.size()) {
    throw DimensionError("Adam moments do not match the parameter count");
  }
  require_finite(grads, "Adam gradient");

  state.step_count += 1;
  state.first_moment = state.beta1 * state.first_moment + (1.0 - state.beta1) * grads;
  state.second_moment = state.beta2 * state.second_moment +
                        (1.0 - state.beta2) * grads.array().square().matrix();
  const double t = static_cast<double>(state.step_count);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  values.array() -= state.lr * (state.first_moment.array() / c1) /
                    ((state.second_moment.array() / c2).sqrt() + state.eps_adam);
}

void adam_step(AdamState& state, NetworkParams& params,
               const Eigen::Ref<const Vector>& grads) {
  adam_step(state, params.mutable_flat(), grads);
}

double finite_diff_check(const std::function<double(const Vector&)>& fn,
                         const Vector& point, const Vector& analytic_grad,
                         double step) {
  double worst = 0.0;
  Vector probe = point;
  for (Index i = 0; i < point.size(); ++i) {
    probe(i) = point(i) + step;
    const double up = fn(probe);
    probe(i) = point(i) - step;
    const double down = fn(probe);
    probe(i) = point(i);
    const double numeric = (up - down) / (2.0 * step);
    const double a = analytic_grad(i);
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
    worst = std::max(worst, std::abs(a - numeric) / denom);
  }
  return worst;
}

void require_finite(const Eigen::Ref<const Matrix>& values,
                    std::string_view what) {
  if (!values.allFinite()) {
    Index bad = 0;
    for (Index i = 0; i < values.size(); ++i) {
      if (!std::isfinite(values.data()[i])) {
        bad = i;
        break;
      }
    }
    throw NumericError(std::string(what) + " is not finite (first bad entry " +
                       std::to_string(bad) + " of " +
                       std::to_string(values.size()) + ")");
  }
}

void require_finite(double value, std::string_view what) {
  if (!std::isfinite(value)) {
    throw NumericError(std::string(what) + " is not finite: " +
                       std::to_string(value));
  }
}

}  // namespace opil
