#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace opil {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
// Batches are stored column-wise: one sample per column.
using Matrix = Eigen::MatrixXd;
using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Rng = std::mt19937_64;

enum class Activation { kTanh, kRelu, kIdentity, kSigmoid };

std::string_view to_string(Activation activation);
Activation activation_from_string(std::string_view name);

struct LayerSpec {
  Index in = 0;
  Index out = 0;
  Activation activation = Activation::kIdentity;

  bool operator==(const LayerSpec&) const = default;
};

/// Parameters of a feed-forward stack of affine + activation layers.
///
/// All weights and biases live in one contiguous vector (the flat view). Layer
/// k occupies `out*in` row-major weights followed by `out` biases, so the flat
/// view is exactly the concatenation used by the checkpoint format.
class NetworkParams {
 public:
  NetworkParams() = default;
  /// Zero-initialised parameters. Throws DimensionError if consecutive layers
  /// do not chain.
  explicit NetworkParams(std::vector<LayerSpec> layers);

  /// Convenience builder: `in -> hidden... -> out`.
  static NetworkParams mlp(Index in, std::span<const Index> hidden, Index out,
                           Activation hidden_activation,
                           Activation output_activation);

  Index num_layers() const { return static_cast<Index>(layers_.size()); }
  Index input_dim() const;
  Index output_dim() const;
  Index size() const { return values_.size(); }

  const std::vector<LayerSpec>& layers() const { return layers_; }
  const LayerSpec& layer(Index k) const { return layers_[k]; }

  Eigen::Map<const RowMatrix> weights(Index k) const;
  Eigen::Map<RowMatrix> weights(Index k);
  Eigen::Map<const Vector> bias(Index k) const;
  Eigen::Map<Vector> bias(Index k);

  const Vector& flat() const { return values_; }
  Eigen::Map<Vector> mutable_flat() { return {values_.data(), values_.size()}; }
  void set_flat(const Eigen::Ref<const Vector>& values);

  bool same_shape(const NetworkParams& other) const {
    return layers_ == other.layers_;
  }
  bool operator==(const NetworkParams& other) const {
    return same_shape(other) && values_ == other.values_;
  }

 private:
  std::vector<LayerSpec> layers_;
  std::vector<Index> offsets_;
  Vector values_;
};

/// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases 0.
void init_uniform(NetworkParams& params, Rng& rng);

/// Post-activation values of every layer for a batch; `activations[0]` is the
/// input and `activations.back()` the network output.
struct ForwardTrace {
  std::vector<Matrix> activations;

  const Matrix& output() const { return activations.back(); }
};

struct Gradients {
  Vector params;  // same layout as NetworkParams::flat()
  Matrix input;   // one column per batch sample
};

Matrix forward_batch(const NetworkParams& params, const Matrix& input);
ForwardTrace forward_trace(const NetworkParams& params, const Matrix& input);

/// Reverse-mode pass for the scalar `sum(upstream .* output)`. Parameter
/// gradients are summed over the batch.
Gradients backward_batch(const NetworkParams& params, const ForwardTrace& trace,
                         const Matrix& upstream);

Vector forward(const NetworkParams& params, const Vector& input);

struct SampleGradients {
  Vector params;
  Vector input;
};

SampleGradients backward(const NetworkParams& params, const Vector& input,
                         const Vector& upstream);

struct AdamState {
  Vector first_moment;
  Vector second_moment;
  std::int64_t step_count = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_adam = 1e-8;

  AdamState() = default;
  AdamState(Index num_params, double learning_rate)
      : first_moment(Vector::Zero(num_params)),
        second_moment(Vector::Zero(num_params)),
        lr(learning_rate) {}
};

/// One bias-corrected Adam descent step on `params.flat()`. Throws
/// NumericError (leaving params and state untouched) for non-finite gradients.
void adam_step(AdamState& state, NetworkParams& params,
               const Eigen::Ref<const Vector>& grads);
/// Same update on a bare vector (used for free parameters such as log-stds).
void adam_step(AdamState& state, Eigen::Ref<Vector> values,
               const Eigen::Ref<const Vector>& grads);

/// Worst per-coordinate relative error between `analytic_grad` and central
/// differences of `fn` at `point`. Denominator is max(|a|, |b|, 1e-8).
double finite_diff_check(const std::function<double(const Vector&)>& fn,
                         const Vector& point, const Vector& analytic_grad,
                         double step);

/// Throws NumericError naming `what` if any entry is NaN or infinite.
void require_finite(const Eigen::Ref<const Matrix>& values,
                    std::string_view what);
void require_finite(double value, std::string_view what);

}  // namespace opil
