#ifndef RIA_MLP_H_
#define RIA_MLP_H_

#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ria/matrix.h"

namespace ria {

enum class Activation { kRelu, kTanh };
enum class OutputActivation { kIdentity, kSigmoid };

std::string ToString(Activation activation);
std::string ToString(OutputActivation activation);
Activation ActivationFromString(const std::string& name);
OutputActivation OutputActivationFromString(const std::string& name);

// Gradients of a scalar loss with respect to every parameter of an Mlp and
// with respect to the batch input of the cached forward pass.
struct MlpGradients {
  std::vector<Matrix2D> weights;
  std::vector<RowVector> biases;
  Matrix2D input;

  // Adds parameter gradients of `other` (input gradients are not touched).
  MlpGradients& operator+=(const MlpGradients& other);
  double SquaredNorm() const;
};

// A view over one contiguous block of parameter values and its gradient.
struct ParamSlot {
  std::span<double> value;
  std::span<const double> grad;
};

// Fully connected network: hidden layers use `activation`, the last layer
// uses `output_activation`. weights[i] is (layer_dims[i] x layer_dims[i+1])
// so a batch of row inputs maps as X * W + b.
class Mlp {
 public:
  Mlp() = default;
  // All parameters start at zero; call InitGlorot for a trainable network.
  Mlp(std::vector<int> layer_dims, Activation activation,
      OutputActivation output_activation);

  void InitGlorot(std::mt19937_64& rng);

  // Evaluates the network and caches activations for Backward.
  const Matrix2D& Forward(const Matrix2D& input);
  // Evaluates the network without touching the cache.
  Matrix2D Predict(const Matrix2D& input) const;
  // Gradients for the most recent Forward given dLoss/dOutput.
  MlpGradients Backward(const Matrix2D& upstream_grad) const;

  bool has_cache() const { return has_cache_; }
  void ClearCache();
  // Pre-activation values of each layer from the cached forward pass.
  const std::vector<Matrix2D>& cached_preactivations() const {
    return preactivations_;
  }

  MlpGradients ZeroGradients() const;
  // Pairs each parameter block with the matching block of `grads`.
  std::vector<ParamSlot> Slots(const MlpGradients& grads);
  std::size_t ParameterCount() const;

  int input_dim() const { return layer_dims_.front(); }
  int output_dim() const { return layer_dims_.back(); }
  std::size_t num_layers() const { return weights_.size(); }
  const std::vector<int>& layer_dims() const { return layer_dims_; }
  Activation activation() const { return activation_; }
  OutputActivation output_activation() const { return output_activation_; }

  std::vector<Matrix2D>& weights() { return weights_; }
  const std::vector<Matrix2D>& weights() const { return weights_; }
  std::vector<RowVector>& biases() { return biases_; }
  const std::vector<RowVector>& biases() const { return biases_; }

 private:
  void CheckInput(const Matrix2D& input) const;

  std::vector<int> layer_dims_;
  Activation activation_ = Activation::kRelu;
  OutputActivation output_activation_ = OutputActivation::kIdentity;
  std::vector<Matrix2D> weights_;
  std::vector<RowVector> biases_;

  bool has_cache_ = false;
  std::vector<Matrix2D> layer_inputs_;
  std::vector<Matrix2D> preactivations_;
  Matrix2D output_;
};

}  // namespace ria

#endif  // RIA_MLP_H_
