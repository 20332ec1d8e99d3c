#include "ria/mlp.h"

#include <cmath>
#include <utility>

#include "ria/errors.h"

namespace ria {
namespace {

void ApplyHidden(Activation activation, Matrix2D& m) {
  switch (activation) {
    case Activation::kRelu:
      m = m.cwiseMax(0.0);
      break;
    case Activation::kTanh:
      m = m.array().tanh();
      break;
  }
}

void ApplyOutput(OutputActivation activation, Matrix2D& m) {
  if (activation == OutputActivation::kSigmoid) {
    m = (1.0 + (-m.array()).exp()).inverse();
  }
}

}  // namespace

std::string ToString(Activation activation) {
  return activation == Activation::kRelu ? "relu" : "tanh";
}

std::string ToString(OutputActivation activation) {
  return activation == OutputActivation::kIdentity ? "identity" : "sigmoid";
}

Activation ActivationFromString(const std::string& name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  throw ConfigError("unknown activation '" + name + "'");
}

OutputActivation OutputActivationFromString(const std::string& name) {
  if (name == "identity") return OutputActivation::kIdentity;
  if (name == "sigmoid") return OutputActivation::kSigmoid;
  throw ConfigError("unknown output activation '" + name + "'");
}

MlpGradients& MlpGradients::operator+=(const MlpGradients& other) {
  if (other.weights.size() != weights.size()) {
    throw UsageError("adding gradients of differently shaped networks");
  }
  for (std::size_t i = 0; i < weights.size(); ++i) {
    weights[i] += other.weights[i];
    biases[i] += other.biases[i];
  }
  return *this;
}

double MlpGradients::SquaredNorm() const {
  double total = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    total += weights[i].squaredNorm() + biases[i].squaredNorm();
  }
  return total;
}

Mlp::Mlp(std::vector<int> layer_dims, Activation activation,
         OutputActivation output_activation)
    : layer_dims_(std::move(layer_dims)),
      activation_(activation),
      output_activation_(output_activation) {
  if (layer_dims_.size() < 2) {
    throw ConfigError("an Mlp needs at least an input and an output layer");
  }
  for (int d : layer_dims_) {
    if (d <= 0) throw ConfigError("Mlp layer dimensions must be positive");
  }
  for (std::size_t i = 0; i + 1 < layer_dims_.size(); ++i) {
    weights_.push_back(Matrix2D::Zero(layer_dims_[i], layer_dims_[i + 1]));
    biases_.push_back(RowVector::Zero(layer_dims_[i + 1]));
  }
}

void Mlp::InitGlorot(std::mt19937_64& rng) {
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    const double limit =
        std::sqrt(6.0 / static_cast<double>(layer_dims_[i] + layer_dims_[i + 1]));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Matrix2D& w = weights_[i];
    for (Eigen::Index k = 0; k < w.size(); ++k) w.data()[k] = dist(rng);
    biases_[i].setZero();
  }
  ClearCache();
}

void Mlp::CheckInput(const Matrix2D& input) const {
  if (weights_.empty()) throw ConfigError("Mlp has no layers");
  if (input.cols() != layer_dims_.front()) {
    throw ConfigError("Mlp input has " + std::to_string(input.cols()) +
                      " columns, expected " +
                      std::to_string(layer_dims_.front()));
  }
}

const Matrix2D& Mlp::Forward(const Matrix2D& input) {
  CheckInput(input);
  const std::size_t n = weights_.size();
  layer_inputs_.resize(n);
  preactivations_.resize(n);
  layer_inputs_[0] = input;
  for (std::size_t i = 0; i < n; ++i) {
    Matrix2D& pre = preactivations_[i];
    pre.noalias() = layer_inputs_[i] * weights_[i];
    pre.rowwise() += biases_[i];
    Matrix2D activated = pre;
    if (i + 1 < n) {
      ApplyHidden(activation_, activated);
      layer_inputs_[i + 1] = std::move(activated);
    } else {
      ApplyOutput(output_activation_, activated);
      output_ = std::move(activated);
    }
  }
  has_cache_ = true;
  return output_;
}

Matrix2D Mlp::Predict(const Matrix2D& input) const {
  CheckInput(input);
  const std::size_t n = weights_.size();
  Matrix2D x = input;
  for (std::size_t i = 0; i < n; ++i) {
    Matrix2D pre = x * weights_[i];
    pre.rowwise() += biases_[i];
    if (i + 1 < n) {
      ApplyHidden(activation_, pre);
    } else {
      ApplyOutput(output_activation_, pre);
    }
    x = std::move(pre);
  }
  return x;
}

MlpGradients Mlp::Backward(const Matrix2D& upstream_grad) const {
  if (!has_cache_) {
    throw UsageError("Mlp::Backward called without a cached Forward pass");
  }
  if (upstream_grad.rows() != output_.rows() ||
      upstream_grad.cols() != output_.cols()) {
    throw ConfigError("upstream gradient shape does not match Mlp output");
  }
  const std::size_t n = weights_.size();
  MlpGradients grads;
  grads.weights.resize(n);
  grads.biases.resize(n);

  Matrix2D delta = upstream_grad;
  for (std::size_t idx = n; idx-- > 0;) {
    if (idx + 1 == n) {
      if (output_activation_ == OutputActivation::kSigmoid) {
        delta.array() *= output_.array() * (1.0 - output_.array());
      }
    } else {
      const Matrix2D& pre = preactivations_[idx];
      if (activation_ == Activation::kRelu) {
        delta.array() *= (pre.array() > 0.0).cast<double>();
      } else {
        const Matrix2D& act = layer_inputs_[idx + 1];
        delta.array() *= 1.0 - act.array().square();
      }
    }
    grads.weights[idx].noalias() = layer_inputs_[idx].transpose() * delta;
    grads.biases[idx] = delta.colwise().sum();
    Matrix2D next = delta * weights_[idx].transpose();
    delta = std::move(next);
  }
  grads.input = std::move(delta);
  return grads;
}

void Mlp::ClearCache() {
  has_cache_ = false;
  layer_inputs_.clear();
  preactivations_.clear();
  output_.resize(0, 0);
}

MlpGradients Mlp::ZeroGradients() const {
  MlpGradients grads;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    grads.weights.push_back(Matrix2D::Zero(weights_[i].rows(), weights_[i].cols()));
    grads.biases.push_back(RowVector::Zero(biases_[i].size()));
  }
  return grads;
}

std::vector<ParamSlot> Mlp::Slots(const MlpGradients& grads) {
  if (grads.weights.size() != weights_.size()) {
    throw ConfigError("gradient layer count does not match network");
  }
  std::vector<ParamSlot> slots;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    if (grads.weights[i].size() != weights_[i].size() ||
        grads.biases[i].size() != biases_[i].size()) {
      throw ConfigError("gradient shape does not match network parameters");
    }
    slots.push_back({{weights_[i].data(), static_cast<std::size_t>(weights_[i].size())},
                     {grads.weights[i].data(), static_cast<std::size_t>(grads.weights[i].size())}});
    slots.push_back({{biases_[i].data(), static_cast<std::size_t>(biases_[i].size())},
                     {grads.biases[i].data(), static_cast<std::size_t>(grads.biases[i].size())}});
  }
  return slots;
}

std::size_t Mlp::ParameterCount() const {
  std::size_t count = 0;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    count += weights_[i].size() + biases_[i].size();
  }
  return count;
}

}  // namespace ria
