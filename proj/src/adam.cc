#include "ria/adam.h"

#include <cmath>

#include "ria/errors.h"

namespace ria {

double Adam::Step(std::span<const ParamSlot> slots) {
  double sq_norm = 0.0;
  for (const ParamSlot& slot : slots) {
    if (slot.value.size() != slot.grad.size()) {
      throw ConfigError("Adam slot value/gradient size mismatch");
    }
    for (double g : slot.grad) {
      if (!std::isfinite(g)) {
        throw DivergedTraining("non-finite gradient passed to Adam");
      }
      sq_norm += g * g;
    }
  }

  if (m_.empty()) {
    m_.reserve(slots.size());
    v_.reserve(slots.size());
    for (const ParamSlot& slot : slots) {
      m_.emplace_back(slot.value.size(), 0.0);
      v_.emplace_back(slot.value.size(), 0.0);
    }
  } else if (m_.size() != slots.size()) {
    throw ConfigError("Adam slot layout changed between steps");
  }
  for (std::size_t s = 0; s < slots.size(); ++s) {
    if (m_[s].size() != slots[s].value.size()) {
      throw ConfigError("Adam slot size changed between steps");
    }
  }

  const double norm = std::sqrt(sq_norm);
  double scale = 1.0;
  if (config_.clip_norm > 0.0 && norm > config_.clip_norm) {
    scale = config_.clip_norm / norm;
  }

  ++step_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  for (std::size_t s = 0; s < slots.size(); ++s) {
    std::span<double> value = slots[s].value;
    std::span<const double> grad = slots[s].grad;
    std::vector<double>& m = m_[s];
    std::vector<double>& v = v_[s];
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double g = grad[i] * scale;
      m[i] = b1 * m[i] + (1.0 - b1) * g;
      v[i] = b2 * v[i] + (1.0 - b2) * g * g;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      value[i] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
  }
  return norm;
}

}  // namespace ria
