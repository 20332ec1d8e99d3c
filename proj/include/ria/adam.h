#ifndef RIA_ADAM_H_
#define RIA_ADAM_H_

#include <cstdint>
#include <span>
#include <vector>

#include "ria/mlp.h"

namespace ria {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Global L2-norm clip over all slots of one step; <= 0 disables clipping.
  double clip_norm = 10.0;
};

// Adam with bias correction. Moment buffers are sized on the first step and
// must keep the same slot layout afterwards.
class Adam {
 public:
  Adam() = default;
  explicit Adam(AdamConfig config) : config_(config) {}

  // Updates every slot in place. Throws DivergedTraining (leaving all values
  // untouched) if any gradient entry is non-finite. Returns the pre-clip
  // global gradient norm.
  double Step(std::span<const ParamSlot> slots);

  const AdamConfig& config() const { return config_; }
  std::int64_t step() const { return step_; }
  const std::vector<std::vector<double>>& first_moment() const { return m_; }
  const std::vector<std::vector<double>>& second_moment() const { return v_; }

 private:
  AdamConfig config_;
  std::int64_t step_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

}  // namespace ria

#endif  // RIA_ADAM_H_
