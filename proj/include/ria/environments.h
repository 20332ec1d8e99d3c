#ifndef RIA_ENVIRONMENTS_H_
#define RIA_ENVIRONMENTS_H_

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ria/matrix.h"

namespace ria {

enum class EnvKind { kPendulum, kSpringMass };

std::string ToString(EnvKind kind);
EnvKind EnvKindFromString(const std::string& name);

// Observation and action layout of each family.
//   pendulum:   observation [cos th, sin th, th_dot], action [torque]
//   springmass: observation [x, v],                   action [force]
int StateDim(EnvKind kind);
int ActionDim(EnvKind kind);
double ActionLow(EnvKind kind);
double ActionHigh(EnvKind kind);

// Hidden physical parameters of one environment. values[0] is always the
// mass multiplier; values[1] is the pendulum length or the spring damping.
struct EnvParams {
  EnvKind kind = EnvKind::kPendulum;
  std::array<double, 2> values = {1.0, 1.0};

  static EnvParams Pendulum(double mass, double length);
  static EnvParams SpringMass(double mass, double damping);

  double mass() const { return values[0]; }
  double length() const;
  double damping() const;
  std::array<std::string_view, 2> names() const;
  std::string ToString() const;

  bool operator==(const EnvParams&) const = default;
};

// K training and L test environments sharing state and action spaces.
struct EnvFamily {
  std::string name;
  EnvKind kind = EnvKind::kPendulum;
  std::vector<EnvParams> train_params;
  std::vector<EnvParams> test_params;
  int episode_length = 200;
  double beta = 10.0;

  // Throws ConfigError on empty lists, non-positive values, mixed kinds or
  // overlapping train/test lists.
  void Validate() const;
};

// Training grid m, l in {0.75..1.25} (121 envs), test grid m, l in
// {0.2, 0.4, 0.5, 0.7, 1.3, 1.5, 1.6, 1.8} (64 envs), 200 steps, beta 10.
EnvFamily PendulumFamily();
// Four well separated training environments (corners of the training grid)
// with the standard pendulum test grid.
EnvFamily PendulumFourEnvFamily();
// Training m, d in {0.75, 0.85, 1.0, 1.15, 1.25}, test {0.2, 0.4, 1.6, 1.8}.
EnvFamily SpringMassFamily();
// "pendulum", "pendulum4" or "springmass".
EnvFamily FamilyByName(const std::string& name);

struct PendulumState {
  double theta = 0.0;
  double theta_dot = 0.0;
};

struct SpringMassState {
  double x = 0.0;
  double v = 0.0;
};

template <typename State>
struct StepResult {
  State next;
  double reward = 0.0;
};

inline constexpr double kPendulumGravity = 10.0;
inline constexpr double kPendulumDt = 0.05;
inline constexpr double kPendulumMaxSpeed = 8.0;
inline constexpr double kPendulumMaxTorque = 2.0;
inline constexpr double kSpringStiffness = 10.0;
inline constexpr double kSpringDt = 0.05;
inline constexpr double kSpringMaxForce = 2.0;

// Wraps an angle into (-pi, pi].
double WrapAngle(double theta);

StepResult<PendulumState> PendulumStep(PendulumState state, double torque,
                                       const EnvParams& params);
StepResult<SpringMassState> SpringMassStep(SpringMassState state, double force,
                                           const EnvParams& params);

// Known reward of an (observation, action) pair; actions are clipped first.
double Reward(EnvKind kind, std::span<const double> observation,
              std::span<const double> action);
// Row-wise reward for a batch of observations and actions.
Vector RewardBatch(EnvKind kind, const Matrix2D& observations,
                   const Matrix2D& actions);

// One environment instance with internal state.
class Environment {
 public:
  explicit Environment(EnvParams params);

  // Samples the initial state (pendulum: th ~ U(-pi, pi), th_dot ~ U(-1, 1);
  // springmass: x ~ U(-1, 1), v ~ U(-0.5, 0.5)) and returns the observation.
  Vector Reset(std::mt19937_64& rng);
  // Applies an action and returns the reward of the pre-step state.
  double Step(const Vector& action);
  Vector Observe() const;

  // Raw internal state: (theta, theta_dot) or (x, v).
  void SetRawState(double a, double b) { raw_ = {a, b}; }
  std::array<double, 2> raw_state() const { return raw_; }
  const EnvParams& params() const { return params_; }

 private:
  EnvParams params_;
  std::array<double, 2> raw_ = {0.0, 0.0};
};

// Marks a region in which environment labels must not be read. Nested scopes
// are allowed; the guard is per thread.
class UnsupervisedScope {
 public:
  UnsupervisedScope();
  ~UnsupervisedScope();
  UnsupervisedScope(const UnsupervisedScope&) = delete;
  UnsupervisedScope& operator=(const UnsupervisedScope&) = delete;

  static bool Active();
};

// Number of label reads attempted inside an UnsupervisedScope, process-wide.
std::int64_t LabelAccessViolations();
void ResetLabelAccessViolations();
// Throws LabelAccessViolation (and counts it) when called inside a scope.
void CheckLabelAccess();

class Trajectory;
namespace internal {
// Copies the label into derived records (segments) without reading it.
int CarryLabel(const Trajectory& trajectory);
}  // namespace internal

class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(std::int64_t id, int env_label, EnvParams params)
      : id_(id), env_label_(env_label), params_(params) {}

  std::int64_t id() const { return id_; }
  // Evaluation-only. Throws inside an UnsupervisedScope.
  int env_label() const {
    CheckLabelAccess();
    return env_label_;
  }
  const EnvParams& params() const {
    CheckLabelAccess();
    return params_;
  }

  std::vector<Vector> states;
  std::vector<Vector> actions;
  std::vector<double> rewards;

  std::size_t num_steps() const { return actions.size(); }
  double Return() const;
  // Length invariant: |states| = |actions| + 1 = |rewards| + 1.
  bool IsConsistent() const;

 private:
  friend int internal::CarryLabel(const Trajectory& trajectory);

  std::int64_t id_ = 0;
  int env_label_ = -1;
  EnvParams params_;
};

using Policy = std::function<Vector(const Vector& observation, std::mt19937_64& rng)>;

Policy ZeroPolicy(EnvKind kind);
Policy UniformRandomPolicy(EnvKind kind);

inline constexpr int kMaxEpisodeLength = 200;

// Runs `policy` for `horizon` steps from a seeded initial state.
Trajectory Rollout(const EnvParams& params, const Policy& policy, int horizon,
                   std::uint64_t seed, std::int64_t trajectory_id = 0,
                   int env_label = -1);

// Uniform index into family.train_params.
std::size_t SampleTrainingEnvIndex(const EnvFamily& family, std::mt19937_64& rng);
EnvParams SampleTrainingEnv(const EnvFamily& family, std::mt19937_64& rng);

// One JSON record per time step:
//   {"trajectory_id", "env_label", "t", "state", "action", "reward"}
// The final state of each trajectory has an empty action and null reward.
void WriteTrajectoriesNdjson(std::ostream& out,
                             std::span<const Trajectory> trajectories);
// Inverse of WriteTrajectoriesNdjson. Physical parameters are not stored in
// the dump, so every trajectory gets default parameters of `kind`.
std::vector<Trajectory> ReadTrajectoriesNdjson(std::istream& in, EnvKind kind);

}  // namespace ria

#endif  // RIA_ENVIRONMENTS_H_
