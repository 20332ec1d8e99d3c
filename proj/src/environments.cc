#include "ria/environments.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "ria/errors.h"

namespace ria {
namespace {

thread_local int t_unsupervised_depth = 0;
std::atomic<std::int64_t> g_label_violations{0};

std::vector<EnvParams> Grid(EnvKind kind, const std::vector<double>& first,
                            const std::vector<double>& second) {
  std::vector<EnvParams> out;
  for (double a : first) {
    for (double b : second) out.push_back({kind, {a, b}});
  }
  return out;
}

}  // namespace

std::string ToString(EnvKind kind) {
  return kind == EnvKind::kPendulum ? "pendulum" : "springmass";
}

EnvKind EnvKindFromString(const std::string& name) {
  if (name == "pendulum") return EnvKind::kPendulum;
  if (name == "springmass") return EnvKind::kSpringMass;
  throw ConfigError("unknown environment family '" + name + "'");
}

int StateDim(EnvKind kind) { return kind == EnvKind::kPendulum ? 3 : 2; }
int ActionDim(EnvKind) { return 1; }
double ActionLow(EnvKind kind) {
  return kind == EnvKind::kPendulum ? -kPendulumMaxTorque : -kSpringMaxForce;
}
double ActionHigh(EnvKind kind) {
  return kind == EnvKind::kPendulum ? kPendulumMaxTorque : kSpringMaxForce;
}

EnvParams EnvParams::Pendulum(double mass, double length) {
  return {EnvKind::kPendulum, {mass, length}};
}

EnvParams EnvParams::SpringMass(double mass, double damping) {
  return {EnvKind::kSpringMass, {mass, damping}};
}

double EnvParams::length() const {
  if (kind != EnvKind::kPendulum) throw ConfigError("springmass has no length");
  return values[1];
}

double EnvParams::damping() const {
  if (kind != EnvKind::kSpringMass) throw ConfigError("pendulum has no damping");
  return values[1];
}

std::array<std::string_view, 2> EnvParams::names() const {
  if (kind == EnvKind::kPendulum) return {"m", "l"};
  return {"m", "d"};
}

std::string EnvParams::ToString() const {
  std::ostringstream out;
  const auto n = names();
  out << ria::ToString(kind) << "(" << n[0] << "=" << values[0] << ", " << n[1]
      << "=" << values[1] << ")";
  return out.str();
}

void EnvFamily::Validate() const {
  if (train_params.empty()) throw ConfigError("family has no training environments");
  if (test_params.empty()) throw ConfigError("family has no test environments");
  if (episode_length <= 0 || episode_length > kMaxEpisodeLength) {
    throw ConfigError("episode length must be in [1, 200]");
  }
  if (!(beta > 0.0)) throw ConfigError("beta must be positive");
  for (const auto* list : {&train_params, &test_params}) {
    for (const EnvParams& p : *list) {
      if (p.kind != kind) throw ConfigError("family mixes environment kinds");
      if (!(p.values[0] > 0.0) || !(p.values[1] > 0.0)) {
        throw ConfigError("environment parameters must be strictly positive");
      }
    }
  }
  for (const EnvParams& test : test_params) {
    if (std::find(train_params.begin(), train_params.end(), test) !=
        train_params.end()) {
      throw ConfigError("train and test lists overlap at " + test.ToString());
    }
  }
}

EnvFamily PendulumFamily() {
  const std::vector<double> train = {0.75, 0.8, 0.85, 0.90, 0.95, 1.0,
                                     1.05, 1.1, 1.15, 1.2,  1.25};
  const std::vector<double> test = {0.2, 0.4, 0.5, 0.7, 1.3, 1.5, 1.6, 1.8};
  EnvFamily family;
  family.name = "pendulum";
  family.kind = EnvKind::kPendulum;
  family.train_params = Grid(EnvKind::kPendulum, train, train);
  family.test_params = Grid(EnvKind::kPendulum, test, test);
  family.episode_length = 200;
  family.beta = 10.0;
  return family;
}

EnvFamily PendulumFourEnvFamily() {
  EnvFamily family = PendulumFamily();
  family.name = "pendulum4";
  family.train_params = Grid(EnvKind::kPendulum, {0.75, 1.25}, {0.75, 1.25});
  return family;
}

EnvFamily SpringMassFamily() {
  const std::vector<double> train = {0.75, 0.85, 1.0, 1.15, 1.25};
  const std::vector<double> test = {0.2, 0.4, 1.6, 1.8};
  EnvFamily family;
  family.name = "springmass";
  family.kind = EnvKind::kSpringMass;
  family.train_params = Grid(EnvKind::kSpringMass, train, train);
  family.test_params = Grid(EnvKind::kSpringMass, test, test);
  family.episode_length = 200;
  family.beta = 1.0;
  return family;
}

EnvFamily FamilyByName(const std::string& name) {
  if (name == "pendulum") return PendulumFamily();
  if (name == "pendulum4") return PendulumFourEnvFamily();
  if (name == "springmass") return SpringMassFamily();
  throw ConfigError("unknown environment family '" + name + "'");
}

double WrapAngle(double theta) {
  constexpr double kPi = std::numbers::pi;
  double wrapped = std::fmod(theta + kPi, 2.0 * kPi);
  if (wrapped < 0.0) wrapped += 2.0 * kPi;
  wrapped -= kPi;
  // fmod maps +pi to -pi; keep the interval half-open on the left.
  if (wrapped <= -kPi) wrapped += 2.0 * kPi;
  return wrapped;
}

StepResult<PendulumState> PendulumStep(PendulumState state, double torque,
                                       const EnvParams& params) {
  const double u = std::clamp(torque, -kPendulumMaxTorque, kPendulumMaxTorque);
  const double m = params.mass();
  const double l = params.length();
  const double th = WrapAngle(state.theta);
  const double reward =
      -(th * th + 0.1 * state.theta_dot * state.theta_dot + 0.001 * u * u);
  double theta_dot =
      state.theta_dot + (3.0 * kPendulumGravity / (2.0 * l) * std::sin(state.theta) +
                         3.0 / (m * l * l) * u) *
                            kPendulumDt;
  theta_dot = std::clamp(theta_dot, -kPendulumMaxSpeed, kPendulumMaxSpeed);
  return {{state.theta + theta_dot * kPendulumDt, theta_dot}, reward};
}

StepResult<SpringMassState> SpringMassStep(SpringMassState state, double force,
                                           const EnvParams& params) {
  const double u = std::clamp(force, -kSpringMaxForce, kSpringMaxForce);
  const double m = params.mass();
  const double d = params.damping();
  const double reward = -(state.x * state.x + 0.1 * state.v * state.v + 0.001 * u * u);
  const double v =
      state.v + (-kSpringStiffness * state.x / m - d * state.v / m + u / m) * kSpringDt;
  return {{state.x + v * kSpringDt, v}, reward};
}

double Reward(EnvKind kind, std::span<const double> observation,
              std::span<const double> action) {
  if (kind == EnvKind::kPendulum) {
    const double u = std::clamp(action[0], -kPendulumMaxTorque, kPendulumMaxTorque);
    const double th = std::atan2(observation[1], observation[0]);
    const double th_dot = observation[2];
    return -(th * th + 0.1 * th_dot * th_dot + 0.001 * u * u);
  }
  const double u = std::clamp(action[0], -kSpringMaxForce, kSpringMaxForce);
  return -(observation[0] * observation[0] + 0.1 * observation[1] * observation[1] +
           0.001 * u * u);
}

Vector RewardBatch(EnvKind kind, const Matrix2D& observations,
                   const Matrix2D& actions) {
  Vector out(observations.rows());
  for (Eigen::Index i = 0; i < observations.rows(); ++i) {
    out[i] = Reward(kind, {observations.row(i).data(), static_cast<std::size_t>(observations.cols())},
                    {actions.row(i).data(), static_cast<std::size_t>(actions.cols())});
  }
  return out;
}

Environment::Environment(EnvParams params) : params_(params) {}

Vector Environment::Reset(std::mt19937_64& rng) {
  if (params_.kind == EnvKind::kPendulum) {
    std::uniform_real_distribution<double> th(-std::numbers::pi, std::numbers::pi);
    std::uniform_real_distribution<double> th_dot(-1.0, 1.0);
    const double a = th(rng);
    raw_ = {a, th_dot(rng)};
  } else {
    std::uniform_real_distribution<double> x(-1.0, 1.0);
    std::uniform_real_distribution<double> v(-0.5, 0.5);
    const double a = x(rng);
    raw_ = {a, v(rng)};
  }
  return Observe();
}

double Environment::Step(const Vector& action) {
  if (params_.kind == EnvKind::kPendulum) {
    const auto r = PendulumStep({raw_[0], raw_[1]}, action[0], params_);
    raw_ = {r.next.theta, r.next.theta_dot};
    return r.reward;
  }
  const auto r = SpringMassStep({raw_[0], raw_[1]}, action[0], params_);
  raw_ = {r.next.x, r.next.v};
  return r.reward;
}

Vector Environment::Observe() const {
  if (params_.kind == EnvKind::kPendulum) {
    Vector obs(3);
    obs << std::cos(raw_[0]), std::sin(raw_[0]), raw_[1];
    return obs;
  }
  Vector obs(2);
  obs << raw_[0], raw_[1];
  return obs;
}

UnsupervisedScope::UnsupervisedScope() { ++t_unsupervised_depth; }
UnsupervisedScope::~UnsupervisedScope() { --t_unsupervised_depth; }
bool UnsupervisedScope::Active() { return t_unsupervised_depth > 0; }

std::int64_t LabelAccessViolations() { return g_label_violations.load(); }
void ResetLabelAccessViolations() { g_label_violations = 0; }

void CheckLabelAccess() {
  if (UnsupervisedScope::Active()) {
    ++g_label_violations;
    throw LabelAccessViolation(
        "environment label read inside an unsupervised gradient scope");
  }
}

namespace internal {
int CarryLabel(const Trajectory& trajectory) { return trajectory.env_label_; }
}  // namespace internal

double Trajectory::Return() const {
  double total = 0.0;
  for (double r : rewards) total += r;
  return total;
}

bool Trajectory::IsConsistent() const {
  return states.size() == actions.size() + 1 && rewards.size() == actions.size();
}

Policy ZeroPolicy(EnvKind kind) {
  const int dim = ActionDim(kind);
  return [dim](const Vector&, std::mt19937_64&) { return Vector::Zero(dim).eval(); };
}

Policy UniformRandomPolicy(EnvKind kind) {
  const int dim = ActionDim(kind);
  const double lo = ActionLow(kind);
  const double hi = ActionHigh(kind);
  return [dim, lo, hi](const Vector&, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(lo, hi);
    Vector a(dim);
    for (int i = 0; i < dim; ++i) a[i] = dist(rng);
    return a;
  };
}

Trajectory Rollout(const EnvParams& params, const Policy& policy, int horizon,
                   std::uint64_t seed, std::int64_t trajectory_id, int env_label) {
  if (horizon < 0 || horizon > kMaxEpisodeLength) {
    throw ConfigError("rollout horizon must be in [0, 200]");
  }
  std::mt19937_64 rng(seed);
  Environment env(params);
  Trajectory traj(trajectory_id, env_label, params);
  traj.states.push_back(env.Reset(rng));
  for (int t = 0; t < horizon; ++t) {
    Vector action = policy(traj.states.back(), rng);
    traj.rewards.push_back(env.Step(action));
    traj.actions.push_back(std::move(action));
    traj.states.push_back(env.Observe());
  }
  return traj;
}

std::size_t SampleTrainingEnvIndex(const EnvFamily& family, std::mt19937_64& rng) {
  if (family.train_params.empty()) {
    throw ConfigError("cannot sample from an empty training list");
  }
  std::uniform_int_distribution<std::size_t> dist(0, family.train_params.size() - 1);
  return dist(rng);
}

EnvParams SampleTrainingEnv(const EnvFamily& family, std::mt19937_64& rng) {
  return family.train_params[SampleTrainingEnvIndex(family, rng)];
}

void WriteTrajectoriesNdjson(std::ostream& out,
                             std::span<const Trajectory> trajectories) {
  for (const Trajectory& traj : trajectories) {
    const int label = traj.env_label();
    for (std::size_t t = 0; t < traj.states.size(); ++t) {
      const Vector& s = traj.states[t];
      nlohmann::json rec;
      rec["trajectory_id"] = traj.id();
      rec["env_label"] = label;
      rec["t"] = t;
      rec["state"] = std::vector<double>(s.data(), s.data() + s.size());
      if (t < traj.actions.size()) {
        const Vector& a = traj.actions[t];
        rec["action"] = std::vector<double>(a.data(), a.data() + a.size());
        rec["reward"] = traj.rewards[t];
      } else {
        rec["action"] = nlohmann::json::array();
        rec["reward"] = nullptr;
      }
      out << rec.dump() << '\n';
    }
  }
}

std::vector<Trajectory> ReadTrajectoriesNdjson(std::istream& in, EnvKind kind) {
  std::vector<Trajectory> out;
  std::string line;
  std::size_t line_no = 0;
  bool open = false;  // last trajectory still expects more records
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = "trajectory record " + std::to_string(line_no);
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
      const auto id = rec.at("trajectory_id").get<std::int64_t>();
      const int label = rec.at("env_label").get<int>();
      const auto t = rec.at("t").get<std::size_t>();
      const auto state = rec.at("state").get<std::vector<double>>();
      const auto action = rec.at("action").get<std::vector<double>>();
      if (static_cast<int>(state.size()) != StateDim(kind)) {
        throw ConfigError(where + ": state has the wrong dimension");
      }
      if (t == 0) {
        if (open) throw ConfigError(where + ": previous trajectory ended without a final state");
        EnvParams params;
        params.kind = kind;
        out.emplace_back(id, label, params);
      } else if (!open || out.back().id() != id || out.back().states.size() != t) {
        throw ConfigError(where + ": records out of order");
      }
      Trajectory& traj = out.back();
      traj.states.push_back(Eigen::Map<const Vector>(state.data(), state.size()));
      if (action.empty()) {
        open = false;
      } else {
        if (static_cast<int>(action.size()) != ActionDim(kind)) {
          throw ConfigError(where + ": action has the wrong dimension");
        }
        traj.actions.push_back(Eigen::Map<const Vector>(action.data(), action.size()));
        traj.rewards.push_back(rec.at("reward").get<double>());
        open = true;
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
  if (open) throw ConfigError("last trajectory ended without a final state");
  return out;
}

}  // namespace ria
