#ifndef RIA_TESTS_TEST_UTIL_H_
#define RIA_TESTS_TEST_UTIL_H_

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "ria/dynamics.h"
#include "ria/environments.h"
#include "ria/matrix.h"
#include "ria/mlp.h"
#include "ria/trainer.h"

namespace ria::testing {

inline Matrix2D RandomMatrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng,
                             double scale = 1.0) {
  std::normal_distribution<double> dist(0.0, scale);
  Matrix2D m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

// Independent forward pass: explicit loops, no Eigen products.
inline Matrix2D LoopForward(const Mlp& net, const Matrix2D& input) {
  Matrix2D x = input;
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    const Matrix2D& w = net.weights()[l];
    const RowVector& b = net.biases()[l];
    Matrix2D y(x.rows(), w.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        double acc = b[c];
        for (Eigen::Index i = 0; i < w.rows(); ++i) acc += x(r, i) * w(i, c);
        const bool last = l + 1 == net.num_layers();
        if (!last) {
          acc = net.activation() == Activation::kRelu ? std::max(acc, 0.0) : std::tanh(acc);
        } else if (net.output_activation() == OutputActivation::kSigmoid) {
          acc = 1.0 / (1.0 + std::exp(-acc));
        }
        y(r, c) = acc;
      }
    }
    x = std::move(y);
  }
  return x;
}

// Pointers to every scalar parameter of `net`, weights before biases per layer.
inline std::vector<double*> ParameterPointers(Mlp& net) {
  std::vector<double*> out;
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    Matrix2D& w = net.weights()[l];
    for (Eigen::Index i = 0; i < w.size(); ++i) out.push_back(w.data() + i);
    RowVector& b = net.biases()[l];
    for (Eigen::Index i = 0; i < b.size(); ++i) out.push_back(b.data() + i);
  }
  return out;
}

// Gradient entries in the same order as ParameterPointers.
inline std::vector<double> FlattenGradients(const MlpGradients& g) {
  std::vector<double> out;
  for (std::size_t l = 0; l < g.weights.size(); ++l) {
    out.insert(out.end(), g.weights[l].data(), g.weights[l].data() + g.weights[l].size());
    out.insert(out.end(), g.biases[l].data(), g.biases[l].data() + g.biases[l].size());
  }
  return out;
}

inline double CentralDifference(const std::function<double()>& loss, double* param,
                                double h = 1e-5) {
  const double saved = *param;
  *param = saved + h;
  const double up = loss();
  *param = saved - h;
  const double down = loss();
  *param = saved;
  return (up - down) / (2.0 * h);
}

inline double RelativeError(double analytic, double numeric, double floor = 1e-8) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), floor});
}

// Random-policy trajectories on the first `count` training environments.
inline std::vector<Trajectory> RandomTrajectories(const EnvFamily& family, int count,
                                                  int steps, std::uint64_t seed) {
  std::vector<Trajectory> out;
  const Policy policy = UniformRandomPolicy(family.kind);
  for (int i = 0; i < count; ++i) {
    const std::size_t env = static_cast<std::size_t>(i) % family.train_params.size();
    out.push_back(Rollout(family.train_params[env], policy, steps, seed + i, i,
                          static_cast<int>(env)));
  }
  return out;
}

// Small networks and budgets for fast pipeline tests.
inline TrainConfig TinyConfig(const EnvFamily& family, Method method, std::uint64_t seed) {
  TrainConfig c = DefaultTrainConfig(family);
  c.method = method;
  c.seed = seed;
  c.epochs = 1;
  c.trajectories_per_epoch = 2;
  c.grad_steps_per_epoch = 3;
  c.batch_size = 8;
  c.encoder_hidden = 16;
  c.head_hidden = 16;
  c.head_layers = 2;
  c.metric_transitions = 50;
  c.cde.mediator_batch = 8;
  c.cem.horizon = 4;
  c.cem.candidates = 12;
  c.cem.iterations = 2;
  c.cem.elites = 3;
  return c;
}

// A family with short episodes so pipeline tests stay fast.
inline EnvFamily ShortFamily(const std::string& name = "pendulum", int episode_length = 30) {
  EnvFamily family = FamilyByName(name);
  family.episode_length = episode_length;
  return family;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path TempDir(const std::string& name) {
  const std::filesystem::path dir = std::filesystem::temp_directory_path() / ("ria_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string ReadFile(const std::filesystem::path& path) {
  std::FILE* f = std::fopen(path.string().c_str(), "rb");
  if (f == nullptr) return {};
  std::string out;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof(buf), f)) > 0) out.append(buf, n);
  std::fclose(f);
  return out;
}

}  // namespace ria::testing

#endif  // RIA_TESTS_TEST_UTIL_H_
