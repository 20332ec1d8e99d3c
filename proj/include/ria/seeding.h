#ifndef RIA_SEEDING_H_
#define RIA_SEEDING_H_

#include <cstdint>

namespace ria {

// splitmix64 finalizer.
inline std::uint64_t MixSeed(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Independent seed for sub-stream `stream` of a run seeded with `seed`.
inline std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t stream) {
  return MixSeed(MixSeed(seed) ^ MixSeed(stream + 0x632BE59BD9B4E019ULL));
}

// Named streams of one training run.
enum class SeedStream : std::uint64_t {
  kInit = 1,
  kEnvSampling = 2,
  kCollection = 3,
  kBatches = 4,
  kHeldOutTrain = 5,
  kHeldOutTest = 6,
};

inline std::uint64_t DeriveSeed(std::uint64_t seed, SeedStream stream) {
  return DeriveSeed(seed, static_cast<std::uint64_t>(stream));
}

}  // namespace ria

#endif  // RIA_SEEDING_H_
