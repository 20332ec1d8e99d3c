#ifndef RIA_ERRORS_H_
#define RIA_ERRORS_H_

#include <stdexcept>
#include <string>

namespace ria {

// Invalid shapes, empty parameter lists, inconsistent settings.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// API misuse, e.g. backward() without a cached forward pass.
class UsageError : public std::logic_error {
 public:
  explicit UsageError(const std::string& what) : std::logic_error(what) {}
};

// A loss or gradient became non-finite.
class DivergedTraining : public std::runtime_error {
 public:
  explicit DivergedTraining(const std::string& what)
      : std::runtime_error(what) {}
};

// Checkpoint missing, malformed, or incompatible with the requested run.
class LoadError : public std::runtime_error {
 public:
  explicit LoadError(const std::string& what) : std::runtime_error(what) {}
};

// An environment label was read inside an unsupervised gradient scope.
class LabelAccessViolation : public std::logic_error {
 public:
  explicit LabelAccessViolation(const std::string& what)
      : std::logic_error(what) {}
};

}  // namespace ria

#endif  // RIA_ERRORS_H_
