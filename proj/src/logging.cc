#include "ria/logging.h"

#include <atomic>
#include <iostream>

namespace ria {
namespace {
std::atomic<bool> g_quiet{false};
}  // namespace

void Warn(std::string_view message) {
  if (!g_quiet) std::cerr << "[ria] warning: " << message << '\n';
}

void Info(std::string_view message) {
  if (!g_quiet) std::cerr << "[ria] " << message << '\n';
}

void SetQuiet(bool quiet) { g_quiet = quiet; }
bool IsQuiet() { return g_quiet; }

}  // namespace ria
