#ifndef RIA_LOGGING_H_
#define RIA_LOGGING_H_

#include <string_view>

namespace ria {

// Warnings go to stderr unless silenced (tests and sweeps silence them).
void Warn(std::string_view message);
void Info(std::string_view message);
void SetQuiet(bool quiet);
bool IsQuiet();

}  // namespace ria

#endif  // RIA_LOGGING_H_
