#pragma once

#include <functional>
#include <string>

namespace fame::log {

enum class Level { kInfo, kWarning };

using Sink = std::function<void(Level, const std::string&)>;

// Replaces the process-wide sink (default: stderr, warnings only). Returns
// the previous sink.
Sink set_sink(Sink sink);

void info(const std::string& message);
void warning(const std::string& message);

}  // namespace fame::log
