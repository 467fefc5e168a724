#include "fame/log.hpp"

#include <iostream>
#include <mutex>
#include <utility>

namespace fame::log {

namespace {

std::mutex& sink_mutex() {
  static std::mutex mu;
  return mu;
}

Sink& current() {
  static Sink sink = [](Level level, const std::string& msg) {
    if (level == Level::kWarning) std::cerr << "warning: " << msg << '\n';
  };
  return sink;
}

void emit(Level level, const std::string& msg) {
  std::lock_guard lock(sink_mutex());
  if (current()) current()(level, msg);
}

}  // namespace

Sink set_sink(Sink sink) {
  std::lock_guard lock(sink_mutex());
  return std::exchange(current(), std::move(sink));
}

void info(const std::string& message) { emit(Level::kInfo, message); }
void warning(const std::string& message) { emit(Level::kWarning, message); }

}  // namespace fame::log
