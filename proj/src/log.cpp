#include "vidgraph/log.hpp"

#include <cstdlib>
#include <cstring>

namespace vidgraph::log {

Level threshold() {
  static const Level level = [] {
    const char* env = std::getenv("LOG_LEVEL");
    if (env == nullptr) return Level::Warn;
    if (std::strcmp(env, "error") == 0) return Level::Error;
    if (std::strcmp(env, "warn") == 0) return Level::Warn;
    if (std::strcmp(env, "info") == 0) return Level::Info;
    if (std::strcmp(env, "debug") == 0) return Level::Debug;
    return Level::Warn;
  }();
  return level;
}

void write(Level level, const std::string& msg) {
  if (level > threshold()) return;
  static const char* names[] = {"error", "warn", "info", "debug"};
  std::fprintf(stderr, "[%s] %s\n", names[static_cast<int>(level)], msg.c_str());
}

}  // namespace vidgraph::log
