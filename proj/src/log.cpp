#include "gaborikl/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string_view>

namespace gaborikl::log {
namespace {

Level from_env() {
  const char* env = std::getenv("GABORIKL_LOG");
  if (env == nullptr) return Level::info;
  const std::string_view v(env);
  if (v == "error") return Level::error;
  if (v == "debug") return Level::debug;
  return Level::info;
}

std::atomic<int>& current() {
  static std::atomic<int> lvl{static_cast<int>(from_env())};
  return lvl;
}

}  // namespace

Level level() { return static_cast<Level>(current().load(std::memory_order_relaxed)); }

void set_level(Level lvl) { current().store(static_cast<int>(lvl)); }

void write(Level lvl, const std::string& msg) {
  static std::mutex mu;
  static constexpr const char* tags[] = {"error", "info", "debug"};
  std::lock_guard lock(mu);
  std::cerr << "[gaborikl " << tags[static_cast<int>(lvl)] << "] " << msg << '\n';
}

}  // namespace gaborikl::log
