#pragma once

#include <sstream>
#include <string>

namespace gaborikl::log {

enum class Level { error = 0, info = 1, debug = 2 };

/// Current level, read once from GABORIKL_LOG (error|info|debug, default info).
Level level();
void set_level(Level lvl);

void write(Level lvl, const std::string& msg);

}  // namespace gaborikl::log

#define GABORIKL_LOG_AT(lvl, expr)                                  \
  do {                                                              \
    if (static_cast<int>(lvl) <= static_cast<int>(::gaborikl::log::level())) { \
      std::ostringstream gaborikl_log_os_;                          \
      gaborikl_log_os_ << expr;                                     \
      ::gaborikl::log::write(lvl, gaborikl_log_os_.str());          \
    }                                                               \
  } while (0)

#define GABORIKL_ERROR(expr) GABORIKL_LOG_AT(::gaborikl::log::Level::error, expr)
#define GABORIKL_WARN(expr) GABORIKL_LOG_AT(::gaborikl::log::Level::info, "warning: " << expr)
#define GABORIKL_INFO(expr) GABORIKL_LOG_AT(::gaborikl::log::Level::info, expr)
#define GABORIKL_DEBUG(expr) GABORIKL_LOG_AT(::gaborikl::log::Level::debug, expr)
