#include "edgmat/log.hpp"

#include <cstdlib>
#include <string_view>

#include <spdlog/sinks/stdout_color_sinks.h>

namespace edgmat::log {

void configure_from_env() {
  // Logs go to stderr so command output on stdout stays machine-readable.
  static const bool installed = [] {
    spdlog::set_default_logger(spdlog::stderr_color_mt("edgmat"));
    return true;
  }();
  (void)installed;
  const char* env = std::getenv("EDGMAT_LOG");
  const std::string_view v = env ? env : "info";
  if (v == "error") {
    spdlog::set_level(spdlog::level::err);
  } else if (v == "debug") {
    spdlog::set_level(spdlog::level::debug);
  } else {
    spdlog::set_level(spdlog::level::info);
    if (v != "info") spdlog::warn("EDGMAT_LOG='{}' not recognised; using info", v);
  }
}

}  // namespace edgmat::log
