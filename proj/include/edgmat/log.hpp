#pragma once

#include <spdlog/spdlog.h>

namespace edgmat::log {

using spdlog::debug;
using spdlog::error;
using spdlog::info;
using spdlog::warn;

/// Applies EDGMAT_LOG={error,info,debug} to the default logger (info if unset).
/// Unknown values fall back to info with a warning.
void configure_from_env();

}  // namespace edgmat::log
