#pragma once

#include <optional>
#include <string_view>

#include <spdlog/spdlog.h>

namespace scalestore {

// Parses error|warn|info|debug.
std::optional<spdlog::level::level_enum> parse_log_level(std::string_view text);

// Sends diagnostics to stderr at the level named by SCALESTORE_LOG
// (default warn).
void init_logging();

}  // namespace scalestore
