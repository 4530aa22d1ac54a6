#include "scalestore/log.hpp"

#include <cstdlib>

#include <spdlog/sinks/stdout_color_sinks.h>

namespace scalestore {

std::optional<spdlog::level::level_enum> parse_log_level(std::string_view text) {
    if (text == "error") return spdlog::level::err;
    if (text == "warn") return spdlog::level::warn;
    if (text == "info") return spdlog::level::info;
    if (text == "debug") return spdlog::level::debug;
    return std::nullopt;
}

void init_logging() {
    auto logger = spdlog::stderr_color_mt("scalestore");
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::warn);
    if (const char* env = std::getenv("SCALESTORE_LOG")) {
        if (auto level = parse_log_level(env)) {
            spdlog::set_level(*level);
        } else {
            spdlog::warn("ignoring SCALESTORE_LOG='{}'; expected error|warn|info|debug", env);
        }
    }
}

}  // namespace scalestore
