#pragma once

#include <iosfwd>
#include <memory>

#include <spdlog/spdlog.h>

namespace seeds::cli {

/// Logger writing to `sink`, with its level taken from SEEDS_LOG (off, info, debug).
/// Unset or unknown values mean off.
std::shared_ptr<spdlog::logger> make_logger(std::ostream& sink);

}  // namespace seeds::cli
