#include "log.hpp"

#include <cstdlib>
#include <string_view>

#include <spdlog/sinks/ostream_sink.h>

namespace seeds::cli {

std::shared_ptr<spdlog::logger> make_logger(std::ostream& sink) {
  auto logger = std::make_shared<spdlog::logger>(
      "seeds", std::make_shared<spdlog::sinks::ostream_sink_mt>(sink, true));
  logger->set_pattern("[%l] %v");

  const char* env = std::getenv("SEEDS_LOG");
  const std::string_view level = env ? env : "off";
  if (level == "debug") {
    logger->set_level(spdlog::level::debug);
  } else if (level == "info") {
    logger->set_level(spdlog::level::info);
  } else {
    logger->set_level(spdlog::level::off);
  }
  return logger;
}

}  // namespace seeds::cli
