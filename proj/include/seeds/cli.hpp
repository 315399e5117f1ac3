#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "seeds/image.hpp"
#include "seeds/label_io.hpp"

namespace seeds::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Runs the command line `args` (program name excluded): `segment ...` or `bench ...`.
/// Machine-readable output goes to `out`, messages and usage to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Input image with superpixel boundary pixels painted white.
RgbImage render_overlay(const RgbImage& image, const LabelMap& labels);

}  // namespace seeds::cli
