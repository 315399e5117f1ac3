#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace seeds {

/// Row-major integer label per pixel. Used for superpixel output and ground truth.
struct LabelMap {
  int width = 0;
  int height = 0;
  std::vector<std::int32_t> labels;

  LabelMap() = default;
  LabelMap(int w, int h, std::vector<std::int32_t> l);
  LabelMap(int w, int h, std::int32_t fill);

  int num_pixels() const { return width * height; }
  std::int32_t at(int x, int y) const { return labels[static_cast<std::size_t>(y) * width + x]; }
  std::int32_t& at(int x, int y) { return labels[static_cast<std::size_t>(y) * width + x]; }

  friend bool operator==(const LabelMap&, const LabelMap&) = default;
};

/// 16-bit big-endian binary PGM: "P5\n<w> <h>\n65535\n" followed by w*h samples.
/// Throws DomainError when a label is outside [0, 65535].
std::vector<std::uint8_t> encode_pgm16(const LabelMap& map);
/// CSV: one line per image row, values separated by ',', each line ends in '\n'.
std::string encode_csv(const LabelMap& map);

/// Accepts P5 with any maxval in [1, 65535] (one byte per sample when maxval < 256).
LabelMap decode_pgm(std::span<const std::uint8_t> bytes);
LabelMap decode_csv(std::string_view text);

/// Format chosen by extension: ".pgm" or ".csv". Anything else is a FormatError.
void write_label_map(const std::filesystem::path& path, const LabelMap& map);
LabelMap read_label_map(const std::filesystem::path& path);

}  // namespace seeds
