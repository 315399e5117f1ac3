#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace seeds {

/// Smallest image side accepted by load_image; below this no block hierarchy fits.
inline constexpr int kMinImageSide = 8;

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Interleaved 8-bit RGB, row-major.
class RgbImage {
 public:
  RgbImage() = default;
  /// Throws DimensionError when `data.size() != width * height * 3`.
  RgbImage(int width, int height, std::vector<std::uint8_t> data);
  RgbImage(int width, int height, Rgb fill);

  int width() const { return width_; }
  int height() const { return height_; }
  int num_pixels() const { return width_ * height_; }
  bool empty() const { return data_.empty(); }

  Rgb at(int x, int y) const { return pixel(y * width_ + x); }
  Rgb pixel(int index) const {
    const auto* p = &data_[static_cast<std::size_t>(index) * 3];
    return {p[0], p[1], p[2]};
  }
  void set(int x, int y, Rgb c);

  std::span<const std::uint8_t> bytes() const { return data_; }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

struct Lab {
  double l = 0.0;
  double a = 0.0;
  double b = 0.0;
};

/// Closed-open value range of one channel.
struct ChannelRange {
  double lo = 0.0;
  double hi = 1.0;
};

/// Uniform per-channel binning of LAB values. Ranges are fixed, not adapted per image.
struct Quantizer {
  int bins_per_channel = 5;
  std::array<ChannelRange, 3> ranges{{{0.0, 100.0}, {-128.0, 128.0}, {-128.0, 128.0}}};

  int total_bins() const { return bins_per_channel * bins_per_channel * bins_per_channel; }
  /// Bin of one channel value; values outside the range clamp to the first/last bin.
  int channel_bin(int channel, double value) const;
  int bin(const Lab& c) const;
  /// Throws ConfigError when bins_per_channel < 1 or a range is empty.
  void validate() const;
};

/// CIELAB image plus its quantized colour-bin index per pixel.
class LabImage {
 public:
  LabImage() = default;
  LabImage(int width, int height, std::vector<Lab> lab);

  int width() const { return width_; }
  int height() const { return height_; }
  int num_pixels() const { return width_ * height_; }

  const Lab& lab(int index) const { return lab_[static_cast<std::size_t>(index)]; }
  std::span<const Lab> lab() const { return lab_; }

  /// 0 until quantize() has filled the bins.
  int bins_per_channel() const { return bins_per_channel_; }
  int num_bins() const { return num_bins_; }
  bool quantized() const { return num_bins_ > 0; }
  int bin(int index) const { return bins_[static_cast<std::size_t>(index)]; }
  std::span<const std::uint16_t> bins() const { return bins_; }

 private:
  friend LabImage quantize(LabImage, const Quantizer&);

  int width_ = 0;
  int height_ = 0;
  std::vector<Lab> lab_;
  std::vector<std::uint16_t> bins_;
  int bins_per_channel_ = 0;
  int num_bins_ = 0;
};

/// Decodes a binary PPM (P6, maxval 255) held in memory. Any positive size is accepted.
RgbImage decode_ppm(std::span<const std::uint8_t> bytes);

/// Reads a P6 PPM file. Throws IoError, FormatError, or DimensionError for images
/// smaller than kMinImageSide on either side.
RgbImage load_image(const std::filesystem::path& path);

void write_ppm(const std::filesystem::path& path, const RgbImage& image);
std::vector<std::uint8_t> encode_ppm(const RgbImage& image);

/// sRGB (D65, standard transfer curve) to CIELAB.
Lab srgb_to_lab(Rgb c);
LabImage rgb_to_lab(const RgbImage& image);

LabImage quantize(LabImage image, const Quantizer& quantizer);

/// rgb_to_lab followed by quantize with `bins_per_channel` bins per channel.
LabImage prepare_image(const RgbImage& image, int bins_per_channel = 5);

}  // namespace seeds
