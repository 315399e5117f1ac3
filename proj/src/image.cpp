#include "seeds/image.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "seeds/errors.hpp"

namespace seeds {

RgbImage::RgbImage(int width, int height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (width < 0 || height < 0 ||
      data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3) {
    throw DimensionError("rgb image: data length does not match " + std::to_string(width) + "x" +
                         std::to_string(height) + "x3");
  }
}

RgbImage::RgbImage(int width, int height, Rgb fill)
    : RgbImage(width, height,
               std::vector<std::uint8_t>(static_cast<std::size_t>(width) * height * 3)) {
  for (int i = 0; i < num_pixels(); ++i) {
    set(i % width, i / width, fill);
  }
}

void RgbImage::set(int x, int y, Rgb c) {
  auto* p = &data_[(static_cast<std::size_t>(y) * width_ + x) * 3];
  p[0] = c.r;
  p[1] = c.g;
  p[2] = c.b;
}

LabImage::LabImage(int width, int height, std::vector<Lab> lab)
    : width_(width), height_(height), lab_(std::move(lab)) {
  if (width < 0 || height < 0 ||
      lab_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw DimensionError("lab image: data length does not match dimensions");
  }
}

// ---------------------------------------------------------------------------
// PPM

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const auto c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(c)) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  long read_int(const char* what) {
    skip_space_and_comments();
    long value = 0;
    std::size_t digits = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > 1'000'000'000L) throw FormatError(std::string("ppm: ") + what + " too large");
      ++pos_;
      ++digits;
    }
    if (digits == 0) throw FormatError(std::string("ppm: missing ") + what);
    return value;
  }

  std::size_t pos() const { return pos_; }
  void advance() { ++pos_; }
  bool at_end() const { return pos_ >= bytes_.size(); }
  std::uint8_t peek() const { return bytes_[pos_]; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  return bytes;
}

}  // namespace

RgbImage decode_ppm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') {
    throw FormatError("ppm: missing P6 magic");
  }
  HeaderReader reader(bytes.subspan(2));
  const long width = reader.read_int("width");
  const long height = reader.read_int("height");
  const long maxval = reader.read_int("maxval");
  if (width <= 0 || height <= 0) throw FormatError("ppm: non-positive dimensions");
  if (maxval != 255) throw FormatError("ppm: only maxval 255 is supported");
  if (reader.at_end() || !std::isspace(reader.peek())) {
    throw FormatError("ppm: header not terminated by whitespace");
  }
  reader.advance();
  const std::size_t offset = 2 + reader.pos();
  const std::size_t payload = static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3;
  if (bytes.size() - offset < payload) throw FormatError("ppm: truncated pixel data");
  std::vector<std::uint8_t> data(bytes.begin() + static_cast<std::ptrdiff_t>(offset),
                                 bytes.begin() + static_cast<std::ptrdiff_t>(offset + payload));
  return RgbImage(static_cast<int>(width), static_cast<int>(height), std::move(data));
}

RgbImage load_image(const std::filesystem::path& path) {
  auto image = decode_ppm(read_file(path));
  if (image.width() < kMinImageSide || image.height() < kMinImageSide) {
    throw DimensionError(path.string() + ": image is " + std::to_string(image.width()) + "x" +
                         std::to_string(image.height()) + ", need at least 8x8");
  }
  return image;
}

std::vector<std::uint8_t> encode_ppm(const RgbImage& image) {
  const std::string header = "P6\n" + std::to_string(image.width()) + " " +
                             std::to_string(image.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.bytes().begin(), image.bytes().end());
  return out;
}

void write_ppm(const std::filesystem::path& path, const RgbImage& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  const auto bytes = encode_ppm(image);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// Colour conversion

namespace {

// sRGB primaries, D65.
constexpr double kRgbToXyz[3][3] = {
    {0.4124564, 0.3575761, 0.1804375},
    {0.2126729, 0.7151522, 0.0721750},
    {0.0193339, 0.1191920, 0.9503041},
};

// Reference white is the image of RGB (1,1,1), so white maps to a = b = 0 exactly.
constexpr double kWhite[3] = {
    kRgbToXyz[0][0] + kRgbToXyz[0][1] + kRgbToXyz[0][2],
    kRgbToXyz[1][0] + kRgbToXyz[1][1] + kRgbToXyz[1][2],
    kRgbToXyz[2][0] + kRgbToXyz[2][1] + kRgbToXyz[2][2],
};

double srgb_to_linear(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

const std::array<double, 256>& linear_table() {
  static const std::array<double, 256> table = [] {
    std::array<double, 256> t{};
    for (int i = 0; i < 256; ++i) t[i] = srgb_to_linear(i / 255.0);
    return t;
  }();
  return table;
}

// Cube root for t > 0: exponent-divided initial guess refined by two Halley steps
// (relative error below 1e-14).
double fast_cbrt(double t) {
  auto bits = std::bit_cast<std::uint64_t>(t);
  bits = bits / 3 + 0x2a9f7893782da1ceULL;
  double y = std::bit_cast<double>(bits);
  for (int i = 0; i < 2; ++i) {
    const double y3 = y * y * y;
    y *= (y3 + 2.0 * t) / (2.0 * y3 + t);
  }
  return y;
}

double lab_f(double t) {
  constexpr double delta = 6.0 / 29.0;
  if (t > delta * delta * delta) return fast_cbrt(t);
  return t / (3.0 * delta * delta) + 4.0 / 29.0;
}

}  // namespace

Lab srgb_to_lab(Rgb c) {
  const auto& lin = linear_table();
  const double r = lin[c.r];
  const double g = lin[c.g];
  const double b = lin[c.b];
  double xyz[3];
  for (int row = 0; row < 3; ++row) {
    xyz[row] = kRgbToXyz[row][0] * r + kRgbToXyz[row][1] * g + kRgbToXyz[row][2] * b;
  }
  const double fx = lab_f(xyz[0] / kWhite[0]);
  const double fy = lab_f(xyz[1] / kWhite[1]);
  const double fz = lab_f(xyz[2] / kWhite[2]);
  Lab out{116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
  out.l = std::clamp(out.l, 0.0, 100.0);
  return out;
}

LabImage rgb_to_lab(const RgbImage& image) {
  std::vector<Lab> lab(static_cast<std::size_t>(image.num_pixels()));
  for (int i = 0; i < image.num_pixels(); ++i) {
    lab[static_cast<std::size_t>(i)] = srgb_to_lab(image.pixel(i));
  }
  return LabImage(image.width(), image.height(), std::move(lab));
}

// ---------------------------------------------------------------------------
// Quantization

void Quantizer::validate() const {
  if (bins_per_channel < 1) throw ConfigError("quantizer: bins_per_channel must be >= 1");
  if (total_bins() > 65535) throw ConfigError("quantizer: too many bins");
  for (const auto& r : ranges) {
    if (!(r.hi > r.lo)) throw ConfigError("quantizer: empty channel range");
  }
}

int Quantizer::channel_bin(int channel, double value) const {
  const auto& r = ranges[static_cast<std::size_t>(channel)];
  const double t = (value - r.lo) / (r.hi - r.lo) * bins_per_channel;
  if (!(t >= 0.0)) return 0;
  return std::min(static_cast<int>(t), bins_per_channel - 1);
}

int Quantizer::bin(const Lab& c) const {
  return (channel_bin(0, c.l) * bins_per_channel + channel_bin(1, c.a)) * bins_per_channel +
         channel_bin(2, c.b);
}

LabImage quantize(LabImage image, const Quantizer& quantizer) {
  quantizer.validate();
  LabImage out = std::move(image);
  out.bins_.resize(static_cast<std::size_t>(out.num_pixels()));
  for (int i = 0; i < out.num_pixels(); ++i) {
    out.bins_[static_cast<std::size_t>(i)] = static_cast<std::uint16_t>(quantizer.bin(out.lab(i)));
  }
  out.bins_per_channel_ = quantizer.bins_per_channel;
  out.num_bins_ = quantizer.total_bins();
  return out;
}

LabImage prepare_image(const RgbImage& image, int bins_per_channel) {
  Quantizer q;
  q.bins_per_channel = bins_per_channel;
  return quantize(rgb_to_lab(image), q);
}

}  // namespace seeds
