#include "seeds/label_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <iterator>

#include "seeds/errors.hpp"

namespace seeds {

LabelMap::LabelMap(int w, int h, std::vector<std::int32_t> l)
    : width(w), height(h), labels(std::move(l)) {
  if (w < 0 || h < 0 || labels.size() != static_cast<std::size_t>(w) * static_cast<std::size_t>(h)) {
    throw DimensionError("label map: data length does not match dimensions");
  }
}

LabelMap::LabelMap(int w, int h, std::int32_t fill)
    : LabelMap(w, h, std::vector<std::int32_t>(static_cast<std::size_t>(w) * h, fill)) {}

namespace {

std::string extension_of(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

long parse_header_int(std::span<const std::uint8_t> bytes, std::size_t& pos, const char* what) {
  while (pos < bytes.size()) {
    if (bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(bytes[pos])) {
      ++pos;
    } else {
      break;
    }
  }
  long value = 0;
  std::size_t digits = 0;
  while (pos < bytes.size() && std::isdigit(bytes[pos])) {
    value = value * 10 + (bytes[pos] - '0');
    if (value > 1'000'000'000L) throw FormatError(std::string("pgm: ") + what + " too large");
    ++pos;
    ++digits;
  }
  if (digits == 0) throw FormatError(std::string("pgm: missing ") + what);
  return value;
}

}  // namespace

std::vector<std::uint8_t> encode_pgm16(const LabelMap& map) {
  const std::string header =
      "P5\n" + std::to_string(map.width) + " " + std::to_string(map.height) + "\n65535\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + map.labels.size() * 2);
  for (const auto label : map.labels) {
    if (label < 0 || label > 65535) {
      throw DomainError("pgm: label " + std::to_string(label) + " does not fit 16 bits");
    }
    out.push_back(static_cast<std::uint8_t>(label >> 8));
    out.push_back(static_cast<std::uint8_t>(label & 0xff));
  }
  return out;
}

std::string encode_csv(const LabelMap& map) {
  std::string out;
  out.reserve(map.labels.size() * 4);
  for (int y = 0; y < map.height; ++y) {
    for (int x = 0; x < map.width; ++x) {
      if (x > 0) out.push_back(',');
      out += std::to_string(map.at(x, y));
    }
    out.push_back('\n');
  }
  return out;
}

LabelMap decode_pgm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
    throw FormatError("pgm: missing P5 magic");
  }
  std::size_t pos = 2;
  const long width = parse_header_int(bytes, pos, "width");
  const long height = parse_header_int(bytes, pos, "height");
  const long maxval = parse_header_int(bytes, pos, "maxval");
  if (width <= 0 || height <= 0) throw FormatError("pgm: non-positive dimensions");
  if (maxval < 1 || maxval > 65535) throw FormatError("pgm: maxval out of range");
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
    throw FormatError("pgm: header not terminated by whitespace");
  }
  ++pos;
  const std::size_t sample_bytes = maxval < 256 ? 1 : 2;
  const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (bytes.size() - pos < count * sample_bytes) throw FormatError("pgm: truncated pixel data");
  std::vector<std::int32_t> labels(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (sample_bytes == 1) {
      labels[i] = bytes[pos + i];
    } else {
      labels[i] = (bytes[pos + 2 * i] << 8) | bytes[pos + 2 * i + 1];
    }
  }
  return LabelMap(static_cast<int>(width), static_cast<int>(height), std::move(labels));
}

LabelMap decode_csv(std::string_view text) {
  std::vector<std::int32_t> labels;
  int width = -1;
  int height = 0;
  std::size_t line_start = 0;
  while (line_start < text.size()) {
    auto line_end = text.find('\n', line_start);
    if (line_end == std::string_view::npos) line_end = text.size();
    auto line = text.substr(line_start, line_end - line_start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    line_start = line_end + 1;
    if (line.empty()) continue;

    int row_width = 0;
    std::size_t field_start = 0;
    while (field_start <= line.size()) {
      auto comma = line.find(',', field_start);
      if (comma == std::string_view::npos) comma = line.size();
      auto field = line.substr(field_start, comma - field_start);
      while (!field.empty() && std::isspace(static_cast<unsigned char>(field.front()))) field.remove_prefix(1);
      while (!field.empty() && std::isspace(static_cast<unsigned char>(field.back()))) field.remove_suffix(1);
      std::int32_t value = 0;
      const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
      if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
        throw FormatError("csv: bad label '" + std::string(field) + "' on row " +
                          std::to_string(height + 1));
      }
      labels.push_back(value);
      ++row_width;
      field_start = comma + 1;
    }
    if (width < 0) {
      width = row_width;
    } else if (row_width != width) {
      throw FormatError("csv: row " + std::to_string(height + 1) + " has " +
                        std::to_string(row_width) + " values, expected " + std::to_string(width));
    }
    ++height;
  }
  if (height == 0) throw FormatError("csv: no rows");
  return LabelMap(width, height, std::move(labels));
}

void write_label_map(const std::filesystem::path& path, const LabelMap& map) {
  const auto ext = extension_of(path);
  if (ext == ".pgm") {
    write_bytes(path, encode_pgm16(map));
  } else if (ext == ".csv") {
    const auto text = encode_csv(map);
    write_bytes(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
  } else {
    throw FormatError("label map: unsupported extension '" + ext + "' (use .pgm or .csv)");
  }
}

LabelMap read_label_map(const std::filesystem::path& path) {
  const auto ext = extension_of(path);
  if (ext != ".pgm" && ext != ".csv") {
    throw FormatError("label map: unsupported extension '" + ext + "' (use .pgm or .csv)");
  }
  const auto bytes = read_bytes(path);
  if (ext == ".pgm") return decode_pgm(bytes);
  return decode_csv({reinterpret_cast<const char*>(bytes.data()), bytes.size()});
}

}  // namespace seeds
