#include "gaitnet/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <string>

#include "gaitnet/errors.hpp"
#include "gaitnet/stvt.hpp"

namespace gaitnet {
namespace {

// Parses the next whitespace-separated header integer, skipping comments.
std::size_t header_int(const std::string& bytes, std::size_t& pos, const std::filesystem::path& path) {
  while (pos < bytes.size()) {
    if (bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
      ++pos;
    } else {
      break;
    }
  }
  const std::size_t start = pos;
  std::size_t value = 0;
  while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos])))
    value = value * 10 + static_cast<std::size_t>(bytes[pos++] - '0');
  if (pos == start) throw FormatError("netpbm: malformed header in " + path.string(), start);
  return value;
}

}  // namespace

bool is_netpbm_path(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".pgm" || ext == ".ppm" || ext == ".pnm";
}

Image read_netpbm(const std::filesystem::path& path) {
  const std::string bytes = read_file_bytes(path);
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
    throw FormatError("netpbm: expected P5 or P6 magic in " + path.string(), 0);
  const std::size_t channels = bytes[1] == '5' ? 1 : 3;
  std::size_t pos = 2;
  const std::size_t width = header_int(bytes, pos, path);
  const std::size_t height = header_int(bytes, pos, path);
  const std::size_t maxval = header_int(bytes, pos, path);
  if (width == 0 || height == 0) throw FormatError("netpbm: zero image extent in " + path.string(), pos);
  if (maxval == 0 || maxval > 255) throw FormatError("netpbm: only 8-bit images are supported", pos);
  ++pos;  // single whitespace byte before raster
  const std::size_t n = width * height * channels;
  if (bytes.size() < pos + n) throw FormatError("netpbm: truncated raster in " + path.string(), bytes.size());
  Image img(height, width, channels);
  const float rescale = 255.0f / static_cast<float>(maxval);
  for (std::size_t i = 0; i < n; ++i)
    img.pixels[i] = static_cast<float>(static_cast<unsigned char>(bytes[pos + i])) * (maxval == 255 ? 1.0f : rescale);
  return img;
}

void write_netpbm(const std::filesystem::path& path, const Image& image) {
  if (image.channels != 1 && image.channels != 3)
    throw InvalidArgument("netpbm: only 1- or 3-channel images can be written");
  std::string out = (image.channels == 1 ? "P5\n" : "P6\n") + std::to_string(image.width) + " " +
                    std::to_string(image.height) + "\n255\n";
  out.reserve(out.size() + image.pixels.size());
  for (float v : image.pixels)
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::clamp(std::lround(v), 0L, 255L))));
  write_file_bytes(path, out);
}

}  // namespace gaitnet
