#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

namespace gaitnet {

// One frame, channels-last (H, W, C), pixel values as floats.
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  std::vector<float> pixels;

  Image() = default;
  Image(std::size_t h, std::size_t w, std::size_t c, float fill = 0.0f)
      : height(h), width(w), channels(c), pixels(h * w * c, fill) {}

  float& at(std::size_t y, std::size_t x, std::size_t c) { return pixels[(y * width + x) * channels + c]; }
  float at(std::size_t y, std::size_t x, std::size_t c) const { return pixels[(y * width + x) * channels + c]; }

  bool operator==(const Image&) const = default;
};

// Binary netpbm: P5 (grayscale) and P6 (RGB), maxval <= 255.
Image read_netpbm(const std::filesystem::path& path);

// Values are rounded and clamped to [0, 255]. One or three channels.
void write_netpbm(const std::filesystem::path& path, const Image& image);

bool is_netpbm_path(const std::filesystem::path& path);

}  // namespace gaitnet
