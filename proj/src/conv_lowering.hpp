#pragma once

// Patch gathering for channels-last convolutions. A column row holds one
// output position's receptive field in (dt, dh, dw, c) order, matching the
// (kT, kH, kW, Cin, Cout) kernel layout viewed as a (K, Cout) matrix.

#include <algorithm>
#include <cstddef>

#include "gaitnet/errors.hpp"
#include "gaitnet/tensor.hpp"

namespace gaitnet::lowering {

struct ConvGeometry {
  std::size_t frames, height, width, channels;       // input extents of one sample
  std::size_t k_t, k_h, k_w;                         // kernel extents
  std::size_t pad_t, pad_h, pad_w;                   // leading zero padding
  std::size_t out_frames, out_height, out_width;

  std::size_t patch() const { return k_t * k_h * k_w * channels; }
  std::size_t positions_per_frame() const { return out_height * out_width; }
  std::size_t sample_size() const { return frames * height * width * channels; }
};

// Same padding puts the extra zero at the end for even kernels.
inline ConvGeometry make_geometry(std::size_t frames, std::size_t height, std::size_t width,
                                  std::size_t channels, std::size_t k_t, std::size_t k_h,
                                  std::size_t k_w, bool same) {
  ConvGeometry g{frames, height, width, channels, k_t, k_h, k_w, 0, 0, 0, 0, 0, 0};
  if (same) {
    g.pad_t = (k_t - 1) / 2;
    g.pad_h = (k_h - 1) / 2;
    g.pad_w = (k_w - 1) / 2;
    g.out_frames = frames;
    g.out_height = height;
    g.out_width = width;
  } else {
    if (k_t > frames || k_h > height || k_w > width)
      throw InvalidShape("valid convolution: kernel (" + std::to_string(k_t) + "," +
                         std::to_string(k_h) + "," + std::to_string(k_w) +
                         ") larger than input (" + std::to_string(frames) + "," +
                         std::to_string(height) + "," + std::to_string(width) + ")");
    g.out_frames = frames - k_t + 1;
    g.out_height = height - k_h + 1;
    g.out_width = width - k_w + 1;
  }
  return g;
}

// Fills col (positions_per_frame x patch) for output frame `to`.
template <typename T>
void im2col_frame(const T* x, const ConvGeometry& g, std::size_t to, T* col) {
  const std::size_t c = g.channels;
  const std::size_t row_len = g.patch();
  for (std::size_t ho = 0; ho < g.out_height; ++ho) {
    for (std::size_t wo = 0; wo < g.out_width; ++wo) {
      T* row = col + (ho * g.out_width + wo) * row_len;
      for (std::size_t dt = 0; dt < g.k_t; ++dt) {
        const auto ti = static_cast<std::ptrdiff_t>(to + dt) - static_cast<std::ptrdiff_t>(g.pad_t);
        const bool t_ok = ti >= 0 && ti < static_cast<std::ptrdiff_t>(g.frames);
        for (std::size_t dh = 0; dh < g.k_h; ++dh) {
          const auto hi = static_cast<std::ptrdiff_t>(ho + dh) - static_cast<std::ptrdiff_t>(g.pad_h);
          const bool h_ok = t_ok && hi >= 0 && hi < static_cast<std::ptrdiff_t>(g.height);
          for (std::size_t dw = 0; dw < g.k_w; ++dw) {
            const auto wi = static_cast<std::ptrdiff_t>(wo + dw) - static_cast<std::ptrdiff_t>(g.pad_w);
            if (h_ok && wi >= 0 && wi < static_cast<std::ptrdiff_t>(g.width)) {
              const T* src = x + ((static_cast<std::size_t>(ti) * g.height + static_cast<std::size_t>(hi)) *
                                      g.width + static_cast<std::size_t>(wi)) * c;
              std::copy(src, src + c, row);
            } else {
              std::fill(row, row + c, T(0));
            }
            row += c;
          }
        }
      }
    }
  }
}

// Adjoint of im2col_frame: scatter-adds col back into dx.
template <typename T>
void col2im_frame_add(const T* col, const ConvGeometry& g, std::size_t to, T* dx) {
  const std::size_t c = g.channels;
  const std::size_t row_len = g.patch();
  for (std::size_t ho = 0; ho < g.out_height; ++ho) {
    for (std::size_t wo = 0; wo < g.out_width; ++wo) {
      const T* row = col + (ho * g.out_width + wo) * row_len;
      for (std::size_t dt = 0; dt < g.k_t; ++dt) {
        const auto ti = static_cast<std::ptrdiff_t>(to + dt) - static_cast<std::ptrdiff_t>(g.pad_t);
        const bool t_ok = ti >= 0 && ti < static_cast<std::ptrdiff_t>(g.frames);
        for (std::size_t dh = 0; dh < g.k_h; ++dh) {
          const auto hi = static_cast<std::ptrdiff_t>(ho + dh) - static_cast<std::ptrdiff_t>(g.pad_h);
          const bool h_ok = t_ok && hi >= 0 && hi < static_cast<std::ptrdiff_t>(g.height);
          for (std::size_t dw = 0; dw < g.k_w; ++dw) {
            const auto wi = static_cast<std::ptrdiff_t>(wo + dw) - static_cast<std::ptrdiff_t>(g.pad_w);
            if (h_ok && wi >= 0 && wi < static_cast<std::ptrdiff_t>(g.width)) {
              T* dst = dx + ((static_cast<std::size_t>(ti) * g.height + static_cast<std::size_t>(hi)) *
                                 g.width + static_cast<std::size_t>(wi)) * c;
              for (std::size_t ci = 0; ci < c; ++ci) dst[ci] += row[ci];
            }
            row += c;
          }
        }
      }
    }
  }
}

}  // namespace gaitnet::lowering
