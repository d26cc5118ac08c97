#include "gaitnet/plot.hpp"

#include <algorithm>
#include <cmath>

#include "gaitnet/errors.hpp"

namespace gaitnet {

Image plot_series(const std::vector<double>& values, std::size_t width, std::size_t height) {
  if (width < 32 || height < 32) throw InvalidArgument("plot: chart must be at least 32x32");
  Image img(height, width, 1, 255.0f);
  const std::size_t margin = 12;
  for (std::size_t x = margin; x < width - margin / 2; ++x) img.at(height - margin, x, 0) = 0.0f;
  for (std::size_t y = margin / 2; y <= height - margin; ++y) img.at(y, margin, 0) = 0.0f;
  if (values.empty()) return img;

  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it, span = std::max(*hi_it - lo, 1e-12);
  const double plot_w = static_cast<double>(width - margin - margin / 2 - 1);
  const double plot_h = static_cast<double>(height - margin - margin / 2 - 1);
  const auto px = [&](std::size_t i) {
    const double f = values.size() > 1 ? static_cast<double>(i) / static_cast<double>(values.size() - 1) : 0.0;
    return static_cast<double>(margin + 1) + f * plot_w;
  };
  const auto py = [&](double v) { return static_cast<double>(height - margin - 1) - (v - lo) / span * plot_h; };
  for (std::size_t i = 0; i + 1 < std::max<std::size_t>(values.size(), 2); ++i) {
    const double x0 = px(i), y0 = py(values[i]);
    const double x1 = values.size() > 1 ? px(i + 1) : x0, y1 = values.size() > 1 ? py(values[i + 1]) : y0;
    const auto steps = static_cast<std::size_t>(std::max(std::abs(x1 - x0), std::abs(y1 - y0))) + 1;
    for (std::size_t s = 0; s <= steps; ++s) {
      const double t = static_cast<double>(s) / static_cast<double>(steps);
      const auto x = static_cast<std::size_t>(std::lround(x0 + t * (x1 - x0)));
      const auto y = static_cast<std::size_t>(std::lround(y0 + t * (y1 - y0)));
      if (x < width && y < height) img.at(y, x, 0) = 40.0f;
    }
  }
  return img;
}

Image plot_confusion(const ConfusionMatrix& cm, std::size_t cell) {
  if (cell < 4) throw InvalidArgument("plot: confusion cell too small");
  Image img(2 * cell, 2 * cell, 1, 255.0f);
  const std::size_t counts[2][2] = {{cm.tp, cm.fn}, {cm.fp, cm.tn}};
  const double most = static_cast<double>(std::max({cm.tp, cm.fn, cm.fp, cm.tn, std::size_t{1}}));
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t c = 0; c < 2; ++c) {
      const auto shade = static_cast<float>(255.0 - 215.0 * static_cast<double>(counts[r][c]) / most);
      for (std::size_t y = 1; y + 1 < cell; ++y)
        for (std::size_t x = 1; x + 1 < cell; ++x) img.at(r * cell + y, c * cell + x, 0) = shade;
    }
  return img;
}

}  // namespace gaitnet
