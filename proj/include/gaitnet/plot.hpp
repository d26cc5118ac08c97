#pragma once

#include <vector>

#include "gaitnet/eval.hpp"
#include "gaitnet/image.hpp"

namespace gaitnet {

// Grayscale line chart of `values` against their index, with axes. Values
// are scaled to the chart's own min/max.
Image plot_series(const std::vector<double>& values, std::size_t width = 320, std::size_t height = 200);

// 2x2 grid shaded by count (darker is more): rows actual lame/normal,
// columns predicted lame/normal.
Image plot_confusion(const ConfusionMatrix& cm, std::size_t cell = 64);

}  // namespace gaitnet
