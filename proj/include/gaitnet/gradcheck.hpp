#pragma once

#include <functional>
#include <span>
#include <vector>

#include "gaitnet/tensor.hpp"

namespace gaitnet {

struct GradCheckResult {
  // max over checked elements of |analytic - numeric| / max(1, |analytic|, |numeric|)
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  // Elements where the one-sided differences disagree (max-pool ties, relu
  // at zero); they are excluded from max_rel_error.
  std::size_t ties = 0;

  bool passed(double tolerance) const { return checked > 0 && max_rel_error < tolerance; }
};

using ScalarFunction = std::function<Tensor64(std::span<const Tensor64>)>;

// Compares reverse-mode gradients of a scalar function against central
// differences with step h, for every element of every input. `f` must be
// deterministic: any randomness inside it has to be reseeded per call.
GradCheckResult finite_diff_check(const ScalarFunction& f, const std::vector<Tensor64>& inputs,
                                  double h = 1e-5);

GradCheckResult finite_diff_check(const std::function<Tensor64(const Tensor64&)>& f,
                                  const Tensor64& x, double h = 1e-5);

}  // namespace gaitnet
