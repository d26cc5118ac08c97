#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gaitnet/gradcheck.hpp"

namespace gaitnet {

struct OpCheck {
  std::string op;
  GradCheckResult result;
  double seconds = 0.0;
  bool passed = false;
};

struct GradCheckOptions {
  std::vector<std::string> ops;  // empty runs every op
  double tolerance = 1e-4;
  std::uint64_t seed = 0;
  // Test fixture: negates the gradient flowing back through conv3d.
  bool flip_conv3d_gradient = false;
};

// conv3d, maxpool3d, dense, relu_sigmoid, tanh, dropout, convlstm2d, bce_loss
const std::vector<std::string>& gradcheck_ops();

// Runs each selected op in 64-bit precision on small random inputs. Unknown
// op names throw InvalidArgument.
std::vector<OpCheck> run_gradcheck_suite(const GradCheckOptions& options = {});

std::string format_gradcheck(const std::vector<OpCheck>& checks, double tolerance);

}  // namespace gaitnet
