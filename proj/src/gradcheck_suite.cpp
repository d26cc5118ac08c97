#include "gaitnet/gradcheck_suite.hpp"

#include <chrono>
#include <cstdio>
#include <sstream>

#include "gaitnet/errors.hpp"
#include "gaitnet/nn.hpp"
#include "gaitnet/ops.hpp"

namespace gaitnet {
namespace {

Tensor64 normal(const Shape& shape, Rng& rng, double stddev = 1.0) {
  return Tensor64::create(shape, Fill::normal(0.0, stddev), &rng);
}

// Identity on values; negates the gradient on the way back.
Tensor64 flip_gradient(const Tensor64& y) {
  return custom_unary<double>(y, y.clone(), [](std::span<const double> g, std::span<double> gx) {
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] -= g[i];
  });
}

GradCheckResult check_conv3d(Rng& rng, bool flip) {
  auto x = normal({1, 3, 4, 4, 2}, rng);
  auto w = normal({3, 3, 3, 2, 3}, rng, 0.5);
  auto b = normal({3}, rng);
  auto probe = normal({1, 3, 4, 4, 3}, rng);
  return finite_diff_check(
      [&](std::span<const Tensor64> in) {
        auto y = conv3d(in[0], Conv3dParams<double>{in[1], in[2], Padding::kSame});
        if (flip) y = flip_gradient(y);
        return sum(mul(y, probe));
      },
      {x, w, b});
}

GradCheckResult check_maxpool(Rng& rng) {
  // distinct values keep every window off a tie
  auto x = normal({1, 4, 4, 6, 2}, rng);
  auto probe = normal({1, 2, 2, 3, 2}, rng);
  return finite_diff_check([&](const Tensor64& v) { return sum(mul(maxpool3d(v, {2, 2, 2}), probe)); }, x);
}

GradCheckResult check_dense(Rng& rng) {
  auto x = normal({3, 4}, rng);
  auto w = normal({4, 2}, rng);
  auto b = normal({2}, rng);
  auto probe = normal({3, 2}, rng);
  return finite_diff_check(
      [&](std::span<const Tensor64> in) { return sum(mul(dense(in[0], DenseParams<double>{in[1], in[2]}), probe)); },
      {x, w, b});
}

GradCheckResult check_relu_sigmoid(Rng& rng) {
  auto x = normal({4, 5}, rng, 2.0);
  auto w = normal({4, 5}, rng);
  return finite_diff_check([&](const Tensor64& v) { return sum(mul(relu(sigmoid(mul(sigmoid(relu(v)), w))), w)); },
                           x);
}

GradCheckResult check_tanh(Rng& rng) {
  auto x = normal({4, 5}, rng, 2.0);
  auto w = normal({4, 5}, rng);
  return finite_diff_check([&](const Tensor64& v) { return sum(mul(tanh(v), w)); }, x);
}

GradCheckResult check_dropout(Rng& rng, std::uint64_t seed) {
  auto x = normal({6, 5}, rng);
  auto w = normal({6, 5}, rng);
  return finite_diff_check(
      [&](const Tensor64& v) {
        Rng mask(seed);  // same mask on every evaluation
        return sum(mul(dropout(v, 0.4, true, mask), w));
      },
      x);
}

GradCheckResult check_convlstm(Rng& rng) {
  const std::size_t cin = 2, f = 2, k = 3;
  std::vector<Tensor64> inputs{normal({1, 3, 4, 4, cin}, rng)};
  for (std::size_t g = 0; g < 4; ++g) {
    inputs.push_back(normal({k, k, cin, f}, rng, 0.5));
    inputs.push_back(normal({k, k, f, f}, rng, 0.5));
    inputs.push_back(normal({f}, rng, 0.5));
  }
  auto probe = normal({1, 3, 4, 4, f}, rng);
  return finite_diff_check(
      [&](std::span<const Tensor64> in) {
        ConvLstmParams<double> p;
        for (std::size_t g = 0; g < 4; ++g) {
          p.input_kernels[g] = in[1 + 3 * g];
          p.recurrent_kernels[g] = in[2 + 3 * g];
          p.biases[g] = in[3 + 3 * g];
        }
        return sum(mul(convlstm2d(in[0], p), probe));
      },
      inputs);
}

GradCheckResult check_bce(Rng& rng) {
  auto logits = normal({6, 1}, rng, 2.0);
  std::vector<double> t(6);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(i % 2);
  const Tensor64 target({6, 1}, t);
  return finite_diff_check([&](const Tensor64& z) { return bce_loss(sigmoid(z), target); }, logits);
}

}  // namespace

const std::vector<std::string>& gradcheck_ops() {
  static const std::vector<std::string> ops{"conv3d", "maxpool3d", "dense",      "relu_sigmoid",
                                            "tanh",   "dropout",   "convlstm2d", "bce_loss"};
  return ops;
}

std::vector<OpCheck> run_gradcheck_suite(const GradCheckOptions& options) {
  std::vector<std::string> selected = options.ops.empty() ? gradcheck_ops() : options.ops;
  for (const auto& op : selected)
    if (std::find(gradcheck_ops().begin(), gradcheck_ops().end(), op) == gradcheck_ops().end())
      throw InvalidArgument("gradcheck: unknown op '" + op + "'");

  std::vector<OpCheck> out;
  for (const auto& op : selected) {
    Rng rng(derive_seed(options.seed, op));
    const auto start = std::chrono::steady_clock::now();
    GradCheckResult r;
    if (op == "conv3d") r = check_conv3d(rng, options.flip_conv3d_gradient);
    else if (op == "maxpool3d") r = check_maxpool(rng);
    else if (op == "dense") r = check_dense(rng);
    else if (op == "relu_sigmoid") r = check_relu_sigmoid(rng);
    else if (op == "tanh") r = check_tanh(rng);
    else if (op == "dropout") r = check_dropout(rng, derive_seed(options.seed, "mask"));
    else if (op == "convlstm2d") r = check_convlstm(rng);
    else r = check_bce(rng);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.push_back({op, r, secs, r.passed(options.tolerance)});
  }
  return out;
}

std::string format_gradcheck(const std::vector<OpCheck>& checks, double tolerance) {
  std::ostringstream out;
  char line[128];
  std::snprintf(line, sizeof line, "%-14s %14s %8s %6s %8s  %s\n", "op", "max rel error", "checked", "ties", "seconds",
                "result");
  out << line;
  for (const auto& c : checks) {
    std::snprintf(line, sizeof line, "%-14s %14.3e %8zu %6zu %8.3f  %s\n", c.op.c_str(), c.result.max_rel_error,
                  c.result.checked, c.result.ties, c.seconds, c.passed ? "PASS" : "FAIL");
    out << line;
  }
  std::snprintf(line, sizeof line, "tolerance %.0e\n", tolerance);
  out << line;
  return out.str();
}

}  // namespace gaitnet
