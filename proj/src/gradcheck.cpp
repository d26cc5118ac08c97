#include "gaitnet/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace gaitnet {
namespace {

// One-sided slopes that disagree by more than this (relative) mark a kink.
constexpr double kKinkTolerance = 1e-2;

double evaluate(const ScalarFunction& f, std::span<const Tensor64> inputs) {
  Tensor64 y = f(inputs);
  if (y.numel() != 1) throw ContractError("finite_diff_check: function must be scalar-valued");
  return y.item();
}

}  // namespace

GradCheckResult finite_diff_check(const ScalarFunction& f, const std::vector<Tensor64>& inputs,
                                  double h) {
  std::vector<Tensor64> tracked;
  tracked.reserve(inputs.size());
  for (const auto& x : inputs) tracked.push_back(x.clone().set_requires_grad(true));

  {
    Tape tape;
    Tape::Scope scope(tape);
    Tensor64 y = f(tracked);
    if (y.numel() != 1) throw ContractError("finite_diff_check: function must be scalar-valued");
    tape.backward(y);
  }

  std::vector<Tensor64> probe;
  probe.reserve(inputs.size());
  for (const auto& x : inputs) probe.push_back(x.clone());
  const double f0 = evaluate(f, probe);

  GradCheckResult result;
  for (std::size_t k = 0; k < probe.size(); ++k) {
    auto values = probe[k].mutable_data();
    auto analytic_grad = tracked[k].grad();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double original = values[i];
      values[i] = original + h;
      const double f_plus = evaluate(f, probe);
      values[i] = original - h;
      const double f_minus = evaluate(f, probe);
      values[i] = original;

      const double numeric = (f_plus - f_minus) / (2.0 * h);
      const double forward = (f_plus - f0) / h;
      const double backward = (f0 - f_minus) / h;
      if (std::abs(forward - backward) > kKinkTolerance * std::max(1.0, std::abs(numeric))) {
        ++result.ties;
        continue;
      }
      const double analytic = analytic_grad.empty() ? 0.0 : analytic_grad[i];
      const double denom = std::max({1.0, std::abs(analytic), std::abs(numeric)});
      result.max_rel_error = std::max(result.max_rel_error, std::abs(analytic - numeric) / denom);
      ++result.checked;
    }
  }
  return result;
}

GradCheckResult finite_diff_check(const std::function<Tensor64(const Tensor64&)>& f,
                                  const Tensor64& x, double h) {
  return finite_diff_check([&f](std::span<const Tensor64> in) { return f(in[0]); },
                           std::vector<Tensor64>{x}, h);
}

}  // namespace gaitnet
