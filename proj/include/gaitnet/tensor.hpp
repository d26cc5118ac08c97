#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gaitnet/errors.hpp"
#include "gaitnet/rng.hpp"

namespace gaitnet {

using Shape = std::vector<std::size_t>;

// Element count of a shape. Throws InvalidShape on an empty shape or a zero
// extent.
std::size_t checked_numel(const Shape& shape);
std::string to_string(const Shape& shape);

enum class Precision { kF32, kF64 };

// How `create` initializes a tensor.
struct Fill {
  enum class Kind { kConstant, kUniform, kNormal };
  Kind kind = Kind::kConstant;
  double a = 0.0;  // constant value, lower bound or mean
  double b = 0.0;  // upper bound or standard deviation

  static Fill constant(double value) { return {Kind::kConstant, value, 0.0}; }
  static Fill uniform(double lo, double hi) { return {Kind::kUniform, lo, hi}; }
  static Fill normal(double mean, double stddev) { return {Kind::kNormal, mean, stddev}; }
};

template <typename T>
struct TensorImpl {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;  // empty until first accumulation
  bool requires_grad = false;
};

// Row-major n-dimensional array with an optional gradient buffer. Copies are
// shallow: two handles may refer to the same storage (use clone() for a deep
// copy). Values are not modified by operations; only parameter updates and
// loaders write through mutable_data().
template <typename T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() = default;
  BasicTensor(Shape shape, std::vector<T> data);

  static BasicTensor create(const Shape& shape, const Fill& fill, Rng* rng = nullptr);
  static BasicTensor zeros(const Shape& shape) { return full(shape, T(0)); }
  static BasicTensor ones(const Shape& shape) { return full(shape, T(1)); }
  static BasicTensor full(const Shape& shape, T value);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  std::size_t ndim() const { return impl_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return impl_->shape.at(axis); }
  std::size_t numel() const { return impl_->data.size(); }

  std::span<const T> data() const { return impl_->data; }
  std::span<T> mutable_data() { return impl_->data; }
  T operator[](std::size_t i) const { return impl_->data[i]; }
  T item() const;

  bool requires_grad() const { return impl_->requires_grad; }
  BasicTensor& set_requires_grad(bool on) {
    impl_->requires_grad = on;
    return *this;
  }

  bool has_grad() const { return !impl_->grad.empty(); }
  std::span<const T> grad() const { return impl_->grad; }
  // Allocates a zero gradient buffer on first use.
  std::span<T> mutable_grad();
  void zero_grad();
  void clear_grad() { impl_->grad.clear(); }

  // Deep copy of the values; the copy has no gradient and is not tracked.
  BasicTensor clone() const;

  bool is_same(const BasicTensor& other) const { return impl_ == other.impl_; }
  const std::shared_ptr<TensorImpl<T>>& impl() const { return impl_; }

 private:
  std::shared_ptr<TensorImpl<T>> impl_;
};

using Tensor = BasicTensor<float>;
using Tensor64 = BasicTensor<double>;

// Records differentiable operations executed while it is the active tape of
// the calling thread, and replays them in reverse in backward().
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  ~Tape();

  void record(std::function<void()> backward_step);
  std::size_t size() const { return steps_.size(); }
  bool empty() const { return steps_.empty(); }
  void clear() { steps_.clear(); }

  // Seeds d(loss)/d(loss) = 1 and propagates to every tracked tensor. The
  // tape is cleared afterwards, releasing saved intermediates.
  template <typename T>
  void backward(const BasicTensor<T>& loss);

  static Tape* active();

  // Makes `tape` the active tape for the current thread until destroyed.
  class Scope {
   public:
    explicit Scope(Tape& tape);
    ~Scope();
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

   private:
    Tape* previous_;
  };

 private:
  void replay();
  std::vector<std::function<void()>> steps_;
};

namespace autograd {

// True when an operation on these inputs must be recorded.
template <typename T>
bool tracking(std::initializer_list<const BasicTensor<T>*> inputs) {
  if (Tape::active() == nullptr) return false;
  for (const auto* t : inputs)
    if (t->requires_grad()) return true;
  return false;
}

// Gradient buffer of `impl`, or an empty span when it does not need one.
template <typename T>
std::span<T> grad_sink(TensorImpl<T>& impl) {
  if (!impl.requires_grad) return {};
  if (impl.grad.empty()) impl.grad.assign(impl.data.size(), T(0));
  return impl.grad;
}

// Registers `step(output_grad)` on the active tape and marks `out` as
// tracked. `step` is skipped when no gradient reached `out`.
template <typename T, typename Step>
void record(BasicTensor<T>& out, Step step) {
  out.set_requires_grad(true);
  Tape::active()->record([impl = out.impl(), step = std::move(step)]() mutable {
    if (impl->grad.empty()) return;
    step(std::span<const T>(impl->grad));
  });
}

}  // namespace autograd

// Single-input operation with a caller-supplied backward rule:
// `backward(output_grad, input_grad)` must accumulate into input_grad.
template <typename T>
BasicTensor<T> custom_unary(
    const BasicTensor<T>& x, BasicTensor<T> value,
    std::function<void(std::span<const T>, std::span<T>)> backward) {
  if (autograd::tracking<T>({&x})) {
    autograd::record(value, [xi = x.impl(), backward](std::span<const T> g) {
      auto gx = autograd::grad_sink(*xi);
      if (!gx.empty()) backward(g, gx);
    });
  }
  return value;
}

extern template class BasicTensor<float>;
extern template class BasicTensor<double>;
extern template void Tape::backward<float>(const BasicTensor<float>&);
extern template void Tape::backward<double>(const BasicTensor<double>&);

}  // namespace gaitnet
