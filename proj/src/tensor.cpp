#include "gaitnet/tensor.hpp"

#include <algorithm>
#include <sstream>

namespace gaitnet {

std::size_t checked_numel(const Shape& shape) {
  if (shape.empty()) throw InvalidShape("tensor shape must have at least one axis");
  std::size_t n = 1;
  for (std::size_t extent : shape) {
    if (extent == 0) throw InvalidShape("zero extent in shape " + to_string(shape));
    n *= extent;
  }
  return n;
}

std::string to_string(const Shape& shape) {
  std::ostringstream out;
  out << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) out << (i ? "," : "") << shape[i];
  out << ')';
  return out.str();
}

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, std::vector<T> data)
    : impl_(std::make_shared<TensorImpl<T>>()) {
  const std::size_t n = checked_numel(shape);
  if (n != data.size())
    throw ShapeMismatch("data length " + std::to_string(data.size()) +
                        " does not match shape " + to_string(shape));
  impl_->shape = std::move(shape);
  impl_->data = std::move(data);
}

template <typename T>
BasicTensor<T> BasicTensor<T>::create(const Shape& shape, const Fill& fill, Rng* rng) {
  std::vector<T> values(checked_numel(shape));
  switch (fill.kind) {
    case Fill::Kind::kConstant:
      std::fill(values.begin(), values.end(), static_cast<T>(fill.a));
      break;
    case Fill::Kind::kUniform:
      if (rng == nullptr) throw InvalidArgument("uniform fill requires an Rng");
      for (T& v : values) v = static_cast<T>(rng->uniform(fill.a, fill.b));
      break;
    case Fill::Kind::kNormal:
      if (rng == nullptr) throw InvalidArgument("normal fill requires an Rng");
      if (fill.b < 0) throw InvalidArgument("normal fill: negative stddev");
      for (T& v : values) v = static_cast<T>(rng->normal(fill.a, fill.b));
      break;
  }
  return BasicTensor(shape, std::move(values));
}

template <typename T>
BasicTensor<T> BasicTensor<T>::full(const Shape& shape, T value) {
  return BasicTensor(shape, std::vector<T>(checked_numel(shape), value));
}

template <typename T>
T BasicTensor<T>::item() const {
  if (numel() != 1)
    throw ContractError("item() on tensor of shape " + to_string(shape()));
  return impl_->data[0];
}

template <typename T>
std::span<T> BasicTensor<T>::mutable_grad() {
  if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), T(0));
  return impl_->grad;
}

template <typename T>
void BasicTensor<T>::zero_grad() {
  std::fill(impl_->grad.begin(), impl_->grad.end(), T(0));
}

template <typename T>
BasicTensor<T> BasicTensor<T>::clone() const {
  return BasicTensor(impl_->shape, impl_->data);
}

template class BasicTensor<float>;
template class BasicTensor<double>;

namespace {
thread_local Tape* active_tape = nullptr;
}

Tape::~Tape() {
  if (active_tape == this) active_tape = nullptr;
}

void Tape::record(std::function<void()> backward_step) {
  steps_.push_back(std::move(backward_step));
}

Tape* Tape::active() { return active_tape; }

Tape::Scope::Scope(Tape& tape) : previous_(active_tape) { active_tape = &tape; }

Tape::Scope::~Scope() { active_tape = previous_; }

void Tape::replay() {
  // Backward steps never record new operations.
  Tape* saved = active_tape;
  active_tape = nullptr;
  auto steps = std::move(steps_);
  steps_.clear();
  for (auto it = steps.rbegin(); it != steps.rend(); ++it) (*it)();
  active_tape = saved;
}

template <typename T>
void Tape::backward(const BasicTensor<T>& loss) {
  if (!loss.defined() || loss.numel() != 1)
    throw ContractError("backward() requires a scalar loss");
  if (steps_.empty()) throw ContractError("backward() on an empty tape");
  if (!loss.requires_grad())
    throw ContractError("backward(): loss does not depend on any tracked tensor");
  auto& grad = loss.impl()->grad;
  grad.assign(1, T(1));
  replay();
}

template void Tape::backward<float>(const BasicTensor<float>&);
template void Tape::backward<double>(const BasicTensor<double>&);

}  // namespace gaitnet
