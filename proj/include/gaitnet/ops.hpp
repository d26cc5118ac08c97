#pragma once

#include "gaitnet/tensor.hpp"

namespace gaitnet {

enum class BinaryOp { kAdd, kSub, kMul };

// a op b. `b` must have a's shape, or be a 1-D tensor whose length equals
// a's last extent (a bias broadcast over the trailing axis).
template <typename T>
BasicTensor<T> elementwise(BinaryOp op, const BasicTensor<T>& a, const BasicTensor<T>& b);

template <typename T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  return elementwise(BinaryOp::kAdd, a, b);
}
template <typename T>
BasicTensor<T> sub(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  return elementwise(BinaryOp::kSub, a, b);
}
template <typename T>
BasicTensor<T> mul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  return elementwise(BinaryOp::kMul, a, b);
}

// (m x k) . (k x n)
template <typename T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b);

template <typename T>
BasicTensor<T> scale(const BasicTensor<T>& x, T factor);

// Sum / mean of all elements, as a shape-(1) tensor.
template <typename T>
BasicTensor<T> sum(const BasicTensor<T>& x);
template <typename T>
BasicTensor<T> mean(const BasicTensor<T>& x);

// Same data, new shape of equal element count.
template <typename T>
BasicTensor<T> reshape(const BasicTensor<T>& x, const Shape& shape);

}  // namespace gaitnet
