#pragma once

#include <array>
#include <cstddef>

#include "gaitnet/ops.hpp"
#include "gaitnet/tensor.hpp"

namespace gaitnet {

enum class Padding { kSame, kValid };

// Kernel layout (kT, kH, kW, Cin, Cout), bias (Cout). Stride is always 1.
template <typename T>
struct Conv3dParams {
  BasicTensor<T> weight;
  BasicTensor<T> bias;
  Padding padding = Padding::kSame;
};

template <typename T>
struct DenseParams {
  BasicTensor<T> weight;  // (in, out)
  BasicTensor<T> bias;    // (out)
};

// Gate order everywhere: input, forget, candidate (cell), output.
enum Gate : std::size_t { kInputGate = 0, kForgetGate = 1, kCellGate = 2, kOutputGate = 3 };

template <typename T>
struct ConvLstmParams {
  std::array<BasicTensor<T>, 4> input_kernels;      // each (kH, kW, Cin, F)
  std::array<BasicTensor<T>, 4> recurrent_kernels;  // each (kH, kW, F, F)
  std::array<BasicTensor<T>, 4> biases;             // each (F)
};

struct Pool3d {
  std::size_t t = 1;
  std::size_t h = 1;
  std::size_t w = 1;
};

// x (N, T, H, W, Cin) -> (N, T', H', W', Cout), linear convolution plus bias.
template <typename T>
BasicTensor<T> conv3d(const BasicTensor<T>& x, const Conv3dParams<T>& p);

// Disjoint-window max over (T, H, W); remainders are dropped. Gradient goes to
// the first maximum in (t, h, w) scan order.
template <typename T>
BasicTensor<T> maxpool3d(const BasicTensor<T>& x, Pool3d pool);

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& x);
template <typename T>
BasicTensor<T> sigmoid(const BasicTensor<T>& x);
template <typename T>
BasicTensor<T> tanh(const BasicTensor<T>& x);

// x (N, in) -> x . W + b
template <typename T>
BasicTensor<T> dense(const BasicTensor<T>& x, const DenseParams<T>& p);

// Inverted dropout. Returns `x` itself when !training or rate == 0.
template <typename T>
BasicTensor<T> dropout(const BasicTensor<T>& x, double rate, bool training, Rng& rng);

// Convolutional LSTM over the time axis with same-padded 2-D convolutions and
// zero initial state. x (N, T, H, W, Cin) -> hidden sequence (N, T, H, W, F).
template <typename T>
BasicTensor<T> convlstm2d(const BasicTensor<T>& x, const ConvLstmParams<T>& p);

// (N, ...) -> (N, prod(...))
template <typename T>
BasicTensor<T> flatten(const BasicTensor<T>& x);

inline constexpr double kBceEpsilon = 1e-7;

// Mean binary cross-entropy; predictions are clamped to [eps, 1 - eps].
// pred and target are (N, 1); targets must be exactly 0 or 1.
template <typename T>
BasicTensor<T> bce_loss(const BasicTensor<T>& pred, const BasicTensor<T>& target);

}  // namespace gaitnet
