#include "gaitnet/ops.hpp"

#include <numeric>

#include "gaitnet/gemm.hpp"

namespace gaitnet {

template <typename T>
BasicTensor<T> elementwise(BinaryOp op, const BasicTensor<T>& a, const BasicTensor<T>& b) {
  const bool same = a.shape() == b.shape();
  const bool bias = !same && b.ndim() == 1 && b.dim(0) == a.shape().back();
  if (!same && !bias)
    throw ShapeMismatch("elementwise: cannot combine " + to_string(a.shape()) + " with " +
                        to_string(b.shape()));

  const std::size_t n = a.numel();
  const std::size_t period = b.numel();
  auto av = a.data();
  auto bv = b.data();
  std::vector<T> out(n);
  switch (op) {
    case BinaryOp::kAdd:
      for (std::size_t i = 0; i < n; ++i) out[i] = av[i] + bv[i % period];
      break;
    case BinaryOp::kSub:
      for (std::size_t i = 0; i < n; ++i) out[i] = av[i] - bv[i % period];
      break;
    case BinaryOp::kMul:
      for (std::size_t i = 0; i < n; ++i) out[i] = av[i] * bv[i % period];
      break;
  }
  BasicTensor<T> result(a.shape(), std::move(out));
  if (autograd::tracking<T>({&a, &b})) {
    autograd::record(result, [op, n, period, ai = a.impl(), bi = b.impl()](std::span<const T> g) {
      auto ga = autograd::grad_sink(*ai);
      auto gb = autograd::grad_sink(*bi);
      if (!ga.empty()) {
        if (op == BinaryOp::kMul)
          for (std::size_t i = 0; i < n; ++i) ga[i] += g[i] * bi->data[i % period];
        else
          for (std::size_t i = 0; i < n; ++i) ga[i] += g[i];
      }
      if (!gb.empty()) {
        const T sign = op == BinaryOp::kSub ? T(-1) : T(1);
        if (op == BinaryOp::kMul)
          for (std::size_t i = 0; i < n; ++i) gb[i % period] += g[i] * ai->data[i];
        else
          for (std::size_t i = 0; i < n; ++i) gb[i % period] += sign * g[i];
      }
    });
  }
  return result;
}

template <typename T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (a.ndim() != 2 || b.ndim() != 2 || a.dim(1) != b.dim(0))
    throw ShapeMismatch("matmul: " + to_string(a.shape()) + " x " + to_string(b.shape()));
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<T> out(m * n, T(0));
  gemm(false, false, m, n, k, T(1), a.data().data(), k, b.data().data(), n, T(0), out.data(), n);
  BasicTensor<T> result({m, n}, std::move(out));
  if (autograd::tracking<T>({&a, &b})) {
    autograd::record(result, [m, k, n, ai = a.impl(), bi = b.impl()](std::span<const T> g) {
      auto ga = autograd::grad_sink(*ai);
      auto gb = autograd::grad_sink(*bi);
      // dA = dC . B^T, dB = A^T . dC
      if (!ga.empty())
        gemm(false, true, m, k, n, T(1), g.data(), n, bi->data.data(), n, T(1), ga.data(), k);
      if (!gb.empty())
        gemm(true, false, k, n, m, T(1), ai->data.data(), k, g.data(), n, T(1), gb.data(), n);
    });
  }
  return result;
}

template <typename T>
BasicTensor<T> scale(const BasicTensor<T>& x, T factor) {
  std::vector<T> out(x.data().begin(), x.data().end());
  for (T& v : out) v *= factor;
  BasicTensor<T> result(x.shape(), std::move(out));
  if (autograd::tracking<T>({&x})) {
    autograd::record(result, [factor, xi = x.impl()](std::span<const T> g) {
      auto gx = autograd::grad_sink(*xi);
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += factor * g[i];
    });
  }
  return result;
}

template <typename T>
BasicTensor<T> sum(const BasicTensor<T>& x) {
  auto v = x.data();
  BasicTensor<T> result({1}, {std::accumulate(v.begin(), v.end(), T(0))});
  if (autograd::tracking<T>({&x})) {
    autograd::record(result, [xi = x.impl()](std::span<const T> g) {
      auto gx = autograd::grad_sink(*xi);
      for (T& d : gx) d += g[0];
    });
  }
  return result;
}

template <typename T>
BasicTensor<T> mean(const BasicTensor<T>& x) {
  return scale(sum(x), T(1) / static_cast<T>(x.numel()));
}

template <typename T>
BasicTensor<T> reshape(const BasicTensor<T>& x, const Shape& shape) {
  if (checked_numel(shape) != x.numel())
    throw ShapeMismatch("reshape: " + to_string(x.shape()) + " -> " + to_string(shape));
  BasicTensor<T> result(shape, std::vector<T>(x.data().begin(), x.data().end()));
  if (autograd::tracking<T>({&x})) {
    autograd::record(result, [xi = x.impl()](std::span<const T> g) {
      auto gx = autograd::grad_sink(*xi);
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i];
    });
  }
  return result;
}

#define GAITNET_INSTANTIATE(T)                                                           \
  template BasicTensor<T> elementwise(BinaryOp, const BasicTensor<T>&, const BasicTensor<T>&); \
  template BasicTensor<T> matmul(const BasicTensor<T>&, const BasicTensor<T>&);          \
  template BasicTensor<T> scale(const BasicTensor<T>&, T);                               \
  template BasicTensor<T> sum(const BasicTensor<T>&);                                    \
  template BasicTensor<T> mean(const BasicTensor<T>&);                                   \
  template BasicTensor<T> reshape(const BasicTensor<T>&, const Shape&);

GAITNET_INSTANTIATE(float)
GAITNET_INSTANTIATE(double)

#undef GAITNET_INSTANTIATE

}  // namespace gaitnet
