#include "gaitnet/nn.hpp"

#include <algorithm>
#include <cmath>

#include "conv_lowering.hpp"
#include "gaitnet/gemm.hpp"

namespace gaitnet {
namespace {

template <typename T>
T stable_sigmoid(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

template <typename T>
void require_rank(const BasicTensor<T>& x, std::size_t rank, const char* op) {
  if (x.ndim() != rank)
    throw ShapeMismatch(std::string(op) + ": expected rank " + std::to_string(rank) +
                        " input, got " + to_string(x.shape()));
}

// Unary elementwise op whose derivative is a function of the output value.
template <typename T, typename Forward, typename Slope>
BasicTensor<T> pointwise(const BasicTensor<T>& x, Forward forward, Slope slope_from_output) {
  std::vector<T> out(x.numel());
  auto xv = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = forward(xv[i]);
  BasicTensor<T> result(x.shape(), std::move(out));
  if (autograd::tracking<T>({&x})) {
    autograd::record(result, [xi = x.impl(), yi = result.impl(), slope_from_output](std::span<const T> g) {
      auto gx = autograd::grad_sink(*xi);
      const auto& y = yi->data;
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i] * slope_from_output(y[i]);
    });
  }
  return result;
}

}  // namespace

template <typename T>
BasicTensor<T> conv3d(const BasicTensor<T>& x, const Conv3dParams<T>& p) {
  require_rank(x, 5, "conv3d");
  const auto& w = p.weight;
  if (w.ndim() != 5) throw ShapeMismatch("conv3d: kernel must be (kT,kH,kW,Cin,Cout)");
  if (w.dim(3) != x.dim(4))
    throw ShapeMismatch("conv3d: input has " + std::to_string(x.dim(4)) +
                        " channels, kernel expects " + std::to_string(w.dim(3)));
  const std::size_t cout = w.dim(4);
  if (p.bias.ndim() != 1 || p.bias.dim(0) != cout)
    throw ShapeMismatch("conv3d: bias length must equal Cout=" + std::to_string(cout));

  const std::size_t n_batch = x.dim(0);
  const auto g = lowering::make_geometry(x.dim(1), x.dim(2), x.dim(3), x.dim(4), w.dim(0),
                                         w.dim(1), w.dim(2), p.padding == Padding::kSame);
  const std::size_t k = g.patch();
  const std::size_t rows = g.positions_per_frame();
  const std::size_t out_frame = rows * cout;
  const std::size_t out_sample = g.out_frames * out_frame;

  std::vector<T> out(n_batch * out_sample);
  std::vector<T> col(rows * k);
  const T* xd = x.data().data();
  const T* wd = w.data().data();
  const T* bd = p.bias.data().data();
  for (std::size_t n = 0; n < n_batch; ++n) {
    for (std::size_t to = 0; to < g.out_frames; ++to) {
      T* dst = out.data() + n * out_sample + to * out_frame;
      for (std::size_t r = 0; r < rows; ++r) std::copy(bd, bd + cout, dst + r * cout);
      lowering::im2col_frame(xd + n * g.sample_size(), g, to, col.data());
      gemm(false, false, rows, cout, k, T(1), col.data(), k, wd, cout, T(1), dst, cout);
    }
  }

  BasicTensor<T> result({n_batch, g.out_frames, g.out_height, g.out_width, cout}, std::move(out));
  if (autograd::tracking<T>({&x, &p.weight, &p.bias})) {
    autograd::record(result, [g, n_batch, cout, xi = x.impl(), wi = w.impl(),
                              bi = p.bias.impl()](std::span<const T> grad) {
      auto gx = autograd::grad_sink(*xi);
      auto gw = autograd::grad_sink(*wi);
      auto gb = autograd::grad_sink(*bi);
      const std::size_t k = g.patch();
      const std::size_t rows = g.positions_per_frame();
      const std::size_t out_frame = rows * cout;
      const std::size_t out_sample = g.out_frames * out_frame;
      std::vector<T> col(rows * k);
      std::vector<T> dcol(gx.empty() ? 0 : rows * k);
      for (std::size_t n = 0; n < n_batch; ++n) {
        for (std::size_t to = 0; to < g.out_frames; ++to) {
          const T* gy = grad.data() + n * out_sample + to * out_frame;
          if (!gb.empty())
            for (std::size_t r = 0; r < rows; ++r)
              for (std::size_t co = 0; co < cout; ++co) gb[co] += gy[r * cout + co];
          if (!gw.empty()) {
            lowering::im2col_frame(xi->data.data() + n * g.sample_size(), g, to, col.data());
            gemm(true, false, k, cout, rows, T(1), col.data(), k, gy, cout, T(1), gw.data(), cout);
          }
          if (!gx.empty()) {
            gemm(false, true, rows, k, cout, T(1), gy, cout, wi->data.data(), cout, T(0),
                 dcol.data(), k);
            lowering::col2im_frame_add(dcol.data(), g, to, gx.data() + n * g.sample_size());
          }
        }
      }
    });
  }
  return result;
}

template <typename T>
BasicTensor<T> maxpool3d(const BasicTensor<T>& x, Pool3d pool) {
  require_rank(x, 5, "maxpool3d");
  if (pool.t == 0 || pool.h == 0 || pool.w == 0) throw InvalidShape("maxpool3d: zero pool extent");
  const std::size_t n_batch = x.dim(0), frames = x.dim(1), height = x.dim(2), width = x.dim(3),
                    c = x.dim(4);
  if (pool.t > frames || pool.h > height || pool.w > width)
    throw InvalidShape("maxpool3d: pool (" + std::to_string(pool.t) + "," +
                       std::to_string(pool.h) + "," + std::to_string(pool.w) +
                       ") exceeds input " + to_string(x.shape()));
  const std::size_t to_n = frames / pool.t, ho_n = height / pool.h, wo_n = width / pool.w;
  const Shape out_shape{n_batch, to_n, ho_n, wo_n, c};
  const std::size_t total = n_batch * to_n * ho_n * wo_n * c;
  std::vector<T> out(total);
  std::vector<std::size_t> argmax(total);
  const T* xd = x.data().data();

  std::size_t o = 0;
  for (std::size_t n = 0; n < n_batch; ++n)
    for (std::size_t to = 0; to < to_n; ++to)
      for (std::size_t ho = 0; ho < ho_n; ++ho)
        for (std::size_t wo = 0; wo < wo_n; ++wo)
          for (std::size_t ch = 0; ch < c; ++ch, ++o) {
            std::size_t best = 0;
            bool first = true;
            for (std::size_t dt = 0; dt < pool.t; ++dt)
              for (std::size_t dh = 0; dh < pool.h; ++dh)
                for (std::size_t dw = 0; dw < pool.w; ++dw) {
                  const std::size_t idx =
                      (((n * frames + to * pool.t + dt) * height + ho * pool.h + dh) * width +
                       wo * pool.w + dw) * c + ch;
                  if (first || xd[idx] > xd[best]) {
                    best = idx;
                    first = false;
                  }
                }
            out[o] = xd[best];
            argmax[o] = best;
          }

  BasicTensor<T> result(out_shape, std::move(out));
  if (autograd::tracking<T>({&x})) {
    autograd::record(result, [xi = x.impl(), argmax = std::move(argmax)](std::span<const T> g) {
      auto gx = autograd::grad_sink(*xi);
      for (std::size_t i = 0; i < argmax.size(); ++i) gx[argmax[i]] += g[i];
    });
  }
  return result;
}

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& x) {
  return pointwise(
      x, [](T v) { return v > T(0) ? v : T(0); }, [](T y) { return y > T(0) ? T(1) : T(0); });
}

template <typename T>
BasicTensor<T> sigmoid(const BasicTensor<T>& x) {
  return pointwise(x, [](T v) { return stable_sigmoid(v); }, [](T y) { return y * (T(1) - y); });
}

template <typename T>
BasicTensor<T> tanh(const BasicTensor<T>& x) {
  return pointwise(x, [](T v) { return std::tanh(v); }, [](T y) { return T(1) - y * y; });
}

template <typename T>
BasicTensor<T> dense(const BasicTensor<T>& x, const DenseParams<T>& p) {
  require_rank(x, 2, "dense");
  if (p.weight.ndim() != 2 || p.weight.dim(0) != x.dim(1))
    throw ShapeMismatch("dense: input width " + std::to_string(x.dim(1)) +
                        " does not match weights " + to_string(p.weight.shape()));
  if (p.bias.ndim() != 1 || p.bias.dim(0) != p.weight.dim(1))
    throw ShapeMismatch("dense: bias length must equal output width");
  return add(matmul(x, p.weight), p.bias);
}

template <typename T>
BasicTensor<T> dropout(const BasicTensor<T>& x, double rate, bool training, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0))
    throw InvalidArgument("dropout: rate must be in [0, 1), got " + std::to_string(rate));
  if (!training || rate == 0.0) return x;

  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
  std::vector<T> mask(x.numel());
  for (T& m : mask) m = rng.uniform() < rate ? T(0) : keep_scale;
  std::vector<T> out(x.numel());
  auto xv = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] * mask[i];

  BasicTensor<T> result(x.shape(), std::move(out));
  if (autograd::tracking<T>({&x})) {
    autograd::record(result, [xi = x.impl(), mask = std::move(mask)](std::span<const T> g) {
      auto gx = autograd::grad_sink(*xi);
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i] * mask[i];
    });
  }
  return result;
}

template <typename T>
BasicTensor<T> convlstm2d(const BasicTensor<T>& x, const ConvLstmParams<T>& p) {
  require_rank(x, 5, "convlstm2d");
  const auto& wx0 = p.input_kernels[0];
  if (wx0.ndim() != 4) throw ShapeMismatch("convlstm2d: input kernels must be (kH,kW,Cin,F)");
  const std::size_t kh = wx0.dim(0), kw = wx0.dim(1), cin = wx0.dim(2), f = wx0.dim(3);
  if (cin != x.dim(4))
    throw ShapeMismatch("convlstm2d: input has " + std::to_string(x.dim(4)) +
                        " channels, kernels expect " + std::to_string(cin));
  for (std::size_t gate = 0; gate < 4; ++gate) {
    if (p.input_kernels[gate].shape() != Shape{kh, kw, cin, f})
      throw ShapeMismatch("convlstm2d: input kernels must share one shape");
    if (p.recurrent_kernels[gate].shape() != Shape{kh, kw, f, f})
      throw ShapeMismatch("convlstm2d: recurrent kernel must be (kH,kW,F,F)");
    if (p.biases[gate].shape() != Shape{f})
      throw ShapeMismatch("convlstm2d: gate bias must have length F");
  }

  const std::size_t n_batch = x.dim(0), steps = x.dim(1), height = x.dim(2), width = x.dim(3);
  const std::size_t hw = height * width;
  const std::size_t f4 = 4 * f;
  const auto gx = lowering::make_geometry(1, height, width, cin, 1, kh, kw, true);
  const auto gh = lowering::make_geometry(1, height, width, f, 1, kh, kw, true);
  const std::size_t kx = gx.patch(), khh = gh.patch();

  // All four gates are evaluated by one GEMM against packed (K, 4F) kernels.
  std::vector<T> wx_all(kx * f4), wh_all(khh * f4), b_all(f4);
  for (std::size_t gate = 0; gate < 4; ++gate) {
    auto src_x = p.input_kernels[gate].data();
    for (std::size_t r = 0; r < kx; ++r)
      std::copy_n(src_x.data() + r * f, f, wx_all.data() + r * f4 + gate * f);
    auto src_h = p.recurrent_kernels[gate].data();
    for (std::size_t r = 0; r < khh; ++r)
      std::copy_n(src_h.data() + r * f, f, wh_all.data() + r * f4 + gate * f);
    std::copy_n(p.biases[gate].data().data(), f, b_all.data() + gate * f);
  }

  const std::size_t state = hw * f;  // one (H, W, F) map
  const std::size_t x_step = hw * cin;
  std::vector<T> out(n_batch * steps * state);
  // Saved per (n, t): activated gates (4 maps) and the cell state.
  std::vector<T> gates(n_batch * steps * 4 * state);
  std::vector<T> cells(n_batch * steps * state);
  std::vector<T> colx(hw * kx), colh(hw * khh), z(hw * f4);
  const T* xd = x.data().data();

  for (std::size_t n = 0; n < n_batch; ++n) {
    for (std::size_t t = 0; t < steps; ++t) {
      const std::size_t nt = n * steps + t;
      for (std::size_t r = 0; r < hw; ++r) std::copy(b_all.begin(), b_all.end(), z.begin() + r * f4);
      lowering::im2col_frame(xd + nt * x_step, gx, 0, colx.data());
      gemm(false, false, hw, f4, kx, T(1), colx.data(), kx, wx_all.data(), f4, T(1), z.data(), f4);
      if (t > 0) {
        lowering::im2col_frame(out.data() + (nt - 1) * state, gh, 0, colh.data());
        gemm(false, false, hw, f4, khh, T(1), colh.data(), khh, wh_all.data(), f4, T(1), z.data(), f4);
      }
      T* gi = gates.data() + nt * 4 * state;
      T* gf = gi + state;
      T* gc = gf + state;
      T* go = gc + state;
      T* c = cells.data() + nt * state;
      const T* c_prev = t > 0 ? cells.data() + (nt - 1) * state : nullptr;
      T* h = out.data() + nt * state;
      for (std::size_t r = 0; r < hw; ++r) {
        const T* zr = z.data() + r * f4;
        for (std::size_t j = 0; j < f; ++j) {
          const std::size_t s = r * f + j;
          gi[s] = stable_sigmoid(zr[kInputGate * f + j]);
          gf[s] = stable_sigmoid(zr[kForgetGate * f + j]);
          gc[s] = std::tanh(zr[kCellGate * f + j]);
          go[s] = stable_sigmoid(zr[kOutputGate * f + j]);
          c[s] = (c_prev ? gf[s] * c_prev[s] : T(0)) + gi[s] * gc[s];
          h[s] = go[s] * std::tanh(c[s]);
        }
      }
    }
  }

  BasicTensor<T> result({n_batch, steps, height, width, f}, std::move(out));
  bool track = autograd::tracking<T>({&x});
  for (std::size_t gate = 0; gate < 4 && !track; ++gate)
    track = autograd::tracking<T>(
        {&p.input_kernels[gate], &p.recurrent_kernels[gate], &p.biases[gate]});
  if (!track) return result;

  std::array<std::shared_ptr<TensorImpl<T>>, 4> wxi, whi, bi;
  for (std::size_t gate = 0; gate < 4; ++gate) {
    wxi[gate] = p.input_kernels[gate].impl();
    whi[gate] = p.recurrent_kernels[gate].impl();
    bi[gate] = p.biases[gate].impl();
  }
  autograd::record(result, [=, xi = x.impl(), hi = result.impl(), wx_all = std::move(wx_all),
                            wh_all = std::move(wh_all), gates = std::move(gates),
                            cells = std::move(cells)](std::span<const T> grad) {
    auto dx = autograd::grad_sink(*xi);
    std::vector<T> dwx(kx * f4, T(0)), dwh(khh * f4, T(0)), db(f4, T(0));
    std::vector<T> colx(hw * kx), colh(hw * khh), dz(hw * f4), dcol(hw * std::max(kx, khh));
    std::vector<T> dh_next(state), dc_next(state);
    const T* hd = hi->data.data();

    for (std::size_t n = 0; n < n_batch; ++n) {
      std::fill(dh_next.begin(), dh_next.end(), T(0));
      std::fill(dc_next.begin(), dc_next.end(), T(0));
      for (std::size_t t = steps; t-- > 0;) {
        const std::size_t nt = n * steps + t;
        const T* gi = gates.data() + nt * 4 * state;
        const T* gf = gi + state;
        const T* gc = gf + state;
        const T* go = gc + state;
        const T* c = cells.data() + nt * state;
        const T* c_prev = t > 0 ? cells.data() + (nt - 1) * state : nullptr;
        const T* gy = grad.data() + nt * state;
        for (std::size_t r = 0; r < hw; ++r) {
          T* dzr = dz.data() + r * f4;
          for (std::size_t j = 0; j < f; ++j) {
            const std::size_t s = r * f + j;
            const T dh = gy[s] + dh_next[s];
            const T tc = std::tanh(c[s]);
            const T dc = dh * go[s] * (T(1) - tc * tc) + dc_next[s];
            dzr[kInputGate * f + j] = dc * gc[s] * gi[s] * (T(1) - gi[s]);
            dzr[kForgetGate * f + j] = c_prev ? dc * c_prev[s] * gf[s] * (T(1) - gf[s]) : T(0);
            dzr[kCellGate * f + j] = dc * gi[s] * (T(1) - gc[s] * gc[s]);
            dzr[kOutputGate * f + j] = dh * tc * go[s] * (T(1) - go[s]);
            dc_next[s] = dc * gf[s];
          }
        }
        for (std::size_t r = 0; r < hw; ++r)
          for (std::size_t j = 0; j < f4; ++j) db[j] += dz[r * f4 + j];

        lowering::im2col_frame(xi->data.data() + nt * x_step, gx, 0, colx.data());
        gemm(true, false, kx, f4, hw, T(1), colx.data(), kx, dz.data(), f4, T(1), dwx.data(), f4);
        if (!dx.empty()) {
          gemm(false, true, hw, kx, f4, T(1), dz.data(), f4, wx_all.data(), f4, T(0), dcol.data(), kx);
          lowering::col2im_frame_add(dcol.data(), gx, 0, dx.data() + nt * x_step);
        }
        std::fill(dh_next.begin(), dh_next.end(), T(0));
        if (t > 0) {
          lowering::im2col_frame(hd + (nt - 1) * state, gh, 0, colh.data());
          gemm(true, false, khh, f4, hw, T(1), colh.data(), khh, dz.data(), f4, T(1), dwh.data(), f4);
          gemm(false, true, hw, khh, f4, T(1), dz.data(), f4, wh_all.data(), f4, T(0), dcol.data(), khh);
          lowering::col2im_frame_add(dcol.data(), gh, 0, dh_next.data());
        }
      }
    }

    for (std::size_t gate = 0; gate < 4; ++gate) {
      if (auto d = autograd::grad_sink(*wxi[gate]); !d.empty())
        for (std::size_t r = 0; r < kx; ++r)
          for (std::size_t j = 0; j < f; ++j) d[r * f + j] += dwx[r * f4 + gate * f + j];
      if (auto d = autograd::grad_sink(*whi[gate]); !d.empty())
        for (std::size_t r = 0; r < khh; ++r)
          for (std::size_t j = 0; j < f; ++j) d[r * f + j] += dwh[r * f4 + gate * f + j];
      if (auto d = autograd::grad_sink(*bi[gate]); !d.empty())
        for (std::size_t j = 0; j < f; ++j) d[j] += db[gate * f + j];
    }
  });
  return result;
}

template <typename T>
BasicTensor<T> flatten(const BasicTensor<T>& x) {
  const std::size_t n = x.dim(0);
  return reshape(x, {n, x.numel() / n});
}

template <typename T>
BasicTensor<T> bce_loss(const BasicTensor<T>& pred, const BasicTensor<T>& target) {
  if (pred.shape() != target.shape() || pred.ndim() != 2 || pred.dim(1) != 1)
    throw ShapeMismatch("bce_loss: pred and target must both be (N,1), got " +
                        to_string(pred.shape()) + " and " + to_string(target.shape()));
  const std::size_t n = pred.numel();
  auto p = pred.data();
  auto y = target.data();
  for (std::size_t i = 0; i < n; ++i)
    if (y[i] != T(0) && y[i] != T(1))
      throw InvalidArgument("bce_loss: target must be 0 or 1, got " + std::to_string(y[i]));

  const T eps = static_cast<T>(kBceEpsilon);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const T pc = std::clamp(p[i], eps, T(1) - eps);
    total -= y[i] == T(1) ? std::log(static_cast<double>(pc)) : std::log(1.0 - static_cast<double>(pc));
  }
  BasicTensor<T> result({1}, {static_cast<T>(total / static_cast<double>(n))});
  if (autograd::tracking<T>({&pred})) {
    autograd::record(result, [n, eps, pi = pred.impl(), yi = target.impl()](std::span<const T> g) {
      auto gp = autograd::grad_sink(*pi);
      const T inv_n = T(1) / static_cast<T>(n);
      for (std::size_t i = 0; i < n; ++i) {
        const T pv = pi->data[i];
        if (pv < eps || pv > T(1) - eps) continue;  // clamped: zero slope
        const T yv = yi->data[i];
        gp[i] += g[0] * inv_n * (-(yv / pv) + (T(1) - yv) / (T(1) - pv));
      }
    });
  }
  return result;
}

#define GAITNET_INSTANTIATE(T)                                                            \
  template BasicTensor<T> conv3d(const BasicTensor<T>&, const Conv3dParams<T>&);          \
  template BasicTensor<T> maxpool3d(const BasicTensor<T>&, Pool3d);                       \
  template BasicTensor<T> relu(const BasicTensor<T>&);                                    \
  template BasicTensor<T> sigmoid(const BasicTensor<T>&);                                 \
  template BasicTensor<T> tanh(const BasicTensor<T>&);                                    \
  template BasicTensor<T> dense(const BasicTensor<T>&, const DenseParams<T>&);            \
  template BasicTensor<T> dropout(const BasicTensor<T>&, double, bool, Rng&);             \
  template BasicTensor<T> convlstm2d(const BasicTensor<T>&, const ConvLstmParams<T>&);    \
  template BasicTensor<T> flatten(const BasicTensor<T>&);                                 \
  template BasicTensor<T> bce_loss(const BasicTensor<T>&, const BasicTensor<T>&);

GAITNET_INSTANTIATE(float)
GAITNET_INSTANTIATE(double)

#undef GAITNET_INSTANTIATE

}  // namespace gaitnet
