#pragma once

// Minimal reverse-mode differentiation over the closed op set the networks
// need. Complex tensors are differentiated as pairs of reals: the gradient
// slot of a complex value holds (∂L/∂Re, ∂L/∂Im) interleaved exactly like the
// value, and the loss is always a real scalar.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <unordered_set>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dosnet/error.hpp"
#include "dosnet/fft.hpp"
#include "dosnet/pde_core.hpp"

namespace dosnet::ad {

using cplx = std::complex<double>;

enum class DType { Real, Complex };

inline std::string to_string(DType d) { return d == DType::Real ? "real" : "complex"; }

/// Dense row-major tensor of rank ≤ 4. Complex entries are stored as
/// interleaved (re, im) doubles.
class Tensor {
 public:
  Tensor() = default;

  Tensor(std::vector<std::size_t> shape, DType dtype) : shape_(std::move(shape)), dtype_(dtype) {
    detail::require(shape_.size() <= 4, "tensor rank must be <= 4");
    data_.assign(scalar_count(), 0.0);
  }

  static Tensor scalar(double v) {
    Tensor t({1}, DType::Real);
    t.data_[0] = v;
    return t;
  }

  static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape_, other.dtype_); }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  DType dtype() const { return dtype_; }
  bool is_complex() const { return dtype_ == DType::Complex; }
  bool empty() const { return data_.empty(); }

  std::size_t numel() const {
    return std::accumulate(shape_.begin(), shape_.end(), std::size_t{1}, std::multiplies<>());
  }
  std::size_t scalar_count() const { return numel() * (is_complex() ? 2 : 1); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  std::span<cplx> cdata() {
    detail::require(is_complex(), "complex view of a real tensor");
    return {reinterpret_cast<cplx*>(data_.data()), numel()};
  }
  std::span<const cplx> cdata() const {
    detail::require(is_complex(), "complex view of a real tensor");
    return {reinterpret_cast<const cplx*>(data_.data()), numel()};
  }

  template <class T>
  std::span<T> view() {
    if constexpr (std::is_same_v<T, cplx>)
      return cdata();
    else
      return data();
  }
  template <class T>
  std::span<const T> view() const {
    if constexpr (std::is_same_v<T, cplx>)
      return cdata();
    else
      return data();
  }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  bool same_layout(const Tensor& o) const { return shape_ == o.shape_ && dtype_ == o.dtype_; }

 private:
  std::vector<std::size_t> shape_;
  DType dtype_ = DType::Real;
  std::vector<double> data_;
};

struct Node;
using Var = std::shared_ptr<Node>;

struct Node {
  Tensor value;
  Tensor grad;
  std::string op;
  std::vector<Var> parents;
  std::function<void(Node&)> backward_fn;
  bool requires_grad = false;

  Tensor& grad_buffer() {
    if (grad.empty() && value.scalar_count() > 0) grad = Tensor::zeros_like(value);
    return grad;
  }
  void zero_grad() {
    if (!grad.empty()) grad.fill(0.0);
  }
};

inline Var constant(Tensor value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->op = "constant";
  return n;
}

inline Var variable(Tensor value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->op = "leaf";
  n->requires_grad = true;
  return n;
}

namespace detail {

using dosnet::detail::require;
using dosnet::detail::require_dims;

inline Var make_node(Tensor value, std::string op, std::vector<Var> parents) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->op = std::move(op);
  for (const auto& p : parents) n->requires_grad = n->requires_grad || p->requires_grad;
  n->parents = std::move(parents);
  return n;
}

template <class T>
inline T conj_if(T v) {
  if constexpr (std::is_same_v<T, cplx>)
    return std::conj(v);
  else
    return v;
}

inline std::size_t wrap(std::ptrdiff_t i, std::size_t n) {
  const auto m = static_cast<std::ptrdiff_t>(n);
  return static_cast<std::size_t>(((i % m) + m) % m);
}

}  // namespace detail

/// Runs reverse accumulation from a real scalar loss. Gradients accumulate
/// into every node that requires them; leaves keep theirs for the optimizer.
inline void backward(const Var& loss) {
  if (loss->value.numel() != 1 || loss->value.is_complex())
    throw ArgumentError("backward needs a real scalar loss");
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{loss.get(), 0}};
  seen.insert(loss.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  loss->grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
  }
}

// --- elementwise helpers ------------------------------------------------------

inline Var add(const Var& a, const Var& b) {
  detail::require_dims(a->value.same_layout(b->value), "add: layout mismatch");
  Tensor out = a->value;
  auto o = out.data();
  auto bv = b->value.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += bv[i];
  auto n = detail::make_node(std::move(out), "add", {a, b});
  n->backward_fn = [](Node& self) {
    for (auto& p : self.parents) {
      if (!p->requires_grad) continue;
      auto g = p->grad_buffer().data();
      auto s = self.grad.data();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += s[i];
    }
  };
  return n;
}

inline Var scale(const Var& a, double c) {
  Tensor out = a->value;
  for (auto& v : out.data()) v *= c;
  auto n = detail::make_node(std::move(out), "scale", {a});
  n->backward_fn = [c](Node& self) {
    auto& p = self.parents[0];
    if (!p->requires_grad) return;
    auto g = p->grad_buffer().data();
    auto s = self.grad.data();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += c * s[i];
  };
  return n;
}

/// Elementwise product; complex operands use complex multiplication.
inline Var mul(const Var& a, const Var& b) {
  detail::require_dims(a->value.same_layout(b->value), "mul: layout mismatch");
  Tensor out = Tensor::zeros_like(a->value);
  if (out.is_complex()) {
    auto o = out.cdata();
    auto av = a->value.cdata();
    auto bv = b->value.cdata();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = av[i] * bv[i];
  } else {
    auto o = out.data();
    auto av = a->value.data();
    auto bv = b->value.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = av[i] * bv[i];
  }
  auto n = detail::make_node(std::move(out), "mul", {a, b});
  n->backward_fn = [](Node& self) {
    for (int k = 0; k < 2; ++k) {
      auto& p = self.parents[k];
      auto& other = self.parents[1 - k]->value;
      if (!p->requires_grad) continue;
      if (self.value.is_complex()) {
        auto g = p->grad_buffer().cdata();
        auto s = self.grad.cdata();
        auto ov = other.cdata();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += std::conj(ov[i]) * s[i];
      } else {
        auto g = p->grad_buffer().data();
        auto s = self.grad.data();
        auto ov = other.data();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += ov[i] * s[i];
      }
    }
  };
  return n;
}

/// Sum of all real scalars (real and imaginary parts both count).
inline Var sum(const Var& a) {
  double s = 0.0;
  for (double v : a->value.data()) s += v;
  auto n = detail::make_node(Tensor::scalar(s), "sum", {a});
  n->backward_fn = [](Node& self) {
    auto& p = self.parents[0];
    if (!p->requires_grad) return;
    const double g0 = self.grad[0];
    for (auto& g : p->grad_buffer().data()) g += g0;
  };
  return n;
}

/// Half-open range along the last axis used to restrict a loss.
struct Window {
  std::size_t lo = 0;
  std::size_t hi = 0;
};

/// Mean of (pred - target)² over every real scalar; complex tensors count
/// real and imaginary parts separately.
inline Var mse(const Var& pred, const Tensor& target, std::optional<Window> window = std::nullopt) {
  detail::require_dims(pred->value.same_layout(target), "mse: prediction/target layout mismatch");
  const auto& shape = pred->value.shape();
  const std::size_t last = shape.empty() ? 1 : shape.back();
  const std::size_t width = pred->value.is_complex() ? 2 : 1;
  std::size_t lo = 0, hi = last;
  if (window) {
    detail::require(window->lo < window->hi && window->hi <= last, "mse: bad window");
    lo = window->lo;
    hi = window->hi;
  }
  const std::size_t rows = pred->value.numel() / last;
  const std::size_t count = rows * (hi - lo) * width;
  auto pv = pred->value.data();
  auto tv = target.data();
  double acc = 0.0;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t k = (r * last + lo) * width; k < (r * last + hi) * width; ++k) {
      const double d = pv[k] - tv[k];
      acc += d * d;
    }
  auto n = detail::make_node(Tensor::scalar(acc / static_cast<double>(count)), "mse", {pred});
  n->backward_fn = [target, rows, last, lo, hi, width, count](Node& self) {
    auto& p = self.parents[0];
    if (!p->requires_grad) return;
    auto g = p->grad_buffer().data();
    auto pv = p->value.data();
    auto tv = target.data();
    const double c = 2.0 * self.grad[0] / static_cast<double>(count);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t k = (r * last + lo) * width; k < (r * last + hi) * width; ++k)
        g[k] += c * (pv[k] - tv[k]);
  };
  return n;
}

// --- circular convolution -------------------------------------------------------

enum class ConvAlgo { Auto, Direct, Spectral };

namespace detail {

struct ConvGeometry {
  std::size_t batch, in_ch, out_ch, ktaps, center;
  std::vector<std::size_t> spatial;
  std::size_t points;  // product of spatial dims
  std::size_t kernel_numel;
};

inline ConvGeometry conv_geometry(const Tensor& x, const Tensor& w) {
  require_dims(x.rank() == 3 || x.rank() == 4, "conv: input must be [B, C, n] or [B, C, h, w]");
  require_dims(w.rank() == x.rank(), "conv: kernel rank must match input rank");
  require_dims(x.dtype() == w.dtype(), "conv: input and kernel dtype differ");
  ConvGeometry g{};
  g.batch = x.dim(0);
  g.in_ch = x.dim(1);
  g.out_ch = w.dim(0);
  require_dims(w.dim(1) == g.in_ch, "conv: channel mismatch between input and kernel");
  g.ktaps = w.dim(2);
  if (g.ktaps % 2 == 0) throw ArgumentError("conv: kernel size must be odd");
  if (x.rank() == 4) require_dims(w.dim(3) == g.ktaps, "conv: 2D kernels must be square");
  g.center = (g.ktaps - 1) / 2;
  g.spatial.assign(x.shape().begin() + 2, x.shape().end());
  g.points = 1;
  for (auto d : g.spatial) {
    require_dims(d >= g.ktaps, "conv: spatial size smaller than kernel");
    g.points *= d;
  }
  g.kernel_numel = x.rank() == 3 ? g.ktaps : g.ktaps * g.ktaps;
  return g;
}

// acc[x] += wv * src[(x + s) mod n] over one row.
template <class T>
inline void shifted_axpy(T* acc, const T* src, T wv, std::size_t n, std::size_t sh) {
  const std::size_t split = n - sh;
  for (std::size_t x = 0; x < split; ++x) acc[x] += wv * src[x + sh];
  for (std::size_t x = split; x < n; ++x) acc[x] += wv * src[x - split];
}

// acc[(x + s) mod n] += wv * src[x].
template <class T>
inline void shifted_scatter(T* acc, const T* src, T wv, std::size_t n, std::size_t sh) {
  const std::size_t split = n - sh;
  for (std::size_t x = 0; x < split; ++x) acc[x + sh] += wv * src[x];
  for (std::size_t x = split; x < n; ++x) acc[x - split] += wv * src[x];
}

// Σ_x conj(src[(x + s) mod n]) * g[x].
template <class T>
inline T shifted_dot(const T* src, const T* g, std::size_t n, std::size_t sh) {
  T acc{};
  const std::size_t split = n - sh;
  for (std::size_t x = 0; x < split; ++x) acc += conj_if(src[x + sh]) * g[x];
  for (std::size_t x = split; x < n; ++x) acc += conj_if(src[x - split]) * g[x];
  return acc;
}

template <class T>
void conv_direct_forward(const ConvGeometry& g, std::span<const T> x, std::span<const T> w,
                         std::span<T> y) {
  const std::size_t P = g.points, K = g.ktaps;
  for (std::size_t b = 0; b < g.batch; ++b)
    for (std::size_t o = 0; o < g.out_ch; ++o) {
      T* yrow = y.data() + (b * g.out_ch + o) * P;
      for (std::size_t i = 0; i < g.in_ch; ++i) {
        const T* xrow = x.data() + (b * g.in_ch + i) * P;
        const T* wk = w.data() + (o * g.in_ch + i) * g.kernel_numel;
        if (g.spatial.size() == 1) {
          const std::size_t n = g.spatial[0];
          for (std::size_t j = 0; j < K; ++j)
            shifted_axpy(yrow, xrow, wk[j], n, wrap(static_cast<std::ptrdiff_t>(j) - static_cast<std::ptrdiff_t>(g.center), n));
        } else {
          const std::size_t H = g.spatial[0], W = g.spatial[1];
          for (std::size_t j1 = 0; j1 < K; ++j1) {
            const std::ptrdiff_t s1 = static_cast<std::ptrdiff_t>(j1) - static_cast<std::ptrdiff_t>(g.center);
            for (std::size_t j2 = 0; j2 < K; ++j2) {
              const T wv = wk[j1 * K + j2];
              const std::size_t sh2 = wrap(static_cast<std::ptrdiff_t>(j2) - static_cast<std::ptrdiff_t>(g.center), W);
              for (std::size_t p = 0; p < H; ++p)
                shifted_axpy(yrow + p * W, xrow + wrap(static_cast<std::ptrdiff_t>(p) + s1, H) * W, wv, W, sh2);
            }
          }
        }
      }
    }
}

template <class T>
void conv_direct_backward(const ConvGeometry& g, std::span<const T> x, std::span<const T> w,
                          std::span<const T> gy, std::span<T> gx, std::span<T> gw) {
  const std::size_t P = g.points, K = g.ktaps;
  for (std::size_t b = 0; b < g.batch; ++b)
    for (std::size_t o = 0; o < g.out_ch; ++o) {
      const T* grow = gy.data() + (b * g.out_ch + o) * P;
      for (std::size_t i = 0; i < g.in_ch; ++i) {
        const T* xrow = x.data() + (b * g.in_ch + i) * P;
        T* gxrow = gx.empty() ? nullptr : gx.data() + (b * g.in_ch + i) * P;
        const T* wk = w.data() + (o * g.in_ch + i) * g.kernel_numel;
        T* gwk = gw.empty() ? nullptr : gw.data() + (o * g.in_ch + i) * g.kernel_numel;
        if (g.spatial.size() == 1) {
          const std::size_t n = g.spatial[0];
          for (std::size_t j = 0; j < K; ++j) {
            const std::size_t sh = wrap(static_cast<std::ptrdiff_t>(j) - static_cast<std::ptrdiff_t>(g.center), n);
            if (gxrow) shifted_scatter(gxrow, grow, conj_if(wk[j]), n, sh);
            if (gwk) gwk[j] += shifted_dot(xrow, grow, n, sh);
          }
        } else {
          const std::size_t H = g.spatial[0], W = g.spatial[1];
          for (std::size_t j1 = 0; j1 < K; ++j1) {
            const std::ptrdiff_t s1 = static_cast<std::ptrdiff_t>(j1) - static_cast<std::ptrdiff_t>(g.center);
            for (std::size_t j2 = 0; j2 < K; ++j2) {
              const std::size_t sh2 = wrap(static_cast<std::ptrdiff_t>(j2) - static_cast<std::ptrdiff_t>(g.center), W);
              const T wc = conj_if(wk[j1 * K + j2]);
              T acc{};
              for (std::size_t p = 0; p < H; ++p) {
                const std::size_t src = wrap(static_cast<std::ptrdiff_t>(p) + s1, H) * W;
                if (gxrow) shifted_scatter(gxrow + src, grow + p * W, wc, W, sh2);
                if (gwk) acc += shifted_dot(xrow + src, grow + p * W, W, sh2);
              }
              if (gwk) gwk[j1 * K + j2] += acc;
            }
          }
        }
      }
    }
}

// Kernel tap j sits at (center - j) mod n so that the spectral product is the
// same cross-correlation the direct path computes.
template <class T>
std::vector<cplx> embedded_kernel_spectrum(const ConvGeometry& g, const T* wk) {
  std::vector<cplx> h(g.points, cplx{});
  const auto c = static_cast<std::ptrdiff_t>(g.center);
  if (g.spatial.size() == 1) {
    for (std::size_t j = 0; j < g.ktaps; ++j)
      h[wrap(c - static_cast<std::ptrdiff_t>(j), g.spatial[0])] = wk[j];
  } else {
    const std::size_t H = g.spatial[0], W = g.spatial[1];
    for (std::size_t j1 = 0; j1 < g.ktaps; ++j1)
      for (std::size_t j2 = 0; j2 < g.ktaps; ++j2)
        h[wrap(c - static_cast<std::ptrdiff_t>(j1), H) * W + wrap(c - static_cast<std::ptrdiff_t>(j2), W)] =
            wk[j1 * g.ktaps + j2];
  }
  fft::transform(h, std::span<const std::size_t>(g.spatial), fft::Direction::Forward);
  return h;
}

template <class T>
std::vector<cplx> row_spectrum(const ConvGeometry& g, const T* row) {
  std::vector<cplx> v(row, row + g.points);
  fft::transform(v, std::span<const std::size_t>(g.spatial), fft::Direction::Forward);
  return v;
}

template <class T>
void store_inverse(const ConvGeometry& g, std::vector<cplx>& spec, T* dst, bool accumulate) {
  fft::transform(spec, std::span<const std::size_t>(g.spatial), fft::Direction::Backward);
  const double s = 1.0 / static_cast<double>(g.points);
  for (std::size_t p = 0; p < g.points; ++p) {
    T v;
    if constexpr (std::is_same_v<T, cplx>)
      v = spec[p] * s;
    else
      v = spec[p].real() * s;
    if (accumulate)
      dst[p] += v;
    else
      dst[p] = v;
  }
}

template <class T>
void conv_spectral_forward(const ConvGeometry& g, std::span<const T> x, std::span<const T> w,
                           std::span<T> y) {
  std::vector<std::vector<cplx>> H;
  H.reserve(g.out_ch * g.in_ch);
  for (std::size_t k = 0; k < g.out_ch * g.in_ch; ++k)
    H.push_back(embedded_kernel_spectrum(g, w.data() + k * g.kernel_numel));
  std::vector<std::vector<cplx>> X(g.in_ch);
  std::vector<cplx> acc(g.points);
  for (std::size_t b = 0; b < g.batch; ++b) {
    for (std::size_t i = 0; i < g.in_ch; ++i) X[i] = row_spectrum(g, x.data() + (b * g.in_ch + i) * g.points);
    for (std::size_t o = 0; o < g.out_ch; ++o) {
      std::fill(acc.begin(), acc.end(), cplx{});
      for (std::size_t i = 0; i < g.in_ch; ++i) {
        const auto& h = H[o * g.in_ch + i];
        const auto& xs = X[i];
        for (std::size_t p = 0; p < g.points; ++p) acc[p] += xs[p] * h[p];
      }
      store_inverse(g, acc, y.data() + (b * g.out_ch + o) * g.points, false);
    }
  }
}

template <class T>
void conv_spectral_backward(const ConvGeometry& g, std::span<const T> x, std::span<const T> w,
                            std::span<const T> gy, std::span<T> gx, std::span<T> gw) {
  std::vector<std::vector<cplx>> H;
  if (!gx.empty()) {
    H.reserve(g.out_ch * g.in_ch);
    for (std::size_t k = 0; k < g.out_ch * g.in_ch; ++k)
      H.push_back(embedded_kernel_spectrum(g, w.data() + k * g.kernel_numel));
  }
  std::vector<std::vector<cplx>> GH;
  if (!gw.empty()) GH.assign(g.out_ch * g.in_ch, std::vector<cplx>(g.points, cplx{}));
  std::vector<std::vector<cplx>> GY(g.out_ch);
  std::vector<cplx> acc(g.points);
  for (std::size_t b = 0; b < g.batch; ++b) {
    for (std::size_t o = 0; o < g.out_ch; ++o) GY[o] = row_spectrum(g, gy.data() + (b * g.out_ch + o) * g.points);
    for (std::size_t i = 0; i < g.in_ch; ++i) {
      if (!gx.empty()) {
        std::fill(acc.begin(), acc.end(), cplx{});
        for (std::size_t o = 0; o < g.out_ch; ++o) {
          const auto& h = H[o * g.in_ch + i];
          const auto& gs = GY[o];
          for (std::size_t p = 0; p < g.points; ++p) acc[p] += std::conj(h[p]) * gs[p];
        }
        store_inverse(g, acc, gx.data() + (b * g.in_ch + i) * g.points, true);
      }
      if (!gw.empty()) {
        const auto xs = row_spectrum(g, x.data() + (b * g.in_ch + i) * g.points);
        for (std::size_t o = 0; o < g.out_ch; ++o) {
          auto& gh = GH[o * g.in_ch + i];
          const auto& gs = GY[o];
          for (std::size_t p = 0; p < g.points; ++p) gh[p] += std::conj(xs[p]) * gs[p];
        }
      }
    }
  }
  if (gw.empty()) return;
  std::vector<T> tmp(g.points);
  const auto c = static_cast<std::ptrdiff_t>(g.center);
  for (std::size_t k = 0; k < g.out_ch * g.in_ch; ++k) {
    store_inverse(g, GH[k], tmp.data(), false);
    T* gwk = gw.data() + k * g.kernel_numel;
    if (g.spatial.size() == 1) {
      for (std::size_t j = 0; j < g.ktaps; ++j) gwk[j] += tmp[wrap(c - static_cast<std::ptrdiff_t>(j), g.spatial[0])];
    } else {
      const std::size_t H0 = g.spatial[0], W0 = g.spatial[1];
      for (std::size_t j1 = 0; j1 < g.ktaps; ++j1)
        for (std::size_t j2 = 0; j2 < g.ktaps; ++j2)
          gwk[j1 * g.ktaps + j2] +=
              tmp[wrap(c - static_cast<std::ptrdiff_t>(j1), H0) * W0 + wrap(c - static_cast<std::ptrdiff_t>(j2), W0)];
    }
  }
}

inline bool use_spectral(const ConvGeometry& g, ConvAlgo algo) {
  if (algo == ConvAlgo::Direct) return false;
  if (algo == ConvAlgo::Spectral) return true;
  return g.spatial.size() == 2 ? g.kernel_numel >= 25 : g.kernel_numel >= 64;
}

template <class T>
void conv_forward_typed(const ConvGeometry& g, const Tensor& x, const Tensor& w, Tensor& y, ConvAlgo algo) {
  if (use_spectral(g, algo))
    conv_spectral_forward<T>(g, x.view<T>(), w.view<T>(), y.view<T>());
  else
    conv_direct_forward<T>(g, x.view<T>(), w.view<T>(), y.view<T>());
}

template <class T>
void conv_backward_typed(const ConvGeometry& g, Node& self, ConvAlgo algo) {
  auto& xn = self.parents[0];
  auto& wn = self.parents[1];
  std::span<T> gx = xn->requires_grad ? xn->grad_buffer().template view<T>() : std::span<T>{};
  std::span<T> gw = wn->requires_grad ? wn->grad_buffer().template view<T>() : std::span<T>{};
  const Tensor& gyt = self.grad;
  if (use_spectral(g, algo))
    conv_spectral_backward<T>(g, xn->value.view<T>(), wn->value.view<T>(), gyt.view<T>(), gx, gw);
  else
    conv_direct_backward<T>(g, xn->value.view<T>(), wn->value.view<T>(), gyt.view<T>(), gx, gw);
}

}  // namespace detail

/// Multi-channel circular cross-correlation with periodic padding (the
/// convention of a "circular"-padded conv layer). Kernel layout is
/// [out, in, k] for 1D inputs [B, in, n] and [out, in, k, k] for 2D inputs.
/// Spatial size is preserved; no bias.
inline Var circ_conv(const Var& input, const Var& kernel, ConvAlgo algo = ConvAlgo::Auto) {
  const auto g = detail::conv_geometry(input->value, kernel->value);
  std::vector<std::size_t> out_shape = input->value.shape();
  out_shape[1] = g.out_ch;
  Tensor y(out_shape, input->value.dtype());
  if (y.is_complex())
    detail::conv_forward_typed<cplx>(g, input->value, kernel->value, y, algo);
  else
    detail::conv_forward_typed<double>(g, input->value, kernel->value, y, algo);
  auto n = detail::make_node(std::move(y), "circ_conv", {input, kernel});
  n->backward_fn = [g, algo](Node& self) {
    if (self.value.is_complex())
      detail::conv_backward_typed<cplx>(g, self, algo);
    else
      detail::conv_backward_typed<double>(g, self, algo);
  };
  return n;
}

// --- activations ---------------------------------------------------------------

enum class ActivationKind { Identity, AllenCahn, Nlse, Relu };

inline std::string to_string(ActivationKind k) {
  switch (k) {
    case ActivationKind::Identity: return "identity";
    case ActivationKind::AllenCahn: return "ac";
    case ActivationKind::Nlse: return "nlse";
    case ActivationKind::Relu: return "relu";
  }
  return "?";
}

inline ActivationKind parse_activation(const std::string& s) {
  if (s == "identity" || s == "none") return ActivationKind::Identity;
  if (s == "ac" || s == "osb" || s == "allen_cahn") return ActivationKind::AllenCahn;
  if (s == "nlse") return ActivationKind::Nlse;
  if (s == "relu") return ActivationKind::Relu;
  throw ArgumentError("unknown activation: " + s);
}

/// Sub-flow parameters of a PDE-derived activation. For AllenCahn `tau` is
/// the reaction time; for Nlse it is the distance ξ and the rotation is
/// exp(∓iγξ|u|²).
struct ActivationSpec {
  ActivationKind kind = ActivationKind::Identity;
  double tau = 1.0;
  double gamma = 1.0;
  pde::Direction direction = pde::Direction::Backward;
  /// Lower bound on the Allen-Cahn denominator; keeps the learnable-τ regime
  /// away from 0/0 without moving the fixed points ±1.
  double denom_floor = 1e-8;
};

/// Elementwise PDE-derived (or ReLU) activation. When `tau` is given it
/// overrides spec.tau and receives a gradient.
inline Var activation(const Var& x, const ActivationSpec& spec, const Var& tau = nullptr) {
  const bool cplx_in = x->value.is_complex();
  switch (spec.kind) {
    case ActivationKind::AllenCahn:
    case ActivationKind::Relu:
      if (cplx_in) throw ArgumentError("activation " + to_string(spec.kind) + " needs real input");
      break;
    case ActivationKind::Nlse:
      if (!cplx_in) throw ArgumentError("NLSE activation needs complex input");
      break;
    case ActivationKind::Identity: break;
  }
  if (tau) detail::require_dims(tau->value.numel() == 1 && !tau->value.is_complex(), "tau must be a real scalar");
  const double t = tau ? tau->value[0] : spec.tau;
  Tensor out = Tensor::zeros_like(x->value);
  switch (spec.kind) {
    case ActivationKind::Identity: out = x->value; break;
    case ActivationKind::AllenCahn: {
      auto o = out.data();
      auto in = x->value.data();
      for (std::size_t i = 0; i < o.size(); ++i) o[i] = pde::ac_flow(in[i], t, spec.denom_floor);
      break;
    }
    case ActivationKind::Relu: {
      auto o = out.data();
      auto in = x->value.data();
      for (std::size_t i = 0; i < o.size(); ++i) o[i] = in[i] > 0.0 ? in[i] : 0.0;
      break;
    }
    case ActivationKind::Nlse: {
      const double c = pde::nlse_phase_coeff(t, spec.gamma, spec.direction);
      auto o = out.cdata();
      auto in = x->value.cdata();
      for (std::size_t i = 0; i < o.size(); ++i) o[i] = pde::nlse_rotation(in[i], c);
      break;
    }
  }
  std::vector<Var> parents{x};
  if (tau) parents.push_back(tau);
  auto n = detail::make_node(std::move(out), "act_" + to_string(spec.kind), std::move(parents));
  n->backward_fn = [spec, t](Node& self) {
    auto& xn = self.parents[0];
    Node* tn = self.parents.size() > 1 && self.parents[1]->requires_grad ? self.parents[1].get() : nullptr;
    double gtau = 0.0;
    switch (spec.kind) {
      case ActivationKind::Identity:
        if (xn->requires_grad) {
          auto g = xn->grad_buffer().data();
          auto s = self.grad.data();
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += s[i];
        }
        break;
      case ActivationKind::Relu:
        if (xn->requires_grad) {
          auto g = xn->grad_buffer().data();
          auto s = self.grad.data();
          auto in = xn->value.data();
          for (std::size_t i = 0; i < g.size(); ++i)
            if (in[i] > 0.0) g[i] += s[i];
        }
        break;
      case ActivationKind::AllenCahn: {
        auto s = self.grad.data();
        auto in = xn->value.data();
        if (xn->requires_grad) {
          auto g = xn->grad_buffer().data();
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += s[i] * pde::ac_flow_du(in[i], t, spec.denom_floor);
        }
        if (tn)
          for (std::size_t i = 0; i < s.size(); ++i) gtau += s[i] * pde::ac_flow_dtau(in[i], t, spec.denom_floor);
        break;
      }
      case ActivationKind::Nlse: {
        const double c = pde::nlse_phase_coeff(t, spec.gamma, spec.direction);
        const double dc_dt = pde::nlse_phase_coeff(1.0, spec.gamma, spec.direction);
        auto s = self.grad.cdata();
        auto in = xn->value.cdata();
        auto out = self.value.cdata();
        const cplx i1{0.0, 1.0};
        std::span<cplx> g = xn->requires_grad ? xn->grad_buffer().cdata() : std::span<cplx>{};
        for (std::size_t i = 0; i < s.size(); ++i) {
          // out = u e^{iθ}, θ = c|u|²; L' = Re(conj(G) ∂out).
          const cplx G = s[i];
          const cplx e = std::polar(1.0, c * std::norm(in[i]));
          if (!g.empty()) {
            const double a = in[i].real(), b = in[i].imag();
            const cplx d_da = e + i1 * out[i] * (2.0 * c * a);
            const cplx d_db = i1 * e + i1 * out[i] * (2.0 * c * b);
            g[i] += cplx{(std::conj(G) * d_da).real(), (std::conj(G) * d_db).real()};
          }
          if (tn) gtau += (std::conj(G) * (i1 * out[i] * std::norm(in[i]) * dc_dt)).real();
        }
        break;
      }
    }
    if (tn) tn->grad_buffer()[0] += gtau;
  };
  return n;
}

// --- structural ops -------------------------------------------------------------

/// [B, C, ...] complex -> [B, 2C, ...] holding (u, conj u) per channel, so a
/// following complex conv acts as a widely-linear filter.
inline Var conj_augment(const Var& x) {
  detail::require(x->value.is_complex(), "conj_augment needs complex input");
  auto shape = x->value.shape();
  const std::size_t B = shape[0], C = shape[1];
  const std::size_t P = x->value.numel() / (B * C);
  shape[1] = 2 * C;
  Tensor out(shape, DType::Complex);
  auto o = out.cdata();
  auto in = x->value.cdata();
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t p = 0; p < P; ++p) {
        const cplx v = in[(b * C + c) * P + p];
        o[(b * 2 * C + c) * P + p] = v;
        o[(b * 2 * C + C + c) * P + p] = std::conj(v);
      }
  auto n = detail::make_node(std::move(out), "conj_augment", {x});
  n->backward_fn = [B, C, P](Node& self) {
    auto& xn = self.parents[0];
    if (!xn->requires_grad) return;
    auto g = xn->grad_buffer().cdata();
    auto s = self.grad.cdata();
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t c = 0; c < C; ++c)
        for (std::size_t p = 0; p < P; ++p)
          g[(b * C + c) * P + p] += s[(b * 2 * C + c) * P + p] + std::conj(s[(b * 2 * C + C + c) * P + p]);
  };
  return n;
}

namespace detail {

template <class T>
using ColMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor>>;
template <class T>
using RowMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

template <class T>
auto col_map(std::span<const T> v, std::size_t rows, std::size_t cols) {
  return Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor>>(
      v.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

template <class T>
auto row_map(std::span<const T> v, std::size_t n) {
  return Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      v.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
}

}  // namespace detail

/// y[b] = W x[b] for single-channel 1D states x: [B, 1, n], W: [n, n].
inline Var dense(const Var& x, const Var& W) {
  const auto& xs = x->value.shape();
  detail::require_dims(xs.size() == 3 && xs[1] == 1, "dense: input must be [B, 1, n]");
  const std::size_t B = xs[0], n = xs[2];
  detail::require_dims(W->value.rank() == 2 && W->value.dim(0) == n && W->value.dim(1) == n,
                       "dense: weight must be [n, n]");
  detail::require_dims(x->value.dtype() == W->value.dtype(), "dense: dtype mismatch");
  Tensor out = Tensor::zeros_like(x->value);
  // States are [B, n] row-major, i.e. n × B column-major matrices.
  auto run = [&]<class T>(T) {
    detail::ColMap<T> o(out.view<T>().data(), n, B);
    o.noalias() = detail::row_map<T>(W->value.view<T>(), n) * detail::col_map<T>(x->value.view<T>(), n, B);
  };
  if (out.is_complex())
    run(cplx{});
  else
    run(0.0);
  auto node = detail::make_node(std::move(out), "dense", {x, W});
  node->backward_fn = [B, n](Node& self) {
    auto& xn = self.parents[0];
    auto& wn = self.parents[1];
    auto go = [&]<class T>(T) {
      const auto s = detail::col_map<T>(self.grad.view<T>(), n, B);
      if (xn->requires_grad) {
        detail::ColMap<T> g(xn->grad_buffer().view<T>().data(), n, B);
        g.noalias() += detail::row_map<T>(wn->value.view<T>(), n).adjoint() * s;
      }
      if (wn->requires_grad) {
        detail::RowMap<T> g(wn->grad_buffer().view<T>().data(), n, n);
        g.noalias() += s * detail::col_map<T>(xn->value.view<T>(), n, B).adjoint();
      }
    };
    if (self.value.is_complex())
      go(cplx{});
    else
      go(0.0);
  };
  return node;
}

/// Flips each batch item of `cur` so it correlates non-negatively with
/// `prev`: cur · sign(mean(prev ⊙ cur)), with sign(0) taken as +1. The sign
/// is piecewise constant, so only `cur` receives gradient.
inline Var sign_align(const Var& prev, const Var& cur) {
  detail::require_dims(prev->value.same_layout(cur->value), "sign_align: shape mismatch");
  detail::require(!cur->value.is_complex(), "sign_align needs real tensors");
  const std::size_t B = cur->value.dim(0);
  const std::size_t P = cur->value.numel() / B;
  std::vector<double> signs(B, 1.0);
  Tensor out = cur->value;
  auto pv = prev->value.data();
  auto o = out.data();
  for (std::size_t b = 0; b < B; ++b) {
    double acc = 0.0;
    for (std::size_t p = 0; p < P; ++p) acc += pv[b * P + p] * o[b * P + p];
    signs[b] = acc < 0.0 ? -1.0 : 1.0;
    if (signs[b] < 0.0)
      for (std::size_t p = 0; p < P; ++p) o[b * P + p] = -o[b * P + p];
  }
  auto n = detail::make_node(std::move(out), "sign_align", {prev, cur});
  n->backward_fn = [signs, P](Node& self) {
    auto& cn = self.parents[1];
    if (!cn->requires_grad) return;
    auto g = cn->grad_buffer().data();
    auto s = self.grad.data();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += signs[i / P] * s[i];
  };
  return n;
}

// --- parameters -------------------------------------------------------------------

struct Param {
  std::string name;
  Var node;
  bool trainable = true;

  /// Real scalars held by this parameter (complex entries count twice).
  std::size_t scalar_count() const { return node->value.scalar_count(); }
};

inline Param make_param(std::string name, Tensor init, bool trainable = true) {
  Var v = trainable ? variable(std::move(init)) : constant(std::move(init));
  return {std::move(name), std::move(v), trainable};
}

inline void zero_grad(std::span<Param> params) {
  for (auto& p : params) p.node->zero_grad();
}

}  // namespace dosnet::ad
