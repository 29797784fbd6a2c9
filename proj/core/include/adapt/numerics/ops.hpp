// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "adapt/numerics/tensor.hpp"

// Differentiable tensor primitives. Each op computes its result eagerly and,
// when a tape is active and some input requires a gradient, records a
// closure that accumulates input gradients from the output gradient.

namespace adapt::nn {

namespace detail {

template <typename T>
bool recording(std::initializer_list<const Tensor<T>*> inputs) {
  if (Tape<T>::active() == nullptr) return false;
  for (const auto* t : inputs) {
    if (t->requires_grad()) return true;
  }
  return false;
}

template <typename T>
Tensor<T> make_output(Shape shape, std::vector<T> values, bool grad) {
  Tensor<T> out(std::move(shape), std::move(values), grad);
  if (grad) out.node().tape = Tape<T>::active();
  return out;
}

// fn receives the output gradient; it runs only if one reached the output.
template <typename T, typename F>
void on_backward(const Tensor<T>& out, F fn) {
  auto node = out.node_ptr();
  Tape<T>::active()->record([node, fn = std::move(fn)]() mutable {
    if (node->grad.empty()) return;
    fn(std::span<const T>(node->grad));
  });
}

struct AxisSplit {
  std::size_t outer;
  std::size_t extent;
  std::size_t inner;
};

inline AxisSplit split_at(const Shape& shape, std::size_t axis) {
  AxisSplit s{1, shape[axis], 1};
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

inline void check_axis(const Shape& shape, std::size_t axis, const char* op) {
  if (axis >= shape.size()) {
    throw DimensionError(std::string(op) + ": axis " + std::to_string(axis) +
                         " out of range for shape " + to_string(shape));
  }
}

// C[m,n] += A[m,k] * B[k,n]
template <typename T>
void gemm_nn(const T* __restrict a, const T* __restrict b, T* __restrict c, std::size_t m,
             std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    T* crow = c + i * n;
    const T* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = arow[p];
      const T* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C[k,n] += A[m,k]^T * B[m,n]
template <typename T>
void gemm_tn(const T* __restrict a, const T* __restrict b, T* __restrict c, std::size_t m,
             std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* arow = a + i * k;
    const T* brow = b + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = arow[p];
      T* crow = c + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename T>
void transpose_into(const T* src, T* dst, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) dst[c * rows + r] = src[r * cols + c];
}

template <typename T>
void check_finite(std::span<const T> values, const char* op) {
  for (T v : values) {
    if (!std::isfinite(v)) throw NumericError(std::string(op) + ": non-finite input");
  }
}

}  // namespace detail

/// Batched matrix product over the last two axes. Leading (batch) extents
/// must match exactly, or one operand may be a plain matrix shared by every
/// batch member.
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() < 2 || b.rank() < 2) {
    throw DimensionError("matmul needs rank >= 2 operands, got " + to_string(a.shape()) +
                         " and " + to_string(b.shape()));
  }
  const std::size_t m = a.dim(a.rank() - 2), k = a.dim(a.rank() - 1);
  const std::size_t n = b.dim(b.rank() - 1);
  const Shape batch_a(a.shape().begin(), a.shape().end() - 2);
  const Shape batch_b(b.shape().begin(), b.shape().end() - 2);
  const bool shared_a = batch_a.empty() && !batch_b.empty();
  const bool shared_b = batch_b.empty() && !batch_a.empty();
  if (b.dim(b.rank() - 2) != k || (!shared_a && !shared_b && batch_a != batch_b)) {
    throw DimensionError("matmul shape mismatch: " + to_string(a.shape()) + " x " +
                         to_string(b.shape()));
  }
  Shape shape = shared_a ? batch_b : batch_a;
  const std::size_t batches = element_count(shape);
  shape.push_back(m);
  shape.push_back(n);

  const std::size_t a_step = shared_a ? 0 : m * k;
  const std::size_t b_step = shared_b ? 0 : k * n;
  std::vector<T> out(batches * m * n, T{});
  const T* ad = a.data().data();
  const T* bd = b.data().data();
  for (std::size_t i = 0; i < batches; ++i) {
    detail::gemm_nn(ad + i * a_step, bd + i * b_step, out.data() + i * m * n, m, k, n);
  }

  const bool grad = detail::recording<T>({&a, &b});
  auto result = detail::make_output(std::move(shape), std::move(out), grad);
  if (grad) {
    detail::on_backward(result, [na = a.node_ptr(), nb = b.node_ptr(), batches, m, k, n,
                                 a_step, b_step](std::span<const T> dout) {
      const T* ad = na->values->data();
      const T* bd = nb->values->data();
      if (na->requires_grad) {
        auto ga = na->grad_slab(batches);
        std::vector<T> bt(k * n);
        for (std::size_t i = 0; i < batches; ++i) {
          detail::transpose_into(bd + i * b_step, bt.data(), k, n);
          detail::gemm_nn(dout.data() + i * m * n, bt.data(), ga.data() + i * a_step, m, n, k);
        }
      }
      if (nb->requires_grad) {
        auto gb = nb->grad_slab(batches);
        for (std::size_t i = 0; i < batches; ++i) {
          detail::gemm_tn(ad + i * a_step, dout.data() + i * m * n, gb.data() + i * b_step, m, k,
                          n);
        }
      }
    });
  }
  return result;
}

/// Elementwise a + b where b's shape equals a's shape or a trailing suffix
/// of it (bias broadcast over leading axes).
template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  const auto& sa = a.shape();
  const auto& sb = b.shape();
  if (sb.size() > sa.size() || !std::equal(sb.rbegin(), sb.rend(), sa.rbegin())) {
    throw DimensionError("add shape mismatch: " + to_string(sa) + " + " + to_string(sb));
  }
  const std::size_t inner = b.numel();
  const std::size_t outer = inner == 0 ? 0 : a.numel() / inner;
  std::vector<T> out(a.data().begin(), a.data().end());
  const auto bd = b.data();
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t i = 0; i < inner; ++i) out[o * inner + i] += bd[i];

  const bool grad = detail::recording<T>({&a, &b});
  auto result = detail::make_output(Shape(sa), std::move(out), grad);
  if (grad) {
    detail::on_backward(result, [na = a.node_ptr(), nb = b.node_ptr(), outer,
                                 inner](std::span<const T> dout) {
      if (na->requires_grad) {
        auto ga = na->grad_slab();
        for (std::size_t i = 0; i < dout.size(); ++i) ga[i] += dout[i];
      }
      if (nb->requires_grad) {
        auto gb = nb->grad_slab(outer);
        for (std::size_t o = 0; o < outer; ++o)
          for (std::size_t i = 0; i < inner; ++i) gb[i] += dout[o * inner + i];
      }
    });
  }
  return result;
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError("sub shape mismatch: " + to_string(a.shape()) + " - " +
                         to_string(b.shape()));
  }
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
  const bool grad = detail::recording<T>({&a, &b});
  auto result = detail::make_output(Shape(a.shape()), std::move(out), grad);
  if (grad) {
    detail::on_backward(result, [na = a.node_ptr(), nb = b.node_ptr()](std::span<const T> dout) {
      if (na->requires_grad) {
        auto g = na->grad_slab();
        for (std::size_t i = 0; i < dout.size(); ++i) g[i] += dout[i];
      }
      if (nb->requires_grad) {
        auto g = nb->grad_slab();
        for (std::size_t i = 0; i < dout.size(); ++i) g[i] -= dout[i];
      }
    });
  }
  return result;
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError("mul shape mismatch: " + to_string(a.shape()) + " * " +
                         to_string(b.shape()));
  }
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  const bool grad = detail::recording<T>({&a, &b});
  auto result = detail::make_output(Shape(a.shape()), std::move(out), grad);
  if (grad) {
    detail::on_backward(result, [na = a.node_ptr(), nb = b.node_ptr()](std::span<const T> dout) {
      const auto& av = *na->values;
      const auto& bv = *nb->values;
      if (na->requires_grad) {
        auto g = na->grad_slab();
        for (std::size_t i = 0; i < dout.size(); ++i) g[i] += dout[i] * bv[i];
      }
      if (nb->requires_grad) {
        auto g = nb->grad_slab();
        for (std::size_t i = 0; i < dout.size(); ++i) g[i] += dout[i] * av[i];
      }
    });
  }
  return result;
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  std::vector<T> out(a.data().begin(), a.data().end());
  for (auto& v : out) v *= factor;
  const bool grad = detail::recording<T>({&a});
  auto result = detail::make_output(Shape(a.shape()), std::move(out), grad);
  if (grad) {
    detail::on_backward(result, [na = a.node_ptr(), factor](std::span<const T> dout) {
      auto g = na->grad_slab();
      for (std::size_t i = 0; i < dout.size(); ++i) g[i] += dout[i] * factor;
    });
  }
  return result;
}

/// Sum of all elements as a rank-0 tensor.
template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
  T total{};
  for (T v : a.data()) total += v;
  const bool grad = detail::recording<T>({&a});
  auto result = detail::make_output(Shape{}, std::vector<T>{total}, grad);
  if (grad) {
    detail::on_backward(result, [na = a.node_ptr()](std::span<const T> dout) {
      auto g = na->grad_slab();
      for (auto& v : g) v += dout[0];
    });
  }
  return result;
}

template <typename T>
Tensor<T> mean(const Tensor<T>& a) {
  return scale(sum(a), T{1} / static_cast<T>(a.numel()));
}

/// Sum along one axis, accumulating members in index order.
template <typename T>
Tensor<T> sum_axis(const Tensor<T>& a, std::size_t axis, bool keepdim = false) {
  detail::check_axis(a.shape(), axis, "sum_axis");
  const auto s = detail::split_at(a.shape(), axis);
  std::vector<T> out(s.outer * s.inner, T{});
  const auto ad = a.data();
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t e = 0; e < s.extent; ++e)
      for (std::size_t i = 0; i < s.inner; ++i)
        out[o * s.inner + i] += ad[(o * s.extent + e) * s.inner + i];
  Shape shape = a.shape();
  if (keepdim) {
    shape[axis] = 1;
  } else {
    shape.erase(shape.begin() + static_cast<std::ptrdiff_t>(axis));
  }
  const bool grad = detail::recording<T>({&a});
  auto result = detail::make_output(std::move(shape), std::move(out), grad);
  if (grad) {
    detail::on_backward(result, [na = a.node_ptr(), s](std::span<const T> dout) {
      auto g = na->grad_slab();
      for (std::size_t o = 0; o < s.outer; ++o)
        for (std::size_t e = 0; e < s.extent; ++e)
          for (std::size_t i = 0; i < s.inner; ++i)
            g[(o * s.extent + e) * s.inner + i] += dout[o * s.inner + i];
    });
  }
  return result;
}

template <typename T>
Tensor<T> mean_axis(const Tensor<T>& a, std::size_t axis, bool keepdim = false) {
  detail::check_axis(a.shape(), axis, "mean_axis");
  return scale(sum_axis(a, axis, keepdim), T{1} / static_cast<T>(a.dim(axis)));
}

template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, std::size_t axis) {
  if (parts.empty()) throw DimensionError("concat of zero tensors");
  const Shape& first = parts.front().shape();
  detail::check_axis(first, axis, "concat");
  Shape shape = first;
  shape[axis] = 0;
  for (const auto& p : parts) {
    bool compatible = p.rank() == first.size();
    for (std::size_t i = 0; compatible && i < first.size(); ++i) {
      if (i != axis && p.dim(i) != first[i]) compatible = false;
    }
    if (!compatible) {
      throw DimensionError("concat shape mismatch on axis " + std::to_string(axis) + ": " +
                           to_string(first) + " vs " + to_string(p.shape()));
    }
    shape[axis] += p.dim(axis);
  }
  const auto s = detail::split_at(shape, axis);
  std::vector<T> out(element_count(shape));
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    offsets.push_back(offset);
    const std::size_t ext = p.dim(axis);
    const auto pd = p.data();
    for (std::size_t o = 0; o < s.outer; ++o) {
      std::copy_n(pd.begin() + static_cast<std::ptrdiff_t>(o * ext * s.inner), ext * s.inner,
                  out.begin() + static_cast<std::ptrdiff_t>((o * s.extent + offset) * s.inner));
    }
    offset += ext;
  }

  bool grad = false;
  if (Tape<T>::active() != nullptr) {
    for (const auto& p : parts) grad = grad || p.requires_grad();
  }
  auto result = detail::make_output(std::move(shape), std::move(out), grad);
  if (grad) {
    std::vector<std::shared_ptr<detail::Node<T>>> nodes;
    std::vector<std::size_t> extents;
    for (const auto& p : parts) {
      nodes.push_back(p.node_ptr());
      extents.push_back(p.dim(axis));
    }
    detail::on_backward(result, [nodes, extents, offsets, s](std::span<const T> dout) {
      for (std::size_t n = 0; n < nodes.size(); ++n) {
        if (!nodes[n]->requires_grad) continue;
        auto g = nodes[n]->grad_slab();
        const std::size_t ext = extents[n];
        for (std::size_t o = 0; o < s.outer; ++o) {
          const T* src = dout.data() + (o * s.extent + offsets[n]) * s.inner;
          T* dst = g.data() + o * ext * s.inner;
          for (std::size_t i = 0; i < ext * s.inner; ++i) dst[i] += src[i];
        }
      }
    });
  }
  return result;
}

/// Elements [begin, end) along axis.
template <typename T>
Tensor<T> slice(const Tensor<T>& a, std::size_t axis, std::size_t begin, std::size_t end) {
  detail::check_axis(a.shape(), axis, "slice");
  if (begin >= end || end > a.dim(axis)) {
    throw DimensionError("slice [" + std::to_string(begin) + "," + std::to_string(end) +
                         ") invalid for axis " + std::to_string(axis) + " of " +
                         to_string(a.shape()));
  }
  const auto s = detail::split_at(a.shape(), axis);
  const std::size_t ext = end - begin;
  std::vector<T> out(s.outer * ext * s.inner);
  const auto ad = a.data();
  for (std::size_t o = 0; o < s.outer; ++o) {
    std::copy_n(ad.begin() + static_cast<std::ptrdiff_t>((o * s.extent + begin) * s.inner),
                ext * s.inner, out.begin() + static_cast<std::ptrdiff_t>(o * ext * s.inner));
  }
  Shape shape = a.shape();
  shape[axis] = ext;
  const bool grad = detail::recording<T>({&a});
  auto result = detail::make_output(std::move(shape), std::move(out), grad);
  if (grad) {
    detail::on_backward(result, [na = a.node_ptr(), s, begin, ext](std::span<const T> dout) {
      auto g = na->grad_slab();
      for (std::size_t o = 0; o < s.outer; ++o) {
        const T* src = dout.data() + o * ext * s.inner;
        T* dst = g.data() + (o * s.extent + begin) * s.inner;
        for (std::size_t i = 0; i < ext * s.inner; ++i) dst[i] += src[i];
      }
    });
  }
  return result;
}

template <typename T>
std::vector<Tensor<T>> split(const Tensor<T>& a, std::size_t axis,
                             const std::vector<std::size_t>& sizes) {
  detail::check_axis(a.shape(), axis, "split");
  std::size_t total = 0;
  for (auto s : sizes) total += s;
  if (total != a.dim(axis)) {
    throw DimensionError("split sizes sum to " + std::to_string(total) + " but axis " +
                         std::to_string(axis) + " of " + to_string(a.shape()) + " has extent " +
                         std::to_string(a.dim(axis)));
  }
  std::vector<Tensor<T>> parts;
  std::size_t begin = 0;
  for (auto s : sizes) {
    parts.push_back(slice(a, axis, begin, begin + s));
    begin += s;
  }
  return parts;
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, Shape shape) {
  if (element_count(shape) != a.numel()) {
    throw DimensionError("cannot reshape " + to_string(a.shape()) + " to " + to_string(shape));
  }
  const bool grad = detail::recording<T>({&a});
  auto result = Tensor<T>::from_shared(std::move(shape), a.node().values, grad);
  if (grad) {
    result.node().tape = Tape<T>::active();
    detail::on_backward(result, [na = a.node_ptr()](std::span<const T> dout) {
      auto g = na->grad_slab();
      for (std::size_t i = 0; i < dout.size(); ++i) g[i] += dout[i];
    });
  }
  return result;
}

/// Swap two axes (materialized copy).
template <typename T>
Tensor<T> transpose(const Tensor<T>& a, std::size_t axis0, std::size_t axis1) {
  detail::check_axis(a.shape(), axis0, "transpose");
  detail::check_axis(a.shape(), axis1, "transpose");
  if (axis0 == axis1) return reshape(a, a.shape());
  if (axis0 > axis1) std::swap(axis0, axis1);
  const auto& sh = a.shape();
  std::size_t outer = 1, middle = 1, inner = 1;
  for (std::size_t i = 0; i < axis0; ++i) outer *= sh[i];
  for (std::size_t i = axis0 + 1; i < axis1; ++i) middle *= sh[i];
  for (std::size_t i = axis1 + 1; i < sh.size(); ++i) inner *= sh[i];
  const std::size_t n0 = sh[axis0], n1 = sh[axis1];

  // in[o, i0, m, i1, c] -> out[o, i1, m, i0, c]

  std::vector<T> out(a.numel());
  const T* ad = a.data().data();
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t i0 = 0; i0 < n0; ++i0)
      for (std::size_t m = 0; m < middle; ++m)
        for (std::size_t i1 = 0; i1 < n1; ++i1) {
          std::copy_n(ad + (((o * n0 + i0) * middle + m) * n1 + i1) * inner, inner,
                      out.data() + (((o * n1 + i1) * middle + m) * n0 + i0) * inner);
        }
  Shape shape = sh;
  std::swap(shape[axis0], shape[axis1]);
  const bool grad = detail::recording<T>({&a});
  auto result = detail::make_output(std::move(shape), std::move(out), grad);
  if (grad) {
    detail::on_backward(result, [na = a.node_ptr(), outer, middle, inner, n0,
                                 n1](std::span<const T> dout) {
      auto g = na->grad_slab();
      for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t i0 = 0; i0 < n0; ++i0)
          for (std::size_t m = 0; m < middle; ++m)
            for (std::size_t i1 = 0; i1 < n1; ++i1) {
              T* d = g.data() + (((o * n0 + i0) * middle + m) * n1 + i1) * inner;
              const T* s = dout.data() + (((o * n1 + i1) * middle + m) * n0 + i0) * inner;
              for (std::size_t c = 0; c < inner; ++c) d[c] += s[c];
            }
    });
  }
  return result;
}

/// Tile an extent-1 axis count times.
template <typename T>
Tensor<T> repeat(const Tensor<T>& a, std::size_t axis, std::size_t count) {
  detail::check_axis(a.shape(), axis, "repeat");
  if (a.dim(axis) != 1 || count == 0) {
    throw DimensionError("repeat needs extent 1 on axis " + std::to_string(axis) + ", got " +
                         to_string(a.shape()));
  }
  const auto s = detail::split_at(a.shape(), axis);
  std::vector<T> out(s.outer * count * s.inner);
  const auto ad = a.data();
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t r = 0; r < count; ++r)
      std::copy_n(ad.begin() + static_cast<std::ptrdiff_t>(o * s.inner), s.inner,
                  out.begin() + static_cast<std::ptrdiff_t>((o * count + r) * s.inner));
  Shape shape = a.shape();
  shape[axis] = count;
  const bool grad = detail::recording<T>({&a});
  auto result = detail::make_output(std::move(shape), std::move(out), grad);
  if (grad) {
    detail::on_backward(result, [na = a.node_ptr(), s, count](std::span<const T> dout) {
      auto g = na->grad_slab();
      for (std::size_t o = 0; o < s.outer; ++o)
        for (std::size_t r = 0; r < count; ++r)
          for (std::size_t i = 0; i < s.inner; ++i)
            g[o * s.inner + i] += dout[(o * count + r) * s.inner + i];
    });
  }
  return result;
}

/// gelu(x) = 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3)))
template <typename T>
Tensor<T> gelu(const Tensor<T>& a) {
  constexpr T kAlpha = static_cast<T>(0.7978845608028654);  // sqrt(2/pi)
  constexpr T kBeta = static_cast<T>(0.044715);
  std::vector<T> out(a.numel());
  const auto ad = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const T x = ad[i];
    out[i] = T(0.5) * x * (T(1) + std::tanh(kAlpha * (x + kBeta * x * x * x)));
  }
  const bool grad = detail::recording<T>({&a});
  auto result = detail::make_output(Shape(a.shape()), std::move(out), grad);
  if (grad) {
    detail::on_backward(result, [na = a.node_ptr()](std::span<const T> dout) {
      const auto& xs = *na->values;
      auto g = na->grad_slab();
      for (std::size_t i = 0; i < dout.size(); ++i) {
        const T x = xs[i];
        const T t = std::tanh(kAlpha * (x + kBeta * x * x * x));
        const T dt = (T(1) - t * t) * kAlpha * (T(1) + T(3) * kBeta * x * x);
        g[i] += dout[i] * (T(0.5) * (T(1) + t) + T(0.5) * x * dt);
      }
    });
  }
  return result;
}

/// Max-subtracted softmax along axis.
template <typename T>
Tensor<T> softmax(const Tensor<T>& a, std::size_t axis) {
  detail::check_axis(a.shape(), axis, "softmax");
  detail::check_finite(a.data(), "softmax");
  const auto s = detail::split_at(a.shape(), axis);
  std::vector<T> out(a.numel());
  const auto ad = a.data();
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t i = 0; i < s.inner; ++i) {
      const std::size_t base = o * s.extent * s.inner + i;
      T peak = -std::numeric_limits<T>::infinity();
      for (std::size_t e = 0; e < s.extent; ++e) peak = std::max(peak, ad[base + e * s.inner]);
      T total{};
      for (std::size_t e = 0; e < s.extent; ++e) {
        const T v = std::exp(ad[base + e * s.inner] - peak);
        out[base + e * s.inner] = v;
        total += v;
      }
      for (std::size_t e = 0; e < s.extent; ++e) out[base + e * s.inner] /= total;
    }
  const bool grad = detail::recording<T>({&a});
  auto result = detail::make_output(Shape(a.shape()), std::move(out), grad);
  if (grad) {
    detail::on_backward(result, [na = a.node_ptr(), nout = result.node_ptr().get(),
                                 s](std::span<const T> dout) {
      const auto& y = *nout->values;
      auto g = na->grad_slab();
      for (std::size_t o = 0; o < s.outer; ++o)
        for (std::size_t i = 0; i < s.inner; ++i) {
          const std::size_t base = o * s.extent * s.inner + i;
          T dot{};
          for (std::size_t e = 0; e < s.extent; ++e)
            dot += dout[base + e * s.inner] * y[base + e * s.inner];
          for (std::size_t e = 0; e < s.extent; ++e) {
            const std::size_t idx = base + e * s.inner;
            g[idx] += y[idx] * (dout[idx] - dot);
          }
        }
    });
  }
  return result;
}

/// Normalizes each vector along the last axis to zero mean and unit
/// (biased) variance, then applies gain and bias.
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias,
                     T eps = T(1e-5)) {
  if (x.rank() == 0) throw DimensionError("layer_norm on a scalar");
  const std::size_t d = x.dim(x.rank() - 1);
  if (gain.shape() != Shape{d} || bias.shape() != Shape{d}) {
    throw DimensionError("layer_norm parameters " + to_string(gain.shape()) + "/" +
                         to_string(bias.shape()) + " do not match last extent of " +
                         to_string(x.shape()));
  }
  const std::size_t rows = x.numel() / d;
  std::vector<T> out(x.numel());
  std::vector<T> xhat(x.numel());
  std::vector<T> inv_std(rows);
  const auto xd = x.data();
  const auto gd = gain.data();
  const auto bd = bias.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* row = xd.data() + r * d;
    T mu{};
    for (std::size_t j = 0; j < d; ++j) mu += row[j];
    mu /= static_cast<T>(d);
    T var{};
    for (std::size_t j = 0; j < d; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<T>(d);
    const T istd = T(1) / std::sqrt(var + eps);
    inv_std[r] = istd;
    for (std::size_t j = 0; j < d; ++j) {
      const T h = (row[j] - mu) * istd;
      xhat[r * d + j] = h;
      out[r * d + j] = h * gd[j] + bd[j];
    }
  }
  const bool grad = detail::recording<T>({&x, &gain, &bias});
  auto result = detail::make_output(Shape(x.shape()), std::move(out), grad);
  if (grad) {
    detail::on_backward(result, [nx = x.node_ptr(), ng = gain.node_ptr(), nb = bias.node_ptr(),
                                 xhat = std::move(xhat), inv_std = std::move(inv_std), rows,
                                 d](std::span<const T> dout) {
      const auto& gv = *ng->values;
      if (ng->requires_grad) {
        auto gg = ng->grad_slab(rows);
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t j = 0; j < d; ++j) gg[j] += dout[r * d + j] * xhat[r * d + j];
      }
      if (nb->requires_grad) {
        auto gb = nb->grad_slab(rows);
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t j = 0; j < d; ++j) gb[j] += dout[r * d + j];
      }
      if (nx->requires_grad) {
        auto gx = nx->grad_slab();
        for (std::size_t r = 0; r < rows; ++r) {
          T mean_dh{}, mean_dh_h{};
          for (std::size_t j = 0; j < d; ++j) {
            const T dh = dout[r * d + j] * gv[j];
            mean_dh += dh;
            mean_dh_h += dh * xhat[r * d + j];
          }
          mean_dh /= static_cast<T>(d);
          mean_dh_h /= static_cast<T>(d);
          for (std::size_t j = 0; j < d; ++j) {
            const T dh = dout[r * d + j] * gv[j];
            gx[r * d + j] += inv_std[r] * (dh - mean_dh - xhat[r * d + j] * mean_dh_h);
          }
        }
      }
    });
  }
  return result;
}

/// x @ weight + bias with weight [in, out] and bias [out].
template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  return add(matmul(x, weight), bias);
}

/// Mean negative log-likelihood of the labelled class over a [B, C] batch.
template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& logits, std::span<const int> labels) {
  if (logits.rank() != 2 || logits.dim(0) != labels.size() || labels.empty()) {
    throw DimensionError("cross_entropy expects logits [B,C] with B = " +
                         std::to_string(labels.size()) + ", got " + to_string(logits.shape()));
  }
  detail::check_finite(logits.data(), "cross_entropy");
  const std::size_t batch = logits.dim(0), classes = logits.dim(1);
  for (int label : labels) {
    if (label < 0 || static_cast<std::size_t>(label) >= classes) {
      throw InputError("cross_entropy label " + std::to_string(label) + " outside [0," +
                       std::to_string(classes) + ")");
    }
  }
  const auto z = logits.data();
  std::vector<T> probs(logits.numel());
  T loss{};
  for (std::size_t b = 0; b < batch; ++b) {
    const T* row = z.data() + b * classes;
    T peak = *std::max_element(row, row + classes);
    T total{};
    for (std::size_t c = 0; c < classes; ++c) total += std::exp(row[c] - peak);
    const T lse = peak + std::log(total);
    for (std::size_t c = 0; c < classes; ++c) probs[b * classes + c] = std::exp(row[c] - lse);
    loss += lse - row[labels[b]];
  }
  loss /= static_cast<T>(batch);
  const bool grad = detail::recording<T>({&logits});
  auto result = detail::make_output(Shape{}, std::vector<T>{loss}, grad);
  if (grad) {
    detail::on_backward(result, [nl = logits.node_ptr(), probs = std::move(probs),
                                 targets = std::vector<int>(labels.begin(), labels.end()), batch,
                                 classes](std::span<const T> dout) {
      auto g = nl->grad_slab();
      const T factor = dout[0] / static_cast<T>(batch);
      for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t c = 0; c < classes; ++c) {
          const T onehot = static_cast<int>(c) == targets[b] ? T(1) : T(0);
          g[b * classes + c] += factor * (probs[b * classes + c] - onehot);
        }
    });
  }
  return result;
}

}  // namespace adapt::nn
