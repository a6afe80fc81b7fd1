#pragma once

#include <cblas.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <unordered_set>
#include <vector>

#include "implicitsr/rng.hpp"
#include "implicitsr/tensor.hpp"

namespace isr::ag {

inline void gemm(bool trans_a, bool trans_b, int64_t m, int64_t n, int64_t k, float alpha,
                 const float* a, int64_t lda, const float* b, int64_t ldb, float beta, float* c,
                 int64_t ldc) {
  cblas_sgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
              trans_b ? CblasTrans : CblasNoTrans, static_cast<int>(m), static_cast<int>(n),
              static_cast<int>(k), alpha, a, static_cast<int>(lda), b, static_cast<int>(ldb), beta,
              c, static_cast<int>(ldc));
}

inline void gemm(bool trans_a, bool trans_b, int64_t m, int64_t n, int64_t k, double alpha,
                 const double* a, int64_t lda, const double* b, int64_t ldb, double beta, double* c,
                 int64_t ldc) {
  cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
              trans_b ? CblasTrans : CblasNoTrans, static_cast<int>(m), static_cast<int>(n),
              static_cast<int>(k), alpha, a, static_cast<int>(lda), b, static_cast<int>(ldb), beta,
              c, static_cast<int>(ldc));
}

template <typename T>
struct NodeT;
template <typename T>
using VarT = std::shared_ptr<NodeT<T>>;

// One value in the computation graph. backward() reads this->grad and
// accumulates into the parents' grads.
template <typename T>
struct NodeT {
  TensorT<T> value;
  TensorT<T> grad;
  bool requires_grad = false;
  std::vector<VarT<T>> parents;
  std::function<void(NodeT<T>&)> backward;
  uint64_t order = 0;

  void ensure_grad() {
    if (grad.dims != value.dims) {
      grad = TensorT<T>(value.dims);
    }
  }
};

inline uint64_t next_node_order() {
  static thread_local uint64_t counter = 0;
  return ++counter;
}

inline bool& grad_mode() {
  static thread_local bool enabled = true;
  return enabled;
}

// Disables graph construction in scope (inference, plain evaluation).
struct NoGradGuard {
  bool prev;
  NoGradGuard() : prev(grad_mode()) { grad_mode() = false; }
  ~NoGradGuard() { grad_mode() = prev; }
};

template <typename T>
VarT<T> leaf(TensorT<T> value, bool requires_grad = false) {
  auto n = std::make_shared<NodeT<T>>();
  n->value = std::move(value);
  n->requires_grad = requires_grad;
  n->order = next_node_order();
  return n;
}

template <typename T>
bool track(const std::vector<VarT<T>>& parents) {
  if (!grad_mode()) return false;
  for (const auto& p : parents)
    if (p->requires_grad) return true;
  return false;
}

template <typename T>
VarT<T> make_node(TensorT<T> value, std::vector<VarT<T>> parents,
                  std::function<void(NodeT<T>&)> backward) {
  auto n = std::make_shared<NodeT<T>>();
  n->value = std::move(value);
  n->order = next_node_order();
  if (track(parents)) {
    n->requires_grad = true;
    n->parents = std::move(parents);
    n->backward = std::move(backward);
  }
  return n;
}

template <typename T>
void accum(const VarT<T>& p, const TensorT<T>& g) {
  if (!p->requires_grad) return;
  p->ensure_grad();
  for (int64_t i = 0; i < g.numel(); ++i) p->grad.data[i] += g.data[i];
}

// Reverse pass from a scalar (or any) root. Seeds d(root)/d(root) = 1.
template <typename T>
void backward(const VarT<T>& root) {
  root->ensure_grad();
  root->grad.fill(T(1));

  std::vector<NodeT<T>*> topo;
  std::unordered_set<NodeT<T>*> seen;
  std::vector<NodeT<T>*> stack{root.get()};
  while (!stack.empty()) {
    NodeT<T>* n = stack.back();
    stack.pop_back();
    if (!seen.insert(n).second) continue;
    topo.push_back(n);
    for (auto& p : n->parents)
      if (p->requires_grad) stack.push_back(p.get());
  }
  std::sort(topo.begin(), topo.end(),
            [](const NodeT<T>* a, const NodeT<T>* b) { return a->order > b->order; });
  for (NodeT<T>* n : topo) {
    if (n->backward && n->grad.dims == n->value.dims) n->backward(*n);
  }
}

template <typename T>
void zero_grad(const VarT<T>& p) {
  p->grad = TensorT<T>();
}

// ---------------------------------------------------------------- elementwise

template <typename T>
VarT<T> add(const VarT<T>& a, const VarT<T>& b) {
  check_same_shape(a->value, b->value, "add");
  TensorT<T> out(a->value.dims);
  for (int64_t i = 0; i < out.numel(); ++i) out.data[i] = a->value.data[i] + b->value.data[i];
  return make_node<T>(std::move(out), {a, b}, [a, b](NodeT<T>& n) {
    accum(a, n.grad);
    accum(b, n.grad);
  });
}

template <typename T>
VarT<T> sub(const VarT<T>& a, const VarT<T>& b) {
  check_same_shape(a->value, b->value, "sub");
  TensorT<T> out(a->value.dims);
  for (int64_t i = 0; i < out.numel(); ++i) out.data[i] = a->value.data[i] - b->value.data[i];
  return make_node<T>(std::move(out), {a, b}, [a, b](NodeT<T>& n) {
    accum(a, n.grad);
    if (b->requires_grad) {
      b->ensure_grad();
      for (int64_t i = 0; i < n.grad.numel(); ++i) b->grad.data[i] -= n.grad.data[i];
    }
  });
}

template <typename T>
VarT<T> mul(const VarT<T>& a, const VarT<T>& b) {
  check_same_shape(a->value, b->value, "mul");
  TensorT<T> out(a->value.dims);
  for (int64_t i = 0; i < out.numel(); ++i) out.data[i] = a->value.data[i] * b->value.data[i];
  return make_node<T>(std::move(out), {a, b}, [a, b](NodeT<T>& n) {
    if (a->requires_grad) {
      a->ensure_grad();
      for (int64_t i = 0; i < n.grad.numel(); ++i) a->grad.data[i] += n.grad.data[i] * b->value.data[i];
    }
    if (b->requires_grad) {
      b->ensure_grad();
      for (int64_t i = 0; i < n.grad.numel(); ++i) b->grad.data[i] += n.grad.data[i] * a->value.data[i];
    }
  });
}

template <typename T>
VarT<T> div(const VarT<T>& a, const VarT<T>& b) {
  check_same_shape(a->value, b->value, "div");
  TensorT<T> out(a->value.dims);
  for (int64_t i = 0; i < out.numel(); ++i) out.data[i] = a->value.data[i] / b->value.data[i];
  return make_node<T>(std::move(out), {a, b}, [a, b](NodeT<T>& n) {
    if (a->requires_grad) {
      a->ensure_grad();
      for (int64_t i = 0; i < n.grad.numel(); ++i) a->grad.data[i] += n.grad.data[i] / b->value.data[i];
    }
    if (b->requires_grad) {
      b->ensure_grad();
      for (int64_t i = 0; i < n.grad.numel(); ++i) {
        T bv = b->value.data[i];
        b->grad.data[i] -= n.grad.data[i] * a->value.data[i] / (bv * bv);
      }
    }
  });
}

template <typename T>
VarT<T> scale(const VarT<T>& a, T s) {
  TensorT<T> out(a->value.dims);
  for (int64_t i = 0; i < out.numel(); ++i) out.data[i] = a->value.data[i] * s;
  return make_node<T>(std::move(out), {a}, [a, s](NodeT<T>& n) {
    if (!a->requires_grad) return;
    a->ensure_grad();
    for (int64_t i = 0; i < n.grad.numel(); ++i) a->grad.data[i] += n.grad.data[i] * s;
  });
}

template <typename T>
VarT<T> add_scalar(const VarT<T>& a, T s) {
  TensorT<T> out(a->value.dims);
  for (int64_t i = 0; i < out.numel(); ++i) out.data[i] = a->value.data[i] + s;
  return make_node<T>(std::move(out), {a}, [a](NodeT<T>& n) { accum(a, n.grad); });
}

template <typename T>
VarT<T> leaky_relu(const VarT<T>& a, T slope) {
  TensorT<T> out(a->value.dims);
  for (int64_t i = 0; i < out.numel(); ++i) {
    T v = a->value.data[i];
    out.data[i] = v >= 0 ? v : slope * v;
  }
  return make_node<T>(std::move(out), {a}, [a, slope](NodeT<T>& n) {
    if (!a->requires_grad) return;
    a->ensure_grad();
    for (int64_t i = 0; i < n.grad.numel(); ++i)
      a->grad.data[i] += n.grad.data[i] * (a->value.data[i] >= 0 ? T(1) : slope);
  });
}

template <typename T>
VarT<T> abs_val(const VarT<T>& a) {
  TensorT<T> out(a->value.dims);
  for (int64_t i = 0; i < out.numel(); ++i) out.data[i] = std::abs(a->value.data[i]);
  return make_node<T>(std::move(out), {a}, [a](NodeT<T>& n) {
    if (!a->requires_grad) return;
    a->ensure_grad();
    for (int64_t i = 0; i < n.grad.numel(); ++i) {
      T v = a->value.data[i];
      T sgn = v > 0 ? T(1) : (v < 0 ? T(-1) : T(0));
      a->grad.data[i] += n.grad.data[i] * sgn;
    }
  });
}

template <typename T>
VarT<T> sqrt_val(const VarT<T>& a) {
  TensorT<T> out(a->value.dims);
  for (int64_t i = 0; i < out.numel(); ++i) out.data[i] = std::sqrt(a->value.data[i]);
  return make_node<T>(std::move(out), {a}, [a](NodeT<T>& n) {
    if (!a->requires_grad) return;
    a->ensure_grad();
    for (int64_t i = 0; i < n.grad.numel(); ++i)
      a->grad.data[i] += n.grad.data[i] * T(0.5) / n.value.data[i];
  });
}

// Inverted dropout; mask drawn from rng so runs are seed-deterministic.
template <typename T>
VarT<T> dropout(const VarT<T>& a, double p, Rng& rng) {
  if (p <= 0) return a;
  TensorT<T> mask(a->value.dims);
  T keep = static_cast<T>(1.0 / (1.0 - p));
  for (int64_t i = 0; i < mask.numel(); ++i) mask.data[i] = rng.uniform01() < p ? T(0) : keep;
  TensorT<T> out(a->value.dims);
  for (int64_t i = 0; i < out.numel(); ++i) out.data[i] = a->value.data[i] * mask.data[i];
  return make_node<T>(std::move(out), {a}, [a, mask = std::move(mask)](NodeT<T>& n) {
    if (!a->requires_grad) return;
    a->ensure_grad();
    for (int64_t i = 0; i < n.grad.numel(); ++i) a->grad.data[i] += n.grad.data[i] * mask.data[i];
  });
}

// ------------------------------------------------------------------- linear

// x: [rows, in], w: [out, in], b: [out] -> [rows, out]
template <typename T>
VarT<T> linear(const VarT<T>& x, const VarT<T>& w, const VarT<T>& b) {
  if (x->value.dims.size() != 2 || w->value.dims.size() != 2)
    throw ShapeError("linear: expects 2-D inputs");
  int64_t rows = x->value.dims[0], in = x->value.dims[1];
  int64_t out_dim = w->value.dims[0];
  if (w->value.dims[1] != in) throw ShapeError("linear: weight/in mismatch");
  if (b->value.numel() != out_dim) throw ShapeError("linear: bias mismatch");

  TensorT<T> out({rows, out_dim});
  if (rows > 0)
    gemm(false, true, rows, out_dim, in, T(1), x->value.ptr(), in, w->value.ptr(), in, T(0),
         out.ptr(), out_dim);
  for (int64_t r = 0; r < rows; ++r)
    for (int64_t o = 0; o < out_dim; ++o) out.data[r * out_dim + o] += b->value.data[o];

  return make_node<T>(std::move(out), {x, w, b}, [x, w, b, rows, in, out_dim](NodeT<T>& n) {
    if (rows == 0) return;
    if (x->requires_grad) {
      x->ensure_grad();
      gemm(false, false, rows, in, out_dim, T(1), n.grad.ptr(), out_dim, w->value.ptr(), in, T(1),
           x->grad.ptr(), in);
    }
    if (w->requires_grad) {
      w->ensure_grad();
      gemm(true, false, out_dim, in, rows, T(1), n.grad.ptr(), out_dim, x->value.ptr(), in, T(1),
           w->grad.ptr(), in);
    }
    if (b->requires_grad) {
      b->ensure_grad();
      for (int64_t r = 0; r < rows; ++r)
        for (int64_t o = 0; o < out_dim; ++o) b->grad.data[o] += n.grad.data[r * out_dim + o];
    }
  });
}

// ------------------------------------------------------------------- conv2d

namespace detail {

template <typename T>
void im2col3(const T* src, int64_t c_in, int64_t h, int64_t w, T* col) {
  // col layout: [c_in*9, h*w], 3x3 kernel, pad 1, stride 1.
  int64_t hw = h * w;
  for (int64_t c = 0; c < c_in; ++c) {
    for (int64_t ky = -1; ky <= 1; ++ky) {
      for (int64_t kx = -1; kx <= 1; ++kx) {
        T* dst = col + ((c * 3 + (ky + 1)) * 3 + (kx + 1)) * hw;
        for (int64_t y = 0; y < h; ++y) {
          int64_t sy = y + ky;
          if (sy < 0 || sy >= h) {
            std::fill(dst + y * w, dst + (y + 1) * w, T(0));
            continue;
          }
          const T* srow = src + (c * h + sy) * w;
          for (int64_t x = 0; x < w; ++x) {
            int64_t sx = x + kx;
            dst[y * w + x] = (sx < 0 || sx >= w) ? T(0) : srow[sx];
          }
        }
      }
    }
  }
}

template <typename T>
void col2im3_add(const T* col, int64_t c_in, int64_t h, int64_t w, T* dst) {
  int64_t hw = h * w;
  for (int64_t c = 0; c < c_in; ++c) {
    for (int64_t ky = -1; ky <= 1; ++ky) {
      for (int64_t kx = -1; kx <= 1; ++kx) {
        const T* src = col + ((c * 3 + (ky + 1)) * 3 + (kx + 1)) * hw;
        for (int64_t y = 0; y < h; ++y) {
          int64_t sy = y + ky;
          if (sy < 0 || sy >= h) continue;
          T* drow = dst + (c * h + sy) * w;
          for (int64_t x = 0; x < w; ++x) {
            int64_t sx = x + kx;
            if (sx >= 0 && sx < w) drow[sx] += src[y * w + x];
          }
        }
      }
    }
  }
}

}  // namespace detail

// x: [B, Cin, H, W], w: [Cout, Cin, 3, 3], b: [Cout]. Same-padding, stride 1.
template <typename T>
VarT<T> conv2d3(const VarT<T>& x, const VarT<T>& w, const VarT<T>& b) {
  if (x->value.dims.size() != 4 || w->value.dims.size() != 4)
    throw ShapeError("conv2d3: expects 4-D input and weight");
  int64_t bsz = x->value.dims[0], c_in = x->value.dims[1], h = x->value.dims[2], ww = x->value.dims[3];
  int64_t c_out = w->value.dims[0];
  if (w->value.dims[1] != c_in || w->value.dims[2] != 3 || w->value.dims[3] != 3)
    throw ShapeError("conv2d3: weight shape mismatch");
  if (b->value.numel() != c_out) throw ShapeError("conv2d3: bias mismatch");

  int64_t hw = h * ww, k = c_in * 9;
  TensorT<T> out({bsz, c_out, h, ww});
  std::vector<T> col(static_cast<size_t>(k * hw));
  for (int64_t s = 0; s < bsz; ++s) {
    detail::im2col3(x->value.ptr() + s * c_in * hw, c_in, h, ww, col.data());
    gemm(false, false, c_out, hw, k, T(1), w->value.ptr(), k, col.data(), hw, T(0),
         out.ptr() + s * c_out * hw, hw);
    for (int64_t o = 0; o < c_out; ++o) {
      T bias = b->value.data[o];
      T* row = out.ptr() + (s * c_out + o) * hw;
      for (int64_t i = 0; i < hw; ++i) row[i] += bias;
    }
  }

  return make_node<T>(std::move(out), {x, w, b},
                      [x, w, b, bsz, c_in, c_out, h, ww, hw, k](NodeT<T>& n) {
    std::vector<T> col(static_cast<size_t>(k * hw));
    if (x->requires_grad) x->ensure_grad();
    if (w->requires_grad) w->ensure_grad();
    if (b->requires_grad) b->ensure_grad();
    for (int64_t s = 0; s < bsz; ++s) {
      const T* gout = n.grad.ptr() + s * c_out * hw;
      if (w->requires_grad) {
        detail::im2col3(x->value.ptr() + s * c_in * hw, c_in, h, ww, col.data());
        gemm(false, true, c_out, k, hw, T(1), gout, hw, col.data(), hw, T(1), w->grad.ptr(), k);
      }
      if (x->requires_grad) {
        gemm(true, false, k, hw, c_out, T(1), w->value.ptr(), k, gout, hw, T(0), col.data(), hw);
        detail::col2im3_add(col.data(), c_in, h, ww, x->grad.ptr() + s * c_in * hw);
      }
      if (b->requires_grad) {
        for (int64_t o = 0; o < c_out; ++o) {
          T acc = 0;
          const T* row = gout + o * hw;
          for (int64_t i = 0; i < hw; ++i) acc += row[i];
          b->grad.data[o] += acc;
        }
      }
    }
  });
}

// ---------------------------------------------------------------- reshaping

// [B, C, H, W] -> [B*H*W, C]
template <typename T>
VarT<T> chw_to_rows(const VarT<T>& x) {
  if (x->value.dims.size() != 4) throw ShapeError("chw_to_rows: expects 4-D");
  int64_t bsz = x->value.dims[0], c = x->value.dims[1], h = x->value.dims[2], w = x->value.dims[3];
  int64_t hw = h * w;
  TensorT<T> out({bsz * hw, c});
  for (int64_t s = 0; s < bsz; ++s)
    for (int64_t ch = 0; ch < c; ++ch) {
      const T* src = x->value.ptr() + (s * c + ch) * hw;
      T* dst = out.ptr() + s * hw * c + ch;
      for (int64_t i = 0; i < hw; ++i) dst[i * c] = src[i];
    }
  return make_node<T>(std::move(out), {x}, [x, bsz, c, hw](NodeT<T>& n) {
    if (!x->requires_grad) return;
    x->ensure_grad();
    for (int64_t s = 0; s < bsz; ++s)
      for (int64_t ch = 0; ch < c; ++ch) {
        T* dst = x->grad.ptr() + (s * c + ch) * hw;
        const T* src = n.grad.ptr() + s * hw * c + ch;
        for (int64_t i = 0; i < hw; ++i) dst[i] += src[i * c];
      }
  });
}

// [B*H*W, C] -> [B, C, H, W]
template <typename T>
VarT<T> rows_to_chw(const VarT<T>& x, int64_t bsz, int64_t h, int64_t w) {
  if (x->value.dims.size() != 2 || x->value.dims[0] != bsz * h * w)
    throw ShapeError("rows_to_chw: row count mismatch");
  int64_t c = x->value.dims[1], hw = h * w;
  TensorT<T> out({bsz, c, h, w});
  for (int64_t s = 0; s < bsz; ++s)
    for (int64_t ch = 0; ch < c; ++ch) {
      T* dst = out.ptr() + (s * c + ch) * hw;
      const T* src = x->value.ptr() + s * hw * c + ch;
      for (int64_t i = 0; i < hw; ++i) dst[i] = src[i * c];
    }
  return make_node<T>(std::move(out), {x}, [x, bsz, c, hw](NodeT<T>& n) {
    if (!x->requires_grad) return;
    x->ensure_grad();
    for (int64_t s = 0; s < bsz; ++s)
      for (int64_t ch = 0; ch < c; ++ch) {
        const T* src = n.grad.ptr() + (s * c + ch) * hw;
        T* dst = x->grad.ptr() + s * hw * c + ch;
        for (int64_t i = 0; i < hw; ++i) dst[i * c] += src[i];
      }
  });
}

template <typename T>
VarT<T> concat_channels(const VarT<T>& a, const VarT<T>& b) {
  if (a->value.dims.size() != 4 || b->value.dims.size() != 4)
    throw ShapeError("concat_channels: expects 4-D");
  int64_t bsz = a->value.dims[0], ca = a->value.dims[1], h = a->value.dims[2], w = a->value.dims[3];
  int64_t cb = b->value.dims[1];
  if (b->value.dims[0] != bsz || b->value.dims[2] != h || b->value.dims[3] != w)
    throw ShapeError("concat_channels: spatial/batch mismatch");
  int64_t hw = h * w;
  TensorT<T> out({bsz, ca + cb, h, w});
  for (int64_t s = 0; s < bsz; ++s) {
    std::copy_n(a->value.ptr() + s * ca * hw, ca * hw, out.ptr() + s * (ca + cb) * hw);
    std::copy_n(b->value.ptr() + s * cb * hw, cb * hw, out.ptr() + (s * (ca + cb) + ca) * hw);
  }
  return make_node<T>(std::move(out), {a, b}, [a, b, bsz, ca, cb, hw](NodeT<T>& n) {
    if (a->requires_grad) {
      a->ensure_grad();
      for (int64_t s = 0; s < bsz; ++s) {
        const T* src = n.grad.ptr() + s * (ca + cb) * hw;
        T* dst = a->grad.ptr() + s * ca * hw;
        for (int64_t i = 0; i < ca * hw; ++i) dst[i] += src[i];
      }
    }
    if (b->requires_grad) {
      b->ensure_grad();
      for (int64_t s = 0; s < bsz; ++s) {
        const T* src = n.grad.ptr() + (s * (ca + cb) + ca) * hw;
        T* dst = b->grad.ptr() + s * cb * hw;
        for (int64_t i = 0; i < cb * hw; ++i) dst[i] += src[i];
      }
    }
  });
}

// Column-wise concat of 2-D row tensors: [R, Ca] + [R, Cb] -> [R, Ca+Cb]
template <typename T>
VarT<T> concat_cols(const VarT<T>& a, const VarT<T>& b) {
  if (a->value.dims.size() != 2 || b->value.dims.size() != 2 || a->value.dims[0] != b->value.dims[0])
    throw ShapeError("concat_cols: row mismatch");
  int64_t r = a->value.dims[0], ca = a->value.dims[1], cb = b->value.dims[1];
  TensorT<T> out({r, ca + cb});
  for (int64_t i = 0; i < r; ++i) {
    std::copy_n(a->value.ptr() + i * ca, ca, out.ptr() + i * (ca + cb));
    std::copy_n(b->value.ptr() + i * cb, cb, out.ptr() + i * (ca + cb) + ca);
  }
  return make_node<T>(std::move(out), {a, b}, [a, b, r, ca, cb](NodeT<T>& n) {
    if (a->requires_grad) {
      a->ensure_grad();
      for (int64_t i = 0; i < r; ++i)
        for (int64_t j = 0; j < ca; ++j) a->grad.data[i * ca + j] += n.grad.data[i * (ca + cb) + j];
    }
    if (b->requires_grad) {
      b->ensure_grad();
      for (int64_t i = 0; i < r; ++i)
        for (int64_t j = 0; j < cb; ++j)
          b->grad.data[i * cb + j] += n.grad.data[i * (ca + cb) + ca + j];
    }
  });
}

// ------------------------------------------------------------- broadcasting

// x: [B, C, H, W] * v: [C] -> per-channel scaling (Eq. 8 modulation).
template <typename T>
VarT<T> channel_mul(const VarT<T>& x, const VarT<T>& v) {
  if (x->value.dims.size() != 4) throw ShapeError("channel_mul: expects 4-D");
  int64_t bsz = x->value.dims[0], c = x->value.dims[1], hw = x->value.dims[2] * x->value.dims[3];
  if (v->value.numel() != c) throw ShapeError("channel_mul: channel count mismatch");
  TensorT<T> out(x->value.dims);
  for (int64_t s = 0; s < bsz; ++s)
    for (int64_t ch = 0; ch < c; ++ch) {
      T sv = v->value.data[ch];
      const T* src = x->value.ptr() + (s * c + ch) * hw;
      T* dst = out.ptr() + (s * c + ch) * hw;
      for (int64_t i = 0; i < hw; ++i) dst[i] = src[i] * sv;
    }
  return make_node<T>(std::move(out), {x, v}, [x, v, bsz, c, hw](NodeT<T>& n) {
    if (x->requires_grad) {
      x->ensure_grad();
      for (int64_t s = 0; s < bsz; ++s)
        for (int64_t ch = 0; ch < c; ++ch) {
          T sv = v->value.data[ch];
          const T* src = n.grad.ptr() + (s * c + ch) * hw;
          T* dst = x->grad.ptr() + (s * c + ch) * hw;
          for (int64_t i = 0; i < hw; ++i) dst[i] += src[i] * sv;
        }
    }
    if (v->requires_grad) {
      v->ensure_grad();
      for (int64_t s = 0; s < bsz; ++s)
        for (int64_t ch = 0; ch < c; ++ch) {
          const T* g = n.grad.ptr() + (s * c + ch) * hw;
          const T* xv = x->value.ptr() + (s * c + ch) * hw;
          T acc = 0;
          for (int64_t i = 0; i < hw; ++i) acc += g[i] * xv[i];
          v->grad.data[ch] += acc;
        }
    }
  });
}

// x: [B, C, H, W] + v: [B, C] -> per-sample per-channel bias (time embedding).
template <typename T>
VarT<T> add_sample_channel(const VarT<T>& x, const VarT<T>& v) {
  if (x->value.dims.size() != 4 || v->value.dims.size() != 2)
    throw ShapeError("add_sample_channel: bad ranks");
  int64_t bsz = x->value.dims[0], c = x->value.dims[1], hw = x->value.dims[2] * x->value.dims[3];
  if (v->value.dims[0] != bsz || v->value.dims[1] != c)
    throw ShapeError("add_sample_channel: shape mismatch");
  TensorT<T> out(x->value.dims);
  for (int64_t s = 0; s < bsz; ++s)
    for (int64_t ch = 0; ch < c; ++ch) {
      T bias = v->value.data[s * c + ch];
      const T* src = x->value.ptr() + (s * c + ch) * hw;
      T* dst = out.ptr() + (s * c + ch) * hw;
      for (int64_t i = 0; i < hw; ++i) dst[i] = src[i] + bias;
    }
  return make_node<T>(std::move(out), {x, v}, [x, v, bsz, c, hw](NodeT<T>& n) {
    if (x->requires_grad) accum(x, n.grad);
    if (v->requires_grad) {
      v->ensure_grad();
      for (int64_t s = 0; s < bsz; ++s)
        for (int64_t ch = 0; ch < c; ++ch) {
          const T* g = n.grad.ptr() + (s * c + ch) * hw;
          T acc = 0;
          for (int64_t i = 0; i < hw; ++i) acc += g[i];
          v->grad.data[s * c + ch] += acc;
        }
    }
  });
}

// --------------------------------------------------------------- resampling

struct ResizeTap {
  int64_t i0, i1;
  double w1;  // weight of i1; i0 gets (1 - w1)
};

// Half-pixel-center sampling taps, matching the cell-center grid convention.
inline std::vector<ResizeTap> bilinear_taps(int64_t n_src, int64_t n_dst) {
  std::vector<ResizeTap> taps(static_cast<size_t>(n_dst));
  double r = static_cast<double>(n_src) / static_cast<double>(n_dst);
  for (int64_t j = 0; j < n_dst; ++j) {
    double u = (static_cast<double>(j) + 0.5) * r - 0.5;
    double fl = std::floor(u);
    double w1 = u - fl;
    int64_t i0 = static_cast<int64_t>(fl);
    int64_t i1 = i0 + 1;
    taps[j].i0 = std::clamp<int64_t>(i0, 0, n_src - 1);
    taps[j].i1 = std::clamp<int64_t>(i1, 0, n_src - 1);
    taps[j].w1 = w1;
  }
  return taps;
}

// Differentiable bilinear resize of [B, C, H, W] to (h_out, w_out).
template <typename T>
VarT<T> resize_bilinear(const VarT<T>& x, int64_t h_out, int64_t w_out) {
  if (x->value.dims.size() != 4) throw ShapeError("resize_bilinear: expects 4-D");
  if (h_out < 1 || w_out < 1) throw ParamError("resize_bilinear: non-positive target");
  int64_t bsz = x->value.dims[0], c = x->value.dims[1], h = x->value.dims[2], w = x->value.dims[3];
  if (h == h_out && w == w_out) return x;
  auto ty = bilinear_taps(h, h_out);
  auto tx = bilinear_taps(w, w_out);
  TensorT<T> out({bsz, c, h_out, w_out});
  for (int64_t s = 0; s < bsz; ++s)
    for (int64_t ch = 0; ch < c; ++ch) {
      const T* src = x->value.ptr() + (s * c + ch) * h * w;
      T* dst = out.ptr() + (s * c + ch) * h_out * w_out;
      for (int64_t y = 0; y < h_out; ++y) {
        const auto& py = ty[y];
        for (int64_t xx = 0; xx < w_out; ++xx) {
          const auto& px = tx[xx];
          double v00 = src[py.i0 * w + px.i0], v01 = src[py.i0 * w + px.i1];
          double v10 = src[py.i1 * w + px.i0], v11 = src[py.i1 * w + px.i1];
          double top = v00 + (v01 - v00) * px.w1;
          double bot = v10 + (v11 - v10) * px.w1;
          dst[y * w_out + xx] = static_cast<T>(top + (bot - top) * py.w1);
        }
      }
    }
  return make_node<T>(std::move(out), {x},
                      [x, ty = std::move(ty), tx = std::move(tx), bsz, c, h, w, h_out,
                       w_out](NodeT<T>& n) {
    if (!x->requires_grad) return;
    x->ensure_grad();
    for (int64_t s = 0; s < bsz; ++s)
      for (int64_t ch = 0; ch < c; ++ch) {
        T* dst = x->grad.ptr() + (s * c + ch) * h * w;
        const T* g = n.grad.ptr() + (s * c + ch) * h_out * w_out;
        for (int64_t y = 0; y < h_out; ++y) {
          const auto& py = ty[y];
          for (int64_t xx = 0; xx < w_out; ++xx) {
            const auto& px = tx[xx];
            double gv = g[y * w_out + xx];
            dst[py.i0 * w + px.i0] += static_cast<T>(gv * (1 - py.w1) * (1 - px.w1));
            dst[py.i0 * w + px.i1] += static_cast<T>(gv * (1 - py.w1) * px.w1);
            dst[py.i1 * w + px.i0] += static_cast<T>(gv * py.w1 * (1 - px.w1));
            dst[py.i1 * w + px.i1] += static_cast<T>(gv * py.w1 * px.w1);
          }
        }
      }
  });
}

// Gather per target pixel from a flattened source pixel index map.
// x: [B, C, hs, ws], idx: ht*wt entries in [0, hs*ws) -> [B, C, ht, wt]
template <typename T>
VarT<T> gather_pixels(const VarT<T>& x, std::vector<int64_t> idx, int64_t ht, int64_t wt) {
  if (x->value.dims.size() != 4) throw ShapeError("gather_pixels: expects 4-D");
  int64_t bsz = x->value.dims[0], c = x->value.dims[1], hw_src = x->value.dims[2] * x->value.dims[3];
  if (static_cast<int64_t>(idx.size()) != ht * wt) throw ShapeError("gather_pixels: index size");
  int64_t hw_dst = ht * wt;
  TensorT<T> out({bsz, c, ht, wt});
  for (int64_t s = 0; s < bsz; ++s)
    for (int64_t ch = 0; ch < c; ++ch) {
      const T* src = x->value.ptr() + (s * c + ch) * hw_src;
      T* dst = out.ptr() + (s * c + ch) * hw_dst;
      for (int64_t i = 0; i < hw_dst; ++i) dst[i] = src[idx[i]];
    }
  return make_node<T>(std::move(out), {x}, [x, idx = std::move(idx), hw_dst](NodeT<T>& n) {
    if (!x->requires_grad) return;
    x->ensure_grad();
    int64_t bsz = x->value.dims[0], c = x->value.dims[1];
    int64_t hw_src = x->value.dims[2] * x->value.dims[3];
    for (int64_t s = 0; s < bsz; ++s)
      for (int64_t ch = 0; ch < c; ++ch) {
        T* dst = x->grad.ptr() + (s * c + ch) * hw_src;
        const T* g = n.grad.ptr() + (s * c + ch) * hw_dst;
        for (int64_t i = 0; i < hw_dst; ++i) dst[idx[i]] += g[i];
      }
  });
}

// ---------------------------------------------------------------- reductions

// Mean absolute difference over all elements -> scalar node [1].
template <typename T>
VarT<T> l1_loss(const VarT<T>& a, const VarT<T>& b) {
  check_same_shape(a->value, b->value, "l1_loss");
  int64_t n_el = a->value.numel();
  double acc = 0;
  for (int64_t i = 0; i < n_el; ++i)
    acc += std::abs(static_cast<double>(a->value.data[i]) - static_cast<double>(b->value.data[i]));
  TensorT<T> out({1});
  out.data[0] = static_cast<T>(n_el ? acc / static_cast<double>(n_el) : 0.0);
  return make_node<T>(std::move(out), {a, b}, [a, b, n_el](NodeT<T>& n) {
    T g = n.grad.data[0] / static_cast<T>(n_el);
    if (a->requires_grad) a->ensure_grad();
    if (b->requires_grad) b->ensure_grad();
    for (int64_t i = 0; i < n_el; ++i) {
      T d = a->value.data[i] - b->value.data[i];
      T sgn = d > 0 ? T(1) : (d < 0 ? T(-1) : T(0));
      if (a->requires_grad) a->grad.data[i] += g * sgn;
      if (b->requires_grad) b->grad.data[i] -= g * sgn;
    }
  });
}

// 0.5 * mean squared difference -> scalar node [1]. Smooth; used by tests.
template <typename T>
VarT<T> half_mse_loss(const VarT<T>& a, const VarT<T>& b) {
  check_same_shape(a->value, b->value, "half_mse_loss");
  int64_t n_el = a->value.numel();
  double acc = 0;
  for (int64_t i = 0; i < n_el; ++i) {
    double d = static_cast<double>(a->value.data[i]) - static_cast<double>(b->value.data[i]);
    acc += d * d;
  }
  TensorT<T> out({1});
  out.data[0] = static_cast<T>(n_el ? 0.5 * acc / static_cast<double>(n_el) : 0.0);
  return make_node<T>(std::move(out), {a, b}, [a, b, n_el](NodeT<T>& n) {
    T g = n.grad.data[0] / static_cast<T>(n_el);
    if (a->requires_grad) a->ensure_grad();
    if (b->requires_grad) b->ensure_grad();
    for (int64_t i = 0; i < n_el; ++i) {
      T d = a->value.data[i] - b->value.data[i];
      if (a->requires_grad) a->grad.data[i] += g * d;
      if (b->requires_grad) b->grad.data[i] -= g * d;
    }
  });
}

template <typename T>
VarT<T> mean_all(const VarT<T>& a) {
  int64_t n_el = a->value.numel();
  double acc = 0;
  for (int64_t i = 0; i < n_el; ++i) acc += a->value.data[i];
  TensorT<T> out({1});
  out.data[0] = static_cast<T>(n_el ? acc / static_cast<double>(n_el) : 0.0);
  return make_node<T>(std::move(out), {a}, [a, n_el](NodeT<T>& n) {
    if (!a->requires_grad) return;
    a->ensure_grad();
    T g = n.grad.data[0] / static_cast<T>(n_el);
    for (int64_t i = 0; i < n_el; ++i) a->grad.data[i] += g;
  });
}

}  // namespace isr::ag
