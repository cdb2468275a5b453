#pragma once

#include <cmath>
#include <vector>

#include "dscn/errors.hpp"
#include "dscn/tensor.hpp"

// Layer primitives with hand-written backward passes. All tensors are NCHW.
// Statistics (BN moments, loss) accumulate in double regardless of T.

namespace dscn::ops {

// ---------------------------------------------------------------- GEMM ----

// C[m,n] += A[m,k] * B[k,n]
template <typename T>
void gemm_acc(const T* a, const T* b, T* c, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    const T* arow = a + static_cast<size_t>(i) * k;
    T* crow = c + static_cast<size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      T av = arow[p];
      const T* brow = b + static_cast<size_t>(p) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C[m,n] += A[m,k] * B[n,k]^T
template <typename T>
void gemm_nt_acc(const T* a, const T* b, T* c, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    const T* arow = a + static_cast<size_t>(i) * k;
    for (int j = 0; j < n; ++j) {
      const T* brow = b + static_cast<size_t>(j) * k;
      T acc = T(0);
      for (int p = 0; p < k; ++p) acc += arow[p] * brow[p];
      c[static_cast<size_t>(i) * n + j] += acc;
    }
  }
}

// C[k,n] += A[m,k]^T * B[m,n]
template <typename T>
void gemm_tn_acc(const T* a, const T* b, T* c, int m, int k, int n) {
  for (int p = 0; p < m; ++p) {
    const T* arow = a + static_cast<size_t>(p) * k;
    const T* brow = b + static_cast<size_t>(p) * n;
    for (int i = 0; i < k; ++i) {
      T av = arow[i];
      T* crow = c + static_cast<size_t>(i) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// ---------------------------------------------------------------- conv ----

inline int conv_out_dim(int in, int k, int stride, int pad) {
  return (in + 2 * pad - k) / stride + 1;
}

// col is [Cin*k*k, oh*ow] for one sample
template <typename T>
void im2col(const T* x, int c_in, int h, int w, int k, int stride, int pad, T* col) {
  const int oh = conv_out_dim(h, k, stride, pad);
  const int ow = conv_out_dim(w, k, stride, pad);
  const size_t l = static_cast<size_t>(oh) * ow;
  for (int c = 0; c < c_in; ++c) {
    const T* xc = x + static_cast<size_t>(c) * h * w;
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        T* row = col + ((static_cast<size_t>(c) * k + ky) * k + kx) * l;
        for (int oy = 0; oy < oh; ++oy) {
          int iy = oy * stride + ky - pad;
          T* out = row + static_cast<size_t>(oy) * ow;
          if (iy < 0 || iy >= h) {
            for (int ox = 0; ox < ow; ++ox) out[ox] = T(0);
            continue;
          }
          const T* xrow = xc + static_cast<size_t>(iy) * w;
          for (int ox = 0; ox < ow; ++ox) {
            int ix = ox * stride + kx - pad;
            out[ox] = (ix >= 0 && ix < w) ? xrow[ix] : T(0);
          }
        }
      }
  }
}

template <typename T>
void col2im_acc(const T* col, int c_in, int h, int w, int k, int stride, int pad, T* x) {
  const int oh = conv_out_dim(h, k, stride, pad);
  const int ow = conv_out_dim(w, k, stride, pad);
  const size_t l = static_cast<size_t>(oh) * ow;
  for (int c = 0; c < c_in; ++c) {
    T* xc = x + static_cast<size_t>(c) * h * w;
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        const T* row = col + ((static_cast<size_t>(c) * k + ky) * k + kx) * l;
        for (int oy = 0; oy < oh; ++oy) {
          int iy = oy * stride + ky - pad;
          if (iy < 0 || iy >= h) continue;
          T* xrow = xc + static_cast<size_t>(iy) * w;
          const T* in = row + static_cast<size_t>(oy) * ow;
          for (int ox = 0; ox < ow; ++ox) {
            int ix = ox * stride + kx - pad;
            if (ix >= 0 && ix < w) xrow[ix] += in[ox];
          }
        }
      }
  }
}

// x [N,Cin,H,W], w [Cout,Cin,k,k] -> y [N,Cout,oh,ow]; bias-free (BN follows)
template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const Tensor<T>& w, int stride, int pad) {
  const int n = x.dim(0), c_in = x.dim(1), h = x.dim(2), ww = x.dim(3);
  const int c_out = w.dim(0), k = w.dim(2);
  if (w.dim(1) != c_in) throw ShapeMismatch("conv channel mismatch");
  const int oh = conv_out_dim(h, k, stride, pad);
  const int ow = conv_out_dim(ww, k, stride, pad);
  const size_t l = static_cast<size_t>(oh) * ow;
  const int ck = c_in * k * k;

  Tensor<T> y({n, c_out, oh, ow});
  std::vector<T> col(static_cast<size_t>(ck) * l);
  for (int i = 0; i < n; ++i) {
    im2col(x.ptr() + static_cast<size_t>(i) * c_in * h * ww, c_in, h, ww, k, stride, pad,
           col.data());
    gemm_acc(w.ptr(), col.data(), y.ptr() + static_cast<size_t>(i) * c_out * l, c_out, ck,
             static_cast<int>(l));
  }
  return y;
}

// dw / dx may be null to skip that gradient
template <typename T>
void conv2d_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& dy, int stride,
                     int pad, Tensor<T>* dw, Tensor<T>* dx) {
  const int n = x.dim(0), c_in = x.dim(1), h = x.dim(2), ww = x.dim(3);
  const int c_out = w.dim(0), k = w.dim(2);
  const int oh = dy.dim(2), ow = dy.dim(3);
  const size_t l = static_cast<size_t>(oh) * ow;
  const int ck = c_in * k * k;

  std::vector<T> col(static_cast<size_t>(ck) * l);
  std::vector<T> dcol;
  if (dx) dcol.resize(col.size());

  for (int i = 0; i < n; ++i) {
    const T* dyi = dy.ptr() + static_cast<size_t>(i) * c_out * l;
    if (dw) {
      im2col(x.ptr() + static_cast<size_t>(i) * c_in * h * ww, c_in, h, ww, k, stride, pad,
             col.data());
      gemm_nt_acc(dyi, col.data(), dw->ptr(), c_out, static_cast<int>(l), ck);
    }
    if (dx) {
      std::fill(dcol.begin(), dcol.end(), T(0));
      gemm_tn_acc(w.ptr(), dyi, dcol.data(), c_out, ck, static_cast<int>(l));
      col2im_acc(dcol.data(), c_in, h, ww, k, stride, pad,
                 dx->ptr() + static_cast<size_t>(i) * c_in * h * ww);
    }
  }
}

// ----------------------------------------------------------- batch norm ----

template <typename T>
struct BnSaved {
  Tensor<T> xhat;
  std::vector<T> invstd;
  bool train = false;
};

// Batch statistics (biased variance), optional running-stat update.
template <typename T>
Tensor<T> bn_forward_train(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                           T eps, BnSaved<T>* saved, Tensor<T>* running_mean,
                           Tensor<T>* running_var, T momentum) {
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const size_t hw = static_cast<size_t>(h) * w;
  const double m = static_cast<double>(n) * static_cast<double>(hw);

  Tensor<T> y(x.shape);
  if (saved) {
    saved->xhat = Tensor<T>(x.shape);
    saved->invstd.assign(static_cast<size_t>(c), T(0));
    saved->train = true;
  }
  for (int ch = 0; ch < c; ++ch) {
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      const T* p = x.ptr() + (static_cast<size_t>(i) * c + ch) * hw;
      for (size_t j = 0; j < hw; ++j) sum += p[j];
    }
    double mean = sum / m;
    double varsum = 0.0;
    for (int i = 0; i < n; ++i) {
      const T* p = x.ptr() + (static_cast<size_t>(i) * c + ch) * hw;
      for (size_t j = 0; j < hw; ++j) {
        double d = p[j] - mean;
        varsum += d * d;
      }
    }
    double var = varsum / m;
    T invstd = static_cast<T>(1.0 / std::sqrt(var + static_cast<double>(eps)));
    T g = gamma.data[static_cast<size_t>(ch)];
    T b = beta.data[static_cast<size_t>(ch)];
    T mu = static_cast<T>(mean);
    for (int i = 0; i < n; ++i) {
      const T* p = x.ptr() + (static_cast<size_t>(i) * c + ch) * hw;
      T* q = y.ptr() + (static_cast<size_t>(i) * c + ch) * hw;
      T* xh = saved ? saved->xhat.ptr() + (static_cast<size_t>(i) * c + ch) * hw : nullptr;
      for (size_t j = 0; j < hw; ++j) {
        T xhat = (p[j] - mu) * invstd;
        if (xh) xh[j] = xhat;
        q[j] = g * xhat + b;
      }
    }
    if (saved) saved->invstd[static_cast<size_t>(ch)] = invstd;
    if (running_mean) {
      T& rm = running_mean->data[static_cast<size_t>(ch)];
      T& rv = running_var->data[static_cast<size_t>(ch)];
      rm = static_cast<T>((1.0 - momentum) * rm + momentum * mean);
      rv = static_cast<T>((1.0 - momentum) * rv + momentum * var);
    }
  }
  return y;
}

template <typename T>
Tensor<T> bn_forward_eval(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                          const Tensor<T>& running_mean, const Tensor<T>& running_var, T eps) {
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const size_t hw = static_cast<size_t>(h) * w;
  Tensor<T> y(x.shape);
  for (int ch = 0; ch < c; ++ch) {
    T invstd = static_cast<T>(
        1.0 / std::sqrt(static_cast<double>(running_var.data[static_cast<size_t>(ch)]) +
                        static_cast<double>(eps)));
    T mu = running_mean.data[static_cast<size_t>(ch)];
    T g = gamma.data[static_cast<size_t>(ch)];
    T b = beta.data[static_cast<size_t>(ch)];
    for (int i = 0; i < n; ++i) {
      const T* p = x.ptr() + (static_cast<size_t>(i) * c + ch) * hw;
      T* q = y.ptr() + (static_cast<size_t>(i) * c + ch) * hw;
      for (size_t j = 0; j < hw; ++j) q[j] = g * (p[j] - mu) * invstd + b;
    }
  }
  return y;
}

// Backward through batch statistics. dgamma/dbeta may be null (frozen params).
template <typename T>
Tensor<T> bn_backward_train(const Tensor<T>& dy, const BnSaved<T>& saved, const Tensor<T>& gamma,
                            Tensor<T>* dgamma, Tensor<T>* dbeta) {
  const int n = dy.dim(0), c = dy.dim(1), h = dy.dim(2), w = dy.dim(3);
  const size_t hw = static_cast<size_t>(h) * w;
  const double m = static_cast<double>(n) * static_cast<double>(hw);

  Tensor<T> dx(dy.shape);
  for (int ch = 0; ch < c; ++ch) {
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (int i = 0; i < n; ++i) {
      const T* pdy = dy.ptr() + (static_cast<size_t>(i) * c + ch) * hw;
      const T* pxh = saved.xhat.ptr() + (static_cast<size_t>(i) * c + ch) * hw;
      for (size_t j = 0; j < hw; ++j) {
        sum_dy += pdy[j];
        sum_dy_xhat += static_cast<double>(pdy[j]) * pxh[j];
      }
    }
    if (dgamma) dgamma->data[static_cast<size_t>(ch)] += static_cast<T>(sum_dy_xhat);
    if (dbeta) dbeta->data[static_cast<size_t>(ch)] += static_cast<T>(sum_dy);

    const double g = gamma.data[static_cast<size_t>(ch)];
    const double invstd = saved.invstd[static_cast<size_t>(ch)];
    const double k1 = sum_dy / m;
    const double k2 = sum_dy_xhat / m;
    for (int i = 0; i < n; ++i) {
      const T* pdy = dy.ptr() + (static_cast<size_t>(i) * c + ch) * hw;
      const T* pxh = saved.xhat.ptr() + (static_cast<size_t>(i) * c + ch) * hw;
      T* pdx = dx.ptr() + (static_cast<size_t>(i) * c + ch) * hw;
      for (size_t j = 0; j < hw; ++j)
        pdx[j] = static_cast<T>(g * invstd * (pdy[j] - k1 - pxh[j] * k2));
    }
  }
  return dx;
}

// Running statistics act as fixed affine scales in eval mode.
template <typename T>
Tensor<T> bn_backward_eval(const Tensor<T>& dy, const Tensor<T>& gamma,
                           const Tensor<T>& running_var, T eps) {
  const int n = dy.dim(0), c = dy.dim(1), h = dy.dim(2), w = dy.dim(3);
  const size_t hw = static_cast<size_t>(h) * w;
  Tensor<T> dx(dy.shape);
  for (int ch = 0; ch < c; ++ch) {
    T scale = static_cast<T>(
        static_cast<double>(gamma.data[static_cast<size_t>(ch)]) /
        std::sqrt(static_cast<double>(running_var.data[static_cast<size_t>(ch)]) +
                  static_cast<double>(eps)));
    for (int i = 0; i < n; ++i) {
      const T* p = dy.ptr() + (static_cast<size_t>(i) * c + ch) * hw;
      T* q = dx.ptr() + (static_cast<size_t>(i) * c + ch) * hw;
      for (size_t j = 0; j < hw; ++j) q[j] = p[j] * scale;
    }
  }
  return dx;
}

// ----------------------------------------------------------------- misc ----

template <typename T>
void relu_inplace(Tensor<T>& x) {
  for (T& v : x.data)
    if (v < T(0)) v = T(0);
}

// d *= (out > 0); out is the post-activation tensor
template <typename T>
void relu_backward_inplace(Tensor<T>& d, const Tensor<T>& out) {
  for (size_t i = 0; i < d.data.size(); ++i)
    if (out.data[i] <= T(0)) d.data[i] = T(0);
}

// x [N,C,H,W] -> y [N,C]
template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& x) {
  const int n = x.dim(0), c = x.dim(1);
  const size_t hw = static_cast<size_t>(x.dim(2)) * x.dim(3);
  Tensor<T> y({n, c});
  for (int i = 0; i < n; ++i)
    for (int ch = 0; ch < c; ++ch) {
      const T* p = x.ptr() + (static_cast<size_t>(i) * c + ch) * hw;
      double sum = 0.0;
      for (size_t j = 0; j < hw; ++j) sum += p[j];
      y.data[static_cast<size_t>(i) * c + ch] = static_cast<T>(sum / static_cast<double>(hw));
    }
  return y;
}

template <typename T>
Tensor<T> global_avg_pool_backward(const Tensor<T>& dy, int h, int w) {
  const int n = dy.dim(0), c = dy.dim(1);
  const size_t hw = static_cast<size_t>(h) * w;
  Tensor<T> dx({n, c, h, w});
  for (int i = 0; i < n; ++i)
    for (int ch = 0; ch < c; ++ch) {
      T v = static_cast<T>(dy.data[static_cast<size_t>(i) * c + ch] / static_cast<T>(hw));
      T* p = dx.ptr() + (static_cast<size_t>(i) * c + ch) * hw;
      for (size_t j = 0; j < hw; ++j) p[j] = v;
    }
  return dx;
}

// x [N,Cin], w [Cout,Cin], b [Cout] -> y [N,Cout]
template <typename T>
Tensor<T> linear_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  const int n = x.dim(0), c_in = x.dim(1), c_out = w.dim(0);
  Tensor<T> y({n, c_out});
  for (int i = 0; i < n; ++i) {
    const T* xi = x.ptr() + static_cast<size_t>(i) * c_in;
    T* yi = y.ptr() + static_cast<size_t>(i) * c_out;
    for (int o = 0; o < c_out; ++o) {
      const T* wo = w.ptr() + static_cast<size_t>(o) * c_in;
      T acc = b.data[static_cast<size_t>(o)];
      for (int j = 0; j < c_in; ++j) acc += xi[j] * wo[j];
      yi[o] = acc;
    }
  }
  return y;
}

template <typename T>
void linear_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& dy, Tensor<T>* dw,
                     Tensor<T>* db, Tensor<T>* dx) {
  const int n = x.dim(0), c_in = x.dim(1), c_out = w.dim(0);
  if (dw) gemm_tn_acc(dy.ptr(), x.ptr(), dw->ptr(), n, c_out, c_in);
  if (db)
    for (int i = 0; i < n; ++i)
      for (int o = 0; o < c_out; ++o)
        db->data[static_cast<size_t>(o)] += dy.data[static_cast<size_t>(i) * c_out + o];
  if (dx) {
    dx->zero();
    gemm_acc(dy.ptr(), w.ptr(), dx->ptr(), n, c_out, c_in);
  }
}

// mean softmax cross-entropy; fills dlogits when non-null
template <typename T>
double softmax_cross_entropy(const Tensor<T>& logits, const std::vector<int>& labels,
                             Tensor<T>* dlogits) {
  const int n = logits.dim(0), c = logits.dim(1);
  if (static_cast<int>(labels.size()) != n) throw ShapeMismatch("label count != batch size");
  double loss = 0.0;
  if (dlogits) *dlogits = Tensor<T>(logits.shape);
  for (int i = 0; i < n; ++i) {
    const T* z = logits.ptr() + static_cast<size_t>(i) * c;
    int y = labels[static_cast<size_t>(i)];
    if (y < 0 || y >= c) throw ShapeMismatch("label outside [0, num_classes)");
    double zmax = z[0];
    for (int j = 1; j < c; ++j) zmax = std::max(zmax, static_cast<double>(z[j]));
    double sum = 0.0;
    for (int j = 0; j < c; ++j) sum += std::exp(static_cast<double>(z[j]) - zmax);
    double lse = zmax + std::log(sum);
    loss += lse - static_cast<double>(z[y]);
    if (dlogits) {
      T* d = dlogits->ptr() + static_cast<size_t>(i) * c;
      for (int j = 0; j < c; ++j) {
        double p = std::exp(static_cast<double>(z[j]) - lse);
        d[j] = static_cast<T>((p - (j == y ? 1.0 : 0.0)) / n);
      }
    }
  }
  return loss / n;
}

template <typename T>
std::vector<double> softmax_row(const Tensor<T>& logits, int row) {
  const int c = logits.dim(1);
  const T* z = logits.ptr() + static_cast<size_t>(row) * c;
  double zmax = z[0];
  for (int j = 1; j < c; ++j) zmax = std::max(zmax, static_cast<double>(z[j]));
  double sum = 0.0;
  std::vector<double> p(static_cast<size_t>(c));
  for (int j = 0; j < c; ++j) {
    p[static_cast<size_t>(j)] = std::exp(static_cast<double>(z[j]) - zmax);
    sum += p[static_cast<size_t>(j)];
  }
  for (double& v : p) v /= sum;
  return p;
}

}  // namespace dscn::ops
