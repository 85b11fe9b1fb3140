#pragma once

#include <algorithm>
#include <cmath>
#include <span>

#include "gazekit/kernels.hpp"
#include "gazekit/tensor.hpp"

namespace gazekit {

// Layer primitives shared by the float (kernel-dispatched) and double
// (scalar, gradient-check) paths. Convolution and fully connected layers are
// expressed over contiguous-row dot/axpy so the float path can use the SIMD
// kernels; the double path always uses the sequential reference loops.

namespace detail {

template <typename F>
inline F row_dot(const F* a, const F* b, size_t n) {
    if constexpr (std::is_same_v<F, float>) {
        return kernels::active().dot(a, b, n);
    } else {
        F acc = 0;
        for (size_t i = 0; i < n; ++i) acc += a[i] * b[i];
        return acc;
    }
}

template <typename F>
inline void row_axpy(F alpha, const F* x, F* y, size_t n) {
    if constexpr (std::is_same_v<F, float>) {
        kernels::active().axpy(alpha, x, y, n);
    } else {
        for (size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
    }
}

}  // namespace detail

// x: (N, C, H, W), w: (F, C, kh, kw), b: (F) -> y: (N, F, H-kh+1, W-kw+1).
// Cross-correlation, valid padding, stride 1.
template <typename F>
TensorT<F> conv_forward(const TensorT<F>& x, const TensorT<F>& w, const TensorT<F>& b) {
    require(x.rank() == 4, Err::shape, "conv input must be rank 4, got " + x.shape_str());
    require(w.rank() == 4, Err::shape, "conv weights must be rank 4, got " + w.shape_str());
    const int n = x.dim(0), c = x.dim(1), h = x.dim(2), iw = x.dim(3);
    const int f = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    require(w.dim(1) == c, Err::shape,
            "conv channel mismatch: input " + x.shape_str() + " vs weights " + w.shape_str());
    check_shape(b, {f}, "conv bias");
    require(kh <= h && kw <= iw, Err::shape,
            "conv kernel " + w.shape_str() + " larger than input " + x.shape_str());

    const int oh = h - kh + 1, ow = iw - kw + 1;
    TensorT<F> y = TensorT<F>::zeros({n, f, oh, ow});
    const size_t in_plane = static_cast<size_t>(h) * iw;
    const size_t out_plane = static_cast<size_t>(oh) * ow;
    for (int ni = 0; ni < n; ++ni) {
        const F* xn = x.ptr() + static_cast<size_t>(ni) * c * in_plane;
        F* yn = y.ptr() + static_cast<size_t>(ni) * f * out_plane;
        for (int fi = 0; fi < f; ++fi) {
            F* yf = yn + static_cast<size_t>(fi) * out_plane;
            const F bias = b.data[fi];
            for (size_t i = 0; i < out_plane; ++i) yf[i] = bias;
            const F* wf = w.ptr() + static_cast<size_t>(fi) * c * kh * kw;
            for (int ci = 0; ci < c; ++ci) {
                const F* xc = xn + static_cast<size_t>(ci) * in_plane;
                const F* wc = wf + static_cast<size_t>(ci) * kh * kw;
                for (int ky = 0; ky < kh; ++ky) {
                    for (int kx = 0; kx < kw; ++kx) {
                        const F wv = wc[ky * kw + kx];
                        for (int oy = 0; oy < oh; ++oy) {
                            detail::row_axpy(wv, xc + static_cast<size_t>(oy + ky) * iw + kx,
                                             yf + static_cast<size_t>(oy) * ow, ow);
                        }
                    }
                }
            }
        }
    }
    return y;
}

template <typename F>
struct ConvGrads {
    TensorT<F> x, w, b;
};

template <typename F>
ConvGrads<F> conv_backward(const TensorT<F>& x, const TensorT<F>& w, const TensorT<F>& gy) {
    const int n = x.dim(0), c = x.dim(1), h = x.dim(2), iw = x.dim(3);
    const int f = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    const int oh = h - kh + 1, ow = iw - kw + 1;
    check_shape(gy, {n, f, oh, ow}, "conv grad_out");

    ConvGrads<F> g{TensorT<F>::zeros_like(x), TensorT<F>::zeros_like(w), TensorT<F>::zeros({f})};
    const size_t in_plane = static_cast<size_t>(h) * iw;
    const size_t out_plane = static_cast<size_t>(oh) * ow;
    for (int ni = 0; ni < n; ++ni) {
        const F* xn = x.ptr() + static_cast<size_t>(ni) * c * in_plane;
        F* gxn = g.x.ptr() + static_cast<size_t>(ni) * c * in_plane;
        const F* gyn = gy.ptr() + static_cast<size_t>(ni) * f * out_plane;
        for (int fi = 0; fi < f; ++fi) {
            const F* gyf = gyn + static_cast<size_t>(fi) * out_plane;
            F bias_acc = 0;
            for (size_t i = 0; i < out_plane; ++i) bias_acc += gyf[i];
            g.b.data[fi] += bias_acc;
            const F* wf = w.ptr() + static_cast<size_t>(fi) * c * kh * kw;
            F* gwf = g.w.ptr() + static_cast<size_t>(fi) * c * kh * kw;
            for (int ci = 0; ci < c; ++ci) {
                const F* xc = xn + static_cast<size_t>(ci) * in_plane;
                F* gxc = gxn + static_cast<size_t>(ci) * in_plane;
                const F* wc = wf + static_cast<size_t>(ci) * kh * kw;
                F* gwc = gwf + static_cast<size_t>(ci) * kh * kw;
                for (int ky = 0; ky < kh; ++ky) {
                    for (int kx = 0; kx < kw; ++kx) {
                        F acc = 0;
                        const F wv = wc[ky * kw + kx];
                        for (int oy = 0; oy < oh; ++oy) {
                            const F* gyrow = gyf + static_cast<size_t>(oy) * ow;
                            const F* xrow = xc + static_cast<size_t>(oy + ky) * iw + kx;
                            acc += detail::row_dot(xrow, gyrow, ow);
                            detail::row_axpy(wv, gyrow, gxc + static_cast<size_t>(oy + ky) * iw + kx, ow);
                        }
                        gwc[ky * kw + kx] += acc;
                    }
                }
            }
        }
    }
    return g;
}

// 2x2 max pooling, stride 2. Ties resolve to the first element in row-major
// window order; argmax indices are flat offsets into the input plane.
template <typename F>
struct PoolResult {
    TensorT<F> y;
    std::vector<int32_t> argmax;  // one flat input index per output element
};

template <typename F>
PoolResult<F> pool_forward(const TensorT<F>& x) {
    require(x.rank() == 4, Err::shape, "pool input must be rank 4, got " + x.shape_str());
    const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    require(h % 2 == 0 && w % 2 == 0, Err::shape,
            "pool input spatial dims must be even, got " + x.shape_str());
    const int oh = h / 2, ow = w / 2;
    PoolResult<F> r{TensorT<F>::zeros({n, c, oh, ow}), {}};
    r.argmax.assign(r.y.numel(), 0);
    const size_t in_plane = static_cast<size_t>(h) * w;
    size_t oi = 0;
    for (int p = 0; p < n * c; ++p) {
        const F* xp = x.ptr() + static_cast<size_t>(p) * in_plane;
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox, ++oi) {
                const int iy = oy * 2, ix = ox * 2;
                int best = iy * w + ix;
                F bv = xp[best];
                const int cand[3] = {iy * w + ix + 1, (iy + 1) * w + ix, (iy + 1) * w + ix + 1};
                for (int idx : cand) {
                    if (xp[idx] > bv) {
                        bv = xp[idx];
                        best = idx;
                    }
                }
                r.y.data[oi] = bv;
                r.argmax[oi] = best;
            }
        }
    }
    return r;
}

template <typename F>
TensorT<F> pool_backward(const TensorT<F>& gy, const std::vector<int32_t>& argmax,
                         const std::vector<int>& input_shape) {
    TensorT<F> gx;
    gx.shape = input_shape;
    gx.data.assign(TensorT<F>::numel_of(input_shape), F(0));
    const int n = input_shape[0], c = input_shape[1], h = input_shape[2], w = input_shape[3];
    const size_t in_plane = static_cast<size_t>(h) * w;
    const size_t out_plane = gy.numel() / (static_cast<size_t>(n) * c);
    require(gy.numel() == argmax.size(), Err::shape, "pool backward argmax/grad size mismatch");
    size_t oi = 0;
    for (int p = 0; p < n * c; ++p) {
        F* gxp = gx.ptr() + static_cast<size_t>(p) * in_plane;
        for (size_t i = 0; i < out_plane; ++i, ++oi) gxp[argmax[oi]] += gy.data[oi];
    }
    return gx;
}

// x: (N, D), w: (out, D) row-major, b: (out) -> y: (N, out). y = x W^T + b.
template <typename F>
TensorT<F> fc_forward(const TensorT<F>& x, const TensorT<F>& w, const TensorT<F>& b) {
    require(x.rank() == 2 && w.rank() == 2, Err::shape,
            "fc expects rank-2 input/weights, got " + x.shape_str() + " and " + w.shape_str());
    const int n = x.dim(0), d = x.dim(1), out = w.dim(0);
    require(w.dim(1) == d, Err::shape,
            "fc inner dimension mismatch: input " + x.shape_str() + " vs weights " + w.shape_str());
    check_shape(b, {out}, "fc bias");
    TensorT<F> y = TensorT<F>::zeros({n, out});
    for (int ni = 0; ni < n; ++ni) {
        const F* xr = x.ptr() + static_cast<size_t>(ni) * d;
        F* yr = y.ptr() + static_cast<size_t>(ni) * out;
        for (int o = 0; o < out; ++o)
            yr[o] = detail::row_dot(w.ptr() + static_cast<size_t>(o) * d, xr, d) + b.data[o];
    }
    return y;
}

template <typename F>
struct FcGrads {
    TensorT<F> x, w, b;
};

template <typename F>
FcGrads<F> fc_backward(const TensorT<F>& x, const TensorT<F>& w, const TensorT<F>& gy) {
    const int n = x.dim(0), d = x.dim(1), out = w.dim(0);
    check_shape(gy, {n, out}, "fc grad_out");
    FcGrads<F> g{TensorT<F>::zeros_like(x), TensorT<F>::zeros_like(w), TensorT<F>::zeros({out})};
    for (int ni = 0; ni < n; ++ni) {
        const F* xr = x.ptr() + static_cast<size_t>(ni) * d;
        const F* gyr = gy.ptr() + static_cast<size_t>(ni) * out;
        F* gxr = g.x.ptr() + static_cast<size_t>(ni) * d;
        for (int o = 0; o < out; ++o) {
            const F go = gyr[o];
            g.b.data[o] += go;
            detail::row_axpy(go, w.ptr() + static_cast<size_t>(o) * d, gxr, d);
            detail::row_axpy(go, xr, g.w.ptr() + static_cast<size_t>(o) * d, d);
        }
    }
    return g;
}

template <typename F>
TensorT<F> relu(const TensorT<F>& x) {
    TensorT<F> y = TensorT<F>::zeros_like(x);
    if constexpr (std::is_same_v<F, float>) {
        kernels::active().relu(x.ptr(), y.ptr(), x.numel());
    } else {
        for (size_t i = 0; i < x.numel(); ++i) y.data[i] = x.data[i] > 0 ? x.data[i] : F(0);
    }
    return y;
}

// Gradient is 0 at x == 0.
template <typename F>
TensorT<F> relu_backward(const TensorT<F>& x, const TensorT<F>& gy) {
    require(x.shape == gy.shape, Err::shape,
            "relu backward shape mismatch: " + x.shape_str() + " vs " + gy.shape_str());
    TensorT<F> gx = TensorT<F>::zeros_like(x);
    if constexpr (std::is_same_v<F, float>) {
        kernels::active().relu_backward(x.ptr(), gy.ptr(), gx.ptr(), x.numel());
    } else {
        for (size_t i = 0; i < x.numel(); ++i) gx.data[i] = x.data[i] > 0 ? gy.data[i] : F(0);
    }
    return gx;
}

// Numerically stabilized softmax + cross entropy, mean over the batch.
// Returns {loss, grad_logits} with grad = (p - onehot) / N.
template <typename F>
struct XentResult {
    F loss;
    TensorT<F> grad;
    TensorT<F> probs;
};

template <typename F>
XentResult<F> softmax_xent(const TensorT<F>& logits, std::span<const int> labels) {
    require(logits.rank() == 2, Err::shape, "softmax expects rank-2 logits, got " + logits.shape_str());
    const int n = logits.dim(0), k = logits.dim(1);
    require(static_cast<int>(labels.size()) == n, Err::shape,
            "label count " + std::to_string(labels.size()) + " != batch " + std::to_string(n));
    XentResult<F> r{F(0), TensorT<F>::zeros_like(logits), TensorT<F>::zeros_like(logits)};
    double loss = 0;
    for (int i = 0; i < n; ++i) {
        const int label = labels[i];
        require(label >= 0 && label < k, Err::malformed_input,
                "label " + std::to_string(label) + " out of range [0," + std::to_string(k) + ")");
        const F* row = logits.ptr() + static_cast<size_t>(i) * k;
        F mx = row[0];
        for (int j = 1; j < k; ++j) mx = std::max(mx, row[j]);
        double denom = 0;
        for (int j = 0; j < k; ++j) denom += std::exp(static_cast<double>(row[j] - mx));
        F* prow = r.probs.ptr() + static_cast<size_t>(i) * k;
        F* grow = r.grad.ptr() + static_cast<size_t>(i) * k;
        for (int j = 0; j < k; ++j) {
            const double p = std::exp(static_cast<double>(row[j] - mx)) / denom;
            prow[j] = static_cast<F>(p);
            grow[j] = static_cast<F>((p - (j == label ? 1.0 : 0.0)) / n);
        }
        loss += -std::log(static_cast<double>(prow[label]));
    }
    r.loss = static_cast<F>(loss / n);
    return r;
}

}  // namespace gazekit
