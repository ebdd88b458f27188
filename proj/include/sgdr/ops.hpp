#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstring>
#include <vector>

#include "sgdr/autograd.hpp"

namespace sgdr {

// Differentiable building blocks. Every op computes its value eagerly and
// installs a backward closure. Closures capture raw Node pointers (kept
// alive by the graph) plus small cached statistics.

namespace detail {

template <class T>
using EMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using EMap = Eigen::Map<EMat<T>>;
template <class T>
using ECMap = Eigen::Map<const EMat<T>>;

template <class T>
void im2col(const T* x, int C, int H, int W, int kh, int kw, int stride, int pad, int OH,
            int OW, T* cols) {
    const std::size_t plane = static_cast<std::size_t>(OH) * OW;
    for (int c = 0; c < C; ++c) {
        for (int ki = 0; ki < kh; ++ki) {
            for (int kj = 0; kj < kw; ++kj) {
                T* dst = cols + ((static_cast<std::size_t>(c) * kh + ki) * kw + kj) * plane;
                for (int oy = 0; oy < OH; ++oy) {
                    const int iy = oy * stride - pad + ki;
                    T* drow = dst + static_cast<std::size_t>(oy) * OW;
                    if (iy < 0 || iy >= H) {
                        std::fill(drow, drow + OW, T(0));
                        continue;
                    }
                    const T* srow = x + (static_cast<std::size_t>(c) * H + iy) * W;
                    for (int ox = 0; ox < OW; ++ox) {
                        const int ix = ox * stride - pad + kj;
                        drow[ox] = (ix >= 0 && ix < W) ? srow[ix] : T(0);
                    }
                }
            }
        }
    }
}

template <class T>
void col2im_add(const T* cols, int C, int H, int W, int kh, int kw, int stride, int pad,
                int OH, int OW, T* dx) {
    const std::size_t plane = static_cast<std::size_t>(OH) * OW;
    for (int c = 0; c < C; ++c) {
        for (int ki = 0; ki < kh; ++ki) {
            for (int kj = 0; kj < kw; ++kj) {
                const T* src = cols + ((static_cast<std::size_t>(c) * kh + ki) * kw + kj) * plane;
                for (int oy = 0; oy < OH; ++oy) {
                    const int iy = oy * stride - pad + ki;
                    if (iy < 0 || iy >= H) continue;
                    const T* srow = src + static_cast<std::size_t>(oy) * OW;
                    T* drow = dx + (static_cast<std::size_t>(c) * H + iy) * W;
                    for (int ox = 0; ox < OW; ++ox) {
                        const int ix = ox * stride - pad + kj;
                        if (ix >= 0 && ix < W) drow[ix] += srow[ox];
                    }
                }
            }
        }
    }
}

template <class T>
std::vector<T>& conv_scratch() {
    thread_local std::vector<T> buf;
    return buf;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// convolution
// ---------------------------------------------------------------------------

// x: [C,H,W], w: [K,C,kh,kw], b: [K] (may be empty Var for bias-free convs).
template <class T>
Var<T> conv2d(const Var<T>& x, const Var<T>& w, const Var<T>& b, int stride, int pad) {
    const auto& xs = x->value.shape;
    const auto& ws = w->value.shape;
    if (xs.size() != 3 || ws.size() != 4) throw ShapeError("conv2d: rank");
    const int C = xs[0], H = xs[1], W = xs[2];
    const int K = ws[0], kh = ws[2], kw = ws[3];
    if (ws[1] != C) throw ShapeError("conv2d: channel mismatch");
    const int OH = (H + 2 * pad - kh) / stride + 1;
    const int OW = (W + 2 * pad - kw) / stride + 1;
    if (OH <= 0 || OW <= 0) throw ShapeError("conv2d: output collapsed to zero size");
    const int ckk = C * kh * kw;
    const std::size_t ohw = static_cast<std::size_t>(OH) * OW;

    auto& cols = detail::conv_scratch<T>();
    cols.resize(static_cast<std::size_t>(ckk) * ohw);
    detail::im2col(x->value.ptr(), C, H, W, kh, kw, stride, pad, OH, OW, cols.data());

    Tensor<T> out({K, OH, OW});
    {
        detail::ECMap<T> wm(w->value.ptr(), K, ckk);
        detail::ECMap<T> cm(cols.data(), ckk, static_cast<int>(ohw));
        detail::EMap<T> om(out.ptr(), K, static_cast<int>(ohw));
        om.noalias() = wm * cm;
    }
    if (b && b->value.numel() > 0) {
        for (int k = 0; k < K; ++k) {
            T bv = b->value[static_cast<std::size_t>(k)];
            T* row = out.ptr() + static_cast<std::size_t>(k) * ohw;
            for (std::size_t i = 0; i < ohw; ++i) row[i] += bv;
        }
    }

    auto n = make_node<T>(std::move(out), {x, w, b});
    Node<T>* xn = x.get();
    Node<T>* wn = w.get();
    n->backward = [xn, wn, C, H, W, K, kh, kw, stride, pad, OH, OW, ckk, ohw](
                      const Tensor<T>& g, const std::vector<Tensor<T>*>& pg) {
        auto& cols = detail::conv_scratch<T>();
        detail::ECMap<T> gm(g.ptr(), K, static_cast<int>(ohw));
        if (pg[1]) {  // dW = dY * cols^T
            cols.resize(static_cast<std::size_t>(ckk) * ohw);
            detail::im2col(xn->value.ptr(), C, H, W, kh, kw, stride, pad, OH, OW, cols.data());
            detail::ECMap<T> cm(cols.data(), ckk, static_cast<int>(ohw));
            detail::EMap<T> dwm(pg[1]->ptr(), K, ckk);
            dwm.noalias() += gm * cm.transpose();
        }
        if (pg[2] && pg[2]->numel() > 0) {  // db = rowsum(dY)
            for (int k = 0; k < K; ++k) {
                const T* row = g.ptr() + static_cast<std::size_t>(k) * ohw;
                T s = 0;
                for (std::size_t i = 0; i < ohw; ++i) s += row[i];
                pg[2]->data[static_cast<std::size_t>(k)] += s;
            }
        }
        if (pg[0]) {  // dX = col2im(W^T * dY)
            thread_local std::vector<T> dcols;
            dcols.resize(static_cast<std::size_t>(ckk) * ohw);
            detail::ECMap<T> wm(wn->value.ptr(), K, ckk);
            detail::EMap<T> dcm(dcols.data(), ckk, static_cast<int>(ohw));
            dcm.noalias() = wm.transpose() * gm;
            detail::col2im_add(dcols.data(), C, H, W, kh, kw, stride, pad, OH, OW, pg[0]->ptr());
        }
    };
    return n;
}

// ---------------------------------------------------------------------------
// normalization
// ---------------------------------------------------------------------------

// Per-channel normalization over the spatial extent of a single sample.
template <class T>
Var<T> instance_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta,
                     T eps = T(1e-5)) {
    const auto& xs = x->value.shape;
    if (xs.size() != 3) throw ShapeError("instance_norm: rank");
    const int C = xs[0];
    const std::size_t hw = static_cast<std::size_t>(xs[1]) * xs[2];
    if (gamma->value.numel() != static_cast<std::size_t>(C)) {
        throw ShapeError("instance_norm: gamma size");
    }

    Tensor<T> out(xs);
    std::vector<T> mu(static_cast<std::size_t>(C)), rstd(static_cast<std::size_t>(C));
    for (int c = 0; c < C; ++c) {
        const T* xc = x->value.ptr() + static_cast<std::size_t>(c) * hw;
        T m = 0;
        for (std::size_t i = 0; i < hw; ++i) m += xc[i];
        m /= static_cast<T>(hw);
        T v = 0;
        for (std::size_t i = 0; i < hw; ++i) {
            T d = xc[i] - m;
            v += d * d;
        }
        v /= static_cast<T>(hw);
        const T r = T(1) / std::sqrt(v + eps);
        mu[static_cast<std::size_t>(c)] = m;
        rstd[static_cast<std::size_t>(c)] = r;
        const T gk = gamma->value[static_cast<std::size_t>(c)];
        const T bk = beta->value[static_cast<std::size_t>(c)];
        T* oc = out.ptr() + static_cast<std::size_t>(c) * hw;
        for (std::size_t i = 0; i < hw; ++i) oc[i] = gk * (xc[i] - m) * r + bk;
    }

    auto n = make_node<T>(std::move(out), {x, gamma, beta});
    Node<T>* xn = x.get();
    Node<T>* gn = gamma.get();
    n->backward = [xn, gn, C, hw, mu = std::move(mu), rstd = std::move(rstd)](
                      const Tensor<T>& g, const std::vector<Tensor<T>*>& pg) {
        const T inv_n = T(1) / static_cast<T>(hw);
        for (int c = 0; c < C; ++c) {
            const std::size_t off = static_cast<std::size_t>(c) * hw;
            const T* xc = xn->value.ptr() + off;
            const T* gc = g.ptr() + off;
            const T m = mu[static_cast<std::size_t>(c)];
            const T r = rstd[static_cast<std::size_t>(c)];
            T sum_g = 0, sum_gx = 0;
            for (std::size_t i = 0; i < hw; ++i) {
                const T xh = (xc[i] - m) * r;
                sum_g += gc[i];
                sum_gx += gc[i] * xh;
            }
            if (pg[1]) pg[1]->data[static_cast<std::size_t>(c)] += sum_gx;
            if (pg[2]) pg[2]->data[static_cast<std::size_t>(c)] += sum_g;
            if (pg[0]) {
                const T gk = gn->value[static_cast<std::size_t>(c)];
                const T mg = sum_g * inv_n;
                const T mgx = sum_gx * inv_n;
                T* dx = pg[0]->ptr() + off;
                for (std::size_t i = 0; i < hw; ++i) {
                    const T xh = (xc[i] - m) * r;
                    dx[i] += gk * r * (gc[i] - mg - xh * mgx);
                }
            }
        }
    };
    return n;
}

// ---------------------------------------------------------------------------
// pointwise nonlinearities
// ---------------------------------------------------------------------------

template <class T>
Var<T> leaky_relu(const Var<T>& x, T slope) {
    Tensor<T> out(x->value.shape);
    for (std::size_t i = 0; i < out.numel(); ++i) {
        T v = x->value[i];
        out[i] = v > 0 ? v : slope * v;
    }
    auto n = make_node<T>(std::move(out), {x});
    Node<T>* xn = x.get();
    n->backward = [xn, slope](const Tensor<T>& g, const std::vector<Tensor<T>*>& pg) {
        if (!pg[0]) return;
        for (std::size_t i = 0; i < g.numel(); ++i) {
            pg[0]->data[i] += g[i] * (xn->value[i] > 0 ? T(1) : slope);
        }
    };
    return n;
}

template <class T>
Var<T> relu(const Var<T>& x) {
    return leaky_relu(x, T(0));
}

template <class T>
Var<T> tanh_op(const Var<T>& x) {
    Tensor<T> out(x->value.shape);
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = std::tanh(x->value[i]);
    auto n = make_node<T>(std::move(out), {x});
    Node<T>* self = n.get();
    n->backward = [self](const Tensor<T>& g, const std::vector<Tensor<T>*>& pg) {
        if (!pg[0]) return;
        for (std::size_t i = 0; i < g.numel(); ++i) {
            const T y = self->value[i];
            pg[0]->data[i] += g[i] * (T(1) - y * y);
        }
    };
    return n;
}

// ---------------------------------------------------------------------------
// resampling / reshaping
// ---------------------------------------------------------------------------

template <class T>
Var<T> upsample_nn2x(const Var<T>& x) {
    const auto& xs = x->value.shape;
    if (xs.size() != 3) throw ShapeError("upsample_nn2x: rank");
    const int C = xs[0], H = xs[1], W = xs[2];
    Tensor<T> out({C, 2 * H, 2 * W});
    for (int c = 0; c < C; ++c) {
        for (int y = 0; y < 2 * H; ++y) {
            const T* srow = x->value.ptr() + (static_cast<std::size_t>(c) * H + y / 2) * W;
            T* drow = out.ptr() + (static_cast<std::size_t>(c) * 2 * H + y) * (2 * W);
            for (int xw = 0; xw < 2 * W; ++xw) drow[xw] = srow[xw / 2];
        }
    }
    auto n = make_node<T>(std::move(out), {x});
    n->backward = [C, H, W](const Tensor<T>& g, const std::vector<Tensor<T>*>& pg) {
        if (!pg[0]) return;
        for (int c = 0; c < C; ++c) {
            for (int y = 0; y < 2 * H; ++y) {
                const T* grow = g.ptr() + (static_cast<std::size_t>(c) * 2 * H + y) * (2 * W);
                T* drow = pg[0]->ptr() + (static_cast<std::size_t>(c) * H + y / 2) * W;
                for (int xw = 0; xw < 2 * W; ++xw) drow[xw / 2] += grow[xw];
            }
        }
    };
    return n;
}

// Spatially broadcast a vector and append it as extra channels (style
// injection into generator blocks).
template <class T>
Var<T> concat_broadcast(const Var<T>& x, const Var<T>& s) {
    const auto& xs = x->value.shape;
    if (xs.size() != 3 || s->value.ndim() != 1) throw ShapeError("concat_broadcast: rank");
    const int C = xs[0], H = xs[1], W = xs[2];
    const int S = s->value.dim(0);
    const std::size_t hw = static_cast<std::size_t>(H) * W;
    Tensor<T> out({C + S, H, W});
    std::memcpy(out.ptr(), x->value.ptr(), sizeof(T) * C * hw);
    for (int k = 0; k < S; ++k) {
        T v = s->value[static_cast<std::size_t>(k)];
        T* dst = out.ptr() + (static_cast<std::size_t>(C) + k) * hw;
        std::fill(dst, dst + hw, v);
    }
    auto n = make_node<T>(std::move(out), {x, s});
    n->backward = [C, S, hw](const Tensor<T>& g, const std::vector<Tensor<T>*>& pg) {
        if (pg[0]) {
            for (std::size_t i = 0; i < static_cast<std::size_t>(C) * hw; ++i) {
                pg[0]->data[i] += g[i];
            }
        }
        if (pg[1]) {
            for (int k = 0; k < S; ++k) {
                const T* src = g.ptr() + (static_cast<std::size_t>(C) + k) * hw;
                T acc = 0;
                for (std::size_t i = 0; i < hw; ++i) acc += src[i];
                pg[1]->data[static_cast<std::size_t>(k)] += acc;
            }
        }
    };
    return n;
}

// ---------------------------------------------------------------------------
// dense layers
// ---------------------------------------------------------------------------

// x: [N], w: [M,N], b: [M]
template <class T>
Var<T> linear(const Var<T>& x, const Var<T>& w, const Var<T>& b) {
    const int N = x->value.dim(0);
    const int M = w->value.dim(0);
    if (w->value.dim(1) != N) throw ShapeError("linear: dim mismatch");
    Tensor<T> out({M});
    for (int m = 0; m < M; ++m) {
        const T* row = w->value.ptr() + static_cast<std::size_t>(m) * N;
        T acc = b->value[static_cast<std::size_t>(m)];
        for (int i = 0; i < N; ++i) acc += row[i] * x->value[static_cast<std::size_t>(i)];
        out[static_cast<std::size_t>(m)] = acc;
    }
    auto n = make_node<T>(std::move(out), {x, w, b});
    Node<T>* xn = x.get();
    Node<T>* wn = w.get();
    n->backward = [xn, wn, M, N](const Tensor<T>& g, const std::vector<Tensor<T>*>& pg) {
        for (int m = 0; m < M; ++m) {
            const T gm = g[static_cast<std::size_t>(m)];
            if (pg[1]) {
                T* dw = pg[1]->ptr() + static_cast<std::size_t>(m) * N;
                for (int i = 0; i < N; ++i) dw[i] += gm * xn->value[static_cast<std::size_t>(i)];
            }
            if (pg[2]) pg[2]->data[static_cast<std::size_t>(m)] += gm;
            if (pg[0]) {
                const T* row = wn->value.ptr() + static_cast<std::size_t>(m) * N;
                for (int i = 0; i < N; ++i) pg[0]->data[static_cast<std::size_t>(i)] += gm * row[i];
            }
        }
    };
    return n;
}

template <class T>
Var<T> global_avg_pool(const Var<T>& x) {
    const auto& xs = x->value.shape;
    if (xs.size() != 3) throw ShapeError("global_avg_pool: rank");
    const int C = xs[0];
    const std::size_t hw = static_cast<std::size_t>(xs[1]) * xs[2];
    Tensor<T> out({C});
    for (int c = 0; c < C; ++c) {
        const T* src = x->value.ptr() + static_cast<std::size_t>(c) * hw;
        T acc = 0;
        for (std::size_t i = 0; i < hw; ++i) acc += src[i];
        out[static_cast<std::size_t>(c)] = acc / static_cast<T>(hw);
    }
    auto n = make_node<T>(std::move(out), {x});
    n->backward = [C, hw](const Tensor<T>& g, const std::vector<Tensor<T>*>& pg) {
        if (!pg[0]) return;
        for (int c = 0; c < C; ++c) {
            const T gv = g[static_cast<std::size_t>(c)] / static_cast<T>(hw);
            T* dst = pg[0]->ptr() + static_cast<std::size_t>(c) * hw;
            for (std::size_t i = 0; i < hw; ++i) dst[i] += gv;
        }
    };
    return n;
}

// ---------------------------------------------------------------------------
// probability heads
// ---------------------------------------------------------------------------

// Pixel-wise softmax across channels; numerically stabilized.
template <class T>
Var<T> softmax_channel(const Var<T>& x) {
    const auto& xs = x->value.shape;
    if (xs.size() != 3) throw ShapeError("softmax_channel: rank");
    const int K = xs[0];
    const std::size_t hw = static_cast<std::size_t>(xs[1]) * xs[2];
    Tensor<T> out(xs);
    for (std::size_t i = 0; i < hw; ++i) {
        T mx = x->value[i];
        for (int k = 1; k < K; ++k) mx = std::max(mx, x->value[static_cast<std::size_t>(k) * hw + i]);
        T z = 0;
        for (int k = 0; k < K; ++k) {
            const T e = std::exp(x->value[static_cast<std::size_t>(k) * hw + i] - mx);
            out[static_cast<std::size_t>(k) * hw + i] = e;
            z += e;
        }
        const T inv = T(1) / z;
        for (int k = 0; k < K; ++k) out[static_cast<std::size_t>(k) * hw + i] *= inv;
    }
    auto n = make_node<T>(std::move(out), {x});
    Node<T>* self = n.get();
    n->backward = [self, K, hw](const Tensor<T>& g, const std::vector<Tensor<T>*>& pg) {
        if (!pg[0]) return;
        for (std::size_t i = 0; i < hw; ++i) {
            T dot = 0;
            for (int k = 0; k < K; ++k) {
                const std::size_t idx = static_cast<std::size_t>(k) * hw + i;
                dot += self->value[idx] * g[idx];
            }
            for (int k = 0; k < K; ++k) {
                const std::size_t idx = static_cast<std::size_t>(k) * hw + i;
                pg[0]->data[idx] += self->value[idx] * (g[idx] - dot);
            }
        }
    };
    return n;
}

// ---------------------------------------------------------------------------
// arithmetic
// ---------------------------------------------------------------------------

template <class T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
    check_same_shape(a->value.shape, b->value.shape, "add");
    Tensor<T> out(a->value.shape);
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = a->value[i] + b->value[i];
    auto n = make_node<T>(std::move(out), {a, b});
    n->backward = [](const Tensor<T>& g, const std::vector<Tensor<T>*>& pg) {
        for (int p = 0; p < 2; ++p) {
            if (!pg[p]) continue;
            for (std::size_t i = 0; i < g.numel(); ++i) pg[p]->data[i] += g[i];
        }
    };
    return n;
}

template <class T>
Var<T> scale(const Var<T>& x, T k) {
    Tensor<T> out(x->value.shape);
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = k * x->value[i];
    auto n = make_node<T>(std::move(out), {x});
    n->backward = [k](const Tensor<T>& g, const std::vector<Tensor<T>*>& pg) {
        if (!pg[0]) return;
        for (std::size_t i = 0; i < g.numel(); ++i) pg[0]->data[i] += k * g[i];
    };
    return n;
}

// Weighted sum of scalar terms; the workhorse of the total objective.
template <class T>
Var<T> weighted_sum(const std::vector<Var<T>>& terms, const std::vector<T>& weights) {
    if (terms.size() != weights.size()) throw ShapeError("weighted_sum: arity");
    T acc = 0;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        if (terms[i]->value.numel() != 1) throw ShapeError("weighted_sum: non-scalar term");
        acc += weights[i] * terms[i]->value[0];
    }
    Tensor<T> out({1});
    out[0] = acc;
    auto n = make_node<T>(std::move(out), terms);
    n->backward = [weights](const Tensor<T>& g, const std::vector<Tensor<T>*>& pg) {
        for (std::size_t i = 0; i < weights.size(); ++i) {
            if (pg[i]) pg[i]->data[0] += weights[i] * g[0];
        }
    };
    return n;
}

// Gaussian reparameterization: sample = mu + exp(0.5 * logvar) * eps.
template <class T>
Var<T> reparam_sample(const Var<T>& mu, const Var<T>& logvar, const Tensor<T>& eps) {
    check_same_shape(mu->value.shape, logvar->value.shape, "reparam_sample");
    if (eps.shape != mu->value.shape) throw ShapeError("reparam_sample: eps shape");
    Tensor<T> out(mu->value.shape);
    for (std::size_t i = 0; i < out.numel(); ++i) {
        out[i] = mu->value[i] + std::exp(T(0.5) * logvar->value[i]) * eps[i];
    }
    auto n = make_node<T>(std::move(out), {mu, logvar});
    Node<T>* lv = logvar.get();
    n->backward = [lv, eps](const Tensor<T>& g, const std::vector<Tensor<T>*>& pg) {
        for (std::size_t i = 0; i < g.numel(); ++i) {
            if (pg[0]) pg[0]->data[i] += g[i];
            if (pg[1]) {
                pg[1]->data[i] += g[i] * eps[i] * T(0.5) * std::exp(T(0.5) * lv->value[i]);
            }
        }
    };
    return n;
}

// ---------------------------------------------------------------------------
// scalar loss kernels
// ---------------------------------------------------------------------------

// Mean absolute error over all elements.
template <class T>
Var<T> l1_mean(const Var<T>& a, const Var<T>& b) {
    check_same_shape(a->value.shape, b->value.shape, "l1_mean");
    const std::size_t n_el = a->value.numel();
    T acc = 0;
    for (std::size_t i = 0; i < n_el; ++i) acc += std::abs(a->value[i] - b->value[i]);
    Tensor<T> out({1});
    out[0] = acc / static_cast<T>(n_el);
    auto n = make_node<T>(std::move(out), {a, b});
    Node<T>* an = a.get();
    Node<T>* bn = b.get();
    n->backward = [an, bn, n_el](const Tensor<T>& g, const std::vector<Tensor<T>*>& pg) {
        const T s = g[0] / static_cast<T>(n_el);
        for (std::size_t i = 0; i < n_el; ++i) {
            const T d = an->value[i] - bn->value[i];
            const T sg = d > 0 ? s : (d < 0 ? -s : T(0));
            if (pg[0]) pg[0]->data[i] += sg;
            if (pg[1]) pg[1]->data[i] -= sg;
        }
    };
    return n;
}

// Mean squared deviation from a constant target: mean((x - c)^2).
template <class T>
Var<T> mse_const(const Var<T>& x, T c) {
    const std::size_t n_el = x->value.numel();
    T acc = 0;
    for (std::size_t i = 0; i < n_el; ++i) {
        const T d = x->value[i] - c;
        acc += d * d;
    }
    Tensor<T> out({1});
    out[0] = acc / static_cast<T>(n_el);
    auto n = make_node<T>(std::move(out), {x});
    Node<T>* xn = x.get();
    n->backward = [xn, c, n_el](const Tensor<T>& g, const std::vector<Tensor<T>*>& pg) {
        if (!pg[0]) return;
        const T s = T(2) * g[0] / static_cast<T>(n_el);
        for (std::size_t i = 0; i < n_el; ++i) pg[0]->data[i] += s * (xn->value[i] - c);
    };
    return n;
}

// Mean binary cross-entropy of raw scores against a constant probability
// target; computed in the numerically stable logits form.
template <class T>
Var<T> bce_logits_mean(const Var<T>& scores, T target) {
    const std::size_t n_el = scores->value.numel();
    T acc = 0;
    for (std::size_t i = 0; i < n_el; ++i) {
        const T s = scores->value[i];
        acc += std::max(s, T(0)) - s * target + std::log1p(std::exp(-std::abs(s)));
    }
    Tensor<T> out({1});
    out[0] = acc / static_cast<T>(n_el);
    auto n = make_node<T>(std::move(out), {scores});
    Node<T>* xn = scores.get();
    n->backward = [xn, target, n_el](const Tensor<T>& g, const std::vector<Tensor<T>*>& pg) {
        if (!pg[0]) return;
        const T s0 = g[0] / static_cast<T>(n_el);
        for (std::size_t i = 0; i < n_el; ++i) {
            const T sig = T(1) / (T(1) + std::exp(-xn->value[i]));
            pg[0]->data[i] += s0 * (sig - target);
        }
    };
    return n;
}

// Soft Dice loss over foreground classes 1..K-1, eps-smoothed, averaged over
// classes. `target_onehot` is a constant [K,H,W] indicator tensor.
template <class T>
Var<T> dice_loss(const Var<T>& probs, const Tensor<T>& target_onehot, T eps = T(1e-5)) {
    const auto& ps = probs->value.shape;
    if (ps.size() != 3) throw ShapeError("dice_loss: rank");
    if (target_onehot.shape != ps) throw ShapeError("dice_loss: target shape");
    const int K = ps[0];
    const std::size_t hw = static_cast<std::size_t>(ps[1]) * ps[2];
    const int n_fg = K - 1;
    if (n_fg <= 0) throw ShapeError("dice_loss: needs foreground classes");

    std::vector<T> inter(static_cast<std::size_t>(K), T(0));
    std::vector<T> uni(static_cast<std::size_t>(K), T(0));
    T loss = 0;
    for (int k = 1; k < K; ++k) {
        const T* p = probs->value.ptr() + static_cast<std::size_t>(k) * hw;
        const T* t = target_onehot.ptr() + static_cast<std::size_t>(k) * hw;
        T num = 0, den = 0;
        for (std::size_t i = 0; i < hw; ++i) {
            num += p[i] * t[i];
            den += p[i] + t[i];
        }
        inter[static_cast<std::size_t>(k)] = num;
        uni[static_cast<std::size_t>(k)] = den;
        loss += T(1) - (T(2) * num + eps) / (den + eps);
    }
    Tensor<T> out({1});
    out[0] = loss / static_cast<T>(n_fg);
    auto n = make_node<T>(std::move(out), {probs});
    n->backward = [target_onehot, inter = std::move(inter), uni = std::move(uni), K, hw, n_fg,
                   eps](const Tensor<T>& g, const std::vector<Tensor<T>*>& pg) {
        if (!pg[0]) return;
        const T gs = g[0] / static_cast<T>(n_fg);
        for (int k = 1; k < K; ++k) {
            const T num = T(2) * inter[static_cast<std::size_t>(k)] + eps;
            const T den = uni[static_cast<std::size_t>(k)] + eps;
            const T* t = target_onehot.ptr() + static_cast<std::size_t>(k) * hw;
            T* dp = pg[0]->ptr() + static_cast<std::size_t>(k) * hw;
            // d/dp of -(2I+eps)/(U+eps): -(2 t (U+eps) - (2I+eps)) / (U+eps)^2
            const T inv2 = T(1) / (den * den);
            for (std::size_t i = 0; i < hw; ++i) {
                dp[i] += gs * (num - T(2) * t[i] * den) * inv2;
            }
        }
    };
    return n;
}

// Pixel-mean cross-entropy -log p[target]; probabilities clamped at 1e-8.
template <class T>
Var<T> ce_loss_op(const Var<T>& probs, const Tensor<T>& target_onehot, T clamp = T(1e-8)) {
    const auto& ps = probs->value.shape;
    if (ps.size() != 3) throw ShapeError("ce_loss: rank");
    if (target_onehot.shape != ps) throw ShapeError("ce_loss: target shape");
    const int K = ps[0];
    const std::size_t hw = static_cast<std::size_t>(ps[1]) * ps[2];
    T acc = 0;
    for (int k = 0; k < K; ++k) {
        const T* p = probs->value.ptr() + static_cast<std::size_t>(k) * hw;
        const T* t = target_onehot.ptr() + static_cast<std::size_t>(k) * hw;
        for (std::size_t i = 0; i < hw; ++i) {
            if (t[i] > T(0.5)) acc -= std::log(std::max(p[i], clamp));
        }
    }
    Tensor<T> out({1});
    out[0] = acc / static_cast<T>(hw);
    auto n = make_node<T>(std::move(out), {probs});
    Node<T>* pn = probs.get();
    n->backward = [pn, target_onehot, K, hw, clamp](const Tensor<T>& g,
                                                    const std::vector<Tensor<T>*>& pg) {
        if (!pg[0]) return;
        const T gs = g[0] / static_cast<T>(hw);
        for (int k = 0; k < K; ++k) {
            const std::size_t off = static_cast<std::size_t>(k) * hw;
            const T* t = target_onehot.ptr() + off;
            for (std::size_t i = 0; i < hw; ++i) {
                if (t[i] > T(0.5) && pn->value[off + i] > clamp) {
                    pg[0]->data[off + i] -= gs / pn->value[off + i];
                }
            }
        }
    };
    return n;
}

// KL(q || N(0, I)) in closed form: 0.5 * sum(mu^2 + sigma^2 - log sigma^2 - 1).
template <class T>
Var<T> kl_gauss(const Var<T>& mu, const Var<T>& logvar) {
    check_same_shape(mu->value.shape, logvar->value.shape, "kl_gauss");
    const std::size_t n_el = mu->value.numel();
    T acc = 0;
    for (std::size_t i = 0; i < n_el; ++i) {
        const T m = mu->value[i];
        const T lv = logvar->value[i];
        acc += m * m + std::exp(lv) - lv - T(1);
    }
    Tensor<T> out({1});
    out[0] = T(0.5) * acc;
    auto n = make_node<T>(std::move(out), {mu, logvar});
    Node<T>* mn = mu.get();
    Node<T>* lvn = logvar.get();
    n->backward = [mn, lvn, n_el](const Tensor<T>& g, const std::vector<Tensor<T>*>& pg) {
        for (std::size_t i = 0; i < n_el; ++i) {
            if (pg[0]) pg[0]->data[i] += g[0] * mn->value[i];
            if (pg[1]) pg[1]->data[i] += g[0] * T(0.5) * (std::exp(lvn->value[i]) - T(1));
        }
    };
    return n;
}

}  // namespace sgdr
