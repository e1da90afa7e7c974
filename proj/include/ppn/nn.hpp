// Copyright 2026 The PPN Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PPN_NN_HPP_
#define PPN_NN_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "ppn/common.hpp"
#include "ppn/rng.hpp"
#include "ppn/tensor.hpp"

namespace ppn {

// Trainable tensor with its gradient and SGD momentum buffer.
template <typename T>
struct Param {
    std::string name;
    Tensor<T> value;
    Tensor<T> grad;
    Tensor<T> momentum;

    void init_shape(int d0, int d1, int d2, int d3) {
        value.resize(d0, d1, d2, d3);
        grad.resize(d0, d1, d2, d3);
        momentum.resize(d0, d1, d2, d3);
    }
};

// Non-trainable persistent state (batchnorm running statistics).
template <typename T>
struct Buffer {
    std::string name;
    Tensor<T> value;
};

namespace nn {

template <typename T>
using MatMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <typename T>
using ConstMatMap = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

inline int conv_out_dim(int in, int k, int stride, int pad) {
    return (in + 2 * pad - k) / stride + 1;
}

// 2D convolution, NCHW, square kernel, same dilation-free semantics as the
// usual im2col + GEMM formulation. Keeps a copy of its input and rebuilds
// the column buffer during backward instead of caching it.
template <typename T>
struct Conv2d {
    int in_ch = 0, out_ch = 0, ksize = 3, stride = 1, pad = 1;
    Param<T> weight;  // (out_ch) x (in_ch*k*k)
    Param<T> bias;    // (out_ch)

    void configure(const std::string& name, int in_c, int out_c, int k, int s, int p, Rng& rng) {
        in_ch = in_c;
        out_ch = out_c;
        ksize = k;
        stride = s;
        pad = p;
        weight.name = name + ".weight";
        bias.name = name + ".bias";
        weight.init_shape(1, 1, out_c, in_c * k * k);
        bias.init_shape(1, 1, 1, out_c);
        const double he = std::sqrt(2.0 / (in_c * k * k));
        for (size_t i = 0; i < weight.value.size(); ++i)
            weight.value[i] = static_cast<T>(rng.normal() * he);
        bias.value.zero();
    }

    void collect(std::vector<Param<T>*>& params) {
        params.push_back(&weight);
        params.push_back(&bias);
    }

    Tensor<T> forward(const Tensor<T>& x) {
        if (x.dim(1) != in_ch) throw ShapeError(weight.name + ": input channel mismatch");
        x_ = x;
        const int n = x.dim(0), h = x.dim(2), w = x.dim(3);
        const int ho = conv_out_dim(h, ksize, stride, pad);
        const int wo = conv_out_dim(w, ksize, stride, pad);
        if (ho <= 0 || wo <= 0) throw ShapeError(weight.name + ": input too small");
        Tensor<T> y(n, out_ch, ho, wo);
        const int hw = ho * wo;
        const int kdim = in_ch * ksize * ksize;
        ConstMatMap<T> wmat(weight.value.data(), out_ch, kdim);
        for (int img = 0; img < n; ++img) {
            const T* xin = &x.at(img, 0, 0, 0);
            MatMap<T> ymat(&y.at(img, 0, 0, 0), out_ch, hw);
            if (ksize == 1 && stride == 1 && pad == 0) {
                ConstMatMap<T> xmat(xin, in_ch, hw);
                ymat.noalias() = wmat * xmat;
            } else {
                im2col(xin, h, w, ho, wo);
                ConstMatMap<T> cmat(col_.data(), kdim, hw);
                ymat.noalias() = wmat * cmat;
            }
            for (int c = 0; c < out_ch; ++c)
                ymat.row(c).array() += bias.value[static_cast<size_t>(c)];
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        const int n = x_.dim(0), h = x_.dim(2), w = x_.dim(3);
        const int ho = dy.dim(2), wo = dy.dim(3);
        const int hw = ho * wo;
        const int kdim = in_ch * ksize * ksize;
        Tensor<T> dx(n, in_ch, h, w);
        ConstMatMap<T> wmat(weight.value.data(), out_ch, kdim);
        MatMap<T> dwmat(weight.grad.data(), out_ch, kdim);
        for (int img = 0; img < n; ++img) {
            ConstMatMap<T> dymat(&dy.at(img, 0, 0, 0), out_ch, hw);
            for (int c = 0; c < out_ch; ++c)
                bias.grad[static_cast<size_t>(c)] += dymat.row(c).sum();
            if (ksize == 1 && stride == 1 && pad == 0) {
                ConstMatMap<T> xmat(&x_.at(img, 0, 0, 0), in_ch, hw);
                dwmat.noalias() += dymat * xmat.transpose();
                MatMap<T> dxmat(&dx.at(img, 0, 0, 0), in_ch, hw);
                dxmat.noalias() = wmat.transpose() * dymat;
            } else {
                im2col(&x_.at(img, 0, 0, 0), h, w, ho, wo);
                ConstMatMap<T> cmat(col_.data(), kdim, hw);
                dwmat.noalias() += dymat * cmat.transpose();
                dcol_.assign(static_cast<size_t>(kdim) * hw, T{0});
                MatMap<T> dcmat(dcol_.data(), kdim, hw);
                dcmat.noalias() = wmat.transpose() * dymat;
                col2im(&dx.at(img, 0, 0, 0), h, w, ho, wo);
            }
        }
        return dx;
    }

private:
    void im2col(const T* x, int h, int w, int ho, int wo) {
        const size_t hw = static_cast<size_t>(ho) * wo;
        col_.assign(static_cast<size_t>(in_ch) * ksize * ksize * hw, T{0});
        size_t row = 0;
        for (int c = 0; c < in_ch; ++c)
            for (int ki = 0; ki < ksize; ++ki)
                for (int kj = 0; kj < ksize; ++kj, ++row) {
                    T* dst = col_.data() + row * hw;
                    for (int i = 0; i < ho; ++i) {
                        const int yi = i * stride + ki - pad;
                        if (yi < 0 || yi >= h) continue;
                        const T* src = x + (static_cast<size_t>(c) * h + yi) * w;
                        for (int j = 0; j < wo; ++j) {
                            const int xj = j * stride + kj - pad;
                            if (xj >= 0 && xj < w) dst[i * wo + j] = src[xj];
                        }
                    }
                }
    }

    void col2im(T* dx, int h, int w, int ho, int wo) {
        const size_t hw = static_cast<size_t>(ho) * wo;
        size_t row = 0;
        for (int c = 0; c < in_ch; ++c)
            for (int ki = 0; ki < ksize; ++ki)
                for (int kj = 0; kj < ksize; ++kj, ++row) {
                    const T* src = dcol_.data() + row * hw;
                    for (int i = 0; i < ho; ++i) {
                        const int yi = i * stride + ki - pad;
                        if (yi < 0 || yi >= h) continue;
                        T* dst = dx + (static_cast<size_t>(c) * h + yi) * w;
                        for (int j = 0; j < wo; ++j) {
                            const int xj = j * stride + kj - pad;
                            if (xj >= 0 && xj < w) dst[xj] += src[i * wo + j];
                        }
                    }
                }
    }

    Tensor<T> x_;
    std::vector<T> col_, dcol_;
};

template <typename T>
struct ReLU {
    Tensor<T> forward(const Tensor<T>& x) {
        y_ = x;
        for (size_t i = 0; i < y_.size(); ++i)
            if (y_[i] < T{0}) y_[i] = T{0};
        return y_;
    }
    Tensor<T> backward(const Tensor<T>& dy) {
        Tensor<T> dx = dy;
        for (size_t i = 0; i < dx.size(); ++i)
            if (y_[i] <= T{0}) dx[i] = T{0};
        return dx;
    }

private:
    Tensor<T> y_;
};

template <typename T>
struct MaxPool2d {
    int ksize = 3, stride = 2, pad = 1;

    Tensor<T> forward(const Tensor<T>& x) {
        const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
        in_h_ = h;
        in_w_ = w;
        const int ho = conv_out_dim(h, ksize, stride, pad);
        const int wo = conv_out_dim(w, ksize, stride, pad);
        Tensor<T> y(n, c, ho, wo);
        argmax_.assign(y.size(), 0);
        size_t out = 0;
        for (int img = 0; img < n; ++img)
            for (int ch = 0; ch < c; ++ch) {
                const T* plane = &x.at(img, ch, 0, 0);
                for (int i = 0; i < ho; ++i)
                    for (int j = 0; j < wo; ++j, ++out) {
                        T best = std::numeric_limits<T>::lowest();
                        int best_idx = 0;
                        for (int ki = 0; ki < ksize; ++ki) {
                            const int yi = i * stride + ki - pad;
                            if (yi < 0 || yi >= h) continue;
                            for (int kj = 0; kj < ksize; ++kj) {
                                const int xj = j * stride + kj - pad;
                                if (xj < 0 || xj >= w) continue;
                                const T v = plane[yi * w + xj];
                                if (v > best) {
                                    best = v;
                                    best_idx = yi * w + xj;
                                }
                            }
                        }
                        y[out] = best;
                        argmax_[out] = best_idx;
                    }
            }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        const int n = dy.dim(0), c = dy.dim(1);
        Tensor<T> dx(n, c, in_h_, in_w_);
        size_t out = 0;
        for (int img = 0; img < n; ++img)
            for (int ch = 0; ch < c; ++ch) {
                T* plane = &dx.at(img, ch, 0, 0);
                const size_t count = dy.size() / (static_cast<size_t>(n) * c);
                for (size_t k = 0; k < count; ++k, ++out) plane[argmax_[out]] += dy[out];
            }
        return dx;
    }

private:
    int in_h_ = 0, in_w_ = 0;
    std::vector<int> argmax_;
};

// Bilinear interpolation to a fixed output size (corner alignment off, same
// sampling as a standard image resize).
template <typename T>
struct BilinearResize {
    int out_h = 0, out_w = 0;

    Tensor<T> forward(const Tensor<T>& x) {
        const int n = x.dim(0), c = x.dim(1);
        in_h_ = x.dim(2);
        in_w_ = x.dim(3);
        plan_axis(in_h_, out_h, i0_, i1_, wi_);
        plan_axis(in_w_, out_w, j0_, j1_, wj_);
        Tensor<T> y(n, c, out_h, out_w);
        for (int img = 0; img < n; ++img)
            for (int ch = 0; ch < c; ++ch) {
                const T* src = &x.at(img, ch, 0, 0);
                T* dst = &y.at(img, ch, 0, 0);
                for (int i = 0; i < out_h; ++i)
                    for (int j = 0; j < out_w; ++j) {
                        const T a = src[i0_[i] * in_w_ + j0_[j]], b = src[i0_[i] * in_w_ + j1_[j]];
                        const T c2 = src[i1_[i] * in_w_ + j0_[j]], d = src[i1_[i] * in_w_ + j1_[j]];
                        const T top = a + (b - a) * wj_[j];
                        const T bot = c2 + (d - c2) * wj_[j];
                        dst[i * out_w + j] = top + (bot - top) * wi_[i];
                    }
            }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        const int n = dy.dim(0), c = dy.dim(1);
        Tensor<T> dx(n, c, in_h_, in_w_);
        for (int img = 0; img < n; ++img)
            for (int ch = 0; ch < c; ++ch) {
                T* src = &dx.at(img, ch, 0, 0);
                const T* dst = &dy.at(img, ch, 0, 0);
                for (int i = 0; i < out_h; ++i)
                    for (int j = 0; j < out_w; ++j) {
                        const T g = dst[i * out_w + j];
                        const T wi = wi_[i], wj = wj_[j];
                        src[i0_[i] * in_w_ + j0_[j]] += g * (1 - wi) * (1 - wj);
                        src[i0_[i] * in_w_ + j1_[j]] += g * (1 - wi) * wj;
                        src[i1_[i] * in_w_ + j0_[j]] += g * wi * (1 - wj);
                        src[i1_[i] * in_w_ + j1_[j]] += g * wi * wj;
                    }
            }
        return dx;
    }

private:
    void plan_axis(int in, int out, std::vector<int>& a0, std::vector<int>& a1, std::vector<T>& w) {
        a0.resize(static_cast<size_t>(out));
        a1.resize(static_cast<size_t>(out));
        w.resize(static_cast<size_t>(out));
        const double scale = static_cast<double>(in) / out;
        for (int i = 0; i < out; ++i) {
            const double src = (i + 0.5) * scale - 0.5;
            const int lo = std::clamp(static_cast<int>(std::floor(src)), 0, in - 1);
            a0[static_cast<size_t>(i)] = lo;
            a1[static_cast<size_t>(i)] = std::min(lo + 1, in - 1);
            w[static_cast<size_t>(i)] = static_cast<T>(std::clamp(src - lo, 0.0, 1.0));
        }
    }

    int in_h_ = 0, in_w_ = 0;
    std::vector<int> i0_, i1_, j0_, j1_;
    std::vector<T> wi_, wj_;
};

template <typename T>
struct BatchNorm2d {
    int channels = 0;
    T eps = T(1e-5);
    T momentum = T(0.1);
    Param<T> gamma, beta;
    Buffer<T> running_mean, running_var;

    void configure(const std::string& name, int c) {
        channels = c;
        gamma.name = name + ".weight";
        beta.name = name + ".bias";
        running_mean.name = name + ".running_mean";
        running_var.name = name + ".running_var";
        gamma.init_shape(1, 1, 1, c);
        beta.init_shape(1, 1, 1, c);
        gamma.value.fill(T{1});
        running_mean.value.resize(1, 1, 1, c);
        running_var.value.resize(1, 1, 1, c);
        running_var.value.fill(T{1});
    }

    void collect(std::vector<Param<T>*>& params) {
        params.push_back(&gamma);
        params.push_back(&beta);
    }
    void collect_buffers(std::vector<Buffer<T>*>& bufs) {
        bufs.push_back(&running_mean);
        bufs.push_back(&running_var);
    }

    Tensor<T> forward(const Tensor<T>& x, bool train) {
        const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
        const size_t plane = static_cast<size_t>(h) * w;
        const T count = static_cast<T>(n) * static_cast<T>(plane);
        xhat_ = x;
        invstd_.assign(static_cast<size_t>(c), T{0});
        Tensor<T> y(n, c, h, w);
        for (int ch = 0; ch < c; ++ch) {
            T mean, var;
            if (train) {
                T sum = 0, sq = 0;
                for (int img = 0; img < n; ++img) {
                    const T* p = &x.at(img, ch, 0, 0);
                    for (size_t k = 0; k < plane; ++k) {
                        sum += p[k];
                        sq += p[k] * p[k];
                    }
                }
                mean = sum / count;
                var = sq / count - mean * mean;
                if (var < T{0}) var = T{0};
                auto& rm = running_mean.value[static_cast<size_t>(ch)];
                auto& rv = running_var.value[static_cast<size_t>(ch)];
                rm = (T{1} - momentum) * rm + momentum * mean;
                rv = (T{1} - momentum) * rv + momentum * var * (count / std::max(count - T{1}, T{1}));
            } else {
                mean = running_mean.value[static_cast<size_t>(ch)];
                var = running_var.value[static_cast<size_t>(ch)];
            }
            const T inv = T{1} / std::sqrt(var + eps);
            invstd_[static_cast<size_t>(ch)] = inv;
            const T g = gamma.value[static_cast<size_t>(ch)], b = beta.value[static_cast<size_t>(ch)];
            for (int img = 0; img < n; ++img) {
                const T* p = &x.at(img, ch, 0, 0);
                T* xh = &xhat_.at(img, ch, 0, 0);
                T* py = &y.at(img, ch, 0, 0);
                for (size_t k = 0; k < plane; ++k) {
                    xh[k] = (p[k] - mean) * inv;
                    py[k] = g * xh[k] + b;
                }
            }
        }
        train_ = train;
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        const int n = dy.dim(0), c = dy.dim(1), h = dy.dim(2), w = dy.dim(3);
        const size_t plane = static_cast<size_t>(h) * w;
        const T count = static_cast<T>(n) * static_cast<T>(plane);
        Tensor<T> dx(n, c, h, w);
        for (int ch = 0; ch < c; ++ch) {
            T dg = 0, db = 0;
            for (int img = 0; img < n; ++img) {
                const T* gp = &dy.at(img, ch, 0, 0);
                const T* xh = &xhat_.at(img, ch, 0, 0);
                for (size_t k = 0; k < plane; ++k) {
                    dg += gp[k] * xh[k];
                    db += gp[k];
                }
            }
            gamma.grad[static_cast<size_t>(ch)] += dg;
            beta.grad[static_cast<size_t>(ch)] += db;
            const T g = gamma.value[static_cast<size_t>(ch)];
            const T inv = invstd_[static_cast<size_t>(ch)];
            for (int img = 0; img < n; ++img) {
                const T* gp = &dy.at(img, ch, 0, 0);
                const T* xh = &xhat_.at(img, ch, 0, 0);
                T* dp = &dx.at(img, ch, 0, 0);
                if (train_) {
                    for (size_t k = 0; k < plane; ++k)
                        dp[k] = g * inv * (gp[k] - db / count - xh[k] * dg / count);
                } else {
                    for (size_t k = 0; k < plane; ++k) dp[k] = g * inv * gp[k];
                }
            }
        }
        return dx;
    }

private:
    Tensor<T> xhat_;
    std::vector<T> invstd_;
    bool train_ = true;
};

template <typename T>
inline void add_inplace(Tensor<T>& a, const Tensor<T>& b) {
    if (!a.same_shape(b)) throw ShapeError("elementwise add shape mismatch");
    for (size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

}  // namespace nn
}  // namespace ppn

#endif  // PPN_NN_HPP_
