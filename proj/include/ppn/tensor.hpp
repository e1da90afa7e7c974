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

#ifndef PPN_TENSOR_HPP_
#define PPN_TENSOR_HPP_

#include <array>
#include <cstddef>
#include <numeric>
#include <vector>

#include "ppn/common.hpp"

namespace ppn {

// Dense row-major tensor of rank <= 4 (unused leading dims are 1).
// Layout for feature maps is NCHW.
template <typename T>
class Tensor {
public:
    Tensor() : dims_{1, 1, 1, 1} {}
    Tensor(int d0, int d1, int d2, int d3) { resize(d0, d1, d2, d3); }
    Tensor(int d0, int d1, int d2) { resize(1, d0, d1, d2); }
    Tensor(int d0, int d1) { resize(1, 1, d0, d1); }
    explicit Tensor(int d0) { resize(1, 1, 1, d0); }

    void resize(int d0, int d1, int d2, int d3) {
        dims_ = {d0, d1, d2, d3};
        data_.assign(static_cast<size_t>(d0) * d1 * d2 * d3, T{0});
    }

    int dim(int i) const { return dims_[static_cast<size_t>(i)]; }
    size_t size() const { return data_.size(); }
    bool same_shape(const Tensor& o) const { return dims_ == o.dims_; }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    T& operator[](size_t i) { return data_[i]; }
    const T& operator[](size_t i) const { return data_[i]; }

    T& at(int n, int c, int h, int w) { return data_[offset(n, c, h, w)]; }
    const T& at(int n, int c, int h, int w) const { return data_[offset(n, c, h, w)]; }
    T& at(int c, int h, int w) { return at(0, c, h, w); }
    const T& at(int c, int h, int w) const { return at(0, c, h, w); }

    void zero() { std::fill(data_.begin(), data_.end(), T{0}); }
    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out(dims_[0], dims_[1], dims_[2], dims_[3]);
        for (size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
        return out;
    }

private:
    size_t offset(int n, int c, int h, int w) const {
        return ((static_cast<size_t>(n) * dims_[1] + c) * dims_[2] + h) * dims_[3] + w;
    }

    std::array<int, 4> dims_;
    std::vector<T> data_;
};

}  // namespace ppn

#endif  // PPN_TENSOR_HPP_
