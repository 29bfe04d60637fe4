// ----------------------------------------------------------------------------
// Copyright 2026 The vgf authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ----------------------------------------------------------------------------

#ifndef VGF_TENSOR_HPP
#define VGF_TENSOR_HPP

#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <initializer_list>
#include <new>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace vgf {

/// Allocator pinning every numeric buffer to one cache-line alignment, so
/// SIMD head/tail splits never depend on where the heap happened to place a
/// block. Bit-identical reruns require this.
template <typename T>
struct AlignedAllocator {
    using value_type = T;
    static constexpr std::size_t kAlign = 64;

    AlignedAllocator() = default;
    template <typename U>
    AlignedAllocator(const AlignedAllocator<U>&) {}

    T* allocate(std::size_t n) {
        return static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t(kAlign)));
    }
    void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, std::align_val_t(kAlign)); }

    template <typename U>
    bool operator==(const AlignedAllocator<U>&) const {
        return true;
    }
    template <typename U>
    bool operator!=(const AlignedAllocator<U>&) const {
        return false;
    }
};

using dvec = std::vector<double, AlignedAllocator<double>>;

/// Dense n-dimensional array of doubles, row-major. The only numeric
/// currency in the library; every activation, parameter and gradient is one.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> shape)
        : shape_(std::move(shape)), data_(count(shape_), 0.0) {}

    Tensor(std::vector<std::size_t> shape, dvec data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (count(shape_) != data_.size())
            throw std::invalid_argument("Tensor: shape " + shape_string() + " does not match data length " +
                                        std::to_string(data_.size()));
    }

    Tensor(std::vector<std::size_t> shape, std::initializer_list<double> data)
        : Tensor(std::move(shape), dvec(data.begin(), data.end())) {}

    static Tensor zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }

    static Tensor full(std::vector<std::size_t> shape, double v) {
        Tensor t(std::move(shape));
        std::fill(t.data_.begin(), t.data_.end(), v);
        return t;
    }

    static Tensor scalar(double v) { return Tensor({1}, {v}); }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    std::size_t dim(std::size_t i) const { return shape_.at(i); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    dvec& raw() { return data_; }
    const dvec& raw() const { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    /// Reinterpret the buffer with a new shape of identical element count.
    Tensor reshaped(std::vector<std::size_t> shape) const {
        if (count(shape) != data_.size())
            throw std::invalid_argument("reshape: element count mismatch for " + shape_string());
        Tensor t;
        t.shape_ = std::move(shape);
        t.data_ = data_;
        return t;
    }

    std::string shape_string() const {
        std::ostringstream os;
        os << '[';
        for (std::size_t i = 0; i < shape_.size(); ++i) os << (i ? "x" : "") << shape_[i];
        os << ']';
        return os.str();
    }

    static std::size_t count(const std::vector<std::size_t>& shape) {
        std::size_t n = 1;
        for (std::size_t d : shape) {
            if (d == 0) throw std::invalid_argument("Tensor: zero dimension");
            n *= d;
        }
        return shape.empty() ? 0 : n;
    }

    friend bool operator==(const Tensor& a, const Tensor& b) { return a.shape_ == b.shape_ && a.data_ == b.data_; }

private:
    std::vector<std::size_t> shape_;
    dvec data_;
};

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using EMap = Eigen::Map<EMat>;
using ECMap = Eigen::Map<const EMat>;

inline ECMap as_matrix(const Tensor& t, std::size_t rows, std::size_t cols) {
    if (rows * cols != t.size())
        throw std::invalid_argument("as_matrix: " + t.shape_string() + " is not " + std::to_string(rows) + "x" +
                                    std::to_string(cols));
    return ECMap(t.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

inline EMap as_matrix(Tensor& t, std::size_t rows, std::size_t cols) {
    if (rows * cols != t.size())
        throw std::invalid_argument("as_matrix: " + t.shape_string() + " is not " + std::to_string(rows) + "x" +
                                    std::to_string(cols));
    return EMap(t.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

/// C[n,m] = A[n,k] * B[k,m]
inline Tensor matmul(const Tensor& a, std::size_t n, std::size_t k, const Tensor& b, std::size_t m) {
    Tensor c({n, m});
    as_matrix(c, n, m).noalias() = as_matrix(a, n, k) * as_matrix(b, k, m);
    return c;
}

inline void check_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(what) + ": shape mismatch " + a.shape_string() + " vs " +
                                    b.shape_string());
}

inline Tensor operator+(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "add");
    Tensor c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c[i] += b[i];
    return c;
}

inline Tensor operator-(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "sub");
    Tensor c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c[i] -= b[i];
    return c;
}

inline Tensor operator*(const Tensor& a, double s) {
    Tensor c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c[i] *= s;
    return c;
}

inline void axpy(double alpha, const Tensor& x, Tensor& y) {
    check_same_shape(x, y, "axpy");
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
}

inline double sum(const Tensor& t) {
    double s = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) s += t[i];
    return s;
}

inline double mean(const Tensor& t) { return sum(t) / static_cast<double>(t.size()); }

inline bool all_finite(const Tensor& t) {
    for (std::size_t i = 0; i < t.size(); ++i)
        if (!std::isfinite(t[i])) return false;
    return true;
}

/// NaN/Inf anywhere in a pass is a hard error, never silently propagated.
inline void ensure_finite(const Tensor& t, const std::string& context) {
    if (!all_finite(t)) throw std::runtime_error("non-finite values in " + context);
}

/// Thread cap for internal kernels. VGF_THREADS wins; defaults to the
/// hardware count, at most 8.
inline unsigned thread_count() {
    static unsigned n = [] {
        if (const char* env = std::getenv("VGF_THREADS")) {
            long v = std::strtol(env, nullptr, 10);
            if (v >= 1) return static_cast<unsigned>(v);
        }
        unsigned hw = std::thread::hardware_concurrency();
        return hw == 0 ? 1u : std::min(hw, 8u);
    }();
    return n;
}

/// Run fn(i) for i in [0, n). Work is split into contiguous index ranges so
/// per-index results are identical regardless of the thread count; callers
/// that reduce must do so in index order themselves.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    unsigned threads = thread_count();
    if (threads <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    threads = std::min<std::size_t>(threads, n);
    std::vector<std::thread> pool;
    pool.reserve(threads);
    std::size_t chunk = (n + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
        std::size_t lo = t * chunk;
        std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace vgf

#endif  // VGF_TENSOR_HPP
