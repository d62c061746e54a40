#pragma once

#include "edbn/error.hpp"

#include <atomic>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace edbn {

// Dense row-major 2-D array. float carries parameters/activations during
// training; the double instantiation backs the gradient-check and metric
// oracles.
template <class T>
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<T> data; // rows*cols, row-major

    Mat() = default;
    Mat(std::size_t r, std::size_t c, T fill = T(0)) : rows(r), cols(c), data(r * c, fill) {}

    Mat(std::initializer_list<std::initializer_list<T>> init) {
        rows = init.size();
        cols = rows ? init.begin()->size() : 0;
        data.reserve(rows * cols);
        for (const auto& row : init) {
            if (row.size() != cols) throw ShapeError("matrix literal: ragged rows");
            data.insert(data.end(), row.begin(), row.end());
        }
    }

    T& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    const T& operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    std::span<T> row(std::size_t i) { return {data.data() + i * cols, cols}; }
    std::span<const T> row(std::size_t i) const { return {data.data() + i * cols, cols}; }

    std::size_t size() const { return data.size(); }

    bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }

    bool all_finite() const {
        for (T v : data)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    std::string shape_str() const {
        return std::to_string(rows) + "x" + std::to_string(cols);
    }

    bool operator==(const Mat& o) const {
        return rows == o.rows && cols == o.cols && data == o.data;
    }
};

using MatF = Mat<float>;
using MatD = Mat<double>;

namespace detail {

// Kernel thread count. Parallelism is over output rows only, which keeps
// every element's summation order unchanged, so results are bitwise equal
// to the single-threaded default.
inline std::atomic<int> g_kernel_threads{1};

template <class Fn>
void for_rows(std::size_t n, Fn&& fn) {
    int nt = g_kernel_threads.load(std::memory_order_relaxed);
    if (nt <= 1 || n < 64) {
        fn(std::size_t(0), n);
        return;
    }
    std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(nt), n);
    std::size_t chunk = (n + threads - 1) / threads;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
        std::size_t b = t * chunk;
        std::size_t e = std::min(n, b + chunk);
        if (b >= e) break;
        pool.emplace_back([&fn, b, e] { fn(b, e); });
    }
    for (auto& th : pool) th.join();
}

} // namespace detail

inline void set_kernel_threads(int n) { detail::g_kernel_threads.store(n < 1 ? 1 : n); }
inline int kernel_threads() { return detail::g_kernel_threads.load(); }

// Matrix product with optional operand transposes. Accumulation per output
// element always runs over the inner index in ascending order, independent
// of threading, so a given input pair yields one bitwise result.
template <class T>
Mat<T> matmul(const Mat<T>& a, const Mat<T>& b, bool transpose_a = false, bool transpose_b = false) {
    const std::size_t m = transpose_a ? a.cols : a.rows;
    const std::size_t k = transpose_a ? a.rows : a.cols;
    const std::size_t kb = transpose_b ? b.cols : b.rows;
    const std::size_t n = transpose_b ? b.rows : b.cols;
    if (k != kb)
        throw ShapeError("matmul: inner dimensions disagree: " + a.shape_str() +
                         (transpose_a ? "^T" : "") + " * " + b.shape_str() +
                         (transpose_b ? "^T" : ""));

    Mat<T> out(m, n);
    if (!transpose_a && !transpose_b) {
        detail::for_rows(m, [&](std::size_t i0, std::size_t i1) {
            for (std::size_t i = i0; i < i1; ++i) {
                T* outr = out.data.data() + i * n;
                const T* ar = a.data.data() + i * k;
                for (std::size_t p = 0; p < k; ++p) {
                    const T s = ar[p];
                    const T* br = b.data.data() + p * n;
                    for (std::size_t j = 0; j < n; ++j) outr[j] += s * br[j];
                }
            }
        });
    } else if (transpose_a && !transpose_b) {
        // out[i][j] = sum_p a(p,i) * b(p,j)
        detail::for_rows(m, [&](std::size_t i0, std::size_t i1) {
            for (std::size_t i = i0; i < i1; ++i) {
                T* outr = out.data.data() + i * n;
                for (std::size_t p = 0; p < k; ++p) {
                    const T s = a.data[p * m + i];
                    const T* br = b.data.data() + p * n;
                    for (std::size_t j = 0; j < n; ++j) outr[j] += s * br[j];
                }
            }
        });
    } else if (!transpose_a && transpose_b) {
        // out[i][j] = dot(a row i, b row j)
        detail::for_rows(m, [&](std::size_t i0, std::size_t i1) {
            for (std::size_t i = i0; i < i1; ++i) {
                const T* ar = a.data.data() + i * k;
                T* outr = out.data.data() + i * n;
                for (std::size_t j = 0; j < n; ++j) {
                    const T* br = b.data.data() + j * k;
                    T acc = T(0);
                    for (std::size_t p = 0; p < k; ++p) acc += ar[p] * br[p];
                    outr[j] = acc;
                }
            }
        });
    } else {
        // out[i][j] = sum_p a(p,i) * b(j,p)
        detail::for_rows(m, [&](std::size_t i0, std::size_t i1) {
            for (std::size_t i = i0; i < i1; ++i) {
                T* outr = out.data.data() + i * n;
                for (std::size_t j = 0; j < n; ++j) {
                    T acc = T(0);
                    for (std::size_t p = 0; p < k; ++p) acc += a.data[p * m + i] * b.data[j * kb + p];
                    outr[j] = acc;
                }
            }
        });
    }
    return out;
}

// Adds bias[j] to every row of x.
template <class T>
Mat<T> add_bias_rows(const Mat<T>& x, std::span<const T> bias) {
    if (bias.size() != x.cols)
        throw ShapeError("add_bias_rows: bias length " + std::to_string(bias.size()) +
                         " vs " + std::to_string(x.cols) + " columns");
    Mat<T> out = x;
    for (std::size_t i = 0; i < out.rows; ++i) {
        T* r = out.data.data() + i * out.cols;
        for (std::size_t j = 0; j < out.cols; ++j) r[j] += bias[j];
    }
    return out;
}

template <class T>
Mat<T> add_bias_rows(const Mat<T>& x, const std::vector<T>& bias) {
    return add_bias_rows(x, std::span<const T>(bias));
}

// Column sums, the bias gradient.
template <class T>
std::vector<T> col_sums(const Mat<T>& x) {
    std::vector<T> out(x.cols, T(0));
    for (std::size_t i = 0; i < x.rows; ++i) {
        const T* r = x.data.data() + i * x.cols;
        for (std::size_t j = 0; j < x.cols; ++j) out[j] += r[j];
    }
    return out;
}

template <class T>
Mat<T> transpose(const Mat<T>& x) {
    Mat<T> out(x.cols, x.rows);
    for (std::size_t i = 0; i < x.rows; ++i)
        for (std::size_t j = 0; j < x.cols; ++j) out(j, i) = x(i, j);
    return out;
}

template <class T>
Mat<T> identity(std::size_t n) {
    Mat<T> out(n, n);
    for (std::size_t i = 0; i < n; ++i) out(i, i) = T(1);
    return out;
}

// Lossless widen/narrow between the float and double instantiations.
template <class To, class From>
Mat<To> cast_mat(const Mat<From>& x) {
    Mat<To> out(x.rows, x.cols);
    for (std::size_t i = 0; i < x.data.size(); ++i) out.data[i] = static_cast<To>(x.data[i]);
    return out;
}

} // namespace edbn
