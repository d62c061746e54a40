#pragma once

#include "edbn/error.hpp"
#include "edbn/matrix.hpp"

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace edbn {

template <class T>
struct LinearParams {
    Mat<T> weight;       // in x out
    std::vector<T> bias; // out

    std::size_t in() const { return weight.rows; }
    std::size_t out() const { return weight.cols; }
};

template <class T>
struct EmbeddingTable {
    Mat<T> table; // vocab_size x dim; row 0 reserved for out-of-vocabulary ids

    std::size_t vocab_size() const { return table.rows; }
    std::size_t dim() const { return table.cols; }
    // One-hot id width over embedding width, counting real ids only.
    double compression_ratio() const {
        return table.cols ? static_cast<double>(table.rows - 1) / static_cast<double>(table.cols) : 0.0;
    }
};

// y = x * W + b
template <class T>
Mat<T> linear_forward(const Mat<T>& x, const LinearParams<T>& p) {
    if (x.cols != p.in())
        throw ShapeError("linear_forward: input " + x.shape_str() + " vs weight " + p.weight.shape_str());
    return add_bias_rows(matmul(x, p.weight), p.bias);
}

template <class T>
struct LinearGrads {
    Mat<T> d_x;
    Mat<T> d_weight;
    std::vector<T> d_bias;
};

// d_x = d_out W^T, d_weight = x^T d_out, d_bias = column sums of d_out.
template <class T>
LinearGrads<T> linear_backward(const Mat<T>& x, const LinearParams<T>& p, const Mat<T>& d_out) {
    if (x.cols != p.in() || d_out.cols != p.out() || d_out.rows != x.rows)
        throw ShapeError("linear_backward: x " + x.shape_str() + ", weight " + p.weight.shape_str() +
                         ", d_out " + d_out.shape_str());
    LinearGrads<T> g;
    g.d_x = matmul(d_out, p.weight, false, true);
    g.d_weight = matmul(x, d_out, true, false);
    g.d_bias = col_sums(d_out);
    return g;
}

// Logistic function, branch form so large |x| cannot overflow exp.
template <class T>
T sigmoid(T x) {
    if (x >= T(0)) {
        T e = std::exp(-x);
        return T(1) / (T(1) + e);
    }
    T e = std::exp(x);
    return e / (T(1) + e);
}

// swish(x) = x * sigmoid(x); the same value gates itself.
template <class T>
Mat<T> swish(const Mat<T>& x) {
    Mat<T> out(x.rows, x.cols);
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        T s = sigmoid(x.data[i]);
        out.data[i] = x.data[i] * s;
    }
    return out;
}

// d/dx swish = s + x*s*(1-s) with s = sigmoid(x).
template <class T>
Mat<T> swish_grad(const Mat<T>& x) {
    Mat<T> out(x.rows, x.cols);
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        T s = sigmoid(x.data[i]);
        out.data[i] = s + x.data[i] * s * (T(1) - s);
    }
    return out;
}

// Row i of the result is table row ids[i]. Vocabulary mapping (raw id to
// dense index, OOV handling) happens upstream in the data module.
template <class T>
Mat<T> embedding_lookup(std::span<const std::int32_t> ids, const EmbeddingTable<T>& t) {
    Mat<T> out(ids.size(), t.dim());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        std::int32_t id = ids[i];
        if (id < 0 || static_cast<std::size_t>(id) >= t.vocab_size())
            throw ValueError("embedding_lookup: id " + std::to_string(id) + " outside vocabulary of " +
                             std::to_string(t.vocab_size()));
        const T* src = t.table.data.data() + static_cast<std::size_t>(id) * t.dim();
        T* dst = out.data.data() + i * t.dim();
        for (std::size_t j = 0; j < t.dim(); ++j) dst[j] = src[j];
    }
    return out;
}

// Scatter-add: row v of the result accumulates every d_out row whose id is v.
template <class T>
Mat<T> embedding_backward(std::span<const std::int32_t> ids, const Mat<T>& d_out, std::size_t vocab_size) {
    if (d_out.rows != ids.size())
        throw ShapeError("embedding_backward: " + std::to_string(ids.size()) + " ids vs d_out " +
                         d_out.shape_str());
    Mat<T> d_table(vocab_size, d_out.cols);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        std::int32_t id = ids[i];
        if (id < 0 || static_cast<std::size_t>(id) >= vocab_size)
            throw ValueError("embedding_backward: id " + std::to_string(id) + " outside vocabulary of " +
                             std::to_string(vocab_size));
        const T* src = d_out.data.data() + i * d_out.cols;
        T* dst = d_table.data.data() + static_cast<std::size_t>(id) * d_out.cols;
        for (std::size_t j = 0; j < d_out.cols; ++j) dst[j] += src[j];
    }
    return d_table;
}

// Columns of a followed by columns of b, rows aligned.
template <class T>
Mat<T> concat_cols(const Mat<T>& a, const Mat<T>& b) {
    if (a.rows != b.rows)
        throw ShapeError("concat_cols: row counts differ: " + a.shape_str() + " vs " + b.shape_str());
    Mat<T> out(a.rows, a.cols + b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        T* dst = out.data.data() + i * out.cols;
        const T* ra = a.data.data() + i * a.cols;
        const T* rb = b.data.data() + i * b.cols;
        for (std::size_t j = 0; j < a.cols; ++j) dst[j] = ra[j];
        for (std::size_t j = 0; j < b.cols; ++j) dst[a.cols + j] = rb[j];
    }
    return out;
}

// Inverse of concat_cols; also routes the upstream gradient in the backward pass.
template <class T>
std::pair<Mat<T>, Mat<T>> split_cols(const Mat<T>& x, std::size_t left_cols) {
    if (left_cols > x.cols)
        throw ShapeError("split_cols: left width " + std::to_string(left_cols) + " exceeds " + x.shape_str());
    Mat<T> a(x.rows, left_cols);
    Mat<T> b(x.rows, x.cols - left_cols);
    for (std::size_t i = 0; i < x.rows; ++i) {
        const T* src = x.data.data() + i * x.cols;
        T* ra = a.data.data() + i * a.cols;
        T* rb = b.data.data() + i * b.cols;
        for (std::size_t j = 0; j < a.cols; ++j) ra[j] = src[j];
        for (std::size_t j = 0; j < b.cols; ++j) rb[j] = src[a.cols + j];
    }
    return {std::move(a), std::move(b)};
}

template <class T>
struct MseResult {
    T loss;
    std::vector<T> d_pred;
};

// loss = mean squared error, d_pred = 2(pred - target)/N.
template <class T>
MseResult<T> mse(std::span<const T> pred, std::span<const T> target) {
    if (pred.size() != target.size())
        throw ShapeError("mse: length mismatch " + std::to_string(pred.size()) + " vs " +
                         std::to_string(target.size()));
    if (pred.empty()) throw ValueError("mse: empty input");
    const T n = static_cast<T>(pred.size());
    MseResult<T> r;
    r.d_pred.resize(pred.size());
    T acc = T(0);
    for (std::size_t i = 0; i < pred.size(); ++i) {
        T d = pred[i] - target[i];
        acc += d * d;
        r.d_pred[i] = T(2) * d / n;
    }
    r.loss = acc / n;
    return r;
}

template <class T>
MseResult<T> mse(const std::vector<T>& pred, const std::vector<T>& target) {
    return mse(std::span<const T>(pred), std::span<const T>(target));
}

} // namespace edbn
